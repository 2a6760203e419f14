import numpy as np
import pandas as pd
import pytest

from tourmob.validation import check_checkin_frame, check_positive_int, select_slice


def test_check_checkin_frame():
    df = pd.DataFrame({"user_id": ["u"], "city": ["A"]})
    assert check_checkin_frame(df, ["user_id"]) is df
    with pytest.raises(TypeError):
        check_checkin_frame([{"user_id": "u"}], ["user_id"])
    with pytest.raises(ValueError, match="epoch"):
        check_checkin_frame(df, ["user_id", "epoch"])


def test_check_positive_int():
    assert check_positive_int(np.int64(3), "k") == 3
    for bad in (0, -1, 1.5, True, "2"):
        with pytest.raises(ValueError):
            check_positive_int(bad, "k")
    assert check_positive_int(0, "k", minimum=0) == 0


def test_select_slice():
    df = pd.DataFrame({"city": ["A", "A", "B"], "label": ["Tourist", "Resident", "Tourist"]})
    assert len(select_slice(df)) == 3
    assert select_slice(df, "A").index.tolist() == [0, 1]
    assert select_slice(df, label="Tourist").index.tolist() == [0, 2]
    assert select_slice(df, "B", "Resident").empty
