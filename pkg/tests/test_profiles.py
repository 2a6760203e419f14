import collections
import logging

import numpy as np
import pytest

from tourmob.profiles import CheckinLDA, TopicModel, UserDocument, build_corpus, fit_lda, fold_in, top_subcategories

from _corpora import planted_corpus, random_corpus, top_word_purity
from _helpers import make_frame, venue


def test_build_corpus():
    vs = [venue("ts", sub="Train Station"), venue("cs", sub="Coffee Shop")]
    rows = [("u", "ts", f"2014-05-0{d}T08:00:00+00:00") for d in (1, 2, 3)]
    rows += [("w", "cs", "2014-05-01T09:00:00+00:00"), ("w", "ts", "2014-05-01T10:00:00+00:00")]
    frame = make_frame(rows, vs)
    docs, vocab = build_corpus(frame)
    assert docs[0] == UserDocument("u", ("Train Station",) * 3)
    assert docs[1].tokens == ("Coffee Shop", "Train Station")
    assert vocab == ["Coffee Shop", "Train Station"]
    assert build_corpus(frame.iloc[:0]) == ([], [])


def test_single_topic_closed_form():
    docs = random_corpus(2)
    m = fit_lda(docs, n_topics=1, beta=0.3, iterations=3)
    counts = collections.Counter(t for d in docs for t in d.tokens)
    n, v = sum(counts.values()), len(m.vocabulary)
    expected = [(counts[w] + 0.3) / (n + v * 0.3) for w in m.vocabulary]
    assert np.max(np.abs(m.topic_word_distribution()[0] - expected)) <= 1e-12


def test_single_word_probability_tends_to_one():
    docs = [UserDocument("u", ("Bar",) * 5)]
    report = top_subcategories(fit_lda(docs, n_topics=1, beta=1e-9, iterations=1), 3)
    assert report.topics[0][0][0] == "Bar" and report.topics[0][0][1] == pytest.approx(1.0)


def test_invariants_after_every_sweep():
    docs = random_corpus(5)
    seen = []

    def check(model):
        model.check_invariants(docs)
        seen.append(model.iterations)

    fit_lda(docs, n_topics=3, iterations=25, seed=1, callback=check)
    assert seen == list(range(1, 26))


def test_check_invariants_detects_tampering():
    docs = random_corpus(6)
    m = fit_lda(docs, n_topics=2, iterations=5)
    m.topic_word_counts[0, 0] += 1
    with pytest.raises(AssertionError):
        m.check_invariants(docs)


def test_determinism_and_seed_sensitivity():
    docs = random_corpus(3, n_docs=20)
    a = fit_lda(docs, 3, iterations=70, seed=9)
    b = fit_lda(docs, 3, iterations=70, seed=9)
    c = fit_lda(docs, 3, iterations=70, seed=10)
    assert np.array_equal(a.topic_word_counts, b.topic_word_counts)
    assert np.array_equal(a.doc_topic_counts, b.doc_topic_counts)
    assert not all(np.array_equal(x, y) for x, y in zip(a.assignments, c.assignments))


def test_callback_does_not_change_result():
    docs = random_corpus(8, n_docs=15)
    plain = fit_lda(docs, 2, iterations=80, seed=4)
    hooked = fit_lda(docs, 2, iterations=80, seed=4, callback=lambda m: None)
    assert np.array_equal(plain.doc_topic_counts, hooked.doc_topic_counts)


def test_document_order_exchangeable():
    docs = random_corpus(12, n_docs=12)
    a = fit_lda(docs, 3, iterations=40, seed=2)
    b = fit_lda(docs[::-1], 3, iterations=40, seed=2)
    assert a.doc_ids == b.doc_ids
    assert np.array_equal(a.doc_topic_counts, b.doc_topic_counts)


def test_planted_topics():
    report = top_subcategories(fit_lda(planted_corpus(0), n_topics=2, iterations=200, seed=0), 10)
    assert min(top_word_purity(report)) >= 0.95


def test_errors_and_warnings(caplog):
    with pytest.raises(ValueError):
        fit_lda([UserDocument("u", ())], 2)
    with pytest.raises(ValueError):
        fit_lda(random_corpus(1), 0)
    with pytest.raises(ValueError):
        fit_lda([UserDocument("u", ("a",)), UserDocument("u", ("b",))], 2)
    with caplog.at_level(logging.WARNING):
        fit_lda([UserDocument("u", ("a", "b"))], 5, iterations=2)
    assert "exceeds" in caplog.text
    with pytest.raises(ValueError):
        top_subcategories(fit_lda(random_corpus(1), 2, iterations=2), 0)


def test_report_and_model_io(tmp_path):
    m = fit_lda(random_corpus(4), 3, iterations=10)
    report = top_subcategories(m, 100)
    assert all(len(t) == len(m.vocabulary) for t in report.topics)
    for t in report.topics:
        probs = [p for _, p in t]
        assert all(0 < p < 1 for p in probs) and sum(probs) == pytest.approx(1, abs=1e-9)
        assert probs == sorted(probs, reverse=True)
    frame = report.to_frame()
    assert list(frame.columns) == ["topic_index", "rank", "subcategory", "probability"]
    m.save(tmp_path / "m.json")
    back = TopicModel.load(tmp_path / "m.json")
    assert np.array_equal(back.topic_word_counts, m.topic_word_counts)
    assert back.vocabulary == m.vocabulary
    back.check_invariants()


def test_estimator():
    docs = planted_corpus(1, n_docs=60)
    est = CheckinLDA(n_topics=2, n_iter=100, random_state=3).fit(docs)
    theta = est.transform(docs[:4] + [["a0", "unknown"]])
    assert theta.shape == (5, 2) and np.allclose(theta.sum(axis=1), 1.0)
    assert est.components_.shape == (2, 20)
    assert est.get_params()["n_topics"] == 2
    assert fold_in(est.model_, []).shape == (0, 2)
