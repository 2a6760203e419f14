class TourmobError(Exception):
    """Base class for errors raised by this package."""

    exit_code = 3


class ConfigError(TourmobError, ValueError):
    """Invalid configuration, parameters or unsupported options."""

    exit_code = 1


class DataError(TourmobError, ValueError):
    """Input data that cannot be processed."""

    exit_code = 2


class MissingStageOutput(TourmobError):
    """A pipeline stage ran before the stage that produces its inputs."""

    exit_code = 1

    def __init__(self, stage: str, required: str, path):
        self.stage = stage
        self.required = required
        self.path = path
        super().__init__(
            f"stage '{stage}' needs {path}, which is produced by the '{required}' stage; run '{required}' first"
        )
