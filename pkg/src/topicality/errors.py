"""Error types shared across the package.

ValidationError maps to CLI exit code 2 (bad inputs, bad config);
StageError maps to exit code 3 (a pipeline stage failed at runtime).
"""


class ValidationError(Exception):
    """Malformed input data, file, or configuration."""


class StageError(Exception):
    """A pipeline stage failed; carries the stage name."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause
