"""Exception types shared across the package.

Every error carries a short machine-readable ``code`` so the CLI can emit a
stable one-line diagnostic.
"""


class QFuzzyError(ValueError):
    code = "error"

    def __init__(self, message: str, code: str | None = None):
        super().__init__(message)
        if code is not None:
            self.code = code


class UnknownLabelError(QFuzzyError):
    code = "unknown-label"


class OutOfRangeError(QFuzzyError, IndexError):
    code = "index-out-of-range"


class LengthMismatchError(QFuzzyError):
    code = "length-mismatch"


class ZeroActivationError(QFuzzyError):
    """No fuzzy rule fired; callers fall back to a neutral score."""

    code = "all-zero-activation"


class DatasetError(QFuzzyError):
    code = "dataset-error"
