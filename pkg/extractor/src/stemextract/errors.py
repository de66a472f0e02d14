"""Error hierarchy for extraction jobs."""


class ExtractError(Exception):
    """Base class for everything this package raises on purpose."""

    @property
    def code(self) -> str:
        return type(self).__name__


class SkippedInput(ExtractError):
    """One input could not be used; the job continues without it.

    Raised internally and converted into a report entry, never propagated
    out of :func:`stemextract.job.extract`.
    """


class JobError(ExtractError):
    """A stage of the job failed in a way that invalidates the output.

    Attributes:
        stage: which stage failed ("decode", "separate", "encode",
            "collect", "write", "verify").
    """

    def __init__(self, message: str, stage: str):
        super().__init__(message)
        self.stage = stage


class VerificationFailure(ExtractError):
    """Re-encoded vectors do not match the pack within tolerance."""
