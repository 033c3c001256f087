"""Exception types raised across the package.

Every error derives from :class:`PrivacyFrontierError` so callers (and the CLI)
can separate domain failures from programming errors. Class names are reported
verbatim in the CLI's JSON error envelope.
"""


class PrivacyFrontierError(ValueError):
    """Base class for all domain errors."""


class DomainMismatch(PrivacyFrontierError):
    pass


class InvalidWorkload(PrivacyFrontierError):
    pass


class NonPositiveScale(PrivacyFrontierError):
    pass


class NonPositiveEpsilon(PrivacyFrontierError):
    pass


class UnrepresentableWorkload(PrivacyFrontierError):
    pass


class ParameterOutOfRange(PrivacyFrontierError):
    pass


class EmptyInput(PrivacyFrontierError):
    pass


class ZeroDataWeight(PrivacyFrontierError):
    pass


class BracketDoesNotStraddle(PrivacyFrontierError):
    pass


class ParseError(PrivacyFrontierError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DuplicateDistrict(ParseError):
    pass


class NonPositiveSppe(ParseError):
    pass


class EmptyDataset(PrivacyFrontierError):
    pass


class RangeTooLarge(PrivacyFrontierError):
    pass


class PopulationTooLarge(PrivacyFrontierError):
    pass


class InstanceTooLarge(PrivacyFrontierError):
    pass
