"""Exception hierarchy. Each class carries the CLI exit code it maps to."""


class PortfolioError(Exception):
    exit_code = 1


class ConfigError(PortfolioError, ValueError):
    """Invalid configuration or parameters (exit code 2)."""

    exit_code = 2


class UsageError(PortfolioError, ValueError):
    """Caller passed arguments that violate an operation's preconditions."""

    exit_code = 2


class DataError(PortfolioError):
    """Required data is missing or inconsistent (exit code 3)."""

    exit_code = 3


class NotFoundError(DataError, KeyError):
    exit_code = 3

    def __str__(self):
        return Exception.__str__(self)


class FormatError(PortfolioError):
    """On-disk payload is corrupt or has an unsupported version (exit code 4)."""

    exit_code = 4
