"""Exception hierarchy shared by the library and the command line.

Every error class carries the process exit code the CLI uses for it.
"""


class DparnError(Exception):
    exit_code = 1


class DimensionError(DparnError, ValueError):
    exit_code = 3


class DomainError(DparnError, ValueError):
    exit_code = 4


class ConfigurationError(DparnError, ValueError):
    exit_code = 5


class FormatError(DparnError, ValueError):
    exit_code = 6


class ChecksumError(FormatError):
    exit_code = 7


class UnknownParameterError(FormatError):
    exit_code = 8


class ShapeMismatchError(FormatError):
    exit_code = 9


class DegenerateInputError(DparnError, ValueError):
    exit_code = 10


class DivergenceError(DparnError, RuntimeError):
    exit_code = 11


class ContractError(DparnError, RuntimeError):
    exit_code = 12
