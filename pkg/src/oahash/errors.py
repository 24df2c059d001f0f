class OAHashError(Exception):
    """Base class for data and integrity problems (CLI exit code 2)."""


class FormatError(OAHashError):
    pass


class IntegrityError(OAHashError):
    pass


class DegenerateInputError(OAHashError):
    pass


class EmptyInputError(OAHashError):
    pass


class DatasetError(OAHashError):
    pass


class FeasibilityError(OAHashError):
    pass
