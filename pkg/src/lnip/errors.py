"""Exception types raised by the lnip package."""


class InvalidInputError(ValueError):
    """An argument violates an operation's preconditions."""


class EmptyDatasetError(InvalidInputError):
    """A dataset or item list contains no usable images."""


class StoreParseError(ValueError):
    """A feature store file is malformed.

    ``lineno`` is the 1-based line the problem was found on.
    """

    def __init__(self, message, lineno, path=None):
        self.lineno = lineno
        self.path = path
        where = f"{path}:{lineno}" if path is not None else f"line {lineno}"
        super().__init__(f"{where}: {message}")
