class RejectedInputError(ValueError):
    """Raised when an operation receives arguments outside its domain."""


class MissingColumnError(KeyError):
    def __init__(self, column: str, available):
        self.column = column
        self.available = list(available)
        super().__init__(column)

    def __str__(self):
        return f"column '{self.column}' not found, available columns: {', '.join(self.available)}"


class EmptyTableError(ValueError):
    pass


class ResultsIOError(OSError):
    def __init__(self, path, reason):
        self.path = str(path)
        super().__init__(f"Error accessing {self.path}: {reason}")
