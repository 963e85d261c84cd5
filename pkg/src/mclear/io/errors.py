class ParseError(ValueError):
    """Malformed input; ``line``/``column`` are 1-based (0 when unknown)."""

    def __init__(self, msg: str, line: int = 0, column: int = 0):
        self.line, self.column = line, column
        where = f"line {line}, column {column}: " if line else ""
        super().__init__(where + msg)


class UnsupportedField(ParseError):
    pass
