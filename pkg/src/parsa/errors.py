class ParsaError(Exception):
    exit_code = 4


class InvalidArgument(ParsaError, ValueError):
    exit_code = 2


class ParseError(ParsaError):
    exit_code = 3

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}:{line}: " if line is not None else f"{path}: "
        elif line is not None:
            where = f"line {line}: "
        super().__init__(where + message)


class ProtocolError(ParsaError):
    pass
