class CociteError(Exception):
    pass


class ValidationError(CociteError, ValueError):
    """Bad input data or configuration (CLI exit code 2)."""


class ParseError(ValidationError):
    pass


class MissingArtifactError(CociteError):
    """An upstream pipeline output is absent."""

    def __init__(self, path, producer):
        self.path = path
        self.producer = producer
        super().__init__(f"{path} missing; run `{producer}` first")
