"""Exception hierarchy shared across the package."""


class RoverError(Exception):
    pass


class SchemaError(RoverError, ValueError):
    """Structurally invalid input (mismatched entity sets, bad spec documents)."""


class InputError(RoverError, ValueError):
    pass


class GenerationError(RoverError):
    """Expert or level-targeted trajectory synthesis could not satisfy its constraints."""


class PlanError(RoverError, ValueError):
    pass


class ProtocolError(RoverError):
    """The reasoning transcript violates the spawn/summary protocol."""


class MalformedOutput(RoverError):
    def __init__(self, message: str, text: str = ""):
        super().__init__(message)
        self.text = text


class RunAborted(RoverError):
    def __init__(self, message: str, partial=None):
        super().__init__(message)
        self.partial = partial


class CompositionError(RoverError):
    pass


class BackendError(RoverError):
    def __init__(self, message: str, body: str | None = None, retryable: bool = False):
        super().__init__(message)
        self.body = body
        self.retryable = retryable


class OracleError(RoverError):
    pass
