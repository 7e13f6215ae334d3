"""Exception types shared across the package."""


class RejectedInputError(ValueError):
    """An operation precondition was violated; no state was mutated."""


class SceneFormatError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ConfigError(ValueError):
    def __init__(self, message: str, key: str | None = None):
        self.key = key
        if key is not None:
            message = f"config key '{key}': {message}"
        super().__init__(message)


class ScorerError(Exception):
    """Base for all scorer failures; the planner falls back to uniform scores."""


class ScorerTimeoutError(ScorerError):
    pass


class ScorerTransportError(ScorerError):
    pass


class ScorerSchemaError(ScorerError):
    pass


class ScorerRangeError(ScorerError):
    pass
