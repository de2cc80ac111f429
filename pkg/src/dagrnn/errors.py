"""Exception types shared across the package."""


class DagRnnError(Exception):
    pass


class DimensionError(DagRnnError, ValueError):
    pass


class StructureError(DagRnnError, ValueError):
    pass


class ContractError(DagRnnError, ValueError):
    pass


class ConfigurationError(DagRnnError, ValueError):
    pass


class ParseError(DagRnnError, ValueError):
    """Malformed file contents; ``offset`` is the byte position of the fault."""

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte {offset})"
        super().__init__(message)
        self.offset = offset


class ValidationError(DagRnnError, ValueError):
    pass


class CheckpointError(DagRnnError):
    pass


class DivergenceError(DagRnnError, FloatingPointError):
    pass
