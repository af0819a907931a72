"""Exception hierarchy shared by every module in the package."""


class DynGraphError(Exception):
    """Base class for all package errors."""


class UpdateConflict(DynGraphError):
    """A graph update does not fit the current graph (edge exists, edge missing, bad node id)."""


class InvalidWeight(DynGraphError, ValueError):
    """Edge weight is zero or not finite."""


class IncompatibleEmbedding(DynGraphError):
    """The embedding kind cannot represent the graph or cannot absorb the update."""


class ShapeMismatch(DynGraphError, ValueError):
    pass


class EmptyMatrix(DynGraphError):
    pass


class MissingObservation(DynGraphError):
    """A node insertion reached an l2 state without a new observation value."""


class UnsupportedOperation(DynGraphError):
    pass


class ConvergenceFailure(DynGraphError):
    pass


class FormatError(DynGraphError):
    """Malformed text input. Carries the source name and line number when known."""

    def __init__(self, message, source=None, line=None):
        self.source = source
        self.line = line
        where = ""
        if source is not None:
            where = f"{source}:"
            if line is not None:
                where += f"{line}:"
            where += " "
        super().__init__(where + message)
