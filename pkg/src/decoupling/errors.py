class DecouplingError(Exception):
    """Root of every error raised by the library."""


class GraphError(DecouplingError):
    pass


class DeadlockVertex(GraphError, ValueError):
    def __init__(self, vertex: int, label: str = "") -> None:
        self.vertex = vertex
        super().__init__(f"vertex {label or vertex}: no successor (deadlock)")


class MalformedEdge(GraphError, ValueError):
    pass


class Unreachable(GraphError, LookupError):
    pass


class CycleCapExceeded(GraphError, RuntimeError):
    pass


class ObjectiveError(DecouplingError):
    pass


class UnknownVertex(ObjectiveError, ValueError):
    pass


class NotDirectlyConvertible(ObjectiveError, TypeError):
    pass


class PolicyError(DecouplingError):
    pass


class NoGoodCycle(PolicyError, ValueError):
    pass


class NoGoodTuple(PolicyError, ValueError):
    pass


class TupleSpaceCapExceeded(PolicyError, RuntimeError):
    pass


class WitnessInvalid(PolicyError, ValueError):
    pass


class ShapeMismatch(PolicyError, ValueError):
    pass


class ShieldError(DecouplingError):
    pass


class UnrealizableFromInit(ShieldError, ValueError):
    pass


class ClosureViolated(ShieldError, ValueError):
    pass


class EmptyIntersection(ShieldError, RuntimeError):
    def __init__(self, vertex: int) -> None:
        self.vertex = vertex
        super().__init__(f"vertex {vertex}: no successor is safe for every agent")


class AnalysisError(DecouplingError):
    pass


class StateCapExceeded(AnalysisError, RuntimeError):
    pass


class ClaimViolated(AnalysisError, AssertionError):
    def __init__(self, state: object, clause: str) -> None:
        self.state = state
        self.clause = clause
        super().__init__(f"clause {clause} violated at state {state}")


class ConfigError(DecouplingError, ValueError):
    def __init__(self, where: str, message: str) -> None:
        self.where = where
        super().__init__(f"{where}: {message}")
