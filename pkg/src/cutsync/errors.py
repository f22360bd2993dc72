"""Exception hierarchy shared by all modules."""


class CutsyncError(Exception):
    """Base class for domain errors (CLI exit code 1)."""

    code = "DomainError"

    def to_dict(self) -> dict:
        return {"error": self.code, "message": str(self)}


def _make(name, doc, base=CutsyncError):
    return type(name, (base,), {"__doc__": doc, "code": name})


class GraphError(CutsyncError):
    code = "GraphError"


Disconnected = _make("Disconnected", "Graph is not connected.", GraphError)
SelfLoop = _make("SelfLoop", "Edge joins a node to itself.", GraphError)
DuplicateEdge = _make("DuplicateEdge", "Same node pair listed twice.", GraphError)
NonpositiveWeight = _make("NonpositiveWeight", "Edge weight is not > 0.", GraphError)
DimensionMismatch = _make("DimensionMismatch", "Vector has the wrong length.")
EigSolveFailure = _make("EigSolveFailure", "Eigendecomposition broke down.")
UnsupportedNorm = _make("UnsupportedNorm", "Only p in {1, 2, inf} is supported.")
TrivialCycleSpace = _make("TrivialCycleSpace", "Graph has no cycles (m = n - 1).")
ConfigInvalid = _make("ConfigInvalid", "Invalid solver configuration.")
TooLarge = _make("TooLarge", "Instance too large for exhaustive search.")
DomainError = _make("DomainError", "Argument outside the function domain.")
GammaMismatch = _make("GammaMismatch", "Estimate computed for another (p, gamma).")
NotAcyclic = _make("NotAcyclic", "Graph contains a cycle.")
TopologyNotApplicable = _make(
    "TopologyNotApplicable", "Graph is neither unweighted complete nor unweighted ring."
)
StepTooLarge = _make("StepTooLarge", "Integrator step violates the stability guard.")
WindowTooLong = _make("WindowTooLong", "Sync window longer than the trajectory.")
NoConvergence = _make("NoConvergence", "Solver did not converge.")
IterateLeftDomain = _make(
    "IterateLeftDomain", "Fixed-point iterate left D_p(gamma).", NoConvergence
)
SingularJacobian = _make(
    "SingularJacobian", "Jacobian singular on the zero-mean subspace.", NoConvergence
)
NotAnEquilibrium = _make("NotAnEquilibrium", "Point does not solve the balance equation.")
ParseError = _make("ParseError", "Malformed case file.")
DisconnectedCase = _make("DisconnectedCase", "Case network is disconnected.", ParseError)
BracketNotFound = _make("BracketNotFound", "Could not bracket the critical coupling.")
