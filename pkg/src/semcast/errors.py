class SemcastError(Exception):
    pass


class ScenarioError(SemcastError, ValueError):
    """Inconsistent or invalid scenario description."""


class InfeasibleRequirement(SemcastError, ValueError):
    """A quality target sits at or below the floor of its rate curve."""


class FitDiverged(SemcastError):
    pass


class DegenerateStream(SemcastError, ValueError):
    """An active stream has (near) zero power, so its latency is unbounded."""


class QpInfeasible(SemcastError):
    pass


class NotConverged(SemcastError):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class PolicyUnsatisfiable(SemcastError, ValueError):
    pass


class MalformedFile(SemcastError, ValueError):
    pass


class LabelOutOfRange(SemcastError, ValueError):
    pass


class ExperimentFailed(SemcastError):
    pass
