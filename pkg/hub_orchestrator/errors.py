class HubError(RuntimeError):
    pass


class InvalidInput(HubError):
    pass


class Infeasible(HubError):
    pass


class SolverFailure(HubError):
    pass


class ScenarioError(InvalidInput):
    pass


class DegenerateGeometry(InvalidInput):
    pass


class NoAccessLink(InvalidInput):
    pass


class InvalidLatency(InvalidInput):
    pass


class EmptyScenario(InvalidInput):
    pass


class TooLarge(InvalidInput):
    pass


class UnknownScheme(InvalidInput):
    pass


class OutputError(InvalidInput):
    pass


class ComputeBelowThreshold(Infeasible):
    pass


class StalledFlow(Infeasible):
    """
    A fluid run whose queues can never drain
    """


class NoBackhaul(StalledFlow):
    pass


class NoCompute(StalledFlow):
    pass
