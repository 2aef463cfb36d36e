"""Exception types shared across the simulator."""


class SimulationError(Exception):
    """Base class for all magchain errors."""


class SingularityError(SimulationError):
    """Field or energy requested closer to a dipole than the validity floor."""


class DegenerateGeometryError(SimulationError):
    """Geometry that has no meaningful answer (zero-length segment, reversed links)."""


class ScenarioError(SimulationError):
    """Scenario or scene file that fails validation; message carries the key path."""
