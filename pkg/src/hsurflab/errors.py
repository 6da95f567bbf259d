"""Exception hierarchy shared by all modules."""


class HSurfError(Exception):
    """Base class for computation errors raised by hsurflab."""

    code = "error"


class EvaluationError(HSurfError):
    """The curvature function returned a non-finite value."""

    code = "evaluation-error"


class VanishingDenominatorError(HSurfError):
    """The curvature function vanishes on a great circle where it is inverted."""

    code = "vanishing-denominator"


class DiscretizationError(HSurfError):
    """Two criteria that must agree disagree beyond tolerance; refine the step."""

    code = "discretization-error"


class NonConvergenceError(HSurfError):
    """Newton iteration stagnated.  ``last_iterate`` holds the final state."""

    code = "nonconvergence"

    def __init__(self, message, last_iterate=None, history=None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.history = history or []


class AxisCollisionError(HSurfError):
    """A profile curve hit the rotation axis at a non-regular angle."""

    code = "axis-collision"

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class ConstructionError(HSurfError):
    """A requested surface (sphere, hemisphere) could not be built."""

    code = "construction-error"


class MeshError(HSurfError):
    """Degenerate metric or inconsistent grid topology."""

    code = "mesh-error"
