"""Exception types shared across the library."""


class ElasticaError(Exception):
    """Base class for all library errors."""


class BaseMismatch(ElasticaError):
    """Tangent vectors expected at the same foot point are not."""


class CutLocus(ElasticaError):
    """Log map requested at or beyond the cut locus (antipodal points).

    Usually signals that a trajectory or a path of curves is sampled too
    coarsely for the geometry between its samples.
    """


class DegenerateInput(ElasticaError):
    """Input vector cannot be projected (e.g. the zero vector onto a sphere)."""


class DegenerateSpeed(ElasticaError):
    """A curve cell has (numerically) vanishing velocity; the SRV transform
    and everything downstream of it are undefined there."""


class WrongManifold(ElasticaError):
    """Operation requires a specific manifold kind, or inputs on one shared
    manifold, and got something else."""


class NoConvergence(ElasticaError):
    """Boundary-value solver stopped at max_iter without reaching tolerance.

    Carries the final mismatch so callers can decide whether to relax the
    step or the damping and retry.
    """

    def __init__(self, message, mismatch=None, report=None):
        super().__init__(message)
        self.mismatch = mismatch
        self.report = report


class StepCollapse(ElasticaError):
    """A slice produced by the exponential map violates the immersion proxy
    (the evolving curve pinched)."""

    def __init__(self, message, s_index=None, t_index=None):
        super().__init__(message)
        self.s_index = s_index
        self.t_index = t_index
