"""Exception hierarchy shared by all specflow modules."""


class SpecflowError(Exception):
    """Base class for every error raised by specflow."""


class SpaceMismatch(SpecflowError, ValueError):
    """Two rigged sets live in different spaces (circle vs line)."""


class DominanceViolation(SpecflowError, ValueError):
    """Difference S - T requested with T not dominated by S."""


class SizeLimit(SpecflowError, ValueError):
    """Instance too large for an exhaustive oracle."""


class DepthExceeded(SpecflowError, RuntimeError):
    """Adaptive bisection hit its depth limit."""

    def __init__(self, lo, hi, message=None):
        self.interval = (lo, hi)
        super().__init__(message or f"bisection depth exceeded on [{lo!r}, {hi!r}]")


class SamplerInconsistent(SpecflowError, RuntimeError):
    """A spectrum sampler is not reproducible or a track failed reconstruction."""


class JunctionMismatch(SpecflowError, ValueError):
    """Concatenated mu-invariants do not share the junction set."""


class NotALoop(SpecflowError, ValueError):
    """A path expected to start and end at the identity does not."""


class NonConstant(SpecflowError, RuntimeError):
    """A mu-invariant that must be constant is not."""


class NotUnitary(SpecflowError, ValueError):
    """Matrix fails the unitarity tolerance."""


class SolverFailure(SpecflowError, RuntimeError):
    """Eigensolver residuals exceed the contract."""


class DegenerateSpectrum(SpecflowError, ValueError):
    """An operation requiring simple eigenvalues met a degenerate one."""


class BranchFailure(SpecflowError, ValueError):
    """Green's function requested at a band edge."""


class ResonanceHit(SpecflowError, ArithmeticError):
    """1 + T0 J_r is (numerically) singular."""

    def __init__(self, message, min_singval=None):
        self.min_singval = min_singval
        super().__init__(message)


class ResonanceOnPath(SpecflowError, ArithmeticError):
    """A coupling path [0, r] crosses the resonance set."""

    def __init__(self, brackets, message=None):
        self.brackets = list(brackets)
        self.r_star = [0.5 * (lo + hi) for lo, hi in self.brackets]
        super().__init__(message or f"resonance on coupling path at r* ~ {self.r_star}")


class ThetaDependence(SpecflowError, RuntimeError):
    """Singular part of the mu-invariant depends on the angle."""
