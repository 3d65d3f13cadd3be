"""Typed error conditions shared across the library.

Every numerically detectable failure mode gets its own class so that batch
drivers can tell "the computation is wrong" apart from "the computation
correctly found a negative answer" (a rational rotation number, a resonance,
a divergent sum).
"""


class CircleLabError(Exception):
    """Base class for all library errors."""


class RationalDetected(CircleLabError):
    """A Gauss iterate hit zero to working precision: the input is
    indistinguishable from a rational number."""


class DepthExhausted(CircleLabError):
    """A finite continued fraction ran out of quotients."""


class ExactnessExhausted(CircleLabError):
    """A quotient or convergent grew past the exact-integer range; only
    logarithmic data is available at this depth."""


class NotBrjuno(CircleLabError):
    """The quotient growth certifies a divergent Brjuno sum, so finer
    arithmetic classification is vacuous."""


class NotDiffeomorphism(CircleLabError):
    """Df has a nonpositive value on the certification grid (including the
    Lipschitz safety margin)."""


class DerivativeBlowup(CircleLabError):
    """An orbit derivative product left the overflow guard range."""


class NoConvergence(CircleLabError):
    """An iterative solve (root find, bisection) hit its iteration cap."""


class PeriodicOrbitDetected(CircleLabError):
    """An orbit returned to its start within tolerance: the rotation number
    is rational p/q."""

    def __init__(self, q: int, p: int, residual: float = 0.0):
        super().__init__(f"periodic orbit: f^{q} - id - {p} ~ {residual:.3e}")
        self.q = q
        self.p = p
        self.residual = residual


class TargetUnreachable(CircleLabError):
    """Parameter tuning could not bracket the target rotation number."""


class SmallDivisor(CircleLabError):
    """A homological-equation divisor fell below the configured floor."""

    def __init__(self, k: int, magnitude: float):
        super().__init__(f"divisor |e^(2*pi*i*{k}*alpha) - 1| = {magnitude:.3e}")
        self.k = k
        self.magnitude = magnitude


class Resonance(CircleLabError):
    """A homological-equation divisor is exactly zero at working precision
    while the corresponding mode is present."""

    def __init__(self, k: int):
        super().__init__(f"exact resonance at mode {k}")
        self.k = k


class ConjugacyNotDiffeo(CircleLabError):
    """A candidate conjugacy h = id + w failed the diffeomorphism check:
    the perturbation was too large for this step."""


class NotMonotone(CircleLabError):
    """An averaged conjugacy candidate has nonpositive derivative on the
    certification grid."""


class TilingFailure(CircleLabError):
    """Partition intervals overlap beyond tolerance (precision exhaustion
    at large return times)."""

    def __init__(self, overlap: float):
        super().__init__(f"partition interiors overlap by {overlap:.3e}")
        self.overlap = overlap


class EmptyWindow(CircleLabError):
    """The regularity bootstrap window (2 + sigma, r) is empty."""
