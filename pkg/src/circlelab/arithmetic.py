"""Arithmetic classification of rotation numbers.

Three nested classes are probed at finite depth, from quotient data only:

* Diophantine: q^(2+sigma) |alpha - p/q| stays bounded below over convergents.
* Brjuno: sum of ln(q_{n+1}) / q_n converges.
* The linearization condition tested by the threshold recursion
  R_{k+1} = Rmap_{alpha_k}(R_k) against truncated Brjuno values, where
  Rmap_alpha(r) = (r - ln(1/alpha) + 1) / alpha  once r >= ln(1/alpha),
  and e^r below that.

Verdicts are honest about truncation: a pass or a fail is certified only when
the two-sided interval data leaves a margin above the guard band and the
truncation-tail allowance; everything else is inconclusive.  Absolute errors
below ~1e-290 (underflowed correction terms) are absorbed by the guard bands.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .contfrac import ContinuedFraction
from .errors import ExactnessExhausted, NotBrjuno, RationalDetected
from .levelindex import ZERO, LevelReal

_GUARD = 1e-9  # decision guard band (absolute at level 0, mantissa above)
_TAIL_FLOOR = 1e-300


# ---------------------------------------------------------------------------
# Diophantine estimate


@dataclass(frozen=True)
class DiophantineEstimate:
    sigma: float
    depth: int
    gamma_hat: float
    attained_at: int
    certified: bool
    values: tuple = field(repr=False, default=())

    def to_json(self) -> dict:
        return {"sigma": self.sigma, "depth": self.depth,
                "gamma_hat": self.gamma_hat, "attained_at": self.attained_at,
                "certified": self.certified, "values": list(self.values)}


def diophantine_estimate(cf: ContinuedFraction, sigma: float,
                         depth: int) -> DiophantineEstimate:
    """Best lower bound for the Diophantine constant over denominators up to
    q_depth.  Convergents minimize q^(2+sigma)|alpha - p/q| among all
    rationals with denominator below the next return time, so scanning them
    is exhaustive for that range.
    """
    if depth < 2:
        raise ValueError("depth must be >= 2")
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    values = []
    try:
        alo, ahi = cf.shifted_value_bracket(0)
        exact_alpha = True
    except RationalDetected:
        raise
    for k in range(1, depth + 1):
        v = _dioph_value(cf, k, sigma, alo if exact_alpha else None,
                         ahi if exact_alpha else None)
        values.append(v)
    gamma_hat = min(v for v in values if math.isfinite(v))
    attained = values.index(gamma_hat) + 1
    certified = (depth >= 5 and gamma_hat > 0.0
                 and attained <= depth - 3
                 and min(values[-3:]) >= 0.8 * gamma_hat)
    return DiophantineEstimate(sigma, depth, gamma_hat, attained, certified,
                               tuple(values))


def _dioph_value(cf, k, sigma, alo, ahi) -> float:
    """q_k^(2+sigma) |alpha - p_k/q_k|, via exact fractions while convergents
    allow it, via log data past that point."""
    try:
        p, q = cf.convergent(k)
        d = min(abs(alo - Fraction(p, q)), abs(ahi - Fraction(p, q)))
        scale = float(q) ** sigma if float(q) != math.inf else math.inf
        if math.isinf(scale):
            raise ExactnessExhausted("q too large for direct power")
        return float(q * q * d) * scale
    except (ExactnessExhausted, OverflowError):
        # ln value = (1+sigma) ln q_k + ln beta_k,
        # beta_k = 1/(q_{k+1} + alpha_{k+1} q_k) in (1/(q_{k+1}+q_k), 1/q_{k+1})
        lnq_lo, lnq_hi = cf.lnq_interval(k)
        lnq1_lo, _ = cf.lnq_interval(k + 1)
        t = lnq1_lo.diff(lnq_hi.scale(1.0 + sigma)) if \
            lnq1_lo >= lnq_hi.scale(1.0 + sigma) else None
        if t is None:
            return math.inf  # no bound available at this depth
        tf = t.to_float()
        return 0.0 if tf > 745.0 else math.exp(-tf)


# ---------------------------------------------------------------------------
# Brjuno sum and Brjuno function


@dataclass(frozen=True)
class BrjunoSumResult:
    value: float
    diverging: bool
    depth: int
    terms: tuple = field(repr=False, default=())

    def to_json(self) -> dict:
        return {"value": self.value, "diverging": self.diverging,
                "depth": self.depth, "terms": list(self.terms)}


def brjuno_sum(cf: ContinuedFraction, depth: int, window: int = 3,
               threshold: float = 1.0) -> BrjunoSumResult:
    """Truncated sum of ln(q_{n+1})/q_n with a divergence heuristic: the sum
    is flagged diverging when the last `window` threshold-decidable terms
    each exceed `threshold` (growth of that shape cannot be summable).

    Deep terms of super-exponential chains stop being decidable against the
    threshold once their two-sided bounds straddle it (iterated-exponential
    resolution limit); those are skipped by the heuristic, never invented.
    """
    if depth < 2:
        raise ValueError("depth must be >= 2")
    terms = []
    decided = []  # True = certified above threshold, False = certified below
    for n in range(1, depth):
        num_lo, num_hi = cf.lnq_interval(n + 1)
        den_lo, den_hi = cf.lnq_interval(n)
        # term = ln(q_{n+1}) / q_n = ln(q_{n+1}) * e^{-ln q_n}
        t_lo = num_lo.mul_exp_neg(den_hi).to_float()
        t_hi = num_hi.mul_exp_neg(den_lo).to_float()
        terms.append(t_lo)
        if t_lo > threshold:
            decided.append(True)
        elif t_hi <= threshold:
            decided.append(False)
    total = math.fsum(t for t in terms if math.isfinite(t))
    if any(not math.isfinite(t) for t in terms):
        total = math.inf
    k = min(window, len(decided))
    diverging = k > 0 and all(decided[-k:])
    return BrjunoSumResult(total, diverging, depth, tuple(terms))


def brjuno_function(x: float, depth: int) -> float:
    """Truncated Brjuno function of x in (0,1): the partial sum of
    beta_{j-1} ln(1/x_j) along the Gauss orbit x_{j+1} = {1/x_j}."""
    if not 0.0 < x < 1.0:
        raise ValueError("x must lie strictly inside (0, 1)")
    if depth < 1:
        raise ValueError("depth must be >= 1")
    total = 0.0
    beta = 1.0
    y = x
    for _ in range(depth):
        if y < 1e-12:
            raise RationalDetected("Gauss iterate vanished at working precision")
        total += beta * math.log(1.0 / y)
        beta *= y
        inv = 1.0 / y
        y = inv - math.floor(inv)
    return total


def brjuno_interval(cf: ContinuedFraction, n: int, depth: int,
                    b_cap: float = 50.0):
    """Two-sided LevelReal bounds for the depth-truncated Brjuno value of the
    n-th Gauss iterate, plus a float tail allowance.

    The truncated value is a lower bound of the true one (all terms are
    positive).  The tail allowance is beta_{depth-1} L_{n+depth} (the first
    omitted term, computed from known data) plus beta_depth * b_cap with
    b_cap a configured cap on deeper truncated values.
    """
    b_lo = b_hi = ZERO
    s_lo = ZERO  # lower bound of sum of L over the window
    for j in range(depth - 1, -1, -1):
        llo, lhi = cf.log_inverse_interval(n + j)
        b_lo = llo.add(b_lo.mul_exp_neg(lhi))
        b_hi = lhi.add(b_hi.mul_exp_neg(llo))
    for j in range(depth):
        s_lo = s_lo.add(cf.log_inverse_interval(n + j)[0])
    try:
        l_next_lo, l_next_hi = cf.log_inverse_interval(n + depth)
        term1 = l_next_hi.mul_exp_neg(s_lo).to_float()
        term2 = LevelReal.from_float(b_cap).mul_exp_neg(
            s_lo.add(l_next_lo)).to_float()
    except Exception:
        term1 = term2 = 0.0
    tail = term1 + term2 + _TAIL_FLOOR
    if not math.isfinite(tail):
        tail = 1e300
    return b_lo, b_hi, tail


# ---------------------------------------------------------------------------
# The threshold recursion and the linearization condition


def r_alpha(alpha: float, r: float) -> float:
    """One step of the threshold map: (r - ln(1/alpha) + 1)/alpha for
    r >= ln(1/alpha), e^r below; continuous at the joint."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie strictly inside (0, 1)")
    if r < 0.0:
        raise ValueError("r must be >= 0")
    ell = math.log(1.0 / alpha)
    if r >= ell:
        return (r - ell + 1.0) / alpha
    return math.exp(r)


def _r_step(r: LevelReal, ell: LevelReal) -> LevelReal:
    if r >= ell:
        d = r.diff(ell).add_float(1.0)
        return ell.add(d.log()).exp()
    return r.exp()


@dataclass(frozen=True)
class HRecursionState:
    """One step of the threshold recursion seeded at the m-th Gauss iterate;
    r saturates to inf when past float range."""
    m: int
    k: int
    r: float
    alpha_gauss: float


def h_recursion_states(cf: ContinuedFraction, m: int, k_max: int):
    """Yield the recursion states R_0..R_{k_max} at seed m (diagnostics)."""
    r = ZERO
    for k in range(k_max + 1):
        alo, ahi = cf.gauss_iterate_interval(m + k)
        yield HRecursionState(m, k, r.to_float(), 0.5 * (alo + ahi))
        llo, lhi = cf.log_inverse_interval(m + k)
        r = _r_step(r, llo)


@dataclass(frozen=True)
class HProbe:
    m: int
    passed_at: Optional[int]
    certified_below: bool


@dataclass(frozen=True)
class ConditionHVerdict:
    kind: str  # "pass_to_depth" | "fail_at" | "inconclusive"
    m_max: int
    k_max: int
    b_depth: int
    fail_m: Optional[int]
    probes: tuple = field(repr=False, default=())

    def to_json(self) -> dict:
        return {"kind": self.kind, "m_max": self.m_max, "k_max": self.k_max,
                "b_depth": self.b_depth, "fail_m": self.fail_m,
                "probes": [{"m": p.m, "passed_at": p.passed_at,
                            "certified_below": p.certified_below}
                           for p in self.probes]}


def condition_h_check(cf: ContinuedFraction, m_max: int, k_max: int,
                      b_depth: int, b_cap: float = 50.0) -> ConditionHVerdict:
    """Truncated test of the linearization condition: every seed m <= m_max
    must reach R_k >= B(alpha_{m+k}) for some k <= k_max.

    pass_to_depth: every m admits a certified k (recursion lower bound beats
    the Brjuno upper bound plus tail allowance).
    fail_at(m):    for some m the recursion upper bound stays below the
    truncated Brjuno lower bound, with margin beyond the tail allowance, for
    every k <= k_max.
    inconclusive:  anything else.
    """
    if min(m_max, k_max, b_depth) < 1:
        raise ValueError("m_max, k_max, b_depth must all be >= 1")
    gate = brjuno_sum(cf, depth=max(40, m_max + k_max + 2))
    if gate.diverging:
        raise NotBrjuno("divergence-certified quotient growth")
    cache: dict[int, tuple] = {}

    def b_at(n):
        if n not in cache:
            cache[n] = brjuno_interval(cf, n, b_depth, b_cap)
        return cache[n]

    probes = []
    first_fail = None
    all_pass = True
    for m in range(0, m_max + 1):
        r_lo = r_hi = ZERO
        found = None
        below = True
        for k in range(0, k_max + 1):
            b_lo, b_hi, tail = b_at(m + k)
            if r_lo >= b_hi.add_float(tail).nudge_up(_GUARD):
                found = k
                break
            if not r_hi.add_float(tail).nudge_up(_GUARD) <= b_lo:
                below = False
            if k < k_max:
                llo, lhi = cf.log_inverse_interval(m + k)
                r_lo = _r_step(r_lo, llo)
                r_hi = _r_step(r_hi, lhi)
        probes.append(HProbe(m, found, below if found is None else False))
        if found is None:
            all_pass = False
            if below and first_fail is None:
                first_fail = m
    if all_pass:
        kind = "pass_to_depth"
    elif first_fail is not None:
        kind = "fail_at"
    else:
        kind = "inconclusive"
    return ConditionHVerdict(kind, m_max, k_max, b_depth, first_fail,
                             tuple(probes))


# ---------------------------------------------------------------------------
# aggregation


@dataclass(frozen=True)
class ClassifyConfig:
    sigma: float = 0.0
    diophantine_depth: int = 30
    brjuno_depth: int = 40
    divergence_window: int = 3
    divergence_threshold: float = 1.0
    h_m_max: int = 10
    h_k_max: int = 20
    h_b_depth: int = 40
    b_cap: float = 50.0

    def to_json(self) -> dict:
        return {k: getattr(self, k) for k in (
            "sigma", "diophantine_depth", "brjuno_depth", "divergence_window",
            "divergence_threshold", "h_m_max", "h_k_max", "h_b_depth", "b_cap")}


@dataclass(frozen=True)
class ArithmeticVerdict:
    diophantine: DiophantineEstimate
    brjuno: BrjunoSumResult
    brjuno_B: float
    condition_h: Optional[ConditionHVerdict]
    config: ClassifyConfig
    note: str = ""

    def to_json(self) -> dict:
        return {"diophantine": self.diophantine.to_json(),
                "brjuno_sum": self.brjuno.to_json(),
                "brjuno_B": self.brjuno_B,
                "condition_h": None if self.condition_h is None
                else self.condition_h.to_json(),
                "config": self.config.to_json(),
                "note": self.note}


def classify(cf: ContinuedFraction,
             config: ClassifyConfig = ClassifyConfig()) -> ArithmeticVerdict:
    """Bundle the three classifications at the configured depths.

    Verdict-order consistency is enforced: a certified Diophantine pass
    demotes a fail_at answer for the linearization condition to inconclusive
    (at equal truncation depths the strict class order admits no such pair,
    so one of the heuristics must have been fooled)."""
    dio = diophantine_estimate(cf, config.sigma, config.diophantine_depth)
    bs = brjuno_sum(cf, config.brjuno_depth, config.divergence_window,
                    config.divergence_threshold)
    blo, bhi, _ = brjuno_interval(cf, 0, config.brjuno_depth, config.b_cap)
    b_mid = 0.5 * (blo.to_float() + bhi.to_float()) \
        if math.isfinite(bhi.to_float()) else blo.to_float()
    note = ""
    if bs.diverging:
        h = None
        note = "Brjuno sum diverging: linearization-condition check vacuous"
    else:
        h = condition_h_check(cf, config.h_m_max, config.h_k_max,
                              config.h_b_depth, config.b_cap)
        if dio.certified and h.kind == "fail_at":
            h = ConditionHVerdict("inconclusive", h.m_max, h.k_max,
                                  h.b_depth, None, h.probes)
            note = ("certified Diophantine pass demoted a fail_at verdict "
                    "to inconclusive (class-order consistency)")
    return ArithmeticVerdict(dio, bs, b_mid, h, config, note)
