import math

import pytest

from circlelab.circlemap import ArnoldFamily
from circlelab.contfrac import ContinuedFraction
from circlelab.rotation import tune_parameter

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@pytest.fixture(scope="session")
def golden_cf():
    return ContinuedFraction.golden()


@pytest.fixture(scope="session")
def sqrt2_cf():
    return ContinuedFraction.periodic([2])


@pytest.fixture(scope="session")
def tuned(golden_cf, sqrt2_cf):
    """Cache of tuned family parameters keyed by (b, target name)."""
    cache = {}
    targets = {"golden": golden_cf, "sqrt2": sqrt2_cf}

    def get(b: float, target: str = "golden", tol: float = 1e-11):
        key = (b, target, tol)
        if key not in cache:
            if b == 0.0:
                tcf = targets[target]
                lo, hi = tcf.value_interval()
                cache[key] = 0.5 * (lo + hi)
            else:
                cache[key] = tune_parameter(ArnoldFamily(b), targets[target],
                                            tol=tol)[0]
        return cache[key]

    return get


@pytest.fixture(scope="session")
def arnold_b03_golden(tuned):
    return ArnoldFamily(0.3).map_at(tuned(0.3, "golden"))


@pytest.fixture(scope="session")
def arnold_b005_golden(tuned):
    return ArnoldFamily(0.05).map_at(tuned(0.05, "golden"))
