import pytest

from haarlab import DyadicInterval, IntervalCollection


@pytest.fixture
def chain10():
    return IntervalCollection(DyadicInterval(j, 0) for j in range(11))


@pytest.fixture
def half_interval_collection():
    """Every dyadic subinterval of [1/2, 1) down to level 4, [1/2, 1) included."""
    out = []
    for m in range(1, 5):
        width = 1 << (m - 1)
        out.extend(DyadicInterval(m, k) for k in range(width, 2 * width))
    return IntervalCollection(out)
