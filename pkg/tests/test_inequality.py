import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from randcent.inequality import AllZero, Dominance, LengthMismatch, gini, lorenz_compare, lorenz_curve

vectors = st.lists(st.floats(0, 100, allow_nan=False), min_size=1, max_size=30).filter(lambda v: sum(v) > 0)


def test_lorenz_examples():
    np.testing.assert_allclose(lorenz_curve([1, 1, 1]).points, [1 / 3, 2 / 3, 1])
    np.testing.assert_allclose(lorenz_curve([0, 0, 2, 2]).points, [0, 0, 0.5, 1])
    with pytest.raises(AllZero):
        lorenz_curve([0, 0])
    with pytest.raises(ValueError):
        lorenz_curve([1, -1])


@given(vectors, st.randoms(use_true_random=False))
@settings(max_examples=60, deadline=None)
def test_lorenz_invariants(x, rnd):
    pts = lorenz_curve(x).points
    n = len(x)
    assert pts[-1] == 1.0
    assert np.all(np.diff(pts) >= -1e-12)
    assert np.all(np.diff(pts, 2) >= -1e-12)
    assert np.all(pts <= np.arange(1, n + 1) / n + 1e-12)
    y = list(x)
    rnd.shuffle(y)
    assert np.array_equal(lorenz_curve(y).points, pts)


@given(vectors, st.sampled_from([0.5, 2.0, 4.0, 0.25]))
@settings(max_examples=40, deadline=None)
def test_scale_invariance(x, alpha):
    # power-of-two scalings are exact in floating point
    assert np.array_equal(lorenz_curve(np.array(x) * alpha).points, lorenz_curve(x).points)


def test_compare_examples():
    assert lorenz_compare([1, 1, 1, 1], [0, 0, 2, 2]) is Dominance.X_DOMINATES
    assert lorenz_compare([0, 0, 2, 2], [1, 1, 1, 1]) is Dominance.Y_DOMINATES
    assert lorenz_compare([3, 1, 2], [2, 3, 1]) is Dominance.EQUAL
    assert lorenz_compare([1, 1, 4, 4], [0, 2.5, 2.5, 5]) is Dominance.INCOMPARABLE
    with pytest.raises(LengthMismatch):
        lorenz_compare([1, 2], [1, 2, 3])
    with pytest.raises(AllZero):
        lorenz_compare([0, 0], [1, 2])


def test_compare_tolerance_absorbs_rounding():
    x = np.array([0.1, 0.2, 0.7])
    assert lorenz_compare(x, x * (1 + 1e-15)) is Dominance.EQUAL


def test_gini_examples():
    assert gini([5, 5, 5, 5]) == pytest.approx(0, abs=1e-15)
    for n in (2, 10, 100):
        x = np.zeros(n)
        x[-1] = 1
        assert gini(x) == pytest.approx(1 - 1 / n, rel=1e-12)


@given(st.integers(0, 100_000))
@settings(max_examples=100, deadline=None)
def test_dominance_orders_gini(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 20))
    x = rng.uniform(0, 1, n) ** rng.uniform(0.2, 3)
    y = rng.uniform(0, 1, n) ** rng.uniform(0.2, 3)
    assume(x.sum() > 0 and y.sum() > 0)
    verdict = lorenz_compare(x, y)
    if verdict is Dominance.X_DOMINATES:
        assert gini(x) <= gini(y) + 1e-12
    elif verdict is Dominance.Y_DOMINATES:
        assert gini(y) <= gini(x) + 1e-12
    assert lorenz_compare(x, x) is Dominance.EQUAL
    flipped = {Dominance.X_DOMINATES: Dominance.Y_DOMINATES, Dominance.Y_DOMINATES: Dominance.X_DOMINATES}
    assert lorenz_compare(y, x) is flipped.get(verdict, verdict)


def test_dominance_transitive_on_chain():
    rng = np.random.default_rng(1)
    base = np.sort(rng.uniform(0, 1, 12))
    # mixing toward equality raises the curve monotonically
    chain = [base * (1 - t) + base.mean() * t for t in (0.0, 0.3, 0.6, 0.9)]
    for i in range(len(chain)):
        for j in range(i + 1, len(chain)):
            assert lorenz_compare(chain[j], chain[i]) is Dominance.X_DOMINATES


def test_lorenz_csv(tmp_path):
    path = tmp_path / "l.csv"
    lorenz_curve([1, 3]).write_csv(path)
    assert path.read_text().splitlines() == ["k,share", "1,0.25", "2,1"]
