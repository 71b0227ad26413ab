import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from scipy import stats
from scipy.optimize import linprog

from marketmodes.calibrate import (
    BlendSimulator,
    CalibrationError,
    fit_weights,
    simplex_points,
    wasserstein_1d,
)
from marketmodes.corrnet import CorrMatrix
from marketmodes.gbm import BlendWeights, community_channels, market_channels
from marketmodes.market_data import GbmParams

samples = st.lists(st.floats(-10, 10, allow_nan=False), min_size=1, max_size=12)


def transport_lp(a, b):
    """W1 by solving the optimal-transport linear programme directly."""
    a, b = np.asarray(a, float), np.asarray(b, float)
    n, m = a.size, b.size
    cost = np.abs(a[:, None] - b[None, :]).ravel()
    rows = np.zeros((n, n * m))
    cols = np.zeros((m, n * m))
    for i in range(n):
        rows[i, i * m : (i + 1) * m] = 1
    for j in range(m):
        cols[j, j::m] = 1
    res = linprog(
        cost,
        A_eq=np.vstack([rows, cols]),
        b_eq=np.concatenate([np.full(n, 1 / n), np.full(m, 1 / m)]),
        bounds=(0, None),
        method="highs",
    )
    return res.fun


def test_w1_basic_values():
    assert wasserstein_1d([0.3, -1.0, 2.0], [2.0, 0.3, -1.0]) == 0.0
    assert wasserstein_1d([0.0], [3.0]) == 3.0
    assert wasserstein_1d([0, 1], [1, 2]) == 1.0
    assert transport_lp([0, 1], [1, 2]) == pytest.approx(1.0, abs=1e-9)
    with pytest.raises(ValueError):
        wasserstein_1d([], [1.0])


def test_w1_matches_lp_unequal_sizes(rng):
    for _ in range(10):
        a = rng.normal(size=int(rng.integers(1, 7)))
        b = rng.normal(0.5, 2, size=int(rng.integers(1, 7)))
        assert wasserstein_1d(a, b) == pytest.approx(transport_lp(a, b), abs=1e-9)


def test_w1_matches_scipy(rng):
    a, b = rng.normal(size=300), rng.standard_t(3, size=211)
    assert wasserstein_1d(a, b) == pytest.approx(stats.wasserstein_distance(a, b), rel=1e-12)


@settings(max_examples=100, deadline=None)
@given(a=samples, b=samples)
def test_w1_symmetric_exactly(a, b):
    assert wasserstein_1d(a, b) == wasserstein_1d(b, a)
    assert wasserstein_1d(a, b) >= 0


@settings(max_examples=100, deadline=None)
@given(a=samples, b=samples, c=samples)
def test_w1_triangle(a, b, c):
    assert wasserstein_1d(a, c) <= wasserstein_1d(a, b) + wasserstein_1d(b, c) + 1e-9


@settings(max_examples=60, deadline=None)
@given(a=samples, data=st.data())
def test_w1_zero_iff_sorted_equal(a, data):
    perm = data.draw(st.permutations(a))
    assert wasserstein_1d(a, perm) == 0.0
    b = data.draw(st.lists(st.floats(-10, 10, allow_nan=False), min_size=len(a), max_size=len(a)))
    assume(sorted(b) != sorted(a))
    assert wasserstein_1d(a, b) > 0


@settings(max_examples=60, deadline=None)
@given(a=samples, b=samples, shift=st.floats(-5, 5))
def test_w1_translation(a, b, shift):
    a, b = np.array(a), np.array(b)
    base = wasserstein_1d(a, b)
    assert wasserstein_1d(a + shift, b + shift) == pytest.approx(base, abs=1e-9)
    assert abs(wasserstein_1d(a + shift, b) - base) <= abs(shift) + 1e-9


def test_w1_point_mass_shift_is_exact():
    assert wasserstein_1d([2.0], [2.0 + 1.5]) == 1.5


# -- grid search -------------------------------------------------------------


def test_simplex_points():
    assert simplex_points(2, 2) == [(0, 2), (1, 1), (2, 0)]
    pts = simplex_points(3, 4)
    assert len(pts) == 15 and pts == sorted(pts) and all(sum(p) == 4 for p in pts)


TICKERS = [f"S{i:02d}" for i in range(16)]


def small_simulator(t_steps=300):
    params = [GbmParams(10.0, 0.0003, 0.01 + 0.001 * i) for i in range(16)]
    comm = {t: i // 4 for i, t in enumerate(TICKERS)}
    clus = {t: 0.3 + 0.04 * i for i, t in enumerate(TICKERS)}
    corr = CorrMatrix(TICKERS, np.eye(16) * 0.5 + 0.5)
    channels = {
        "L": community_channels(TICKERS, comm, clus),
        "M": market_channels(corr, TICKERS, ["S00", "S05"]),
    }
    return BlendSimulator(params, TICKERS, t_steps, channels)


def test_fit_recovers_planted_weights():
    sim = small_simulator()
    target = sim(BlendWeights(0.5, 0.5, 0.0), 0).offdiagonal()
    fit = fit_weights(target, sim, ("L", "M"), step=0.1, master_seeds=[0])
    assert abs(fit.weights.w_L - 0.5) <= 0.1 + 1e-12
    assert abs(fit.weights.w_M - 0.5) <= 0.1 + 1e-12
    assert fit.distance >= 0
    assert fit.evaluations >= 11


def test_fit_degenerate_target_returns_smallest_vector():
    fit = fit_weights([0.1, 0.2], lambda w, s: np.array([0.0, 0.5]), ("L", "M"), step=0.25, master_seeds=[1, 2])
    assert fit.active_weights() == {"L": 0.0, "M": 1.0}
    assert fit.evaluations == 5 + 1


def test_fit_deterministic_rerun():
    sim = small_simulator(120)
    target = sim(BlendWeights(0.3, 0.4, 0.3), 7).offdiagonal()
    a = fit_weights(target, sim, ("N", "L", "M"), step=0.25, master_seeds=[1, 2])
    b = fit_weights(target, small_simulator(120), ("N", "L", "M"), step=0.25, master_seeds=[1, 2])
    assert a == b


def test_fit_refinement_reaches_half_steps():
    # the objective is minimised at L = 0.375, between the 0.25-grid points
    f = lambda w, s: np.array([w.w_L])
    fit = fit_weights([0.375], f, ("L", "M"), step=0.25, master_seeds=[0])
    assert fit.weights.w_L == 0.375
    no_refine = fit_weights([0.375], f, ("L", "M"), step=0.25, master_seeds=[0], refine=False)
    assert no_refine.weights.w_L in (0.25, 0.5)


def test_fit_propagates_simulator_failure():
    def broken(w, s):
        if w.w_L > 0.6:
            raise RuntimeError("boom")
        return np.zeros(3)

    with pytest.raises(CalibrationError, match="boom") as err:
        fit_weights([0.0], broken, ("L", "M"), step=0.25, master_seeds=[0])
    assert "'L': 0.75" in str(err.value)


def test_fit_argument_checks():
    f = lambda w, s: np.zeros(2)
    with pytest.raises(ValueError):
        fit_weights([0.0], f, ("L", "M"), step=0.3)
    with pytest.raises(ValueError):
        fit_weights([0.0], f, ("L", "M"), step=1.0)
    with pytest.raises(ValueError):
        fit_weights([0.0], f, ("L", "M"), master_seeds=[])
    with pytest.raises(ValueError):
        fit_weights([0.0], f, ("L", "L"))


def test_simulator_reuses_channel_walks():
    sim = small_simulator(50)
    sim(BlendWeights(0.5, 0.5, 0.0), 3)
    sim(BlendWeights(0.2, 0.8, 0.0), 3)
    assert set(sim._walks) == {("L", 3), ("M", 3)}
