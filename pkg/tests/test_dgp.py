import numpy as np
import pytest
from scipy.linalg import LinAlgError

import hsictest.dgp as dgp
from hsictest.dgp import (
    CONCURRENT_DGPS,
    IntegralOperator,
    concurrent_regression,
    exp_cov_matrix,
    fgarch,
    gp_exp_cov,
    har1,
    min_kernel_operator,
    setar,
    threshold_sign,
    wiener,
)
from hsictest.errors import ConfigurationError, NumericalError
from hsictest.grid import make_grid, make_uniform_grid

G5 = make_uniform_grid(5)
G21 = make_uniform_grid(21)


def test_wiener_starts_at_zero():
    paths = wiener(G21, np.random.default_rng(0), size=50)
    assert np.all(paths[:, 0] == 0.0)
    assert not np.any(np.signbit(paths[:, 0]))
    assert wiener(G21, np.random.default_rng(0)).shape == (21,)


def test_wiener_covariance():
    paths = wiener(G5, np.random.default_rng(1), size=100_000)
    emp = paths.T @ paths / len(paths)
    t = G5.points
    np.testing.assert_allclose(emp, np.minimum.outer(t, t), rtol=0, atol=0.02)
    assert abs(paths[:, -1].var() - 1) <= 0.02
    assert abs(np.mean(paths[:, 2] * paths[:, 4]) - 0.5) <= 0.02


def test_wiener_irregular_grid():
    g = make_grid([0.0, 0.1, 0.5, 1.0])
    paths = wiener(g, np.random.default_rng(2), size=100_000)
    np.testing.assert_allclose(paths.var(axis=0), g.points, atol=0.02)


def test_gp_covariance():
    z = gp_exp_cov(G5, np.random.default_rng(3), size=100_000)
    np.testing.assert_allclose(z.mean(axis=0), 0, atol=0.02)
    emp = np.cov(z, rowvar=False)
    np.testing.assert_allclose(emp, exp_cov_matrix(G5.points), rtol=0, atol=0.02)
    assert abs(np.corrcoef(z[:, 0], z[:, -1])[0, 1] - np.exp(-0.5)) <= 0.02


def test_gp_jitter_escalation(monkeypatch):
    calls = []

    def flaky(a, lower):
        calls.append(a[0, 0] - 1.0)
        if len(calls) < 3:
            raise LinAlgError("not positive definite")
        return np.linalg.cholesky(a)

    monkeypatch.setattr(dgp, "cholesky", flaky)
    dgp._exp_cov_factor.cache_clear()
    gp_exp_cov(make_uniform_grid(7), np.random.default_rng(0))
    assert calls[0] == 0.0
    assert calls[1] == pytest.approx(1e-10)
    assert calls[2] == pytest.approx(1e-9)
    dgp._exp_cov_factor.cache_clear()


def test_gp_factorization_failure(monkeypatch):
    def broken(a, lower):
        raise LinAlgError("nope")

    monkeypatch.setattr(dgp, "cholesky", broken)
    dgp._exp_cov_factor.cache_clear()
    with pytest.raises(NumericalError):
        gp_exp_cov(make_uniform_grid(6), np.random.default_rng(0))
    dgp._exp_cov_factor.cache_clear()


@pytest.mark.parametrize("gamma", [0.75, 1.5, 2.25])
def test_min_kernel_operator_norm(gamma):
    op = min_kernel_operator(gamma, make_uniform_grid(1001))
    assert abs(op.norm() - 4 * gamma / np.pi**2) <= 1e-3


def test_min_kernel_operator_norm_values():
    g = make_uniform_grid(1001)
    assert min_kernel_operator(1.5, g).norm() == pytest.approx(0.6079, abs=1e-3)
    assert min_kernel_operator(2.25, g).norm() == pytest.approx(0.9119, abs=1e-3)


def test_zero_operator():
    op = min_kernel_operator(0.0, G21)
    f = np.random.default_rng(0).normal(size=(3, 21))
    assert np.all(op(f) == 0)
    assert op.norm() == 0


def test_fast_apply_matches_dense(rng):
    g = make_grid(np.sort(np.concatenate(([0.0, 1.0], rng.uniform(size=30)))))
    op = min_kernel_operator(1.7, g)
    dense = IntegralOperator(op.kernel, g)
    f = rng.normal(size=(4, g.m))
    np.testing.assert_allclose(op(f), dense(f), rtol=0, atol=1e-14)
    np.testing.assert_allclose(op(f[0]), op.matrix @ f[0], rtol=0, atol=1e-14)
    assert np.all(op(np.zeros(g.m)) == 0)


def test_operator_linear(rng):
    op = min_kernel_operator(2.0, G21)
    f, h = rng.normal(size=(2, 21))
    np.testing.assert_allclose(op(2 * f - 3 * h), 2 * op(f) - 3 * op(h), atol=1e-13)


def test_har1_gamma_zero_is_wiener():
    a = har1(0.0, 20, G21, np.random.default_rng(4), burn_in=5)
    b = wiener(G21, np.random.default_rng(4), size=25)[5:]
    np.testing.assert_array_equal(a.values, b)


def test_har1_curves_start_at_zero():
    Y = har1(2.25, 200, G21, np.random.default_rng(5))
    assert Y.n == 200 and np.all(Y.values[:, 0] == 0)


def test_har1_recursion():
    Y = har1(1.5, 4, G21, np.random.default_rng(6), burn_in=0)
    eps = wiener(G21, np.random.default_rng(6), size=4)
    op = min_kernel_operator(1.5, G21)
    expected = [eps[0]]
    for i in range(1, 4):
        expected.append(op.matrix @ expected[-1] + eps[i])
    np.testing.assert_allclose(Y.values, expected, rtol=0, atol=1e-14)


def _lag1_ip_corr(Y):
    w = Y.grid.weights
    v = Y.values - Y.values.mean(axis=0)
    return np.sum((v[1:] * v[:-1]) @ w) / np.sum((v * v) @ w)


def test_har1_dependence_grows_with_gamma():
    g = make_uniform_grid(101)
    rho = [_lag1_ip_corr(har1(gm, 1000, g, np.random.default_rng(7))) for gm in (0.0, 0.75, 2.25)]
    assert abs(rho[0]) < 0.1
    assert rho[2] > rho[1] + 0.1


def test_setar_recursion_and_both_branches():
    Y = setar(40, G21, np.random.default_rng(8), burn_in=0)
    eps = wiener(G21, np.random.default_rng(8), size=40)
    op = min_kernel_operator(1.5, G21)
    w = G21.weights
    hist = [np.zeros(21), np.zeros(21)]
    signs = []
    for i in range(40):
        lagged = hist[-2]
        s = 1.0 if np.sqrt(w @ lagged**2) <= 1 else -1.0
        signs.append(s)
        hist.append(s * (op.matrix @ lagged) + eps[i])
    np.testing.assert_allclose(Y.values, hist[2:], rtol=0, atol=1e-13)
    assert 1.0 in signs and -1.0 in signs


def test_setar_first_curve_is_innovation():
    Y = setar(3, G21, np.random.default_rng(9), burn_in=0)
    eps = wiener(G21, np.random.default_rng(9), size=3)
    np.testing.assert_array_equal(Y.values[:2], eps[:2])


def test_setar_threshold_sign():
    # a constant curve c has L2 norm |c|
    g = make_uniform_grid(11)
    assert threshold_sign(np.full(11, 0.5), g) == 1.0
    assert threshold_sign(np.full(11, -2.0), g) == -1.0
    assert threshold_sign(np.full(11, 1.0), g) == 1.0
    assert threshold_sign(np.zeros(11), g) == 1.0


def test_fgarch_first_volatility():
    X, s2 = fgarch(1, G21, np.random.default_rng(10), burn_in=0, return_volatility=True)
    t = G21.points
    np.testing.assert_allclose(s2[0], 0.1 + (t - 0.5) ** 2, rtol=0, atol=1e-15)
    assert s2[0][10] == pytest.approx(0.1)


def test_fgarch_volatility_floor():
    _, s2 = fgarch(300, G21, np.random.default_rng(11), return_volatility=True)
    assert s2.min() >= 0.1


def test_fgarch_recursion_against_dense_integrals():
    rng = np.random.default_rng(12)
    X, s2 = fgarch(3, G21, rng, burn_in=0, return_volatility=True)
    t, w = G21.points, G21.weights
    a = (t - 0.5) ** 2
    kx = 0.2 + a[:, None] + a[None, :]
    ks = 0.4 + a[:, None] + a[None, :]
    for i in range(1, 3):
        expected = 0.1 + a + kx @ (w * X.values[i - 1] ** 2) + ks @ (w * s2[i - 1])
        np.testing.assert_allclose(s2[i], expected, rtol=1e-13)


def test_fgarch_mean_zero():
    X = fgarch(10_000, make_uniform_grid(11), np.random.default_rng(13))
    col = X.values[:, 5]
    assert abs(col.mean()) <= 3 * col.std() / np.sqrt(len(col))


def test_concurrent_dgp1_ignores_x():
    grid = make_uniform_grid(11)
    X, Y = concurrent_regression(0, 0, 0, 30, grid, np.random.default_rng(14), burn_in=10)
    rng = np.random.default_rng(14)
    xs = [dgp._fgarch_paths(30, grid, rng, 10)[0] for _ in range(4)]
    e_y = gp_exp_cov(grid, rng, size=30)
    np.testing.assert_array_equal(X.values, xs[0])
    expected = xs[1] / 3 + 2 * np.sin(2 * xs[2]) + xs[3] * e_y
    np.testing.assert_allclose(Y.values, expected, rtol=0, atol=1e-15)


@pytest.mark.parametrize("k", [2, 3, 4])
def test_concurrent_flags_switch_in_x(k):
    grid = make_uniform_grid(11)
    X, Y = concurrent_regression(*CONCURRENT_DGPS[k], 20, grid, np.random.default_rng(15), burn_in=5)
    rng = np.random.default_rng(15)
    x, x1, x2, x3 = [dgp._fgarch_paths(20, grid, rng, 5)[0] for _ in range(4)]
    e_y = gp_exp_cov(grid, rng, size=20)
    terms = {
        2: x / 3 + 2 * np.sin(2 * x2) + x3 * e_y,
        3: x1 / 3 + 2 * np.sin(2 * x) + x3 * e_y,
        4: x1 / 3 + 2 * np.sin(2 * x2) + x * e_y,
    }
    np.testing.assert_allclose(Y.values, terms[k], rtol=0, atol=1e-15)


def test_concurrent_flag_validation():
    with pytest.raises(ConfigurationError):
        concurrent_regression(2, 0, 0, 5, G5, np.random.default_rng(0))


@pytest.mark.parametrize("n, burn_in", [(0, 10), (5, -1)])
def test_size_validation(n, burn_in):
    with pytest.raises(ConfigurationError):
        har1(0.5, n, G5, np.random.default_rng(0), burn_in=burn_in)


GENERATORS = {
    "har1": lambda n, rng, b: har1(1.5, n, G21, rng, b),
    "setar": lambda n, rng, b: setar(n, G21, rng, b),
    "fgarch": lambda n, rng, b: fgarch(n, G21, rng, b),
}


@pytest.mark.parametrize("name", sorted(GENERATORS))
def test_determinism_and_burn_in_slicing(name):
    gen = GENERATORS[name]
    a = gen(15, np.random.default_rng(21), 12)
    b = gen(15, np.random.default_rng(21), 12)
    np.testing.assert_array_equal(a.values, b.values)
    tail = gen(27, np.random.default_rng(21), 0).values[12:]
    np.testing.assert_array_equal(a.values, tail)
