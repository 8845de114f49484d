import numpy as np

from citegrowth.optim import nelder_mead


def test_quadratic_bowl():
    res = nelder_mead(lambda x: float(np.sum((x - 3.0) ** 2)), np.array([0.0, 0.0]))
    assert res.converged
    np.testing.assert_allclose(res.x, [3.0, 3.0], atol=1e-4)


def test_rosenbrock():
    def rosen(x):
        return float(100.0 * (x[1] - x[0] ** 2) ** 2 + (1.0 - x[0]) ** 2)

    res = nelder_mead(rosen, np.array([-1.2, 1.0]), f_tol=1e-14, max_iter=5000)
    assert res.converged
    assert res.fun < 1e-8
    np.testing.assert_allclose(res.x, [1.0, 1.0], atol=1e-3)


def test_max_iter_budget():
    res = nelder_mead(lambda x: float(np.sum(x**2)), np.array([5.0, 5.0, 5.0]),
                      f_tol=0.0, max_iter=10)
    assert not res.converged
    assert res.iterations == 10


def test_deterministic():
    def f(x):
        return float(np.sum(np.abs(x - 1.0)))

    r1 = nelder_mead(f, np.array([0.2, 0.4]))
    r2 = nelder_mead(f, np.array([0.2, 0.4]))
    np.testing.assert_array_equal(r1.x, r2.x)
    assert r1.fun == r2.fun
