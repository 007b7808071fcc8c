"""Independent reference computations shared by the unit and acceptance tests."""

import math

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import integrate

_NODES, _WEIGHTS = leggauss(10)


def beta_nested_integral(c, k):
    """``∫_{-c_1}^0 ∫_{-c_2}^{y_1} ... ∫_{-c_k}^{y_{k-1}} dy_k ... dy_1`` by nested Gauss-Legendre.

    Every inner integral is a polynomial of degree below 10 in its upper limit,
    so the 10-point rule is exact up to rounding.
    """

    def inner(level, upper):
        # ∫_{-c_level}^{upper} inner(level + 1, z) dz, vectorised over ``upper``
        upper = np.atleast_1d(upper)
        lo = -c[level - 1]
        half = (upper - lo) / 2.0
        z = lo + half[:, None] * (_NODES[None, :] + 1.0)
        if level == k:
            vals = np.ones_like(z)
        else:
            vals = inner(level + 1, z.ravel()).reshape(z.shape)
        return half * (vals @ _WEIGHTS)

    if k == 0:
        return 1.0
    return float(inner(1, 0.0)[0])


def order_stat_prob_mc(c, M, y, n, rng):
    """Fraction of ``n`` sorted uniform samples of size ``M`` with ``U_(i) <= c_i / y`` for all ``i``."""
    u = np.sort(rng.random((n, M)), axis=1)
    return float(np.mean(np.all(u <= np.asarray(c[:M]) / y, axis=1)))


def v_m_quadrature(theta, delta, M, order_stat_prob):
    """``2/√(2π) ∫_0^{c_M} P_{M-1}(y) (θ + M - y) y^{M-1} e^{-y} / (M-1)! dy``.

    ``P_{M-1}(y)`` is the order-statistic probability; the integrand has kinks
    at each ``c_j``, so the range is split there.
    """
    c = [theta + j + d for j, d in enumerate(delta)] + [theta + M - 1.0]
    c_m = c[-1]

    def f(y):
        p = order_stat_prob(c, M - 1, y) if M > 1 else 1.0
        return p * (theta + M - y) * math.exp((M - 1) * math.log(y) - y - math.lgamma(M)) if y > 0 else 0.0

    cuts = sorted({0.0, *[x for x in c if 0 < x < c_m], c_m})
    total = 0.0
    for a, b in zip(cuts[:-1], cuts[1:]):
        val, _ = integrate.quad(f, a, b, epsabs=0.0, epsrel=1e-12, limit=200)
        total += val
    return 2.0 / math.sqrt(2.0 * math.pi) * total


def random_profile(rng, max_m):
    """Random ``(θ, Δ(1..M-1), M)`` whose limit sequence is non-decreasing."""
    while True:
        M = int(rng.integers(1, max_m + 1))
        theta = float(rng.uniform(0.2, 3.0))
        delta = rng.uniform(-0.4, 0.8, M - 1)
        c = np.r_[theta + np.arange(M - 1) + delta, theta + M - 1]
        if c[0] >= 0 and np.all(np.diff(c) >= 0):
            return theta, [float(d) for d in delta], M
