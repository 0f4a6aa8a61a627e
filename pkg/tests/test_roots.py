import math

import numpy as np
import pytest
from scipy import integrate

from hyplab import moduli, roots
from hyplab._fd import richardson_derivative
from hyplab.coeffs import make_family, speeds_spec, wave_spec
from hyplab.roots import (
    Mollifier,
    MultipleRoots,
    NonRealRoots,
    RegularizedRoots,
    characteristic_roots,
    regularity_report,
    regularized_root_table,
)

# measured accuracy of the 129-node rule against adaptive quadrature:
# ~1e-15 when the integrand is smooth across the window, degrading to ~1e-6
# when a coefficient kink sits inside the mollification window (the bump's
# end-point flatness no longer helps the polynomial rule)
SMOOTH_QUAD_TOL = 1e-8
KINKED_QUAD_TOL = 1e-5


# -- characteristic roots --------------------------------------------------


def test_wave_constant_roots():
    spec = wave_spec(make_family("constant", c=4.0))
    np.testing.assert_allclose(characteristic_roots(spec, 0.0, 3.0), [-6.0, 6.0])


def test_three_speeds_roots():
    spec = speeds_spec([-1.0, 0.5, 2.0])
    tau = characteristic_roots(spec, 0.0, 8.0)
    np.testing.assert_allclose(tau, [-8.0, 4.0, 16.0], rtol=1e-10)


def test_homogeneity_in_xi():
    spec = wave_spec(make_family("smooth", c0=1.0, c1=0.2, nu=3.0))
    t = 0.37
    tau1 = characteristic_roots(spec, t, 16.0)
    tau4 = characteristic_roots(spec, t, 64.0)
    np.testing.assert_allclose(tau4, 4.0 * tau1, rtol=1e-12)


def test_nonreal_roots_raise():
    spec = wave_spec(make_family("constant", c=-1.0))
    with pytest.raises(NonRealRoots):
        characteristic_roots(spec, 0.0, 8.0)


def test_multiple_roots_raise():
    spec = speeds_spec([1.0, 1.0 + 1e-12, 2.0])
    with pytest.raises(MultipleRoots):
        characteristic_roots(spec, 0.0, 4.0)


# -- mollifier -------------------------------------------------------------


def test_mollifier_discrete_mass_exact():
    q = Mollifier()
    assert abs(np.dot(q.weights, q.phi_derivative(0)) - 1.0) < 1e-15


def test_mollifier_derivative_mass_vanishes():
    # integral of a derivative of a compactly supported bump is 0
    q = Mollifier()
    for k in (1, 2):
        assert abs(np.dot(q.weights, q.phi_derivative(k))) < 1e-10


def test_mollifier_symmetry():
    q = Mollifier()
    phi = q.phi_derivative(0)
    dphi = q.phi_derivative(1)
    np.testing.assert_allclose(phi, phi[::-1], rtol=1e-13)
    np.testing.assert_allclose(dphi, -dphi[::-1], rtol=1e-12, atol=1e-16)


def test_mollifier_derivative_vs_finite_difference():
    q = Mollifier()
    idx = len(q.nodes) // 3  # interior node, away from the support edge
    x = q.nodes[idx]

    def f(y):
        return math.exp(-1.0 / (1.0 - y * y)) / q._norm

    fd = richardson_derivative(f, x, 1, 1e-5)
    assert q.phi_derivative(1)[idx] == pytest.approx(fd, rel=1e-7)


# -- regularized speeds ----------------------------------------------------


def test_constant_spec_mollification_is_identity():
    spec = speeds_spec([-1.0, 2.0])
    reg = RegularizedRoots(spec, 32.0)
    np.testing.assert_array_equal(reg.lam(0.5), reg.tau(0.5))
    np.testing.assert_array_equal(reg.lam(0.5, 1), 0.0)


def test_clamped_extension():
    spec = wave_spec(make_family("smooth", c0=1.0, c1=0.2, nu=3.0), T=1.0)
    reg = RegularizedRoots(spec, 64.0)
    np.testing.assert_array_equal(reg.tau(-0.5), reg.tau(0.0))
    np.testing.assert_array_equal(reg.tau(1.7), reg.tau(1.0))
    # mollified speeds stay defined at the endpoints
    assert np.all(np.isfinite(reg.lam(0.0)))
    assert np.all(np.isfinite(reg.lam(1.0)))


def _quad_oracle(spec, xi, t, j, k=0):
    """Adaptive-quadrature mollification with continuous normalization."""
    eps = 1.0 / math.hypot(1.0, xi)

    def phi(u):
        return math.exp(-1.0 / (1.0 - u * u)) if abs(u) < 1.0 else 0.0

    def dphi(u):
        if abs(u) >= 1.0:
            return 0.0
        return phi(u) * (-2.0 * u / (1.0 - u * u) ** 2)

    w = phi if k == 0 else dphi
    norm, _ = integrate.quad(phi, -1, 1, limit=400)

    def f(u):
        tc = min(max(t - eps * u, 0.0), spec.T)
        return characteristic_roots(spec, tc, xi)[j] * w(u) / norm

    val, _ = integrate.quad(f, -1, 1, limit=400, epsabs=1e-13, epsrel=1e-13)
    return val * eps ** (-k)


def test_mollify_smooth_matches_adaptive_quad():
    spec = wave_spec(make_family("smooth", c0=1.0, c1=0.2, nu=3.0))
    xi, t = 64.0, 0.4
    reg = RegularizedRoots(spec, xi)
    lam = reg.lam(t)
    for j in (0, 1):
        oracle = _quad_oracle(spec, xi, t, j)
        assert abs(lam[j] - oracle) <= SMOOTH_QUAD_TOL * abs(oracle)


def test_mollify_kinked_matches_adaptive_quad():
    spec = wave_spec(make_family("sawtooth", mu="log-lip", c=0.1, h=0.125))
    xi = 64.0
    t = 0.125  # kink at the center of the window
    reg = RegularizedRoots(spec, xi)
    lam = reg.lam(t)
    oracle = _quad_oracle(spec, xi, t, 1)
    assert abs(lam[1] - oracle) <= KINKED_QUAD_TOL * abs(oracle)


def test_lambda_derivative_identity():
    # lam(t, 1) from the bump derivative must match d/dt of lam(t, 0)
    spec = wave_spec(make_family("smooth", c0=1.0, c1=0.2, nu=3.0))
    reg = RegularizedRoots(spec, 32.0)
    t = 0.5
    fd = richardson_derivative(lambda s: reg.lam(s)[1], t, 1, 1e-4)
    assert reg.lam(t, 1)[1] == pytest.approx(fd, rel=1e-6)


def test_lambda_second_derivative_identity():
    spec = wave_spec(make_family("smooth", c0=1.0, c1=0.2, nu=3.0))
    reg = RegularizedRoots(spec, 32.0)
    t = 0.5
    fd = richardson_derivative(lambda s: reg.lam(s, 1)[1], t, 1, 1e-4)
    assert reg.lam(t, 2)[1] == pytest.approx(fd, rel=1e-5)


# -- reports ---------------------------------------------------------------


def test_root_table_shape():
    spec = wave_spec(make_family("smooth", c0=1.0, c1=0.1, nu=2.0))
    rows = regularized_root_table(spec, np.linspace(0, 1, 3), [4.0, 16.0])
    assert len(rows) == 3 * 2 * 2
    assert len(rows[0]) == len(roots.ROOT_TABLE_HEADER)
    # mollified and exact speeds are close at moderate frequency
    for _t, _xi, _j, tau, lam in rows:
        assert lam == pytest.approx(tau, abs=0.05)


def test_regularity_report_constant_is_zero():
    spec = speeds_spec([-1.0, 1.0], modulus=moduli.lipschitz())
    rep = regularity_report(spec, np.linspace(0, 1, 5), [4.0, 64.0])
    assert rep.R1 == 0.0 and rep.R2 == 0.0


def test_regularity_report_sawtooth_bounded():
    # R1, R2 stay O(1) across two decades of xi iff the claimed modulus
    # really controls the coefficient
    spec = wave_spec(make_family("sawtooth", mu="log-lip", c=0.1, h=0.125))
    xi_grid = 2.0 ** np.arange(4, 11)
    rep = regularity_report(spec, np.linspace(0, 0.5, 33), xi_grid)
    assert 0.0 < rep.R1 < 5.0
    assert 0.0 < rep.R2 < 5.0


def test_regularity_report_requires_modulus():
    spec = speeds_spec([-1.0, 1.0])
    with pytest.raises(ValueError):
        regularity_report(spec, [0.0], [4.0])
