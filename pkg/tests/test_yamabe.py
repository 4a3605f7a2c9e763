"""Quadrature, sharp quotient, Sobolev gap, and the minimizer."""

import numpy as np
import pytest

from crgeom import jerison_lee as jl
from crgeom import yamabe as ym
from crgeom.contact import ConstantFactor, sphere_cayley

SHARP = ym.sharp_constant(1)     # 4*pi for m = 1
VOL = ym.reference_density(1) * ym.euclidean_volume(1)   # 16*pi^2


def test_closed_form_constants():
    assert SHARP == pytest.approx(4.0 * np.pi)
    assert VOL == pytest.approx(16.0 * np.pi ** 2)
    assert ym.sharp_constant(2) == pytest.approx(12.0 * np.pi)
    assert ym.euclidean_volume(2) == pytest.approx(np.pi ** 3)


def test_product_rule_volume_and_oddness(rule):
    n = len(rule.weights)
    assert rule.node_norm_residual() < 1e-12
    assert abs(ym.integrate(rule, np.ones(n)) / VOL - 1.0) < 1e-12
    assert abs(ym.integrate(rule, rule.nodes[:, 0].real)) < 1e-10
    assert abs(ym.integrate(rule, (rule.nodes[:, 1] ** 3).imag)) < 1e-10


def test_monte_carlo_agrees_with_product_rule(rule, sphere1):
    fac = jl.normalized_family(1, 0.5)
    mc = ym.monte_carlo_rule(1, 200_000, seed=0)
    a = ym.integrate(rule, fac.eval_numeric(sphere1, rule.nodes) ** 2)
    b = ym.integrate(mc, fac.eval_numeric(sphere1, mc.nodes) ** 2)
    assert abs(b / a - 1.0) < 1e-2


def test_density_dual_path(rule, sphere1):
    fac = jl.normalized_family(1, 0.6)
    sub = rule.chart_points[::137]
    ratio = ym.density_ratio(sphere1, fac, sub)
    direct = fac.eval_numeric(sphere1, rule.nodes[::137]) ** 2
    assert np.max(np.abs(ratio / direct - 1.0)) < 1e-9


def test_quotient_round_and_family(rule):
    q0 = ym.yamabe_quotient(rule, ConstantFactor(1.0))
    assert abs(q0 / SHARP - 1.0) < 1e-5
    qf = ym.yamabe_quotient(rule, jl.normalized_family(1, 0.5))
    assert abs(qf / SHARP - 1.0) < 1e-5
    qc = ym.yamabe_quotient(rule, ConstantFactor(2.2))
    assert abs(qc - q0) < 1e-9


def test_basis_orthonormal_and_contains_constant(rule, basis):
    mu = rule.weights * ym.reference_density(1)
    gram = (basis.values * mu) @ basis.values.T
    assert np.max(np.abs(gram - np.eye(basis.size))) < 1e-10
    assert np.max(np.abs(basis.values[0] - basis.values[0][0])) < 1e-13


def test_sobolev_gap_zero_on_constants(rule):
    n = len(rule.weights)
    f = np.full(n, 1.7)
    grad = np.zeros((1, n), dtype=complex)
    en, norm = ym.sobolev_energy(rule, f, grad)
    assert abs(ym.sobolev_gap(rule, f, grad)) / en < 1e-13
    # explicit scaling: E is 2-homogeneous, N is p-homogeneous with p = 4,
    # so for m = 1 the gap E - S * N^{1/2} is 2-homogeneous
    en2, norm2 = ym.sobolev_energy(rule, 2.0 * f, grad)
    assert en2 == pytest.approx(4.0 * en)
    assert norm2 == pytest.approx(16.0 * norm)
    assert ym.sobolev_gap(rule, 2.0 * f, grad) == pytest.approx(
        4.0 * ym.sobolev_gap(rule, f, grad), abs=1e-9)


def test_sobolev_gap_nonnegative_on_random_basis_elements(rule, basis):
    rng = np.random.default_rng(0)
    worst = np.inf
    for _ in range(100):
        c = rng.normal(size=basis.size) * 0.3 / np.sqrt(basis.size)
        f, grad = basis.function(c)
        gap = ym.sobolev_gap(rule, f + 1.0, grad)
        worst = min(worst, gap)
    assert worst > -1e-6


def test_sobolev_gap_positive_off_family(rule, basis):
    c = np.zeros(basis.size)
    c[0], c[3] = 1.0, 0.2
    f, grad = basis.function(c)
    assert ym.sobolev_gap(rule, f, grad) > 1e-5


def test_gradient_matches_finite_differences(rule, basis):
    rng = np.random.default_rng(1)
    c = rng.normal(size=basis.size) * 0.05
    c[0] += 1.0
    q0, grad, _, _ = ym._quotient_and_grad(basis, c)
    h = 1e-6
    for k in rng.choice(basis.size, size=6, replace=False):
        e = np.zeros(basis.size)
        e[k] = h
        qp, _, _, _ = ym._quotient_and_grad(basis, c + e)
        qm, _, _, _ = ym._quotient_and_grad(basis, c - e)
        fd = (qp - qm) / (2 * h)
        assert abs(grad[k] - fd) < 1e-4 * max(1.0, abs(fd))


def test_minimizer_reaches_sharp_constant(rule, basis):
    c, q, trace = ym.minimize_yamabe(basis, seed=2, start_scale=0.3)
    assert q <= SHARP * (1.0 + 1e-3)
    vals = [s["value"] for s in trace]
    assert np.all(np.diff(vals) <= 1e-12)
    fit = ym.fit_family(rule, basis.function(c)[0] ** 2)
    assert fit.residual < 1e-2
    assert fit.in_family


def test_gradient_selftest_guards_broken_gradient(rule, basis, monkeypatch):
    # the self-test runs on every minimize call; a corrupted analytic
    # gradient must trip it before any descent step is taken
    orig = ym._quotient_and_grad

    def corrupted(b, c):
        q, dq, e, n = orig(b, c)
        return q, 1.5 * dq, e, n

    monkeypatch.setattr(ym, "_quotient_and_grad", corrupted)
    with pytest.raises(RuntimeError):
        ym.minimize_yamabe(basis, seed=0, start_scale=0.3)


def test_fit_family_recovers_parameters(rule, sphere1):
    fac = jl.normalized_family(1, 0.8, xi=(0.6, 0.8j))
    fit = ym.fit_family(rule, fac.eval_numeric(sphere1, rule.nodes))
    assert fit.residual < 1e-10
    assert fit.in_family
    assert abs(fit.t - 0.8) < 1e-10
    assert abs(abs(np.vdot(fit.xi, np.array([0.6, 0.8j]))) - 1.0) < 1e-10


def test_fit_family_flags_constant_and_rejects_bump(rule):
    n = len(rule.weights)
    fit_const = ym.fit_family(rule, np.full(n, 2.5))
    assert fit_const.xi_free
    assert abs(fit_const.t) < 1e-6
    bump = np.exp(0.3 * np.sin(3.0 * rule.nodes[:, 0].real))
    fit_bump = ym.fit_family(rule, bump)
    assert not fit_bump.in_family
    assert fit_bump.residual > 1e-2
