"""The divergence identity for constant-scalar conformal factors."""

import numpy as np
import pytest

from crgeom import jerison_lee as jl
from crgeom.contact import (ConstantFactor, JLFamilyFactor, RandomTrigFactor,
                            sample_points, sphere_cayley)
from crgeom.engine import analyze, cov_derivs

PARAMS_M1 = [(0.0, None), (0.3, (0.6, 0.8j)), (0.7, None),
             (1.0, (1j, 0.0)), (0.5, (0.6j, -0.8))]
PARAMS_M2 = [(0.0, None), (0.4, None), (0.8, (0.0, 0.6, 0.8j)),
             (0.5, (1.0, 0.0, 0.0)), (0.3, (0.0, 0.0, 1j))]


def _setup(m, t, xi, npts=30, seed=0):
    model = sphere_cayley(m)
    factor = jl.normalized_family(m, t, xi=xi)
    pts = sample_points(model, npts, seed=seed)
    st = analyze(model, factor, pts, 4)
    cov = cov_derivs(st, factor.eval(model, st.fd.coords), depth=3)
    return model, factor, st, cov


@pytest.mark.parametrize("m,params", [(1, PARAMS_M1), (2, PARAMS_M2)])
def test_identity_on_family(m, params):
    model = sphere_cayley(m)
    ref = analyze(model, ConstantFactor(1.0),
                  sample_points(model, 30, seed=0), 4)
    for t, xi in params:
        _, factor, st, cov = _setup(m, t, xi)
        assert jl.hypotheses_ok(st, ref)
        assert jl.identity_residual(st, cov) < 1e-7
        assert jl.lhs_expanded_residual(st, cov) < 1e-7


def test_rhs_is_nonnegative_even_off_family():
    model = sphere_cayley(1)
    factor = RandomTrigFactor(seed=1)
    pts = sample_points(model, 40, seed=1)
    st = analyze(model, factor, pts, 4)
    cov = cov_derivs(st, factor.eval(model, st.fd.coords), depth=3)
    rhs = jl.components(st, cov).rhs()
    assert np.min(rhs) > -1e-12


def test_negative_control_fails_gate_and_identity():
    model = sphere_cayley(1)
    factor = RandomTrigFactor(seed=2)
    pts = sample_points(model, 30, seed=2)
    st = analyze(model, factor, pts, 4)
    ref = analyze(model, ConstantFactor(1.0), pts, 4)
    assert not jl.hypotheses_ok(st, ref)
    cov = cov_derivs(st, factor.eval(model, st.fd.coords), depth=3)
    assert jl.identity_residual(st, cov) > 1e-2


@pytest.mark.parametrize("m", [1, 2])
def test_normalized_family_has_reference_scalar(m):
    model = sphere_cayley(m)
    factor = jl.normalized_family(m, 0.9)
    pts = sample_points(model, 20, seed=3)
    st = analyze(model, factor, pts, 4)
    target = m * (m + 1.0) / 2.0
    assert np.max(np.abs(st.scalar.value - target)) < 1e-9


@pytest.mark.parametrize("m,params", [(1, PARAMS_M1[:3]), (2, PARAMS_M2[:3])])
def test_reductions_lemmas_and_systems(m, params):
    for t, xi in params:
        _, _, st, cov = _setup(m, t, xi, npts=20)
        assert max(jl.einstein_reduction_residuals(st, cov).values()) < 1e-7
        assert max(jl.lemma_residuals(st, cov).values()) < 1e-7
        assert max(jl.vanishing_system_residuals(st, cov).values()) < 1e-7


@pytest.mark.parametrize("m", [1, 2])
def test_conjugate_phase_and_displays(m):
    model, factor, st, _ = _setup(m, 0.6, None, npts=20)
    data = jl.conjugate_and_f(model, factor, st, c_mean=0.0)
    assert data.v0_formula_residual < 1e-7
    # the four displays do not depend on the subtracted mean
    assert max(jl.crh_residuals(data, st).values()) < 1e-7


def test_family_f_numeric_matches_jets():
    model, factor, st, _ = _setup(1, 0.8, (0.6, 0.8j), npts=20)
    data = jl.conjugate_and_f(model, factor, st, c_mean=0.0)
    pts = st.fd.coords
    chart = np.stack([c.value for c in pts], axis=-1)
    nodes = model.sphere_from_chart(chart)
    fn = jl.family_f_numeric(model, factor, nodes)
    assert np.max(np.abs(fn - data.f.value)) < 1e-11


def test_identity_gains_nothing_from_wrong_scaling():
    # an unnormalized member has non-reference constant scalar: gate fails
    model = sphere_cayley(1)
    factor = JLFamilyFactor(c=5.0, t=0.5)
    pts = sample_points(model, 15, seed=4)
    st = analyze(model, factor, pts, 4)
    ref = analyze(model, ConstantFactor(1.0), pts, 4)
    assert not jl.hypotheses_ok(st, ref)
