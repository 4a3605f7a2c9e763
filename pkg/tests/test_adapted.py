"""Adapted Riemannian metric: oracle connection vs displayed formulas."""

import numpy as np
import pytest

from crgeom import adapted
from crgeom import jerison_lee as jl
from crgeom.contact import (ConstantFactor, RandomTrigFactor, sample_points,
                            sphere_cayley)
from crgeom.engine import analyze, cov_derivs

CASES = [(1, ConstantFactor(1.0)), (1, RandomTrigFactor(seed=0)),
         (2, ConstantFactor(1.0)), (2, RandomTrigFactor(seed=0))]


def _chris(m, factor, npts=15, seed=0):
    model = sphere_cayley(m)
    pts = sample_points(model, npts, seed=seed)
    st = analyze(model, factor, pts, 4)
    return model, st, adapted.christoffel_oracle(adapted.build_metric(st))


@pytest.mark.parametrize("m,factor", CASES, ids=str)
def test_oracle_metric_compatibility(m, factor):
    _, _, chris = _chris(m, factor)
    assert adapted.metric_compat_residual(chris) < 1e-9


@pytest.mark.parametrize("m", [1, 2])
def test_round_adapted_metric_is_einstein(m):
    _, _, chris = _chris(m, ConstantFactor(1.0))
    assert adapted.einstein_residual(chris) < 1e-7


def test_torsional_metric_is_not_einstein():
    _, _, chris = _chris(1, RandomTrigFactor(seed=0))
    assert adapted.einstein_residual(chris) > 1e-3


@pytest.mark.parametrize("m,factor", CASES, ids=str)
def test_connection_comparison(m, factor):
    _, st, chris = _chris(m, factor)
    assert adapted.connd_residual(st, chris) < 1e-7


@pytest.mark.parametrize("m,factor", CASES, ids=str)
def test_hessian_displays(m, factor):
    model, st, chris = _chris(m, factor)
    probe = RandomTrigFactor(seed=5)
    cov = cov_derivs(st, probe.eval(model, st.fd.coords))
    assert max(adapted.hess_residuals(st, chris, cov).values()) < 1e-7


@pytest.mark.parametrize("m,factor", CASES, ids=str)
def test_curvature_displays(m, factor):
    _, st, chris = _chris(m, factor)
    assert max(adapted.cuv_residuals(st, chris, seed=1).values()) < 1e-7


@pytest.mark.parametrize("m,factor", CASES, ids=str)
def test_ricci_displays(m, factor):
    _, st, chris = _chris(m, factor)
    assert max(adapted.rica_residuals(st, chris, seed=2).values()) < 1e-7


def test_levi_scale_calibration_picks_unit_scale():
    model, st, _ = _chris(1, ConstantFactor(1.0))
    probe = RandomTrigFactor(seed=5)
    cov = cov_derivs(st, probe.eval(model, st.fd.coords))
    assert adapted.calibrate_levi_scale(st, cov) == 1.0
    wrong = adapted.christoffel_oracle(adapted.build_metric(st, 2.0))
    assert max(adapted.hess_residuals(st, wrong, cov).values()) > 1e-3


def test_reading_calibration_is_pinned_by_torsion():
    cases = []
    for m, factor in CASES[:2]:
        _, st, chris = _chris(m, factor)
        cases.append((st, chris))
    readings = adapted.calibrate_readings(cases)
    assert readings == adapted.DEFAULT_READINGS
    flipped = dict(readings, torsion_sign=-readings["torsion_sign"])
    res = max(adapted.connd_residual(s, ch, flipped) for s, ch in cases)
    assert res > 1e-3


def test_mean_free_hessian_on_family():
    m = 1
    model = sphere_cayley(m)
    factor = jl.normalized_family(m, 0.7)
    pts = sample_points(model, 15, seed=3)
    st = analyze(model, factor, pts, 4)
    chris = adapted.christoffel_oracle(adapted.build_metric(st))
    data = jl.conjugate_and_f(model, factor, st, c_mean=0.0)
    assert adapted.hf_residual(st, chris, data.f, data.chi) < 1e-7


def test_obata_reduction_guards_nonzero_mean():
    with pytest.raises(ValueError):
        adapted.obata_reduction(np.ones(3), np.ones(3), 1.0, mean_u=0.5)
    res = adapted.obata_reduction(np.array([1.0, -1.0]),
                                  np.array([0.5, -0.5]),
                                  np.sqrt(0.5), mean_u=0.0)
    assert res < 1e-15
