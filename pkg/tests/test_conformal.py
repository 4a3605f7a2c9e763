"""Conformal transformation laws: dual paths and direct recomputation."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crgeom.conformal import (direct_vs_law_residual, frame_transport,
                              scalar_transform_residual, transform_invariants)
from crgeom.contact import (ConstantFactor, RandomTrigFactor,
                            SphereSmoothFactor, heisenberg, sample_points,
                            sphere_cayley)
from crgeom.engine import analyze, cov_derivs

MODELS = [(sphere_cayley, 1), (sphere_cayley, 2),
          (heisenberg, 1), (heisenberg, 2)]


@pytest.mark.parametrize("model_fn,m", MODELS)
def test_scalar_law_dual_path(model_fn, m):
    model = model_fn(m)
    pts = sample_points(model, 20, seed=0)
    res = scalar_transform_residual(model, RandomTrigFactor(seed=1),
                                    RandomTrigFactor(seed=2), pts)
    assert res < 1e-8


@pytest.mark.parametrize("model_fn,m", MODELS)
@pytest.mark.parametrize("seed", [3, 4])
def test_laws_match_direct_recomputation(model_fn, m, seed):
    model = model_fn(m)
    pts = sample_points(model, 15, seed=seed)
    res = direct_vs_law_residual(model, RandomTrigFactor(seed=seed),
                                 RandomTrigFactor(seed=seed + 10), pts)
    assert res["torsion"] < 1e-8
    assert res["traceless_ricci"] < 1e-8
    assert res["scalar"] < 1e-8


@given(w=st.floats(min_value=0.2, max_value=5.0,
                   allow_nan=False, allow_infinity=False))
@settings(max_examples=10, deadline=None)
def test_constant_rescaling_scales_scalar(w):
    # for constant w: no derivative terms survive, so R~ = w * R exactly
    model = sphere_cayley(1)
    pts = sample_points(model, 5, seed=5)
    st_ = analyze(model, ConstantFactor(1.0), pts, 4)
    cov = cov_derivs(st_, ConstantFactor(w).eval(model, st_.fd.coords))
    pred = transform_invariants(st_, cov)
    assert np.max(np.abs(pred.scalar.value - w * st_.scalar.value)) < 1e-10
    st_direct = analyze(model, ConstantFactor(1.0 / w), pts, 4)
    assert np.max(np.abs(st_direct.scalar.value * w ** -1
                         - pred.scalar.value * w ** -1)) < 1e-10


def test_transform_requires_positive_factor():
    model = sphere_cayley(1)
    pts = sample_points(model, 5, seed=6)
    st_ = analyze(model, ConstantFactor(1.0), pts, 4)
    bad = ConstantFactor(1.0).eval(model, st_.fd.coords) - 2.0
    with pytest.raises(ValueError):
        transform_invariants(st_, cov_derivs(st_, bad))


def test_frame_transport_is_unitary():
    model = sphere_cayley(2)
    pts = sample_points(model, 10, seed=7)
    base = SphereSmoothFactor(seed=8, amplitude=0.5)
    w = RandomTrigFactor(seed=9)
    st_ = analyze(model, base, pts, 4)
    from crgeom.contact import RatioFactor
    st_t = analyze(model, RatioFactor(base, w), pts, 4)
    M = frame_transport(st_, st_t, w.eval(model, st_.fd.coords))
    err = np.max(np.abs(M @ np.conj(np.swapaxes(M, -1, -2)) - np.eye(2)))
    assert err < 1e-8


def test_law_composition_consistency():
    # transforming by w1*w2 at once agrees with the direct engine on the
    # doubly-rescaled form
    model = heisenberg(1)
    pts = sample_points(model, 10, seed=10)
    from crgeom.contact import ProductFactor
    w1 = RandomTrigFactor(seed=11)
    w2 = RandomTrigFactor(seed=12)
    res = direct_vs_law_residual(model, ConstantFactor(1.0),
                                 ProductFactor(w1, w2), pts)
    assert max(res.values()) < 1e-8
