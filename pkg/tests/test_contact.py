"""Contact models, conformal factors, frames and point sampling."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crgeom.contact import (ConstantFactor, ContactGeometryError,
                            JLFamilyFactor, RandomTrigFactor,
                            SphereSmoothFactor, eval_theta, heisenberg,
                            pullback_sphere_form, sample_points,
                            sphere_cayley, unitary_frame)
from crgeom.jets import seed_point

coord = st.floats(min_value=-1.5, max_value=1.5,
                  allow_nan=False, allow_infinity=False)


@pytest.mark.parametrize("m", [1, 2])
def test_chart_sphere_roundtrip(m):
    model = sphere_cayley(m)
    pts = sample_points(model, 50, seed=3)
    z = model.sphere_from_chart(pts)
    assert np.max(np.abs(np.sum(np.abs(z) ** 2, axis=-1) - 1.0)) < 1e-12
    back = model.chart_from_sphere(z)
    assert np.max(np.abs(back - pts)) < 1e-10


@given(x=coord, y=coord, t=coord)
@settings(max_examples=50, deadline=None)
def test_chart_roundtrip_property(x, y, t):
    model = sphere_cayley(1)
    p = np.array([x, y, t])
    z = model.sphere_from_chart(p)
    assert abs(np.sum(np.abs(z) ** 2) - 1.0) < 1e-12
    assert np.max(np.abs(model.chart_from_sphere(z) - p)) < 1e-9


def test_singular_locus_raises():
    model = sphere_cayley(1)
    z = np.array([0.0, -1.0], dtype=complex)   # antipode of the chart pole
    with pytest.raises(ContactGeometryError):
        model.chart_from_sphere(z)


def test_sample_points_shape_and_determinism():
    model = sphere_cayley(2)
    a = sample_points(model, 17, seed=5)
    b = sample_points(model, 17, seed=5)
    c = sample_points(model, 17, seed=6)
    assert a.shape == (17, model.dim)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


@pytest.mark.parametrize("model_fn,m", [(sphere_cayley, 1), (sphere_cayley, 2),
                                        (heisenberg, 1), (heisenberg, 2)])
def test_frame_duality_and_levi_normalization(model_fn, m):
    model = model_fn(m)
    pts = sample_points(model, 20, seed=0)
    fd = unitary_frame(model, RandomTrigFactor(seed=1), pts, 3)
    assert fd.duality_residual() < 1e-9


def test_reeb_field_defining_equations():
    from crgeom.contact import two_form
    model = sphere_cayley(1)
    pts = sample_points(model, 20, seed=2)
    coords, theta, _ = eval_theta(model, RandomTrigFactor(seed=3), pts, 3)
    fd = unitary_frame(model, RandomTrigFactor(seed=3), pts, 3)
    pair = None
    for c, r in zip(theta, fd.reeb):
        term = c.cut(2) * r
        pair = term if pair is None else pair + term
    assert np.max(np.abs(pair.value - 1.0)) < 1e-12
    dth = two_form(theta)
    for j in range(model.dim):
        contr = None
        for i in range(model.dim):
            term = dth[i][j] * fd.reeb[i].cut(2)
            contr = term if contr is None else contr + term
        assert np.max(np.abs(contr.value)) < 1e-10


def test_cayley_pullback_matches_scaled_heisenberg_form():
    model = sphere_cayley(1)
    pts = sample_points(model, 15, seed=4)
    coords = seed_point(pts, 2)
    pulled = pullback_sphere_form(model, coords)
    base = model.base_theta(coords)
    for p, b in zip(pulled, base):
        assert np.max(np.abs(p.value - b.value)) < 1e-12


def test_factor_positivity_enforced():
    model = sphere_cayley(1)
    pts = sample_points(model, 5, seed=0)
    with pytest.raises(Exception):
        eval_theta(model, ConstantFactor(-1.0), pts, 2)


def test_family_factor_values_and_conjugate():
    model = sphere_cayley(1)
    fac = JLFamilyFactor(c=1.3, t=0.6, xi=(0.6, 0.8j))
    pts = sample_points(model, 25, seed=7)
    coords = seed_point(pts, 2)
    jet_vals = fac.eval(model, coords).value
    num_vals = fac.eval_numeric(model, model.sphere_from_chart(pts))
    assert np.max(np.abs(jet_vals - num_vals)) < 1e-12
    u, v = fac.log_conjugate(model, coords)
    assert np.max(np.abs(np.exp(u.value) - jet_vals)) < 1e-12


def test_smooth_factor_is_chart_independent():
    # the quadratic lives on the Cayley image: same sphere point, same value
    model = sphere_cayley(1)
    fac = SphereSmoothFactor(seed=5, amplitude=0.7)
    pts = sample_points(model, 20, seed=1)
    vals = fac.eval(model, seed_point(pts, 0)).value
    z = model.sphere_from_chart(pts)
    again = fac.eval(model, seed_point(model.chart_from_sphere(z), 0)).value
    assert np.max(np.abs(vals - again)) < 1e-12
    assert np.all(vals > 0)


def test_trig_factor_seed_determinism():
    model = heisenberg(1)
    pts = sample_points(model, 10, seed=0)
    coords = seed_point(pts, 1)
    v1 = RandomTrigFactor(seed=9).eval(model, coords).value
    v2 = RandomTrigFactor(seed=9).eval(model, coords).value
    v3 = RandomTrigFactor(seed=10).eval(model, coords).value
    assert np.array_equal(v1, v2)
    assert not np.array_equal(v1, v3)
