"""Jet arithmetic against closed forms and finite differences."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crgeom.jets import (CJet, Jet, JetDomainError, JetShapeError, jet_atan2,
                         jet_cos, jet_exp, jet_log, jet_pow, jet_sin,
                         jet_sqrt, seed_point, seed_variable)

finite = st.floats(min_value=-2.0, max_value=2.0,
                   allow_nan=False, allow_infinity=False)


def _poly(coords, coeffs):
    x, y = coords
    c0, c1, c2, c3 = coeffs
    return c0 + c1 * x + c2 * y + c3 * x * y


@given(a=st.tuples(finite, finite, finite, finite),
       b=st.tuples(finite, finite, finite, finite),
       p=st.tuples(finite, finite))
@settings(max_examples=60, deadline=None)
def test_ring_laws(a, b, p):
    coords = seed_point(np.array(p), 3)
    pa, pb = _poly(coords, a), _poly(coords, b)
    scale = max(1.0, np.max(np.abs(pa.coeffs)), np.max(np.abs(pb.coeffs)))
    comm = pa * pb - pb * pa
    assert np.max(np.abs(comm.coeffs)) < 1e-13 * scale ** 2
    assoc = (pa * pb) * pa - pa * (pb * pa)
    assert np.max(np.abs(assoc.coeffs)) < 1e-12 * scale ** 3
    distr = pa * (pa + pb) - (pa * pa + pa * pb)
    assert np.max(np.abs(distr.coeffs)) < 1e-12 * scale ** 2


@given(a=st.tuples(finite, finite, finite, finite),
       b=st.tuples(finite, finite, finite, finite),
       p=st.tuples(finite, finite))
@settings(max_examples=60, deadline=None)
def test_leibniz_rule(a, b, p):
    coords = seed_point(np.array(p), 3)
    pa, pb = _poly(coords, a), _poly(coords, b)
    for i in range(2):
        lhs = (pa * pb).deriv(i)
        rhs = pa.deriv(i) * pb.cut(2) + pa.cut(2) * pb.deriv(i)
        assert np.max(np.abs((lhs - rhs).coeffs)) < 1e-12


def test_derivatives_match_finite_differences():
    def fn(x, y, lib):
        return lib[0](x * y) * lib[1](0.3 * x + y * y) + lib[2](2.0 + x)

    pts = np.array([[0.3, -0.4], [1.1, 0.2]])
    coords = seed_point(pts, 3)
    jv = fn(coords[0], coords[1], (jet_sin, jet_exp, jet_log))
    h = 1e-5
    for i in range(2):
        for j in range(2):
            dx = np.zeros(2)
            dx[i] = h
            dy = np.zeros(2)
            dy[j] = h

            def num(p):
                return fn(p[:, 0], p[:, 1], (np.sin, np.exp, np.log))

            fd2 = (num(pts + dx + dy) - num(pts + dx - dy)
                   - num(pts - dx + dy) + num(pts - dx - dy)) / (4 * h * h)
            jd2 = jv.deriv(i).deriv(j).value
            assert np.max(np.abs(jd2 - fd2)) < 1e-5


def test_reciprocal_and_pow():
    coords = seed_point(np.array([0.7, -0.2]), 4)
    f = 1.5 + coords[0] + 0.5 * coords[1] * coords[0]
    one = f * f.reciprocal()
    assert abs(one.value - 1.0) < 1e-14
    assert np.max(np.abs((one - 1.0).coeffs)) < 1e-13
    g = jet_pow(f, 2.5)
    gg = jet_pow(g, 1.0 / 2.5)
    assert np.max(np.abs((gg - f).coeffs)) < 1e-12
    s = jet_sqrt(f)
    assert np.max(np.abs((s * s - f).coeffs)) < 1e-13


def test_exp_log_roundtrip():
    coords = seed_point(np.array([[0.2, 0.1], [-0.3, 0.4]]), 4)
    f = 0.3 * coords[0] - coords[1] + 0.1 * coords[0] * coords[1]
    assert np.max(np.abs((jet_log(jet_exp(f)) - f).coeffs)) < 1e-12


def test_trig_identity():
    coords = seed_point(np.array([0.5, 1.2]), 4)
    f = coords[0] + 2.0 * coords[1]
    ident = jet_sin(f) * jet_sin(f) + jet_cos(f) * jet_cos(f) - 1.0
    assert np.max(np.abs(ident.coeffs)) < 1e-13


def test_atan2_gradient():
    pts = np.array([[0.8, 0.4], [-0.5, 1.1]])
    coords = seed_point(pts, 2)
    ang = jet_atan2(coords[1], coords[0])
    assert np.allclose(ang.value, np.arctan2(pts[:, 1], pts[:, 0]))
    r2 = pts[:, 0] ** 2 + pts[:, 1] ** 2
    assert np.allclose(ang.deriv(0).value, -pts[:, 1] / r2)
    assert np.allclose(ang.deriv(1).value, pts[:, 0] / r2)


def test_domain_errors():
    coords = seed_point(np.array([0.0, 0.0]), 2)
    with pytest.raises(JetDomainError):
        jet_log(coords[0])          # log at 0
    with pytest.raises(JetDomainError):
        coords[0].reciprocal()


def test_shape_mismatch_raises():
    a = seed_variable(0, 1.0, 2, 2)
    b = seed_variable(0, 1.0, 2, 3)
    with pytest.raises(JetShapeError):
        _ = a + b


def test_cjet_field_laws():
    coords = seed_point(np.array([0.4, -0.9]), 3)
    z = CJet(coords[0], coords[1])
    w = CJet(1.0 + coords[1], 0.5 * coords[0])
    prod = z * w
    back = prod / w
    assert np.max(np.abs((back - z).re.coeffs)) < 1e-13
    assert np.max(np.abs((back - z).im.coeffs)) < 1e-13
    norm = (z * z.conj()) - CJet(z.abs2())
    assert np.max(np.abs(norm.re.coeffs)) < 1e-13


def test_batched_equals_pointwise():
    pts = np.array([[0.3, 0.7], [1.2, -0.4], [0.0, 0.25]])
    batch = seed_point(pts, 3)
    fb = jet_exp(batch[0] * batch[1]) + jet_sin(batch[0])
    for k, p in enumerate(pts):
        single = seed_point(p, 3)
        fs = jet_exp(single[0] * single[1]) + jet_sin(single[0])
        assert np.max(np.abs(fb.coeffs[k] - fs.coeffs)) < 1e-14


def test_const_and_cut():
    j = Jet.const(3.5, 3, 2)
    assert j.value == 3.5
    assert j.cut(1).order == 1
    x = seed_variable(0, 2.0, 3, 2)
    assert x.partial([1, 0]) == pytest.approx(1.0)
    assert x.partial([0, 1]) == pytest.approx(0.0)
