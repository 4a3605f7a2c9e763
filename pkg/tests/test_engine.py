"""Connection/curvature engine: structure equations, identities, oracles."""

import numpy as np
import pytest

from crgeom.contact import (ConstantFactor, RandomTrigFactor,
                            SphereSmoothFactor, heisenberg, sample_points,
                            sphere_cayley, unitary_frame)
from crgeom.engine import (TensorField, analyze, apply_vector,
                           bianchi_residual, classify, cov_deriv,
                           cov_deriv_torsion, cov_derivs, curvature,
                           rotate_frame, solve_connection)
from crgeom.jets import CJet, seed_point

MODELS = [(sphere_cayley, 1), (sphere_cayley, 2),
          (heisenberg, 1), (heisenberg, 2)]
FACTORS = [ConstantFactor(1.0), RandomTrigFactor(seed=0),
           SphereSmoothFactor(seed=1, amplitude=0.5)]


@pytest.mark.parametrize("model_fn,m", MODELS)
@pytest.mark.parametrize("factor", FACTORS, ids=lambda f: f.describe())
def test_structure_equations(model_fn, m, factor):
    model = model_fn(m)
    pts = sample_points(model, 15, seed=0)
    st = analyze(model, factor, pts, 4)
    assert st.structure_residual() < 1e-8
    assert st.unitarity_residual() < 1e-9
    assert st.torsion_symmetry_residual() < 1e-9


@pytest.mark.parametrize("m", [1, 2])
def test_round_sphere_curvature(m):
    model = sphere_cayley(m)
    pts = sample_points(model, 100, seed=0)
    st = analyze(model, ConstantFactor(1.0), pts, 4)
    for a in range(m):
        for b in range(m):
            target = 0.5 * (m + 1.0) if a == b else 0.0
            assert np.max(np.abs(st.ricci[a][b].value - target)) < 1e-8
            assert np.max(np.abs(st.torsion[a][b].value)) < 1e-10
    assert np.max(np.abs(st.scalar.value - m * (m + 1.0) / 2.0)) < 1e-8
    flags = classify(st)
    assert flags["einstein"]


def test_flat_heisenberg_curvature_vanishes():
    model = heisenberg(1)
    pts = sample_points(model, 30, seed=1)
    st = analyze(model, ConstantFactor(1.0), pts, 4)
    assert np.max(np.abs(st.scalar.value)) < 1e-11
    assert np.max(np.abs(st.torsion[0][0].value)) < 1e-11
    assert classify(st, tol=1e-10)["einstein"]


@pytest.mark.parametrize("model_fn,m", MODELS)
def test_commutation_identity(model_fn, m):
    model = model_fn(m)
    pts = sample_points(model, 15, seed=2)
    factor = RandomTrigFactor(seed=3)
    st = analyze(model, factor, pts, 4)
    cov = cov_derivs(st, factor.eval(model, st.fd.coords))
    assert cov.commutation_residual() < 1e-8


@pytest.mark.parametrize("model_fn,m", MODELS)
def test_contracted_bianchi(model_fn, m):
    model = model_fn(m)
    pts = sample_points(model, 15, seed=4)
    st = analyze(model, RandomTrigFactor(seed=5), pts, 4)
    assert np.max(np.abs(bianchi_residual(st))) < 1e-8


@pytest.mark.parametrize("model_fn,m", MODELS)
def test_reeb_scalar_from_torsion_divergence(model_fn, m):
    model = model_fn(m)
    pts = sample_points(model, 15, seed=6)
    st = analyze(model, RandomTrigFactor(seed=7), pts, 4)
    _, _, dd = cov_deriv_torsion(st)
    r0 = apply_vector(st.directions(1)[0], CJet(st.scalar.cut(1)))
    assert np.max(np.abs(2.0 * np.real(dd.value) - np.real(r0.value))) < 1e-8


def test_scalar_invariant_under_frame_rotation():
    model = sphere_cayley(1)
    pts = sample_points(model, 10, seed=8)
    factor = RandomTrigFactor(seed=9)
    fd = unitary_frame(model, factor, pts, 4)
    st1 = curvature(solve_connection(fd))
    phase = np.exp(0.7j)
    st2 = curvature(solve_connection(rotate_frame(fd, np.array([[phase]]))))
    assert np.max(np.abs(st1.scalar.value - st2.scalar.value)) < 1e-10
    # |A|^2 and |B|^2 are gauge invariants even though components rotate
    a1 = np.abs(st1.torsion[0][0].value) ** 2
    a2 = np.abs(st2.torsion[0][0].value) ** 2
    assert np.max(np.abs(a1 - a2)) < 1e-10


def test_first_covariant_derivatives_against_finite_differences():
    h = 1e-5
    for model_fn, m in MODELS:
        model = model_fn(m)
        factor = SphereSmoothFactor(seed=2, amplitude=0.6)
        pts = sample_points(model, 8, seed=10)
        st = analyze(model, factor, pts, 4)
        cov = cov_derivs(st, factor.eval(model, st.fd.coords))
        analytic = np.concatenate(
            [cov.d0.value[None],
             np.stack([cov.d1h.comps[(a,)].value for a in range(m)])])
        frames = np.stack([np.stack([v.value for v in vec])
                           for vec in st.directions(0)])[:m + 1]
        n = model.dim
        diffs = np.empty((n, pts.shape[0]))
        for i in range(n):
            shift = np.zeros(n)
            shift[i] = h
            up = factor.eval(model, seed_point(pts + shift, 0)).value
            dn = factor.eval(model, seed_point(pts - shift, 0)).value
            diffs[i] = (up - dn) / (2 * h)
        fd = np.einsum("din,in->dn", frames, diffs)
        rel = np.abs(analytic - fd) / np.maximum(1.0, np.abs(analytic))
        assert np.max(rel) < 1e-5


def test_tensor_covariant_derivative_product_rule():
    # (phi * A)_{ab,g} = phi_g A_ab + phi A_{ab,g}
    model = sphere_cayley(1)
    pts = sample_points(model, 10, seed=11)
    factor = RandomTrigFactor(seed=12)
    st = analyze(model, factor, pts, 4)
    phi = factor.eval(model, st.fd.coords)
    cov = cov_derivs(st, phi)
    k = st.torsion[0][0].order
    phic = CJet(phi.cut(k))
    A = TensorField(1, "hh", {(0, 0): st.torsion[0][0]})
    pA = TensorField(1, "hh", {(0, 0): phic * st.torsion[0][0]})
    lhs = cov_deriv(pA, st, "h").comps[(0, 0, 0)].value
    rhs = (cov.d1h.comps[(0,)].cut(k - 1).value
           * st.torsion[0][0].cut(k - 1).value
           + phi.cut(k - 1).value
           * cov_deriv(A, st, "h").comps[(0, 0, 0)].value)
    assert np.max(np.abs(lhs - rhs)) < 1e-10


def test_classify_detects_torsion():
    model = sphere_cayley(1)
    pts = sample_points(model, 10, seed=13)
    st = analyze(model, RandomTrigFactor(seed=14), pts, 4)
    flags = classify(st)
    assert not flags["einstein"]
    assert flags["max_torsion"] > 1e-3
