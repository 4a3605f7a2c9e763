"""The divergence identity for constant-scalar-curvature conformal factors.

Setting: theta = w * theta_ref on a closed manifold whose reference form
theta_ref = w^{-1} * theta is Einstein, with both scalar curvatures equal to
m(m+1)/2.  From the torsion, trace-free Ricci and derivatives of w one forms

    D_ab = -i A_ab,   E_ab- = -B_ab-/(m+2),   U_a = -(2/(m+2)) i A_ab,b-
    D_a = w^{-1} w_b- D_ab,  E_a = w^{-1} w_b E_ab-,
    g = 1/2 + w/2 + w^{-1}|dw|^2 + i w_0

and the identity states that Re (g D_a + conj(g) E_a - 3 w_0 i U_a)_{,a-}
equals a weighted sum of squares.  Integrating it over the manifold forces
D = E = U = 0, which collapses the second derivatives of w (and of
u = log w) to an explicit first-order system; the ladder continues through
the conjugate function v and the mean-free function
f = e^{u/2} cos(v/2) - c whose Hessian becomes pure trace.

All residual evaluators below return max-abs values over the point batch.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .contact import ContactModel, JLFamilyFactor, sphere_cayley
from .engine import (CJet, CovJet, PHState, TensorField, analyze, apply_vector,
                     classify, cov_deriv, cov_deriv_torsion, cov_derivs)
from .jets import Jet, jet_cos, jet_exp, jet_sin

__all__ = [
    "JLComponents",
    "ObataData",
    "normalized_family",
    "components",
    "identity_residual",
    "identity_residual_values",
    "family_f_numeric",
    "lhs_expanded_residual",
    "einstein_reduction_residuals",
    "lemma_residuals",
    "vanishing_system_residuals",
    "conjugate_and_f",
    "crh_residuals",
    "hypotheses_ok",
]


def normalized_family(m: int, t: float, xi=None) -> JLFamilyFactor:
    """Family member rescaled so the conformal structure has R = m(m+1)/2."""
    model = sphere_cayley(m)
    probe = JLFamilyFactor(c=1.0, t=t, xi=xi)
    st = analyze(model, probe, np.zeros((1, model.dim)), order=4)
    r1 = float(st.scalar.value[0])
    c = 2.0 * r1 / (m * (m + 1.0))
    return JLFamilyFactor(c=c, t=t, xi=xi)


def hypotheses_ok(state: PHState, ref_state: PHState, tol: float = 1e-6) -> bool:
    """Gate: reference Einstein, both scalars constant and equal m(m+1)/2."""
    m = state.m
    target = m * (m + 1.0) / 2.0
    ref = classify(ref_state, tol)
    ok = ref["einstein"]
    for st in (state, ref_state):
        rv = st.scalar.value
        ok = ok and float(np.max(np.abs(rv - target))) <= tol
    return bool(ok)


@dataclass
class JLComponents:
    m: int
    D: list          # D_ab, CJet matrix
    E: list          # E_ab-, CJet matrix
    D_vec: list      # D_a
    E_vec: list
    U: list          # U_a
    g: CJet
    w: Jet           # the conformal factor jet at working order
    w0: CJet         # w_0
    grad2: Jet       # |dw|^2
    _w1: Optional[list] = None   # w_a, first holomorphic derivatives

    def rhs(self) -> np.ndarray:
        """Sum-of-squares right-hand side (pointwise values, >= 0 for w > 0)."""
        m = self.m
        wv = self.w.value
        winv = 1.0 / wv
        dv = np.array([[self.D[a][b].value for b in range(m)] for a in range(m)])
        ev = np.array([[self.E[a][b].value for b in range(m)] for a in range(m)])
        dvec = np.array([v.value for v in self.D_vec])
        evec = np.array([v.value for v in self.E_vec])
        uvec = np.array([v.value for v in self.U])
        wa = np.array([v.value for v in self._w1])
        sq = np.sum(np.abs(dv) ** 2, axis=(0, 1)) + np.sum(np.abs(ev) ** 2,
                                                           axis=(0, 1))
        out = (0.5 + 0.5 * wv) * sq
        cross = np.zeros(wv.shape)
        for a in range(m):
            for b in range(m):
                for gm in range(m):
                    x = winv * np.conj(wa[gm]) * dv[a, b] \
                        + winv * wa[b] * ev[a, gm]
                    cross += np.abs(x) ** 2
        out += wv * (np.sum(np.abs(dvec - uvec) ** 2, axis=0)
                     + np.sum(np.abs(uvec + evec - dvec) ** 2, axis=0)
                     + np.sum(np.abs(uvec + evec) ** 2, axis=0)
                     + cross)
        return out


def components(state: PHState, cov: CovJet) -> JLComponents:
    """Assemble the identity's building blocks at the curvature jet order."""
    m = state.m
    k = state.traceless[0][0].order
    w = cov.phi.cut(k)
    if np.any(w.value <= 0):
        raise ValueError("conformal factor must be positive")
    winv = w.reciprocal()
    wc = CJet(winv)
    D = [[(-1j) * state.torsion[a][b].cut(k) for b in range(m)]
         for a in range(m)]
    E = [[(-1.0 / (m + 2.0)) * state.traceless[a][b].cut(k)
          for b in range(m)] for a in range(m)]
    w1 = [cov.d1h.comps[(a,)].cut(k) for a in range(m)]
    D_vec = []
    E_vec = []
    for a in range(m):
        sd = se = None
        for b in range(m):
            td = wc * w1[b].conj() * D[a][b]
            te = wc * w1[b] * E[a][b]
            sd = td if sd is None else sd + td
            se = te if se is None else se + te
        D_vec.append(sd)
        E_vec.append(se)
    _, divA, _ = cov_deriv_torsion(state)
    U = [(-2.0 / (m + 2.0)) * 1j * divA.comps[(a,)].cut(k) for a in range(m)]
    grad2 = cov.grad2().cut(k)
    w0 = cov.d0.cut(k)
    g = CJet(0.5 + 0.5 * w + winv * grad2) + CJet(-w0.im, w0.re)
    comps = JLComponents(m=m, D=D, E=E, D_vec=D_vec, E_vec=E_vec, U=U, g=g,
                         w=w, w0=w0, grad2=grad2)
    comps._w1 = w1
    return comps


def _lhs_divergence(state: PHState, comps: JLComponents) -> np.ndarray:
    """Re sum_a (g D_a + conj(g) E_a - 3 w_0 i U_a)_{,a-} pointwise."""
    m = comps.m
    vec = {}
    for a in range(m):
        v = (comps.g * comps.D_vec[a] + comps.g.conj() * comps.E_vec[a]
             - 3j * CJet(comps.w0.re, comps.w0.im) * comps.U[a])
        vec[(a,)] = v
    tf = TensorField(m, "h", vec)
    div = cov_deriv(tf, state, "a")
    out = None
    for a in range(m):
        t = div.comps[(a, a)].re.value
        out = t if out is None else out + t
    return out


def identity_residual_values(state: PHState, cov: CovJet) -> np.ndarray:
    """Per-point |LHS - RHS| of the divergence identity."""
    comps = components(state, cov)
    lhs = _lhs_divergence(state, comps)
    rhs = comps.rhs()
    return np.abs(lhs - rhs)


def lhs_divergence_values(state: PHState, cov: CovJet) -> np.ndarray:
    """Per-point value of the divergence side, for integrated checks."""
    return _lhs_divergence(state, components(state, cov))


def identity_residual(state: PHState, cov: CovJet) -> float:
    return float(np.max(identity_residual_values(state, cov)))


def family_f_numeric(model: ContactModel, factor: JLFamilyFactor,
                     sphere_nodes: np.ndarray) -> np.ndarray:
    """Node samples of e^{u/2} cos(v/2) = Re(sqrt(c)/w) for the family."""
    xi = factor._xi(model)
    w = np.cosh(factor.t) + np.sinh(factor.t) * (sphere_nodes @ np.conj(xi))
    return np.real(np.sqrt(factor.c) / w)


def lhs_expanded_residual(state: PHState, cov: CovJet) -> float:
    """Agreement of the raw divergence with its expanded closed form.

    The expansion eliminates D_{a,a-} and E_{a,a-} through their product
    rules and uses that Re i U_{a,a-} vanishes by a Bianchi identity.
    """
    m = state.m
    comps = components(state, cov)
    lhs = _lhs_divergence(state, comps)
    k = comps.g.order - 1
    E = state.directions(k)
    wv = comps.w.value
    winv = 1.0 / wv
    gv = comps.g.value
    dvec = np.array([v.value for v in comps.D_vec])
    evec = np.array([v.value for v in comps.E_vec])
    uvec = np.array([v.value for v in comps.U])
    wa = np.array([v.value for v in comps._w1])
    dsq = sum(np.abs(comps.D[a][b].value) ** 2
              for a in range(m) for b in range(m))
    esq = sum(np.abs(comps.E[a][b].value) ** 2
              for a in range(m) for b in range(m))
    g2 = comps.grad2.value
    ga = []
    gbar_a = []
    w0a = []
    for a in range(m):
        gd = apply_vector(E[1 + m + a], comps.g.cut(k + 1))
        gbd = apply_vector(E[1 + m + a], comps.g.conj().cut(k + 1))
        ga.append(gd.value)
        gbar_a.append(gbd.value)
        w0a.append(apply_vector(E[1 + m + a], comps.w0.cut(k + 1)).value)
    ga = np.array(ga)
    gbar_a = np.array(gbar_a)
    w0a = np.array(w0a)
    expanded = (1.5 * winv * np.real(gv * np.sum(uvec * np.conj(wa), axis=0))
                + (0.5 + 0.5 * wv + winv * g2) * (dsq + esq)
                - winv * np.real(gv * np.sum(dvec * np.conj(wa), axis=0))
                + np.real(np.sum(ga * dvec + gbar_a * evec
                                 - 3j * w0a * uvec, axis=0)))
    return float(np.max(np.abs(lhs - expanded)))


def einstein_reduction_residuals(state: PHState, cov: CovJet) -> dict:
    """Residuals of the closed forms for A, B, trace, D and E."""
    m = state.m
    comps = components(state, cov)
    k = comps.w.order
    w = comps.w
    winv = w.reciprocal()
    wc = CJet(winv)
    g2 = comps.grad2
    w0 = comps.w0
    w1 = comps._w1
    d2hh = {key: v.cut(k) for key, v in cov.d2hh.comps.items()}
    d2ha = {key: v.cut(k) for key, v in cov.d2ha.comps.items()}

    def mx(x):
        return float(np.max(np.abs(x)))

    res_fa = res_fb = res_fd = res_fe = 0.0
    trace = None
    for g in range(m):
        t = d2ha[(g, g)]
        trace = t if trace is None else trace + t
    half_g_like = 0.5 * (CJet(0.5 * winv - 0.5 + winv * winv * g2)
                         + CJet(-winv * w0.im, winv * w0.re))
    for a in range(m):
        for b in range(m):
            fa = state.torsion[a][b].cut(k) - 1j * wc * d2hh[(a, b)]
            res_fa = max(res_fa, mx(fa.value))
            fb = (state.traceless[a][b].cut(k)
                  + (m + 2.0) * (wc * d2ha[(a, b)]
                                 - CJet(winv * winv) * w1[a] * w1[b].conj()))
            if a == b:
                fb = fb - ((m + 2.0) / m) * (wc * trace - CJet(winv * winv * g2))
            res_fb = max(res_fb, mx(fb.value))
            fd = comps.D[a][b] - wc * d2hh[(a, b)]
            res_fd = max(res_fd, mx(fd.value))
            fe = comps.E[a][b] - (wc * d2ha[(a, b)]
                                  - CJet(winv * winv) * w1[a] * w1[b].conj())
            if a == b:
                fe = fe + half_g_like
            res_fe = max(res_fe, mx(fe.value))
    fr = trace - (CJet(0.25 * m - 0.25 * m * w
                       + 0.5 * (m + 2.0) * winv * g2)
                  + CJet(-0.5 * m * w0.im, 0.5 * m * w0.re))
    return {"torsion_form": res_fa, "traceless_form": res_fb,
            "trace_form": mx(fr.value), "d_form": res_fd, "e_form": res_fe}


def lemma_residuals(state: PHState, cov: CovJet) -> dict:
    """First-derivative closed forms for U_a, i w_{0,a-}, g_a- and conj(g)_a-."""
    m = state.m
    comps = components(state, cov)
    k = comps.g.order - 1
    E = state.directions(k)
    w = comps.w
    wv = w.value
    winv = 1.0 / wv
    gv = comps.g.value
    dvec = np.array([v.value for v in comps.D_vec])
    evec = np.array([v.value for v in comps.E_vec])
    uvec = np.array([v.value for v in comps.U])
    wa = np.array([v.value for v in comps._w1])
    w0h = np.array([cov.d20h.comps[(0, a)].value for a in range(m)])

    def mx(x):
        return float(np.max(np.abs(x)))

    # U_a = w^{-1} [ i w_{0,a} + w (D_a - E_a) + (1/2) w^{-1} conj(g) w_a ]
    r_ua = mx(uvec - winv * (1j * w0h + wv * (dvec - evec)
                             + 0.5 * winv * np.conj(gv) * wa))
    # i w_{0,a-} = w (conj D - conj U - conj E)_a + (1/2) w^{-1} g conj(w_a)
    r_w0 = mx(1j * np.conj(w0h)
              - (wv * (np.conj(dvec) - np.conj(uvec) - np.conj(evec))
                 + 0.5 * winv * gv * np.conj(wa)))
    ga = []
    gba = []
    for a in range(m):
        ga.append(apply_vector(E[1 + m + a], comps.g.cut(k + 1)).value)
        gba.append(apply_vector(E[1 + m + a], comps.g.conj().cut(k + 1)).value)
    ga = np.array(ga)
    gba = np.array(gba)
    r_g = mx(ga - (winv * gv * np.conj(wa)
                   + wv * (2.0 * np.conj(dvec) - np.conj(uvec))))
    r_gb = mx(gba - wv * (2.0 * np.conj(evec) + np.conj(uvec)))
    return {"u_form": r_ua, "iw0_form": r_w0, "g_form": r_g,
            "gbar_form": r_gb}


def vanishing_system_residuals(state: PHState, cov: CovJet) -> dict:
    """The first-order systems for w and u = log w after D = E = U = 0."""
    m = state.m
    k = cov.d2hh.order
    w = cov.phi.cut(k)
    winv = w.reciprocal()
    w1 = [cov.d1h.comps[(a,)].cut(k) for a in range(m)]
    w0 = cov.d0.cut(k)
    g2 = cov.grad2().cut(k)
    w0h = [cov.d20h.comps[(0, a)].cut(k) for a in range(m)]

    def mx(x):
        return float(np.max(np.abs(x.value)))

    r1 = r2 = r3 = 0.0
    diag = 0.5 * (CJet(0.5 - 0.5 * w + winv * g2) + CJet(-w0.im, w0.re))
    coef = 0.5j * (CJet(0.5 + 0.5 * winv + winv * winv * g2)
                   + CJet(winv * w0.im, -winv * w0.re))
    for a in range(m):
        for b in range(m):
            r1 = max(r1, mx(cov.d2hh.comps[(a, b)].cut(k)))
            t = cov.d2ha.comps[(a, b)].cut(k) - CJet(winv) * w1[a] * w1[b].conj()
            if a == b:
                t = t - diag
            r2 = max(r2, mx(t))
        r3 = max(r3, mx(w0h[a] - coef * w1[a]))
    # u-system
    ucov = cov_derivs(state, _log_jet(cov.phi))
    u1 = [ucov.d1h.comps[(a,)].cut(k) for a in range(m)]
    u0 = ucov.d0.cut(k)
    ug2 = ucov.grad2().cut(k)
    u0h = [ucov.d20h.comps[(0, a)].cut(k) for a in range(m)]
    emu = jet_exp(-_log_jet(cov.phi)).cut(k)
    s1 = s2 = s3 = 0.0
    udiag = 0.5 * (CJet(0.5 * emu - 0.5 + ug2) + CJet(-u0.im, u0.re))
    ucoef = (-0.5) * CJet(u0.re, u0.im) \
        + 0.5j * CJet(0.5 + 0.5 * emu + ug2)
    for a in range(m):
        for b in range(m):
            s1 = max(s1, mx(ucov.d2hh.comps[(a, b)].cut(k) + u1[a] * u1[b]))
            t = ucov.d2ha.comps[(a, b)].cut(k)
            if a == b:
                t = t - udiag
            s2 = max(s2, mx(t))
        s3 = max(s3, mx(u0h[a] - ucoef * u1[a]))
    return {"w_second": r1, "w_mixed": r2, "w_reeb": r3,
            "u_second": s1, "u_mixed": s2, "u_reeb": s3}


def _log_jet(w: Jet) -> Jet:
    from .jets import jet_log
    return jet_log(w)


@dataclass
class ObataData:
    """log-factor u, its conjugate v, and the mean-free f = e^{u/2}cos(v/2)-c."""

    m: int
    u: Jet
    v: Jet
    f: Jet
    c_mean: float
    v0: CJet                 # Reeb derivative of v, computed covariantly
    v0_formula_residual: float
    fcov: CovJet
    chi: CJet                # (e^{u/2} sin(v/2))_0


def conjugate_and_f(model: ContactModel, factor: JLFamilyFactor,
                    state: PHState, c_mean: float) -> ObataData:
    """Build (u, v, f) on the state's points; c_mean from quadrature."""
    u, v = factor.log_conjugate(model, state.fd.coords)
    ucov = cov_derivs(state, u)
    k = state.order
    v0 = apply_vector(state.directions(k + 1)[0], CJet(v.cut(k + 2)))
    g2u = ucov.grad2()
    pred = -(0.5 * jet_exp(-u).cut(g2u.order) - 0.5 + g2u).cut(v0.order)
    v0_res = float(np.max(np.abs(v0.value - pred.value)))
    f = jet_exp(0.5 * u) * jet_cos(0.5 * v) - c_mean
    fcov = cov_derivs(state, f)
    s = jet_exp(0.5 * u) * jet_sin(0.5 * v)
    chi = apply_vector(state.directions(k + 1)[0], CJet(s.cut(k + 2)))
    return ObataData(m=model.m, u=u, v=v, f=f, c_mean=c_mean, v0=v0,
                     v0_formula_residual=v0_res, fcov=fcov, chi=chi)


def crh_residuals(data: ObataData, state: PHState) -> dict:
    """The four second-derivative displays for the mean-free function f."""
    m = data.m
    fcov = data.fcov
    k = fcov.d2hh.order

    def mx(x):
        return float(np.max(np.abs(x.value)))

    r1 = r2 = 0.0
    f0 = fcov.d0.cut(k)
    chi = data.chi.cut(k)
    diag = 0.5 * (CJet(-chi.re, -chi.im) + CJet(-f0.im, f0.re))
    for a in range(m):
        for b in range(m):
            r1 = max(r1, mx(fcov.d2hh.comps[(a, b)].cut(k)))
            t = fcov.d2ha.comps[(a, b)].cut(k)
            if a == b:
                t = t - diag
            r2 = max(r2, mx(t))
    r3 = 0.0
    for a in range(m):
        t = fcov.d20h.comps[(0, a)].cut(k) \
            - 0.5j * fcov.d1h.comps[(a,)].cut(k)
        r3 = max(r3, mx(t))
    r4 = mx(fcov.d00 + 0.5 * data.chi.cut(fcov.d00.order))
    return {"f_second": r1, "f_mixed": r2, "f_reeb_first": r3,
            "f_reeb_second": r4}
