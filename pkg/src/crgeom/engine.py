"""Point-local pseudohermitian calculus from the structure equations.

Given a unitary frame package (FrameData) the module extracts the canonical
connection coefficients, torsion, curvature, Ricci and scalar curvature, and
provides covariant derivatives of scalars and tensors up to third order.
Everything is jet-valued and batched over base points.

Direction indexing used throughout: c = 0 is the Reeb field, c = 1..m are the
holomorphic frame vectors, c = m+1..2m their conjugates.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .contact import (ContactModel, ConformalFactor, FrameData, eval_two_form,
                      two_form_c, unitary_frame)
from .jets import CJet, Jet, JetShapeError

__all__ = [
    "PHState",
    "TensorField",
    "solve_connection",
    "curvature",
    "analyze",
    "cov_derivs",
    "cov_deriv_torsion",
    "bianchi_residual",
    "classify",
    "CovJet",
    "rotate_frame",
]


def apply_vector(vec: Sequence[CJet], f):
    """Directional derivative of a jet-valued scalar along a vector field."""
    if f.order < 1:
        raise JetShapeError("derivative budget exhausted (order-0 jet)")
    k = f.order - 1
    s = None
    for i, vi in enumerate(vec):
        term = vi.cut(k) * f.deriv(i)
        s = term if s is None else s + term
    return s


def conj_dir(c: int, m: int) -> int:
    if c == 0:
        return 0
    return c + m if c <= m else c - m


@dataclass
class PHState:
    """Connection/torsion/curvature package over a batch of points."""

    fd: FrameData
    gamma: List[List[List[CJet]]]       # gamma[c][b][a] = omega_b^a(E_c)
    omega_chart: List[List[List[CJet]]]  # [b][a][chart component]
    torsion: List[List[CJet]]           # A_{alpha beta}, symmetric
    torsion_up: List[List[CJet]]        # A^alpha_{beta-bar} raw coefficient
    curv: Optional[List] = None         # curv[b][a][r][s] = Omega_b^a(T_r, T_sbar)
    ricci: Optional[List] = None        # ricci[r][s], Hermitian
    scalar: Optional[Jet] = None
    traceless: Optional[List] = None    # B[r][s] = ricci - (R/m) delta

    @property
    def m(self) -> int:
        return self.fd.m

    @property
    def order(self) -> int:
        return self.gamma[0][0][0].order

    def directions(self, order: int) -> List[List[CJet]]:
        fd = self.fd
        E = [[c.cut(order) for c in fd.reeb_c()]]
        E += [[c.cut(order) for c in row] for row in fd.frame]
        E += [[c.conj().cut(order) for c in row] for row in fd.frame]
        return E

    # -- self-check residuals ------------------------------------------------

    def structure_residual(self) -> float:
        """Max violation of d(theta^a) = theta^b ^ omega_b^a + theta ^ tau^a."""
        m, fd = self.m, self.fd
        K2 = self.order
        n = fd.model.dim
        cof = [[c.cut(K2) for c in row] for row in fd.coframe]
        th = [CJet(c.cut(K2)) for c in fd.theta]
        res = 0.0
        for a in range(m):
            d = two_form_c(fd.coframe[a])
            for i in range(n):
                for j in range(i + 1, n):
                    rhs = None
                    for b in range(m):
                        w = self.omega_chart[b][a]
                        term = cof[b][i] * w[j] - cof[b][j] * w[i]
                        rhs = term if rhs is None else rhs + term
                    tau_i = tau_j = None
                    for b in range(m):
                        ti = self.torsion_up[a][b] * cof[b][i].conj()
                        tj = self.torsion_up[a][b] * cof[b][j].conj()
                        tau_i = ti if tau_i is None else tau_i + ti
                        tau_j = tj if tau_j is None else tau_j + tj
                    rhs = rhs + th[i] * tau_j - th[j] * tau_i
                    diff = d[i][j] - rhs
                    res = max(res, float(np.max(np.abs(diff.re.coeffs))),
                              float(np.max(np.abs(diff.im.coeffs))))
        return res

    def unitarity_residual(self) -> float:
        m = self.m
        res = 0.0
        for c in range(2 * m + 1):
            cc = conj_dir(c, m)
            for b in range(m):
                for a in range(m):
                    d = self.gamma[c][b][a] + self.gamma[cc][a][b].conj()
                    res = max(res, float(np.max(np.abs(d.value))))
        return res

    def torsion_symmetry_residual(self) -> float:
        res = 0.0
        for a in range(self.m):
            for b in range(self.m):
                d = self.torsion[a][b] - self.torsion[b][a]
                res = max(res, float(np.max(np.abs(d.value))))
        return res


def solve_connection(fd: FrameData) -> PHState:
    """Extract the canonical connection by evaluating d(theta^a) on frames."""
    m = fd.m
    n = fd.model.dim
    K2 = fd.order - 1
    if K2 < 0:
        raise JetShapeError("frame order too low to solve the connection")
    dcof = [two_form_c(fd.coframe[a]) for a in range(m)]
    reeb = [CJet(c.cut(K2)) for c in fd.reeb]
    Th = [[c.cut(K2) for c in row] for row in fd.frame]
    Ta = [[c.conj() for c in row] for row in Th]

    def ev(a, X, Y):
        return eval_two_form(dcof[a], X, Y)

    # omega_b^a(T_gbar) = dtheta^a(T_b, T_gbar)
    g_anti = [[[ev(a, Th[b], Ta[g]) for g in range(m)]
               for a in range(m)] for b in range(m)]
    # omega_b^a(T_g) from the (1,1)-free slot plus anti-Hermitian symmetry
    g_hol = [[[ev(a, Th[b], Th[g]) - g_anti[a][g][b].conj()
               for g in range(m)] for a in range(m)] for b in range(m)]
    # omega_b^a(T) and the torsion coefficient
    g_reeb = [[-ev(a, reeb, Th[b]) for a in range(m)] for b in range(m)]
    a_up = [[ev(a, reeb, Ta[b]) for b in range(m)] for a in range(m)]
    gamma = ([[[g_reeb[b][a] for a in range(m)] for b in range(m)]]
             + [[[g_hol[b][a][g] for a in range(m)] for b in range(m)]
                for g in range(m)]
             + [[[g_anti[b][a][g] for a in range(m)] for b in range(m)]
                for g in range(m)])
    # lowered symmetric torsion (unit Levi form)
    a_low = [[a_up[a][b].conj() for b in range(m)] for a in range(m)]
    # omega as chart-component 1-forms
    cof = [[c.cut(K2) for c in row] for row in fd.coframe]
    th = [CJet(c.cut(K2)) for c in fd.theta]
    omega_chart = []
    for b in range(m):
        row = []
        for a in range(m):
            comp = []
            for i in range(n):
                s = gamma[0][b][a] * th[i]
                for g in range(m):
                    s = s + gamma[1 + g][b][a] * cof[g][i]
                    s = s + gamma[1 + m + g][b][a] * cof[g][i].conj()
                comp.append(s)
            row.append(comp)
        omega_chart.append(row)
    return PHState(fd=fd, gamma=gamma, omega_chart=omega_chart,
                   torsion=a_low, torsion_up=a_up)


def curvature(state: PHState) -> PHState:
    """Fill curvature, Ricci, scalar and trace-free Ricci on the state."""
    m = state.m
    K2 = state.order
    K3 = K2 - 1
    if K3 < 0:
        raise JetShapeError("jet order too low for curvature")
    E = state.directions(K3)
    Th = E[1:1 + m]
    Ta = E[1 + m:]
    curv = [[None] * m for _ in range(m)]
    for b in range(m):
        for a in range(m):
            dom = two_form_c(state.omega_chart[b][a])
            mat = [[None] * m for _ in range(m)]
            for r in range(m):
                for s in range(m):
                    w = eval_two_form(dom, Th[r], Ta[s])
                    for g in range(m):
                        w = w - (state.gamma[1 + r][b][g].cut(K3)
                                 * state.gamma[1 + m + s][g][a].cut(K3))
                        w = w + (state.gamma[1 + m + s][b][g].cut(K3)
                                 * state.gamma[1 + r][g][a].cut(K3))
                    mat[r][s] = w
            curv[b][a] = mat
    ricci = [[None] * m for _ in range(m)]
    for r in range(m):
        for s in range(m):
            t = None
            for a in range(m):
                t = curv[a][a][r][s] if t is None else t + curv[a][a][r][s]
            ricci[r][s] = t
    scal = None
    for r in range(m):
        scal = ricci[r][r].re if scal is None else scal + ricci[r][r].re
    traceless = [[ricci[r][s] - ((1.0 if r == s else 0.0) / m) * CJet(scal)
                  for s in range(m)] for r in range(m)]
    state.curv = curv
    state.ricci = ricci
    state.scalar = scal
    state.traceless = traceless
    return state


def analyze(model: ContactModel, factor: ConformalFactor, points: np.ndarray,
            order: int = 4) -> PHState:
    """Frame + connection + curvature in one call."""
    return curvature(solve_connection(unitary_frame(model, factor, points,
                                                    order)))


# ---------------------------------------------------------------------------
# covariant derivatives of tensors


@dataclass
class TensorField:
    """Components of a tensor in the unitary frame, indexed by tuples.

    itypes encodes each slot: 'h' lower holomorphic, 'a' lower
    antiholomorphic, '0' a Reeb slot (no connection correction).
    """

    m: int
    itypes: str
    comps: Dict[tuple, CJet]

    @staticmethod
    def scalar(f: CJet, m: int) -> "TensorField":
        return TensorField(m, "", {(): f})

    @property
    def order(self) -> int:
        return next(iter(self.comps.values())).order

    def max_abs(self) -> float:
        return max(float(np.max(np.abs(v.value))) for v in self.comps.values())

    def conjugated(self) -> "TensorField":
        swap = {"h": "a", "a": "h", "0": "0"}
        return TensorField(self.m, "".join(swap[t] for t in self.itypes),
                           {k: v.conj() for k, v in self.comps.items()})


def _index_tuples(m: int, itypes: str):
    out = [()]
    for t in itypes:
        if t == "0":
            out = [idx + (0,) for idx in out]
        else:
            out = [idx + (g,) for idx in out for g in range(m)]
    return out


def cov_deriv(tf: TensorField, state: PHState, direction: str) -> TensorField:
    """One covariant derivative; direction 'h', 'a' or '0' (Reeb)."""
    m = tf.m
    k = tf.order - 1
    if k < 0:
        raise JetShapeError("derivative budget exhausted for tensor field")
    E = state.directions(k)
    if direction == "0":
        dirs = [0]
    elif direction == "h":
        dirs = list(range(1, 1 + m))
    elif direction == "a":
        dirs = list(range(1 + m, 1 + 2 * m))
    else:
        raise ValueError(f"unknown direction {direction!r}")
    out = {}
    for c in dirs:
        cc = conj_dir(c, m)
        for idx, val in tf.comps.items():
            d = apply_vector(E[c], val)
            for slot, t in enumerate(tf.itypes):
                if t == "0":
                    continue
                b = idx[slot]
                for g in range(m):
                    jdx = idx[:slot] + (g,) + idx[slot + 1:]
                    if t == "h":
                        w = state.gamma[c][b][g].cut(k)
                    else:
                        w = state.gamma[cc][b][g].cut(k).conj()
                    d = d - w * tf.comps[jdx].cut(k)
            key = idx + ((0,) if direction == "0" else (c - dirs[0],))
            out[key] = d
    return TensorField(m, tf.itypes + ("0" if direction == "0" else direction),
                       out)


# ---------------------------------------------------------------------------
# scalar derivative package


@dataclass
class CovJet:
    """Covariant derivatives of a scalar up to third order."""

    m: int
    phi: Jet                      # order K
    d1h: TensorField              # phi_alpha
    d0: CJet                      # phi_0
    d2hh: TensorField             # phi_{alpha,beta}
    d2ha: TensorField             # phi_{alpha,beta-bar}
    d2h0: TensorField             # phi_{alpha,0}
    d20h: TensorField             # phi_{0,alpha}
    d00: CJet                     # phi_{0,0}
    d3hha: Optional[TensorField] = None   # phi_{alpha beta, gamma-bar}
    d30ha: Optional[TensorField] = None   # phi_{0,alpha beta-bar}

    @property
    def d1a(self) -> TensorField:
        return self.d1h.conjugated()

    @property
    def d2aa(self) -> TensorField:
        return self.d2hh.conjugated()

    @property
    def d2ah(self) -> TensorField:
        """phi_{alpha-bar,beta} = conj of phi_{alpha,beta-bar})."""
        return self.d2ha.conjugated()

    def grad2(self) -> Jet:
        """|d phi|^2 = sum phi_alpha phi_alpha-bar (real, >= 0)."""
        s = None
        for a in range(self.m):
            t = self.d1h.comps[(a,)].abs2()
            s = t if s is None else s + t
        return s

    def sublaplacian(self) -> Jet:
        """Delta_b phi = sum (phi_{a,abar} + phi_{abar,a})."""
        s = None
        for a in range(self.m):
            t = 2.0 * self.d2ha.comps[(a, a)].re
            s = t if s is None else s + t
        return s

    def commutation_residual(self) -> float:
        """phi_{a,bbar} - phi_{bbar,a} = i delta_ab phi_0."""
        res = 0.0
        for a in range(self.m):
            for b in range(self.m):
                lhs = self.d2ha.comps[(a, b)] - self.d2ah.comps[(b, a)]
                tgt = (CJet(-self.d0.im, self.d0.re).cut(lhs.order)
                       if a == b else None)
                d = lhs - tgt if tgt is not None else lhs
                res = max(res, float(np.max(np.abs(d.value))))
        return res


def cov_derivs(state: PHState, phi_jet: Jet, depth: int = 2) -> CovJet:
    """Covariant derivative package for a positive scalar, depth 2 or 3."""
    m = state.m
    f = CJet(phi_jet.cut(min(phi_jet.order, state.order + 2)))
    tf0 = TensorField.scalar(f, m)
    d1h = cov_deriv(tf0, state, "h")
    d10 = cov_deriv(tf0, state, "0")
    d2hh = cov_deriv(d1h, state, "h")
    d2ha = cov_deriv(d1h, state, "a")
    d2h0 = cov_deriv(d1h, state, "0")
    d20h = cov_deriv(d10, state, "h")
    d00 = cov_deriv(d10, state, "0").comps[(0, 0)]
    cj = CovJet(m=m, phi=phi_jet, d1h=d1h, d0=d10.comps[(0,)],
                d2hh=d2hh, d2ha=d2ha, d2h0=d2h0, d20h=d20h, d00=d00)
    if depth >= 3:
        cj.d3hha = cov_deriv(d2hh, state, "a")
        cj.d30ha = cov_deriv(cov_deriv(d10, state, "h"), state, "a")
    return cj


def cov_deriv_torsion(state: PHState):
    """(A_{ab,gbar}, contracted A_{ab,bbar}, doubly contracted A_{ab,bbar abar})."""
    m = state.m
    A = TensorField(m, "hh", {(a, b): state.torsion[a][b]
                              for a in range(m) for b in range(m)})
    dA = cov_deriv(A, state, "a")
    div = {(a,): None for a in range(m)}
    for a in range(m):
        s = None
        for b in range(m):
            t = dA.comps[(a, b, b)]
            s = t if s is None else s + t
        div[(a,)] = s
    divA = TensorField(m, "h", div)
    ddA = cov_deriv(dA, state, "a")
    dd = None
    for a in range(m):
        for b in range(m):
            t = ddA.comps[(a, b, b, a)]
            dd = t if dd is None else dd + t
    return dA, divA, dd


def bianchi_residual(state: PHState) -> np.ndarray:
    """Contracted Bianchi identity residual per holomorphic index."""
    m = state.m
    B = TensorField(m, "ha", {(r, s): state.traceless[r][s]
                              for r in range(m) for s in range(m)})
    dB = cov_deriv(B, state, "h")
    _, divA, _ = cov_deriv_torsion(state)
    k = dB.order
    E = state.directions(k)
    out = []
    for a in range(m):
        lhs = None
        for b in range(m):
            t = dB.comps[(a, b, b)]
            lhs = t if lhs is None else lhs + t
        r_a = apply_vector(E[1 + a], CJet(state.scalar.cut(k + 1)))
        resid = (lhs - (1.0 - 1.0 / m) * r_a
                 + 1j * (m - 1.0) * divA.comps[(a,)].cut(k))
        out.append(resid.value)
    return np.array(out)


def classify(state: PHState, tol: float = 1e-7) -> dict:
    """Structure flags from torsion, trace-free Ricci and scalar constancy."""
    max_a = max(float(np.max(np.abs(v.value)))
                for row in state.torsion for v in row)
    max_b = max(float(np.max(np.abs(v.value)))
                for row in state.traceless for v in row)
    rv = state.scalar.value
    r_spread = float(np.max(rv) - np.min(rv)) if rv.size else 0.0
    flags = {
        "torsion_free": max_a <= tol,
        "pseudo_einstein": max_b <= tol,
        "constant_scalar": r_spread <= tol,
    }
    flags["einstein"] = (flags["torsion_free"] and flags["pseudo_einstein"]
                         and flags["constant_scalar"])
    flags["max_torsion"] = max_a
    flags["max_traceless_ricci"] = max_b
    flags["scalar_spread"] = r_spread
    return flags


def rotate_frame(fd: FrameData, U: np.ndarray) -> FrameData:
    """Apply a constant unitary frame rotation (gauge change) for testing."""
    m = fd.m
    n = fd.model.dim
    frame = []
    coframe = []
    for a in range(m):
        fr = None
        cf = None
        for b in range(m):
            t1 = [complex(U[a, b]) * v for v in fd.frame[b]]
            t2 = [complex(np.conj(U[a, b])) * v for v in fd.coframe[b]]
            fr = t1 if fr is None else [x + y for x, y in zip(fr, t1)]
            cf = t2 if cf is None else [x + y for x, y in zip(cf, t2)]
        frame.append(fr)
        coframe.append(cf)
    return FrameData(model=fd.model, factor=fd.factor, coords=fd.coords,
                     theta=fd.theta, dtheta=fd.dtheta, reeb=fd.reeb,
                     frame=frame, coframe=coframe, factor_jet=fd.factor_jet)
