"""Chart models for the Heisenberg group and the CR sphere.

Both models live on the global Heisenberg chart R^{2m+1} with real
coordinates (x_1, y_1, ..., x_m, y_m, t) and z_a = x_a + i y_a.  The base
contact form of the Heisenberg model is

    theta_H = dt + 2 sum_a (x_a dy_a - y_a dx_a),

and the sphere model carries the canonical form of S^{2m+1} pulled back
through the Cayley transform, which equals lambda * theta_H with
lambda = 4 / ((1 + |z|^2)^2 + t^2).  The closed-form lambda is never
trusted blindly: tests compare it against an independent jet-valued
pullback of the sphere form (see `pullback_sphere_form`).

A ConformalFactor multiplies the base form; the CR frame background
Z_a = d/dz_a + i conj(z_a) d/dt is shared by every factor because a
conformal rescaling preserves the CR structure.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np

from . import jetlin
from .jets import CJet, Jet, jet_atan2, jet_exp, jet_log, jet_sin, jet_sqrt, seed_point

__all__ = [
    "ContactModel",
    "heisenberg",
    "sphere_cayley",
    "ConformalFactor",
    "ConstantFactor",
    "JLFamilyFactor",
    "RandomTrigFactor",
    "SphereSmoothFactor",
    "ExprFactor",
    "ProductFactor",
    "RatioFactor",
    "PowerFactor",
    "FrameData",
    "eval_theta",
    "reeb_field",
    "unitary_frame",
    "sample_points",
    "pullback_sphere_form",
]


class ContactGeometryError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# models


@dataclass(frozen=True)
class ContactModel:
    kind: str  # "heisenberg" | "sphere_cayley"
    m: int

    def __post_init__(self):
        if self.kind not in ("heisenberg", "sphere_cayley"):
            raise ValueError(f"unknown model kind {self.kind!r}")
        if self.m < 1:
            raise ValueError("CR dimension m must be >= 1")

    @property
    def dim(self) -> int:
        return 2 * self.m + 1

    # complex chart coordinates z_a = x_a + i y_a as CJets
    def z_coords(self, coords: Sequence[Jet]) -> List[CJet]:
        return [CJet(coords[2 * a], coords[2 * a + 1]) for a in range(self.m)]

    def heis_theta(self, coords: Sequence[Jet]) -> List[Jet]:
        """Components of theta_H in the chart basis (dx1, dy1, ..., dt)."""
        n = self.dim
        comps = []
        for a in range(self.m):
            comps.append(-2.0 * coords[2 * a + 1])  # dx_a slot: -2 y_a
            comps.append(2.0 * coords[2 * a])       # dy_a slot: +2 x_a
        comps.append(coords[0].like_const(np.ones(coords[0].batch_shape)))
        assert len(comps) == n
        return comps

    def cayley_lambda(self, coords: Sequence[Jet]) -> Jet:
        """Positive factor with pullback(theta_c) = lambda * theta_H."""
        z = self.z_coords(coords)
        r2 = None
        for za in z:
            r2 = za.abs2() if r2 is None else r2 + za.abs2()
        t = coords[-1]
        one = 1.0 + r2
        return 4.0 / (one * one + t * t)

    def sphere_coords(self, coords: Sequence[Jet]) -> List[CJet]:
        """Cayley image on the unit sphere of C^{m+1}, as CJets."""
        z = self.z_coords(coords)
        r2 = None
        for za in z:
            r2 = za.abs2() if r2 is None else r2 + za.abs2()
        t = coords[-1]
        denom = CJet(1.0 + r2, -t)  # 1 + |z|^2 - i t
        out = [(za * 2.0) / denom for za in z]
        out.append(CJet(1.0 - r2, t) / denom)  # (1 - |z|^2 + i t)/(1+|z|^2-it)
        return out

    def base_theta(self, coords: Sequence[Jet]) -> List[Jet]:
        comps = self.heis_theta(coords)
        if self.kind == "sphere_cayley":
            lam = self.cayley_lambda(coords)
            comps = [lam * c for c in comps]
        return comps

    def cr_background(self, coords: Sequence[Jet]) -> List[List[CJet]]:
        """Frame Z_a = d/dz_a + i conj(z_a) d/dt, complex chart components."""
        n = self.dim
        K = coords[0].order
        out = []
        for a in range(self.m):
            comp = [CJet.const(0.0, K, n) for _ in range(n)]
            comp[2 * a] = CJet.const(0.5, K, n)
            comp[2 * a + 1] = CJet.const(-0.5j, K, n)
            # i * conj(z_a) = y_a + i x_a
            comp[-1] = CJet(coords[2 * a + 1], coords[2 * a])
            out.append(comp)
        return out

    # numeric (non-jet) chart <-> sphere maps, used by samplers and quadrature
    def chart_from_sphere(self, z: np.ndarray) -> np.ndarray:
        """Inverse Cayley transform; z has shape (..., m+1) complex."""
        zm = z[..., -1]
        denom = 1.0 + zm
        if np.any(np.abs(denom) < 1e-13):
            raise ContactGeometryError("point at the chart's singular locus")
        zh = z[..., :-1] / denom[..., None]
        w = 1j * (1.0 - zm) / denom
        pts = np.empty(z.shape[:-1] + (self.dim,))
        pts[..., 0:2 * self.m:2] = zh.real
        pts[..., 1:2 * self.m:2] = zh.imag
        pts[..., -1] = w.real
        return pts

    def sphere_from_chart(self, pts: np.ndarray) -> np.ndarray:
        zh = pts[..., 0:2 * self.m:2] + 1j * pts[..., 1:2 * self.m:2]
        t = pts[..., -1]
        r2 = np.sum(np.abs(zh) ** 2, axis=-1)
        denom = (1.0 + r2 - 1j * t)[..., None]
        out = np.concatenate([2.0 * zh / denom,
                              ((1.0 - r2 + 1j * t)[..., None] / denom)], axis=-1)
        return out


def heisenberg(m: int) -> ContactModel:
    return ContactModel("heisenberg", m)


def sphere_cayley(m: int) -> ContactModel:
    return ContactModel("sphere_cayley", m)


def pullback_sphere_form(model: ContactModel, coords: Sequence[Jet]) -> List[Jet]:
    """Independent pullback of i * sum_j (z_j d conj(z_j) - conj(z_j) dz_j).

    Differentiates the jet-valued Cayley map directly; used to validate the
    closed-form lambda of the sphere model.
    """
    z = model.sphere_coords(coords)
    n = model.dim
    comps = []
    for i in range(n):
        s = None
        for zj in z:
            dzj = zj.cut(zj.order).deriv(i)
            term = zj.cut(dzj.order) * dzj.conj()
            term = CJet(-2.0 * term.im, term.re * 0.0)  # i*(w - conj(w)) = -2 Im w
            s = term if s is None else s + term
        comps.append(s.re)
    return comps


# ---------------------------------------------------------------------------
# conformal factors


class ConformalFactor:
    """Positive function multiplying the model's base contact form."""

    def eval(self, model: ContactModel, coords: Sequence[Jet]) -> Jet:
        raise NotImplementedError

    def describe(self) -> str:
        raise NotImplementedError


@dataclass(frozen=True)
class ConstantFactor(ConformalFactor):
    c: float = 1.0

    def __post_init__(self):
        if self.c <= 0:
            raise ValueError("constant factor must be positive")

    def eval(self, model, coords):
        return Jet.const(np.full(coords[0].batch_shape, self.c),
                         coords[0].order, coords[0].nvars)

    def describe(self):
        return f"const({self.c:g})"


@dataclass(frozen=True)
class JLFamilyFactor(ConformalFactor):
    """phi(z) = c |cosh(t) + sinh(t) z . conj(xi)|^-2 on the sphere."""

    c: float = 1.0
    t: float = 0.0
    xi: tuple = None  # unit vector in C^{m+1}

    def __post_init__(self):
        if self.c <= 0 or self.t < 0:
            raise ValueError("family parameters need c > 0 and t >= 0")

    def _xi(self, model) -> np.ndarray:
        if self.xi is None:
            xi = np.zeros(model.m + 1, dtype=complex)
            xi[0] = 1.0
        else:
            xi = np.asarray(self.xi, dtype=complex)
        nrm = np.linalg.norm(xi)
        if abs(nrm - 1.0) > 1e-12:
            xi = xi / nrm
        return xi

    def holomorphic_part(self, model, coords) -> CJet:
        """w = cosh(t) + sinh(t) z . conj(xi); phi = c / |w|^2."""
        if model.kind != "sphere_cayley":
            raise ContactGeometryError("extremal family lives on the sphere model")
        z = model.sphere_coords(coords)
        xi = self._xi(model)
        w = CJet.const(np.cosh(self.t), coords[0].order, coords[0].nvars)
        s = np.sinh(self.t)
        for zj, xij in zip(z, xi):
            w = w + zj * CJet.const(s * np.conj(xij), coords[0].order,
                                    coords[0].nvars)
        return w

    def eval(self, model, coords):
        w = self.holomorphic_part(model, coords)
        return self.c * w.abs2().reciprocal()

    def eval_numeric(self, model, sphere_z: np.ndarray) -> np.ndarray:
        xi = self._xi(model)
        w = np.cosh(self.t) + np.sinh(self.t) * (sphere_z @ np.conj(xi))
        return self.c / np.abs(w) ** 2

    def log_conjugate(self, model, coords):
        """(u, v) with e^{(u + i v)/2} = sqrt(c)/w; v continuous, v(t=0) = 0."""
        w = self.holomorphic_part(model, coords)
        u = jet_log(self.c * w.abs2().reciprocal())
        v = -2.0 * jet_atan2(w.im, w.re)
        return u, v

    def describe(self):
        return f"jl(c={self.c:g}, t={self.t:g})"


@dataclass(frozen=True)
class RandomTrigFactor(ConformalFactor):
    """exp of a seeded trigonometric polynomial; positive by construction."""

    seed: int = 0
    amplitude: float = 0.2
    nterms: int = 3

    def _draw(self, dim):
        rng = np.random.default_rng(self.seed)
        freqs = rng.integers(-2, 3, size=(self.nterms, dim)).astype(float)
        freqs[np.all(freqs == 0, axis=1), 0] = 1.0
        amps = rng.normal(size=self.nterms)
        amps *= self.amplitude / np.sum(np.abs(amps))
        phases = rng.uniform(0, 2 * np.pi, size=self.nterms)
        return freqs, amps, phases

    def eval(self, model, coords):
        freqs, amps, phases = self._draw(model.dim)
        s = None
        for fr, am, ph in zip(freqs, amps, phases):
            arg = Jet.const(np.full(coords[0].batch_shape, ph),
                            coords[0].order, coords[0].nvars)
            for w, xi in zip(fr, coords):
                if w != 0.0:
                    arg = arg + w * xi
            term = am * jet_sin(arg)
            s = term if s is None else s + term
        return jet_exp(s)

    def describe(self):
        return f"randtrig(seed={self.seed}, amp={self.amplitude:g})"


@dataclass(frozen=True)
class SphereSmoothFactor(ConformalFactor):
    """exp of a seeded quadratic in the Cayley-image coordinates.

    Unlike chart-coordinate trig factors this extends smoothly across the
    chart's singular locus, so sphere-wide integrals of quantities built
    from it converge under quadrature.
    """

    seed: int = 0
    amplitude: float = 0.2

    def eval(self, model, coords):
        sph = model.sphere_coords(coords)
        k = len(sph)
        rng = np.random.default_rng(self.seed)
        cre = rng.normal(size=(k, k))
        cim = rng.normal(size=(k, k))
        scale = self.amplitude / (np.sum(np.abs(cre)) + np.sum(np.abs(cim)))
        s = None
        for i in range(k):
            for j in range(k):
                w = sph[i] * sph[j].conj()
                term = scale * (cre[i, j] * w.re + cim[i, j] * w.im)
                s = term if s is None else s + term
        return jet_exp(s)

    def describe(self):
        return f"spherequad(seed={self.seed}, amp={self.amplitude:g})"


@dataclass(frozen=True)
class ExprFactor(ConformalFactor):
    """User-supplied evaluator (model, coords jets) -> positive Jet."""

    fn: Callable = None
    label: str = "expr"

    def eval(self, model, coords):
        return self.fn(model, coords)

    def describe(self):
        return self.label


@dataclass(frozen=True)
class ProductFactor(ConformalFactor):
    a: ConformalFactor = None
    b: ConformalFactor = None

    def eval(self, model, coords):
        return self.a.eval(model, coords) * self.b.eval(model, coords)

    def describe(self):
        return f"({self.a.describe()})*({self.b.describe()})"


@dataclass(frozen=True)
class RatioFactor(ConformalFactor):
    a: ConformalFactor = None
    b: ConformalFactor = None

    def eval(self, model, coords):
        return self.a.eval(model, coords) / self.b.eval(model, coords)

    def describe(self):
        return f"({self.a.describe()})/({self.b.describe()})"


@dataclass(frozen=True)
class PowerFactor(ConformalFactor):
    a: ConformalFactor = None
    p: float = 1.0

    def eval(self, model, coords):
        from .jets import jet_pow
        return jet_pow(self.a.eval(model, coords), self.p)

    def describe(self):
        return f"({self.a.describe()})^{self.p:g}"


# ---------------------------------------------------------------------------
# frame construction


@dataclass
class FrameData:
    """Unitary coframe/frame package at (batched) chart points.

    All jet-valued entries share order K-1 where K is the seeding order;
    theta keeps order K.  Components are relative to the chart basis.
    """

    model: ContactModel
    factor: ConformalFactor
    coords: List[Jet]            # order K
    theta: List[Jet]             # order K
    dtheta: List[List[Jet]]      # antisymmetric matrix, order K-1
    reeb: List[Jet]              # order K-1, real components
    frame: List[List[CJet]]      # T_a, m rows of chart components, order K-1
    coframe: List[List[CJet]]    # theta^a, m rows of chart components, order K-1
    factor_jet: Jet              # order K

    @property
    def m(self) -> int:
        return self.model.m

    @property
    def order(self) -> int:
        return self.reeb[0].order

    def reeb_c(self) -> List[CJet]:
        return [CJet(c) for c in self.reeb]

    def duality_residual(self) -> float:
        """Max violation of theta^a(T_b) = delta, theta^a(T) = 0, theta(T) = 1."""
        res = 0.0
        K1 = self.order
        th = [c.cut(K1) for c in self.theta]
        tv = _pair_real(th, self.reeb)
        res = max(res, float(np.max(np.abs(tv.value - 1.0))))
        for a in range(self.m):
            for b in range(self.m):
                v = _pair(self.coframe[a], self.frame[b]).value
                res = max(res, float(np.max(np.abs(v - (1.0 if a == b else 0.0)))))
                v = _pair(self.coframe[a],
                          [w.conj() for w in self.frame[b]]).value
                res = max(res, float(np.max(np.abs(v))))
            v = _pair(self.coframe[a], self.reeb_c()).value
            res = max(res, float(np.max(np.abs(v))))
        return res


def _pair(form: Sequence[CJet], vec: Sequence[CJet]) -> CJet:
    s = None
    for f, v in zip(form, vec):
        term = f * v
        s = term if s is None else s + term
    return s


def _pair_real(form: Sequence[Jet], vec: Sequence[Jet]) -> Jet:
    s = None
    for f, v in zip(form, vec):
        term = f * v
        s = term if s is None else s + term
    return s


def two_form(one_form: Sequence[Jet]) -> List[List[Jet]]:
    """Exterior derivative as a full antisymmetric component matrix."""
    n = len(one_form)
    d = [[None] * n for _ in range(n)]
    for j in range(n):
        dj = [one_form[j].deriv(i) for i in range(n)]
        for i in range(n):
            d[i][j] = dj[i]
    return [[d[i][j] - d[j][i] for j in range(n)] for i in range(n)]


def two_form_c(one_form: Sequence[CJet]) -> List[List[CJet]]:
    n = len(one_form)
    d = [[one_form[j].deriv(i) for j in range(n)] for i in range(n)]
    return [[d[i][j] - d[j][i] for j in range(n)] for i in range(n)]


def eval_two_form(mat, x, y) -> CJet:
    s = None
    for i in range(len(mat)):
        row = _pair(mat[i], y)
        term = x[i] * row
        s = term if s is None else s + term
    return s


def eval_theta(model: ContactModel, factor: ConformalFactor, p: np.ndarray,
               order: int):
    """Jet components of theta = factor * base form at chart point(s) p."""
    coords = seed_point(np.asarray(p, dtype=float), order)
    if len(coords) != model.dim:
        raise ContactGeometryError(
            f"point has {len(coords)} coordinates, model needs {model.dim}")
    f = factor.eval(model, coords)
    if np.any(f.value <= 0):
        raise ContactGeometryError("conformal factor must be positive")
    theta = [f * c for c in model.base_theta(coords)]
    return coords, theta, f


def reeb_field(theta: Sequence[Jet]) -> List[Jet]:
    """Solve theta(T) = 1, dtheta(T, .) = 0 in jet arithmetic."""
    n = len(theta)
    K1 = theta[0].order - 1
    dth = two_form(theta)
    th = [c.cut(K1) for c in theta]
    # rows of the overdetermined system A T = e_0
    rows = [th] + [[dth[i][j] for i in range(n)] for j in range(n)]
    gram = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1):
            s = None
            for r in rows:
                term = r[i] * r[j]
                s = term if s is None else s + term
            gram[i][j] = s
            gram[j][i] = s
    rhs = [th[i] for i in range(n)]  # A^T e_0 = first row
    try:
        sol = jetlin.solve_spd_real(gram, [rhs])[0]
    except Exception as exc:  # noqa: BLE001 - surface as a domain error
        raise ContactGeometryError(f"degenerate contact form: {exc}") from exc
    return sol


def unitary_frame(model: ContactModel, factor: ConformalFactor, p: np.ndarray,
                  order: int) -> FrameData:
    """Deterministic unitary frame: Cholesky-normalized CR background."""
    coords, theta, fjet = eval_theta(model, factor, p, order)
    n = model.dim
    K1 = order - 1
    dth = two_form(theta)
    reeb = reeb_field(theta)
    zbg = [[c.cut(K1) for c in row] for row in model.cr_background(coords)]
    # Levi matrix of the background: G_ab = -i dtheta(Z_a, conj(Z_b))
    dth_c = [[CJet(e) for e in row] for row in dth]
    G = [[None] * model.m for _ in range(model.m)]
    for a in range(model.m):
        for b in range(model.m):
            w = eval_two_form(dth_c, zbg[a], [v.conj() for v in zbg[b]])
            G[a][b] = CJet(w.im, -w.re)  # -i * w
    if np.any(G[0][0].re.value <= 0):
        raise ContactGeometryError("Levi form is not positive definite")
    low = jetlin.cholesky_herm(G)
    # T_a = sum_g (L^{-1})_{ag} Z_g: forward substitution on the rows
    frame = []
    for a in range(model.m):
        row = [zbg[a][i] for i in range(n)]
        for k in range(a):
            row = [row[i] - low[a][k] * frame[k][i] for i in range(n)]
        inv = low[a][a].re.reciprocal()
        frame.append([CJet(r.re * inv, r.im * inv) for r in row])
    # coframe: solve V w = e_{1+a} with V rows (T, T_a, conj(T_a))
    reeb_c = [CJet(c) for c in reeb]
    rows = [reeb_c] + frame + [[v.conj() for v in row] for row in frame]
    rhs_list = []
    for a in range(model.m):
        rhs = [CJet.const(1.0 if k == 1 + a else 0.0, K1, n)
               for k in range(len(rows))]
        rhs_list.append(rhs)
    coframe = jetlin.solve_normal_herm(rows, rhs_list)
    return FrameData(model=model, factor=factor, coords=coords, theta=theta,
                     dtheta=dth, reeb=reeb, frame=frame, coframe=coframe,
                     factor_jet=fjet)


def sample_points(model: ContactModel, count: int, seed: int,
                  safety_margin: float = 0.35, spread: float = 0.8) -> np.ndarray:
    """Deterministic chart sample points; sphere points avoid the cut locus."""
    if count == 0:
        return np.zeros((0, model.dim))
    rng = np.random.default_rng(seed)
    if model.kind == "heisenberg":
        return spread * rng.normal(size=(count, model.dim))
    pts = []
    while len(pts) < count:
        v = rng.normal(size=(2, model.m + 1))
        z = v[0] + 1j * v[1]
        z = z / np.linalg.norm(z)
        if np.abs(1.0 + z[-1]) >= safety_margin:
            pts.append(model.chart_from_sphere(z))
    return np.array(pts)
