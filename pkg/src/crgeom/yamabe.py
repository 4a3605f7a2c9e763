"""Sphere quadrature, the CR Yamabe functional and a desk-scale minimizer.

The reference measure is the volume form of the standard contact form on
the unit sphere of C^{m+1}.  By unitary invariance it is a constant
multiple of the Euclidean surface measure; the constant 2^{2m+1} m! is
cross-checked numerically through an independent jet-based wedge-power
density (`density_ratio` and the dual-path tests).

For m = 1 the default rule is a tensor Gauss product construction exact
for polynomials of degree >= 20; Monte Carlo sampling is the fallback
oracle and the route for m = 2.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np

from .contact import (ConformalFactor, ContactModel, sphere_cayley,
                      unitary_frame)
from .engine import analyze
from .jets import Jet, seed_point

__all__ = [
    "QuadratureRule",
    "product_rule",
    "monte_carlo_rule",
    "reference_density",
    "euclidean_volume",
    "integrate",
    "density_ratio",
    "yamabe_quotient",
    "sharp_constant",
    "FunctionBasis",
    "build_basis",
    "sobolev_energy",
    "sobolev_gap",
    "OptimizerConfig",
    "minimize_yamabe",
    "FamilyFit",
    "fit_family",
]


def euclidean_volume(m: int) -> float:
    """Surface measure of the unit sphere in C^{m+1}."""
    return 2.0 * np.pi ** (m + 1) / math.factorial(m)


def reference_density(m: int) -> float:
    """Constant density of the contact volume form over surface measure."""
    return 2.0 ** (2 * m + 1) * math.factorial(m)


def sharp_constant(m: int) -> float:
    return 2.0 * np.pi * m * (m + 1)


@dataclass
class QuadratureRule:
    """Nodes on the unit sphere of C^{m+1} with surface-measure weights."""

    m: int
    nodes: np.ndarray          # (N, m+1) complex, unit norm
    weights: np.ndarray        # (N,), sum to euclidean_volume(m)
    kind: str                  # "product" | "monte-carlo"
    meta: dict = field(default_factory=dict)

    @property
    def model(self) -> ContactModel:
        return sphere_cayley(self.m)

    @property
    def chart_points(self) -> np.ndarray:
        if "chart" not in self.meta:
            self.meta["chart"] = self.model.chart_from_sphere(self.nodes)
        return self.meta["chart"]

    def node_norm_residual(self) -> float:
        return float(np.max(np.abs(np.sum(np.abs(self.nodes) ** 2, axis=1)
                                   - 1.0)))


def product_rule(n_radial: int = 12, n_angle: int = 24) -> QuadratureRule:
    """Tensor Gauss rule on the 3-sphere (m = 1).

    Coordinates (u, alpha, beta) with z_1 = sqrt(1-u) e^{i alpha},
    z_2 = sqrt(u) e^{i beta}; surface measure = (1/2) du dalpha dbeta.
    Gauss-Legendre in u and offset uniform grids in the angles give
    polynomial exactness up to degree min(2*n_radial-1, n_angle-1).
    """
    xs, ws = np.polynomial.legendre.leggauss(n_radial)
    u = 0.5 * (xs + 1.0)
    wu = 0.5 * ws
    # offset grids avoid the chart's singular locus at beta = pi, u = 1
    ang = (np.arange(n_angle) + 0.5) * (2.0 * np.pi / n_angle)
    wa = 2.0 * np.pi / n_angle
    uu, aa, bb = np.meshgrid(u, ang, ang, indexing="ij")
    uu, aa, bb = uu.ravel(), aa.ravel(), bb.ravel()
    nodes = np.stack([np.sqrt(1.0 - uu) * np.exp(1j * aa),
                      np.sqrt(uu) * np.exp(1j * bb)], axis=1)
    ww, _, _ = np.meshgrid(wu, ang, ang, indexing="ij")
    weights = 0.5 * ww.ravel() * wa * wa
    return QuadratureRule(m=1, nodes=nodes, weights=weights, kind="product",
                          meta={"n_radial": n_radial, "n_angle": n_angle,
                                "exact_degree": min(2 * n_radial - 1,
                                                    n_angle - 1)})


def monte_carlo_rule(m: int, count: int = 1_000_000, seed: int = 0,
                     margin: float = 1e-6) -> QuadratureRule:
    """Uniform Monte Carlo nodes; the oracle rule and the m = 2 route."""
    rng = np.random.default_rng(seed)
    out = []
    total = 0
    while total < count:
        k = count - total
        v = rng.normal(size=(k, 2 * (m + 1)))
        z = v[:, ::2] + 1j * v[:, 1::2]
        z /= np.linalg.norm(z, axis=1)[:, None]
        keep = np.abs(1.0 + z[:, -1]) >= margin
        z = z[keep]
        out.append(z)
        total += len(z)
    nodes = np.concatenate(out, axis=0)[:count]
    weights = np.full(count, euclidean_volume(m) / count)
    return QuadratureRule(m=m, nodes=nodes, weights=weights,
                          kind="monte-carlo",
                          meta={"count": count, "seed": seed})


def integrate(rule: QuadratureRule, values: np.ndarray,
              factor_values: Optional[np.ndarray] = None) -> float:
    """Integral against the contact volume of theta = factor * theta_c.

    `values` are integrand samples at the rule's nodes; `factor_values`
    (if given) are samples of the conformal factor, entering with
    exponent m + 1 through the wedge power.
    """
    dens = reference_density(rule.m)
    w = rule.weights * dens
    if factor_values is not None:
        w = w * np.asarray(factor_values) ** (rule.m + 1)
    return float(np.sum(w * np.asarray(values)))


def _top_form_coefficient(theta: Sequence[Jet]) -> np.ndarray:
    """Point values of the chart density of theta ^ (dtheta)^m."""
    n = len(theta)
    m = (n - 1) // 2
    dth = np.empty((n, n) + theta[0].batch_shape)
    thv = np.empty((n,) + theta[0].batch_shape)
    dcomp = [[theta[j].deriv(i).value for j in range(n)] for i in range(n)]
    for i in range(n):
        thv[i] = theta[i].value
        for j in range(n):
            dth[i, j] = dcomp[i][j] - dcomp[j][i]
    total = np.zeros(theta[0].batch_shape)
    for perm in itertools.permutations(range(n)):
        sign = _perm_sign(perm)
        term = thv[perm[0]]
        for k in range(m):
            term = term * dth[perm[1 + 2 * k], perm[2 + 2 * k]]
        total = total + sign * term
    return total / (2.0 ** m)


def _perm_sign(perm) -> int:
    sign = 1
    seen = [False] * len(perm)
    for i in range(len(perm)):
        if seen[i]:
            continue
        j = i
        length = 0
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def density_ratio(model: ContactModel, factor: ConformalFactor,
                  points: np.ndarray) -> np.ndarray:
    """Jet-computed density of (factor*theta_c)^wedge over theta_c's.

    Independent of the algebraic identity factor^{m+1}; used as its
    dual-path check.
    """
    coords = seed_point(np.asarray(points, dtype=float), 1)
    base = model.base_theta(coords)
    fj = factor.eval(model, coords)
    scaled = [fj * c for c in base]
    return _top_form_coefficient(scaled) / _top_form_coefficient(base)


def _chunks(n: int, size: int = 2048):
    for start in range(0, n, size):
        yield slice(start, min(start + size, n))


def yamabe_quotient(rule: QuadratureRule, factor: ConformalFactor,
                    order: int = 4, chunk: int = 2048) -> float:
    """Y(theta) = (integral of R dv) / (volume)^{m/(m+1)} for factor*theta_c."""
    model = rule.model
    pts = rule.chart_points
    n = len(pts)
    rvals = np.empty(n)
    fvals = np.empty(n)
    for sl in _chunks(n, chunk):
        state = analyze(model, factor, pts[sl], order)
        rvals[sl] = state.scalar.value
        fvals[sl] = state.fd.factor_jet.value
    num = integrate(rule, rvals, fvals)
    vol = integrate(rule, np.ones(n), fvals)
    return num / vol ** (rule.m / (rule.m + 1.0))


# ---------------------------------------------------------------------------
# positive-function basis and the Sobolev-quotient minimizer


@dataclass
class FunctionBasis:
    """Orthonormalized polynomial restrictions; functions f = exp(c . Y).

    values[k] holds Y_k at the rule's nodes; hgrad[k, a] the complex
    derivative of Y_k along the a-th unitary frame vector.
    """

    m: int
    degree: int
    rule: QuadratureRule
    values: np.ndarray          # (K, N)
    hgrad: np.ndarray           # (K, m, N) complex

    @property
    def size(self) -> int:
        return len(self.values)

    def function(self, coeffs: np.ndarray):
        """(f, f_alpha) node samples for f = exp(sum_k coeffs_k Y_k)."""
        coeffs = np.asarray(coeffs, dtype=float)
        g = coeffs @ self.values
        f = np.exp(g)
        ga = np.einsum("k,kan->an", coeffs, self.hgrad)
        return f, f * ga


def _frame_values(model: ContactModel, pts: np.ndarray, order: int = 2):
    from .contact import ConstantFactor
    fd = unitary_frame(model, ConstantFactor(), pts, order)
    n = model.dim
    out = np.empty((model.m, n) + pts.shape[:-1], dtype=complex)
    for a in range(model.m):
        for i in range(n):
            out[a, i] = fd.frame[a][i].value
    return out


def build_basis(rule: QuadratureRule, degree: int = 4, chunk: int = 4096,
                rel_cutoff: float = 1e-9) -> FunctionBasis:
    """Quadrature-orthonormal basis of polynomial restrictions, degree <= L.

    The constant function is kept as an exact basis element; the rest are
    reduced by a weighted SVD, which discards the linear dependencies that
    restriction to the sphere creates.
    """
    m = rule.m
    model = rule.model
    pts = rule.chart_points
    nn = len(pts)
    dim = model.dim
    nreal = 2 * (m + 1)
    monos = [mu for mu in _multi_degrees(nreal, degree) if sum(mu) > 0]
    vals = np.empty((len(monos), nn))
    grads = np.empty((len(monos), m, nn), dtype=complex)
    for sl in _chunks(nn, chunk):
        coords = seed_point(pts[sl], 2)
        sph = model.sphere_coords([c.cut(1) for c in coords])
        reals = []
        for zc in sph:
            reals.append(zc.re)
            reals.append(zc.im)
        tv = _frame_values(model, pts[sl])
        for r, mu in enumerate(monos):
            p = None
            for v, e in zip(reals, mu):
                for _ in range(e):
                    p = v if p is None else p * v
            vals[r, sl] = p.value
            dp = np.stack([p.deriv(i).value for i in range(dim)])
            grads[r, :, sl.start:sl.stop] = np.einsum("ain,in->an",
                                                      tv[:, :, :], dp)
    mu_w = rule.weights * reference_density(m)
    vol = float(np.sum(mu_w))
    # exact constant element
    y0 = np.full(nn, 1.0 / np.sqrt(vol))
    means = (vals * mu_w) @ np.ones(nn) / vol
    centered = vals - means[:, None]
    a = centered * np.sqrt(mu_w)
    u, s, _ = np.linalg.svd(a, full_matrices=False)
    keep = s > rel_cutoff * s[0]
    transform = (u[:, keep] / s[keep]).T       # (K-1, n_monos)
    yv = np.concatenate([y0[None, :], transform @ centered], axis=0)
    yg = np.concatenate([np.zeros((1, m, nn), dtype=complex),
                         np.einsum("kr,ran->kan", transform, grads)], axis=0)
    return FunctionBasis(m=m, degree=degree, rule=rule, values=yv, hgrad=yg)


def _multi_degrees(nvars: int, total: int):
    if nvars == 0:
        yield ()
        return
    for head in range(total + 1):
        for rest in _multi_degrees(nvars - 1, total - head):
            yield (head,) + rest


def sobolev_energy(rule: QuadratureRule, f: np.ndarray,
                   fgrad: np.ndarray):
    """(E, N): the quadratic energy and the critical-power norm integral."""
    m = rule.m
    bcoef = 2.0 * (m + 1.0) / m
    acoef = m * (m + 1.0) / 2.0
    grad2 = 2.0 * np.sum(np.abs(fgrad) ** 2, axis=0)
    energy = integrate(rule, bcoef * grad2 + acoef * f ** 2)
    p = 2.0 * (m + 1.0) / m
    norm = integrate(rule, np.abs(f) ** p)
    return energy, norm


def sobolev_gap(rule: QuadratureRule, f: np.ndarray,
                fgrad: np.ndarray) -> float:
    """LHS - RHS of the sharp Sobolev inequality; >= 0 up to quadrature."""
    m = rule.m
    energy, norm = sobolev_energy(rule, f, fgrad)
    return energy - sharp_constant(m) * norm ** (m / (m + 1.0))


def _quotient_and_grad(basis: FunctionBasis, coeffs: np.ndarray):
    rule = basis.rule
    m = rule.m
    bcoef = 2.0 * (m + 1.0) / m
    acoef = m * (m + 1.0) / 2.0
    p = 2.0 * (m + 1.0) / m
    f, fa = basis.function(coeffs)
    mu = rule.weights * reference_density(m)
    grad2 = 2.0 * np.sum(np.abs(fa) ** 2, axis=0)
    energy = float(np.sum(mu * (bcoef * grad2 + acoef * f ** 2)))
    norm = float(np.sum(mu * f ** p))
    # dE/dc_k and dN/dc_k with df/dc_k = f Y_k
    cross = 4.0 * np.real(np.einsum("an,kan->kn", np.conj(fa), basis.hgrad))
    de = (basis.values * (mu * (2.0 * bcoef * grad2 + 2.0 * acoef * f ** 2))
          ).sum(axis=1) + (cross * (mu * f * bcoef)).sum(axis=1)
    dn = p * (basis.values * (mu * f ** p)).sum(axis=1)
    q = energy * norm ** (-2.0 / p)
    dq = de * norm ** (-2.0 / p) - (2.0 / p) * energy * norm ** (
        -2.0 / p - 1.0) * dn
    return q, dq, energy, norm


@dataclass
class OptimizerConfig:
    max_iter: int = 300
    step0: float = 0.2
    backtrack: float = 0.5
    max_backtracks: int = 40
    grad_tol: float = 1e-9
    grad_selftest: bool = True
    selftest_rtol: float = 1e-5


def minimize_yamabe(basis: FunctionBasis, coeffs0: Optional[np.ndarray] = None,
                    config: Optional[OptimizerConfig] = None, seed: int = 0,
                    start_scale: float = 0.0):
    """Projected gradient descent on the Sobolev quotient.

    The exponential parameterization keeps iterates positive; after each
    accepted step the critical-power norm is re-fixed by adjusting the
    constant component (an exact projection because the quotient is
    scale-invariant).  Returns (coefficients, value, trace).
    """
    config = config or OptimizerConfig()
    rule = basis.rule
    if coeffs0 is None:
        rng = np.random.default_rng(seed)
        coeffs0 = np.zeros(basis.size)
        if start_scale > 0.0:
            coeffs0[1:] = start_scale * rng.normal(size=basis.size - 1)
    c = np.asarray(coeffs0, dtype=float).copy()
    p = 2.0 * (rule.m + 1.0) / rule.m
    y0 = basis.values[0, 0]          # constant element's value

    def project(cc, target):
        _, _, _, norm = _quotient_and_grad(basis, cc)
        cc = cc.copy()
        cc[0] -= np.log(norm / target) / (p * y0)
        return cc

    _, _, _, norm0 = _quotient_and_grad(basis, c)
    target = norm0
    if config.grad_selftest:
        _gradient_selftest(basis, c, config.selftest_rtol)
    q, dq, _, _ = _quotient_and_grad(basis, c)
    trace = [{"iter": 0, "value": q, "grad_norm": float(np.linalg.norm(dq)),
              "step": 0.0}]
    step = config.step0
    converged = float(np.linalg.norm(dq)) <= config.grad_tol
    for it in range(1, config.max_iter + 1):
        if converged:
            break
        accepted = False
        for _ in range(config.max_backtracks):
            cand = project(c - step * dq, target)
            qc, dqc, _, _ = _quotient_and_grad(basis, cand)
            if qc < q:
                c, q, dq = cand, qc, dqc
                accepted = True
                break
            step *= config.backtrack
        trace.append({"iter": it, "value": q,
                      "grad_norm": float(np.linalg.norm(dq)),
                      "step": step if accepted else 0.0})
        if not accepted or float(np.linalg.norm(dq)) <= config.grad_tol:
            converged = True
        step = min(step * 2.0, config.step0)
    return c, q, trace


def _gradient_selftest(basis: FunctionBasis, coeffs: np.ndarray,
                       rtol: float, h: float = 1e-6, ncheck: int = 5):
    """Mandatory finite-difference check of the analytic gradient."""
    q0, dq, _, _ = _quotient_and_grad(basis, coeffs)
    rng = np.random.default_rng(12345)
    probe = coeffs + 0.05 * rng.normal(size=len(coeffs))
    q0, dq, _, _ = _quotient_and_grad(basis, probe)
    idx = rng.choice(len(coeffs), size=min(ncheck, len(coeffs)),
                     replace=False)
    scale = max(abs(q0), 1.0)
    for k in idx:
        e = np.zeros(len(coeffs))
        e[k] = h
        qp, _, _, _ = _quotient_and_grad(basis, probe + e)
        qm, _, _, _ = _quotient_and_grad(basis, probe - e)
        fd = (qp - qm) / (2.0 * h)
        if abs(fd - dq[k]) > rtol * max(abs(fd), abs(dq[k]), scale * 1e-6):
            raise RuntimeError(
                f"gradient self-test failed at component {k}: "
                f"analytic {dq[k]:.10g} vs finite-difference {fd:.10g}")


# ---------------------------------------------------------------------------
# extremal-family recovery


@dataclass
class FamilyFit:
    c: float
    t: float
    xi: np.ndarray
    xi_free: bool
    residual: float          # relative, on 1/phi
    in_family: bool


def fit_family(rule: QuadratureRule, phi: np.ndarray,
               threshold: float = 1e-2) -> FamilyFit:
    """Weighted least-squares fit of phi to c |cosh t + sinh t z.xi-|^-2.

    The reciprocal 1/phi is an affine-plus-Hermitian-quadratic function of
    the sphere coordinates, so the fit is a linear solve followed by a
    rank-one eigen-extraction; the restriction-to-sphere gauge freedom is
    fixed by shifting the quadratic part to be positive semidefinite with
    least eigenvalue zero.
    """
    z = rule.nodes
    nn, mm1 = z.shape
    target = 1.0 / np.asarray(phi)
    cols = [np.ones(nn)]
    for j in range(mm1):
        cols.append(z[:, j].real)
        cols.append(z[:, j].imag)
    pairs = []
    for j in range(mm1):
        for k in range(j + 1, mm1):
            pairs.append((j, k))
            zjk = z[:, j] * np.conj(z[:, k])
            cols.append(zjk.real)
            cols.append(zjk.imag)
    for j in range(mm1):
        cols.append(np.abs(z[:, j]) ** 2)
    design = np.stack(cols, axis=1)
    sw = np.sqrt(rule.weights)
    sol, *_ = np.linalg.lstsq(design * sw[:, None], target * sw, rcond=None)
    alpha = sol[0]
    v = sol[1:1 + 2 * mm1:2] + 1j * sol[2:2 + 2 * mm1:2]
    gam = np.zeros((mm1, mm1), dtype=complex)
    off = 1 + 2 * mm1
    for idx, (j, k) in enumerate(pairs):
        gam[j, k] = 0.5 * (sol[off + 2 * idx] + 1j * sol[off + 2 * idx + 1])
        gam[k, j] = np.conj(gam[j, k])
    for j in range(mm1):
        gam[j, j] = sol[off + 2 * len(pairs) + j]
    evals, evecs = np.linalg.eigh(gam)
    # fix the on-sphere gauge: quadratic part PSD with zero least eigenvalue
    alpha = alpha + evals[0]
    evals = evals - evals[0]
    r = evals[-1]
    e = evecs[:, -1]
    pcoef = alpha
    if pcoef <= 0 or pcoef - r <= 0:
        return FamilyFit(c=np.nan, t=np.nan, xi=np.full(mm1, np.nan),
                         xi_free=False, residual=np.inf, in_family=False)
    cval = 1.0 / (pcoef - r)
    ratio = min(max(r / pcoef, 0.0), 1.0 - 1e-15)
    tval = float(np.arctanh(np.sqrt(ratio)))
    xi_free = tval < 1e-6
    inner = np.vdot(e, v)
    if abs(inner) > 1e-12:
        xi = e * (inner / abs(inner))
    else:
        xi = e
    # reconstruction residual in the reciprocal
    w = np.cosh(tval) + np.sinh(tval) * (z @ np.conj(xi))
    recon = np.abs(w) ** 2 / cval
    num = np.sqrt(np.sum(rule.weights * (recon - target) ** 2))
    den = np.sqrt(np.sum(rule.weights * target ** 2))
    residual = float(num / den)
    return FamilyFit(c=float(cval), t=tval, xi=xi, xi_free=xi_free,
                     residual=residual, in_family=residual <= threshold)
