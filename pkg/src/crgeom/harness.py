"""Verification harness: run configs, check suites, deterministic reports.

A suite is a named list of checks; each check evaluates residuals of a
stated geometric fact over a configured point set or quadrature rule and
records max/mean residual against a tolerance.  Reports serialize to JSON
(round-trippable, 17 significant digits, no timestamps) or to a CSV
summary; two runs with the same config produce byte-identical output,
including when point batches are processed by a worker pool.
"""

from __future__ import annotations

import multiprocessing
import sys
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import adapted
from . import conformal
from . import jerison_lee as jl
from . import yamabe as ym
from .contact import (ConformalFactor, ConstantFactor, ContactModel,
                      JLFamilyFactor, RandomTrigFactor, SphereSmoothFactor,
                      heisenberg, sample_points, sphere_cayley)
from .engine import (TensorField, analyze, apply_vector, bianchi_residual,
                     classify, cov_deriv, cov_deriv_torsion, cov_derivs)
from .jets import CJet, seed_point

__all__ = [
    "ConfigError",
    "RunConfig",
    "CheckRecord",
    "VerificationReport",
    "SUITES",
    "parse_factor",
    "run_check_suite",
    "emit_report",
    "report_to_json",
    "report_from_json",
    "report_to_csv",
    "run_optimize",
]

SUITES = ("transform", "jerison-lee", "appendix", "yamabe", "all")

PACKAGE_VERSION = "0.1.0"


class ConfigError(ValueError):
    """Invalid run configuration or factor descriptor."""


# --------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class RunConfig:
    """Everything a suite run depends on; JSON-serializable and flat."""

    model: str = "sphere"              # "sphere" or "heisenberg"
    m: int = 1                         # CR dimension, 1..3
    factor: str = "jl:t=0.7"           # factor descriptor, see parse_factor
    jet_order: int = 4
    points: int = 50
    seed: int = 0
    tol: Dict[str, float] = field(default_factory=dict)
    quad_radial: int = 16
    quad_angle: int = 32
    mc_count: int = 200_000
    basis_degree: int = 4
    law_factors: int = 3               # seeded factors for transformation laws
    opt_starts: int = 1
    opt_max_iter: int = 300
    workers: int = 1

    def validate(self) -> None:
        if self.model not in ("sphere", "heisenberg"):
            raise ConfigError(f"unknown model {self.model!r}")
        if self.m not in (1, 2, 3):
            raise ConfigError(f"m must be 1, 2 or 3, got {self.m}")
        if self.jet_order < 4:
            raise ConfigError("jet order must be at least 4 for curvature")
        if self.points < 1:
            raise ConfigError("point count must be positive")
        if self.quad_radial < 2 or self.quad_angle < 4:
            raise ConfigError("quadrature resolution too small")
        if self.workers < 1:
            raise ConfigError("workers must be positive")
        if self.opt_starts < 1 or self.opt_max_iter < 1:
            raise ConfigError("optimizer settings must be positive")
        if self.basis_degree < 1:
            raise ConfigError("basis degree must be positive")
        for key, val in self.tol.items():
            if not isinstance(val, (int, float)) or val < 0:
                raise ConfigError(f"tolerance override {key!r} must be >= 0")
        parse_factor(self.factor, self.m)   # raises ConfigError if malformed

    def build_model(self) -> ContactModel:
        if self.model == "sphere":
            return sphere_cayley(self.m)
        return heisenberg(self.m)

    def build_factor(self) -> ConformalFactor:
        return parse_factor(self.factor, self.m)

    def tolerance(self, check_id: str) -> float:
        return float(self.tol.get(check_id, DEFAULT_TOLS[check_id]))


def parse_factor(spec: str, m: int) -> ConformalFactor:
    """Build a conformal factor from a descriptor string.

    Forms:
      "const" or "const:2.5"                      constant factor
      "jl:t=0.7[,c=1.2][,xi=0][,xiseed=3]"        extremal-family member;
          without c= the member is rescaled to the reference scalar value;
          xi= picks a coordinate axis, xiseed= a seeded random unit vector
      "trig:seed=0[,amplitude=0.2][,nterms=3]"    seeded trig perturbation
      "smooth:seed=0[,amplitude=0.2]"             seeded quadratic in the
          Cayley-image coordinates, smooth across the chart's singular locus
    """
    name, _, rest = spec.partition(":")
    kv: Dict[str, str] = {}
    bare = None
    if rest:
        for part in rest.split(","):
            key, eq, val = part.partition("=")
            if eq:
                kv[key.strip()] = val.strip()
            elif bare is None:
                bare = part.strip()
            else:
                raise ConfigError(f"malformed factor descriptor {spec!r}")
    try:
        if name == "const":
            return ConstantFactor(float(kv.get("value", bare or "1.0")))
        if name == "jl":
            t = float(kv.get("t", bare or "0.7"))
            xi = _parse_xi(kv, m)
            if "c" in kv:
                return JLFamilyFactor(c=float(kv["c"]), t=t, xi=xi)
            return jl.normalized_family(m, t, xi=xi)
        if name == "trig":
            return RandomTrigFactor(seed=int(kv.get("seed", bare or "0")),
                                    amplitude=float(kv.get("amplitude",
                                                           "0.2")),
                                    nterms=int(kv.get("nterms", "3")))
        if name == "smooth":
            return SphereSmoothFactor(seed=int(kv.get("seed", bare or "0")),
                                      amplitude=float(kv.get("amplitude",
                                                             "0.2")))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"malformed factor descriptor {spec!r}: {exc}")
    raise ConfigError(f"unknown factor kind {name!r}")


def _parse_xi(kv: Dict[str, str], m: int):
    if "xi" in kv:
        axis = int(kv["xi"])
        if not 0 <= axis <= m:
            raise ConfigError(f"xi axis {axis} out of range for m={m}")
        vec = np.zeros(m + 1, dtype=complex)
        vec[axis] = 1.0
        return tuple(vec)
    if "xiseed" in kv:
        rng = np.random.default_rng(int(kv["xiseed"]))
        vec = rng.normal(size=m + 1) + 1j * rng.normal(size=m + 1)
        vec = vec / np.linalg.norm(vec)
        return tuple(vec)
    return None


# --------------------------------------------------------------------------
# records and reports


@dataclass(frozen=True)
class CheckRecord:
    id: str
    anchor: str
    points: int
    max_residual: float
    mean_residual: float
    tolerance: float
    verdict: str             # "pass" | "fail" | "skipped-informational"


@dataclass
class VerificationReport:
    meta: Dict
    checks: List[CheckRecord]

    @property
    def verdict(self) -> str:
        for c in self.checks:
            if c.verdict == "fail":
                return "fail"
        return "pass"


# Plain-language statements of the facts being checked, one per check id.
ANCHORS = {
    "frame-duality": "frame and coframe pair to the identity",
    "structure-equations": "d(theta^a) = theta^b ^ w_b^a + theta ^ tau^a "
                           "holds for the solved connection",
    "frame-unitarity": "the connection matrix satisfies w_b^a + conj(w_a^b) "
                       "= d(log Levi form) = 0 in the unitary frame",
    "torsion-symmetry": "the torsion tensor A_ab is symmetric",
    "sphere-ricci": "the round CR sphere has Ricci = ((m+1)/2) * identity",
    "sphere-scalar": "the round CR sphere has scalar curvature m(m+1)/2",
    "commutation": "phi_{a b-} - phi_{b- a} = i delta_ab phi_0 for scalars",
    "contracted-bianchi": "the contracted Bianchi identity relating the "
                          "divergence of the trace-free Ricci tensor to the "
                          "scalar gradient and the torsion divergence",
    "reeb-scalar-identity": "the Reeb derivative of the scalar curvature "
                            "equals 2 Re of the double torsion divergence",
    "fd-factor-gradient": "frame derivatives of the conformal factor match "
                          "central finite differences (relative)",
    "fd-scalar-gradient": "frame derivatives of the scalar curvature match "
                          "central finite differences (relative)",
    "scalar-law-dual-path": "the conformal scalar-curvature law checked "
                            "against a direct recomputation in the scaled "
                            "gauge",
    "torsion-law": "predicted torsion of the rescaled form matches direct "
                   "recomputation after frame transport",
    "traceless-ricci-law": "predicted trace-free Ricci of the rescaled form "
                           "matches direct recomputation",
    "scalar-law": "predicted scalar curvature of the rescaled form matches "
                  "direct recomputation",
    "jl-hypotheses": "gate: reference structure is torsion-free Einstein "
                     "with the reference scalar value, and the transformed "
                     "scalar matches it",
    "jl-rhs-nonnegative": "the divergence identity's right-hand side is a "
                          "sum of squares, hence nonnegative",
    "jl-identity": "the pointwise divergence identity for the conformal "
                   "factor holds",
    "jl-identity-integrated": "the divergence side integrates to zero "
                              "against the transformed volume form",
    "jl-expanded-divergence": "the raw divergence agrees with its expanded "
                              "closed form",
    "jl-einstein-reduction": "closed forms for torsion, trace-free Ricci, "
                             "their trace and the derived tensors under the "
                             "Einstein hypotheses",
    "jl-gradient-lemmas": "first-derivative closed forms for the derived "
                          "vector fields",
    "jl-vanishing-systems": "the first-order systems satisfied by the "
                            "factor and its logarithm once the derived "
                            "tensors vanish",
    "jl-conjugate-reeb": "the Reeb derivative of the conjugate phase "
                         "matches its closed form",
    "jl-conjugate-displays": "the four second-derivative displays for the "
                             "mean-free extremal function",
    "jl-mean-free-hessian": "the Riemannian Hessian of the mean-free "
                            "function is a multiple of the adapted metric",
    "metric-compatibility": "the oracle connection is metric-compatible",
    "levi-scale": "the horizontal scale of the adapted metric is pinned by "
                  "the mixed Hessian display",
    "endomorphism-readings": "the torsion/rotation operator signs are "
                             "pinned by the connection comparison",
    "einstein-metric": "the adapted metric of the round sphere is Einstein "
                       "with Ricci = (m/2) g",
    "connection-comparison": "Levi-Civita derivative = pseudohermitian "
                             "derivative + torsion and rotation corrections",
    "hessian-displays": "Riemannian Hessian slots in terms of "
                        "pseudohermitian second derivatives",
    "curvature-displays": "Riemannian curvature slots in terms of "
                          "pseudohermitian curvature and torsion",
    "ricci-displays": "Riemannian Ricci slots, including "
                      "Ric(T,T) = m/2 - |A|^2",
    "obata-reduction": "for the extremal family the Hessian display closes: "
                       "the phase derivative equals half the mean-free "
                       "function",
    "quadrature-volume": "the product rule reproduces the closed-form "
                         "volume of the reference contact form",
    "quadrature-oddness": "odd polynomials integrate to zero",
    "quadrature-mc-agreement": "product rule and Monte Carlo agree on a "
                               "smooth integrand (relative)",
    "volume-conformal-invariance": "the extremal family preserves the total "
                                   "volume",
    "density-dual-path": "the volume density of the rescaled form matches "
                         "the factor power law (relative)",
    "yamabe-round": "the reference quotient equals the sharp constant "
                    "(relative)",
    "yamabe-family": "every extremal family member attains the sharp "
                     "constant (relative)",
    "yamabe-scale-invariance": "the quotient is invariant under constant "
                               "rescaling",
    "sobolev-zero-at-extremals": "the sharp Sobolev gap vanishes on the "
                                 "extremal family (relative)",
    "sobolev-nonnegativity-random": "the sharp Sobolev gap is nonnegative "
                                    "on random smooth functions",
    "sobolev-positive-controls": "the gap is strictly positive away from "
                                 "the extremal family",
    "minimizer-descent": "projected gradient descent reaches the sharp "
                         "constant (relative excess)",
    "minimizer-monotonicity": "the descent trace is monotone "
                              "nonincreasing",
    "minimizer-family-fit": "the terminal minimizer lies on the extremal "
                            "family (fit residual)",
    "family-fit-exact": "the family fit recovers an exact family member",
    "family-fit-negative-control": "the family fit rejects a non-family "
                                   "profile",
}

DEFAULT_TOLS = {
    "frame-duality": 1e-9,
    "structure-equations": 1e-8,
    "frame-unitarity": 1e-9,
    "torsion-symmetry": 1e-9,
    "sphere-ricci": 1e-8,
    "sphere-scalar": 1e-8,
    "commutation": 1e-8,
    "contracted-bianchi": 1e-8,
    "reeb-scalar-identity": 1e-8,
    "fd-factor-gradient": 1e-5,
    "fd-scalar-gradient": 1e-5,
    "scalar-law-dual-path": 1e-8,
    "torsion-law": 1e-8,
    "traceless-ricci-law": 1e-8,
    "scalar-law": 1e-8,
    "jl-hypotheses": 1e-6,
    "jl-rhs-nonnegative": 1e-12,
    "jl-identity": 1e-7,
    "jl-identity-integrated": 1e-6,
    "jl-expanded-divergence": 1e-7,
    "jl-einstein-reduction": 1e-7,
    "jl-gradient-lemmas": 1e-7,
    "jl-vanishing-systems": 1e-7,
    "jl-conjugate-reeb": 1e-7,
    "jl-conjugate-displays": 1e-7,
    "jl-mean-free-hessian": 1e-7,
    "metric-compatibility": 1e-9,
    "levi-scale": 0.0,
    "endomorphism-readings": 1e-7,
    "einstein-metric": 1e-7,
    "connection-comparison": 1e-7,
    "hessian-displays": 1e-7,
    "curvature-displays": 1e-7,
    "ricci-displays": 1e-7,
    "obata-reduction": 1e-7,
    "quadrature-volume": 1e-12,
    "quadrature-oddness": 1e-12,
    "quadrature-mc-agreement": 1e-2,
    "volume-conformal-invariance": 1e-8,
    "density-dual-path": 1e-9,
    "yamabe-round": 1e-5,
    "yamabe-family": 1e-5,
    "yamabe-scale-invariance": 1e-9,
    "sobolev-zero-at-extremals": 1e-5,
    "sobolev-nonnegativity-random": 1e-6,
    "sobolev-positive-controls": 0.0,
    "minimizer-descent": 1e-3,
    "minimizer-monotonicity": 1e-12,
    "minimizer-family-fit": 1e-2,
    "family-fit-exact": 1e-8,
    "family-fit-negative-control": 0.0,
}


def _record(cfg: RunConfig, check_id: str, values, npoints: int,
            informational: bool = False) -> CheckRecord:
    arr = np.atleast_1d(np.asarray(values, dtype=float))
    mx = float(np.max(arr)) if arr.size else 0.0
    mean = float(np.mean(arr)) if arr.size else 0.0
    tol = cfg.tolerance(check_id)
    if informational:
        verdict = "skipped-informational"
    else:
        verdict = "pass" if mx <= tol else "fail"
    return CheckRecord(id=check_id, anchor=ANCHORS[check_id],
                       points=int(npoints), max_residual=mx,
                       mean_residual=mean, tolerance=tol, verdict=verdict)


def _skipped(cfg: RunConfig, check_id: str) -> CheckRecord:
    return _record(cfg, check_id, [], 0, informational=True)


# --------------------------------------------------------------------------
# worker-pool plumbing (top level so tasks pickle)


def _chunk_slices(n: int, size: int) -> List[slice]:
    return [slice(i, min(i + size, n)) for i in range(0, n, size)]


def _pool_map(fn, tasks: Sequence, workers: int) -> List:
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    ctx = multiprocessing.get_context("fork")
    with ctx.Pool(min(workers, len(tasks))) as pool:
        return pool.map(fn, tasks)


def _jl_divergence_chunk(task):
    """Per-point (|lhs - rhs|, lhs, rhs) for the divergence identity."""
    model, factor, pts, order = task
    st = analyze(model, factor, pts, order)
    cov = cov_derivs(st, factor.eval(model, st.fd.coords), depth=3)
    comps = jl.components(st, cov)
    lhs = jl.lhs_divergence_values(st, cov)
    rhs = comps.rhs()
    return np.abs(lhs - rhs), lhs, rhs


def _law_chunk(task):
    """Per-point law-vs-direct deviations for one seeded factor."""
    model, base, w_factor, pts, order = task
    vals = conformal.direct_vs_law_values(model, base, w_factor, pts, order)
    return np.stack([vals["torsion"], vals["traceless_ricci"],
                     vals["scalar"]])


# --------------------------------------------------------------------------
# shared helpers


def _factor_values_numeric(model: ContactModel, factor: ConformalFactor,
                           chart_pts: np.ndarray) -> np.ndarray:
    coords = seed_point(chart_pts, 0)
    return factor.eval(model, coords).value


def _family_mean(model: ContactModel, factor: JLFamilyFactor,
                 rule: ym.QuadratureRule) -> float:
    """Mean of e^{u/2} cos(v/2) against the transformed volume form."""
    phiv = factor.eval_numeric(model, rule.nodes)
    fv = jl.family_f_numeric(model, factor, rule.nodes)
    num = ym.integrate(rule, fv, factor_values=phiv)
    den = ym.integrate(rule, np.ones_like(fv), factor_values=phiv)
    return float(num / den)


def _fd_frame_gradient_residual(values_fn, analytic: np.ndarray,
                                frame_vals: np.ndarray, pts: np.ndarray,
                                h: float = 1e-5) -> float:
    """Relative deviation of frame derivatives from central differences.

    `values_fn(points)` returns scalar samples; `analytic` has shape
    (n_dirs, npts) and `frame_vals` (n_dirs, dim, npts).
    """
    n = pts.shape[1]
    diffs = np.empty((n, pts.shape[0]))
    for i in range(n):
        shift = np.zeros(n)
        shift[i] = h
        diffs[i] = (values_fn(pts + shift) - values_fn(pts - shift)) / (2 * h)
    fd = np.einsum("din,in->dn", frame_vals, diffs)
    return float(np.max(np.abs(analytic - fd)
                        / np.maximum(1.0, np.abs(analytic))))


# --------------------------------------------------------------------------
# suites


def _suite_transform(cfg: RunConfig, extras: Dict) -> List[CheckRecord]:
    model = cfg.build_model()
    factor = cfg.build_factor()
    pts = sample_points(model, cfg.points, cfg.seed)
    st = analyze(model, factor, pts, cfg.jet_order)
    w_jet = factor.eval(model, st.fd.coords)
    cov = cov_derivs(st, w_jet)
    out = [
        _record(cfg, "frame-duality", st.fd.duality_residual(), cfg.points),
        _record(cfg, "structure-equations", st.structure_residual(),
                cfg.points),
        _record(cfg, "frame-unitarity", st.unitarity_residual(), cfg.points),
        _record(cfg, "torsion-symmetry", st.torsion_symmetry_residual(),
                cfg.points),
    ]

    if cfg.model == "sphere":
        ref = analyze(model, ConstantFactor(1.0), pts, cfg.jet_order)
        m = cfg.m
        ric = np.stack([np.stack([ref.ricci[a][b].value for b in range(m)])
                        for a in range(m)])
        target = 0.5 * (m + 1.0) * np.eye(m)[..., None]
        out.append(_record(cfg, "sphere-ricci",
                           np.max(np.abs(ric - target), axis=(0, 1)),
                           cfg.points))
        out.append(_record(cfg, "sphere-scalar",
                           np.abs(ref.scalar.value - m * (m + 1.0) / 2.0),
                           cfg.points))
    else:
        out.append(_skipped(cfg, "sphere-ricci"))
        out.append(_skipped(cfg, "sphere-scalar"))

    out.append(_record(cfg, "commutation", cov.commutation_residual(),
                       cfg.points))
    out.append(_record(cfg, "contracted-bianchi",
                       np.abs(bianchi_residual(st)), cfg.points))

    _, _, dd = cov_deriv_torsion(st)
    r0 = apply_vector(st.directions(1)[0], CJet(st.scalar.cut(1)))
    out.append(_record(cfg, "reeb-scalar-identity",
                       np.abs(2.0 * np.real(dd.value) - np.real(r0.value)),
                       cfg.points))

    frame_vals = np.stack(
        [np.stack([v.value for v in vec]) for vec in st.directions(0)])
    phi_analytic = np.concatenate(
        [cov.d0.value[None], np.stack([cov.d1h.comps[(a,)].value
                                       for a in range(cfg.m)])])

    def phi_num(p):
        return _factor_values_numeric(model, factor, p)

    out.append(_record(
        cfg, "fd-factor-gradient",
        _fd_frame_gradient_residual(phi_num, phi_analytic,
                                    frame_vals[:cfg.m + 1], pts),
        cfg.points))

    r_tf = TensorField.scalar(CJet(st.scalar), cfg.m)
    r_analytic = np.concatenate(
        [cov_deriv(r_tf, st, "0").comps[(0,)].value[None],
         np.stack([cov_deriv(r_tf, st, "h").comps[(a,)].value
                   for a in range(cfg.m)])])

    def scal_num(p):
        return analyze(model, factor, p, cfg.jet_order).scalar.value

    out.append(_record(
        cfg, "fd-scalar-gradient",
        _fd_frame_gradient_residual(scal_num, r_analytic,
                                    frame_vals[:cfg.m + 1], pts),
        cfg.points))

    base = factor
    out.append(_record(
        cfg, "scalar-law-dual-path",
        conformal.scalar_transform_residual(
            model, base, RandomTrigFactor(seed=cfg.seed + 1), pts,
            cfg.jet_order),
        cfg.points))

    tasks = []
    slices = _chunk_slices(cfg.points, 25)
    for k in range(cfg.law_factors):
        w = RandomTrigFactor(seed=cfg.seed + 10 + k)
        for sl in slices:
            tasks.append((model, base, w, pts[sl], cfg.jet_order))
    results = _pool_map(_law_chunk, tasks, cfg.workers)
    merged = np.concatenate(results, axis=1)
    npts = cfg.points * cfg.law_factors
    out.append(_record(cfg, "torsion-law", merged[0], npts))
    out.append(_record(cfg, "traceless-ricci-law", merged[1], npts))
    out.append(_record(cfg, "scalar-law", merged[2], npts))
    return out


def _suite_jerison_lee(cfg: RunConfig, extras: Dict) -> List[CheckRecord]:
    if cfg.model != "sphere":
        raise ConfigError("the divergence-identity suite needs the sphere "
                          "model")
    model = cfg.build_model()
    factor = cfg.build_factor()
    pts = sample_points(model, cfg.points, cfg.seed)
    st = analyze(model, factor, pts, cfg.jet_order)
    ref = analyze(model, ConstantFactor(1.0), pts, cfg.jet_order)
    cov = cov_derivs(st, factor.eval(model, st.fd.coords), depth=3)

    gate_tol = cfg.tolerance("jl-hypotheses")
    gate = jl.hypotheses_ok(st, ref, tol=gate_tol)
    extras["hypotheses_satisfied"] = bool(gate)
    flags = classify(ref, gate_tol)
    target = cfg.m * (cfg.m + 1.0) / 2.0
    gate_res = max(flags["max_torsion"], flags["max_traceless_ricci"],
                   float(np.max(np.abs(st.scalar.value - target))),
                   float(np.max(np.abs(ref.scalar.value - target))))
    out = [_record(cfg, "jl-hypotheses", gate_res, cfg.points,
                   informational=not gate)]

    tasks = [(model, factor, pts[sl], cfg.jet_order)
             for sl in _chunk_slices(cfg.points, 25)]
    results = _pool_map(_jl_divergence_chunk, tasks, cfg.workers)
    resid = np.concatenate([r[0] for r in results])
    rhs = np.concatenate([r[2] for r in results])
    out.append(_record(cfg, "jl-rhs-nonnegative",
                       np.maximum(0.0, -rhs), cfg.points))
    out.append(_record(cfg, "jl-identity", resid, cfg.points,
                       informational=not gate))

    if cfg.m == 1:
        # A sphere-smooth factor keeps the integral quadrature-convergent
        # (chart-coordinate trig factors oscillate unboundedly near the
        # chart's singular circle) and makes the zero integral nontrivial:
        # for it the identity's hypotheses fail, so the divergence does not
        # vanish pointwise.
        int_factor = (factor if isinstance(factor, SphereSmoothFactor)
                      else SphereSmoothFactor(seed=cfg.seed + 3,
                                              amplitude=2.0))
        rule = ym.product_rule(cfg.quad_radial, cfg.quad_angle)
        chart = rule.chart_points
        tasks = [(model, int_factor, chart[sl], cfg.jet_order)
                 for sl in _chunk_slices(chart.shape[0], 512)]
        results = _pool_map(_jl_divergence_chunk, tasks, cfg.workers)
        lhs = np.concatenate([r[1] for r in results])
        phiv = _factor_values_numeric(model, int_factor, chart)
        total = ym.integrate(rule, lhs, factor_values=phiv)
        out.append(_record(cfg, "jl-identity-integrated", abs(total),
                           chart.shape[0]))
    else:
        out.append(_skipped(cfg, "jl-identity-integrated"))

    out.append(_record(cfg, "jl-expanded-divergence",
                       jl.lhs_expanded_residual(st, cov), cfg.points,
                       informational=not gate))
    for cid, res in (
            ("jl-einstein-reduction", jl.einstein_reduction_residuals),
            ("jl-gradient-lemmas", jl.lemma_residuals),
            ("jl-vanishing-systems", jl.vanishing_system_residuals)):
        out.append(_record(cfg, cid, max(res(st, cov).values()), cfg.points,
                           informational=not gate))

    if isinstance(factor, JLFamilyFactor):
        if cfg.m == 1:
            mean_rule = ym.product_rule(32, 64)
            c_mean = _family_mean(model, factor, mean_rule)
        else:
            c_mean = 0.0       # the displays below do not depend on it
        extras["family_mean"] = float(c_mean)
        data = jl.conjugate_and_f(model, factor, st, c_mean)
        out.append(_record(cfg, "jl-conjugate-reeb",
                           data.v0_formula_residual, cfg.points,
                           informational=not gate))
        out.append(_record(cfg, "jl-conjugate-displays",
                           max(jl.crh_residuals(data, st).values()),
                           cfg.points, informational=not gate))
        chris = adapted.christoffel_oracle(adapted.build_metric(st))
        out.append(_record(cfg, "jl-mean-free-hessian",
                           adapted.hf_residual(st, chris, data.f, data.chi),
                           cfg.points, informational=not gate))
    else:
        out.append(_skipped(cfg, "jl-conjugate-reeb"))
        out.append(_skipped(cfg, "jl-conjugate-displays"))
        out.append(_skipped(cfg, "jl-mean-free-hessian"))
    return out


def _suite_appendix(cfg: RunConfig, extras: Dict) -> List[CheckRecord]:
    model = cfg.build_model()
    pts = sample_points(model, cfg.points, cfg.seed)
    scalar_probe = RandomTrigFactor(seed=cfg.seed + 2)

    cases = []
    for fac in (ConstantFactor(1.0), RandomTrigFactor(seed=cfg.seed)):
        st = analyze(model, fac, pts, cfg.jet_order)
        chris = adapted.christoffel_oracle(adapted.build_metric(st))
        cov = cov_derivs(st, scalar_probe.eval(model, st.fd.coords))
        cases.append((st, chris, cov))

    out = [_record(cfg, "metric-compatibility",
                   [adapted.metric_compat_residual(ch) for _, ch, _ in cases],
                   cfg.points)]

    st0, chris0, cov0 = cases[0]
    scale = adapted.calibrate_levi_scale(st0, cov0)
    extras["levi_scale"] = float(scale)
    out.append(_record(cfg, "levi-scale", abs(scale - 1.0), cfg.points))

    readings = adapted.calibrate_readings([(s, ch) for s, ch, _ in cases])
    extras["torsion_sign"] = float(readings["torsion_sign"])
    extras["rotation_sign"] = float(readings["rotation_sign"])
    out.append(_record(
        cfg, "endomorphism-readings",
        [adapted.connd_residual(s, ch, readings) for s, ch, _ in cases],
        cfg.points))

    if cfg.model == "sphere":
        out.append(_record(cfg, "einstein-metric",
                           adapted.einstein_residual(chris0), cfg.points))
    else:
        out.append(_skipped(cfg, "einstein-metric"))

    out.append(_record(cfg, "connection-comparison",
                       [adapted.connd_residual(s, ch) for s, ch, _ in cases],
                       cfg.points))
    out.append(_record(cfg, "hessian-displays",
                       [max(adapted.hess_residuals(s, ch, cv).values())
                        for s, ch, cv in cases], cfg.points))
    out.append(_record(cfg, "curvature-displays",
                       [max(adapted.cuv_residuals(s, ch,
                                                  seed=cfg.seed).values())
                        for s, ch, _ in cases], cfg.points))
    out.append(_record(cfg, "ricci-displays",
                       [max(adapted.rica_residuals(s, ch,
                                                   seed=cfg.seed).values())
                        for s, ch, _ in cases], cfg.points))

    if cfg.model == "sphere" and cfg.m == 1:
        factor = cfg.build_factor()
        if not isinstance(factor, JLFamilyFactor):
            factor = jl.normalized_family(cfg.m, 0.7)
        mean_rule = ym.product_rule(32, 64)
        c_mean = _family_mean(model, factor, mean_rule)
        st = analyze(model, factor, pts, cfg.jet_order)
        data = jl.conjugate_and_f(model, factor, st, c_mean)
        phiv = factor.eval_numeric(model, mean_rule.nodes)
        fnum = jl.family_f_numeric(model, factor, mean_rule.nodes) - c_mean
        mean_u = float(ym.integrate(mean_rule, fnum, factor_values=phiv)
                       / ym.integrate(mean_rule, np.ones_like(fnum),
                                      factor_values=phiv))
        res = adapted.obata_reduction(
            u_vals=data.f.value, chi_vals=np.real(data.chi.value),
            c=np.sqrt(0.5), mean_u=mean_u,
            mean_tol=cfg.tolerance("jl-identity-integrated"))
        out.append(_record(cfg, "obata-reduction", res, cfg.points))
    else:
        out.append(_skipped(cfg, "obata-reduction"))
    return out


def _suite_yamabe(cfg: RunConfig, extras: Dict) -> List[CheckRecord]:
    if cfg.model != "sphere":
        raise ConfigError("the quotient suite needs the sphere model")
    if cfg.m != 1:
        return [_skipped(cfg, cid) for cid in (
            "quadrature-volume", "quadrature-oddness",
            "quadrature-mc-agreement", "volume-conformal-invariance",
            "density-dual-path", "yamabe-round", "yamabe-family",
            "yamabe-scale-invariance", "sobolev-zero-at-extremals",
            "sobolev-nonnegativity-random", "sobolev-positive-controls",
            "minimizer-descent", "minimizer-monotonicity",
            "minimizer-family-fit", "family-fit-exact",
            "family-fit-negative-control")]

    model = cfg.build_model()
    rule = ym.product_rule(cfg.quad_radial, cfg.quad_angle)
    nn = rule.nodes.shape[0]
    vol = ym.integrate(rule, np.ones(nn))
    target = ym.reference_density(1) * ym.euclidean_volume(1)
    out = [_record(cfg, "quadrature-volume", abs(vol / target - 1.0), nn)]
    out.append(_record(cfg, "quadrature-oddness",
                       abs(ym.integrate(rule, rule.nodes[:, 0].real)
                           / target), nn))

    family = jl.normalized_family(1, 0.5)
    phiv = family.eval_numeric(model, rule.nodes)
    smooth = phiv ** 2
    mc = ym.monte_carlo_rule(1, cfg.mc_count, seed=cfg.seed)
    mcv = family.eval_numeric(model, mc.nodes) ** 2
    ivol = ym.integrate(rule, smooth)
    out.append(_record(cfg, "quadrature-mc-agreement",
                       abs(ym.integrate(mc, mcv) / ivol - 1.0),
                       cfg.mc_count))
    out.append(_record(cfg, "volume-conformal-invariance",
                       abs(ym.integrate(rule, np.ones(nn),
                                        factor_values=phiv) / target - 1.0),
                       nn))

    sub = rule.chart_points[::max(1, nn // 64)]
    subn = rule.nodes[::max(1, nn // 64)]
    ratio = ym.density_ratio(model, family, sub)
    out.append(_record(cfg, "density-dual-path",
                       np.abs(ratio / family.eval_numeric(model, subn) ** 2
                              - 1.0), sub.shape[0]))

    sharp = ym.sharp_constant(1)
    q0 = ym.yamabe_quotient(rule, ConstantFactor(1.0), order=cfg.jet_order)
    out.append(_record(cfg, "yamabe-round", abs(q0 / sharp - 1.0), nn))
    qf = ym.yamabe_quotient(rule, family, order=cfg.jet_order)
    out.append(_record(cfg, "yamabe-family", abs(qf / sharp - 1.0), nn))
    qs = ym.yamabe_quotient(rule, ConstantFactor(3.7), order=cfg.jet_order)
    out.append(_record(cfg, "yamabe-scale-invariance", abs(qs - q0), nn))

    basis = ym.build_basis(rule, cfg.basis_degree)
    extras["basis_size"] = basis.size
    extras["sharp_constant"] = float(sharp)

    ext = []
    for k, (t, xiseed) in enumerate(((0.0, None), (0.3, 0), (0.45, 1),
                                     (0.6, 2), (0.7, 3))):
        xi = None
        if xiseed is not None:
            rng = np.random.default_rng(xiseed)
            v = rng.normal(size=2) + 1j * rng.normal(size=2)
            xi = tuple(v / np.linalg.norm(v))
        fac = jl.normalized_family(1, t, xi=xi)
        fv, grad = _sphere_sqrt_factor(model, fac, rule)
        en, _ = ym.sobolev_energy(rule, fv, grad)
        ext.append(abs(ym.sobolev_gap(rule, fv, grad)) / en)
    out.append(_record(cfg, "sobolev-zero-at-extremals", ext, 5 * nn))

    rng = np.random.default_rng(cfg.seed)
    worst = 0.0
    for _ in range(200):
        c = rng.normal(size=basis.size) * 0.3 / np.sqrt(basis.size)
        f, grad = basis.function(c)
        f = f + 1.0      # keep samples away from the zero function
        worst = max(worst, -ym.sobolev_gap(rule, f, grad))
    out.append(_record(cfg, "sobolev-nonnegativity-random", max(0.0, worst),
                       200 * nn))

    gaps = []
    for j in range(5):
        c = np.zeros(basis.size)
        c[0] = 1.0
        c[1 + j] = 0.15
        f, grad = basis.function(c)
        gaps.append(ym.sobolev_gap(rule, f, grad))
    floor = 10.0 * cfg.tolerance("sobolev-nonnegativity-random")
    out.append(_record(cfg, "sobolev-positive-controls",
                       [max(0.0, floor - g) for g in gaps], 5 * nn))
    extras["control_gaps"] = [float(g) for g in gaps]

    opt = ym.OptimizerConfig(max_iter=cfg.opt_max_iter)
    best = None
    mono = 0.0
    for s in range(cfg.opt_starts):
        c, q, trace = ym.minimize_yamabe(basis, config=opt,
                                         seed=cfg.seed + s,
                                         start_scale=0.3)
        vals = [step["value"] for step in trace]
        if len(vals) > 1:
            mono = max(mono, float(np.max(np.diff(vals))))
        if best is None or q < best[1]:
            best = (c, q, vals)
    extras["minimizer_value"] = float(best[1])
    extras["minimizer_trace"] = [float(v) for v in best[2]]
    out.append(_record(cfg, "minimizer-descent",
                       max(0.0, best[1] / sharp - 1.0), nn))
    out.append(_record(cfg, "minimizer-monotonicity", max(0.0, mono), nn))

    f_term, _ = basis.function(best[0])
    fit = ym.fit_family(rule, f_term ** 2)
    extras["fit_scale"] = float(fit.c)
    extras["fit_parameter"] = float(fit.t)
    out.append(_record(cfg, "minimizer-family-fit", fit.residual, nn))

    fit_exact = ym.fit_family(rule, phiv)
    out.append(_record(cfg, "family-fit-exact", fit_exact.residual, nn))
    bump = np.exp(0.3 * np.sin(3.0 * rule.nodes[:, 0].real)
                  * np.cos(2.0 * rule.nodes[:, 1].imag))
    fit_neg = ym.fit_family(rule, bump)
    out.append(_record(cfg, "family-fit-negative-control",
                       1.0 if fit_neg.in_family else 0.0, nn))
    return out


def _sphere_sqrt_factor(model: ContactModel, factor: ConformalFactor,
                        rule: ym.QuadratureRule):
    """Node samples and horizontal frame gradient of factor^{1/2}."""
    chart = rule.chart_points
    frames = ym._frame_values(model, chart)
    coords = seed_point(chart, 2)
    fj = factor.eval(model, [c.cut(1) for c in coords])
    vals = np.sqrt(fj.value)
    dp = np.stack([fj.deriv(i).value for i in range(chart.shape[1])])
    grad = np.einsum("ain,in->an", frames, dp) * (0.5 / vals)
    return vals, grad


_SUITE_FNS = {
    "transform": _suite_transform,
    "jerison-lee": _suite_jerison_lee,
    "appendix": _suite_appendix,
    "yamabe": _suite_yamabe,
}

SUITE_ORDER = ("transform", "jerison-lee", "appendix", "yamabe")


def run_check_suite(config: RunConfig, suite: str) -> VerificationReport:
    """Run one suite (or "all") and return its report."""
    if suite not in SUITES:
        raise ConfigError(f"unknown suite {suite!r}")
    config.validate()
    names = SUITE_ORDER if suite == "all" else (suite,)
    extras: Dict = {}
    checks: List[CheckRecord] = []
    for name in names:
        checks.extend(_SUITE_FNS[name](config, extras))
    meta = {
        "suite": suite,
        "config": _config_dict(config),
        "versions": {
            "python": ".".join(str(v) for v in sys.version_info[:3]),
            "numpy": np.__version__,
            "crgeom": PACKAGE_VERSION,
        },
        "extras": extras,
    }
    return VerificationReport(meta=meta, checks=checks)


def _config_dict(cfg: RunConfig) -> Dict:
    return {
        "model": cfg.model, "m": cfg.m, "factor": cfg.factor,
        "jet_order": cfg.jet_order, "points": cfg.points, "seed": cfg.seed,
        "tol": {k: float(v) for k, v in sorted(cfg.tol.items())},
        "quad_radial": cfg.quad_radial, "quad_angle": cfg.quad_angle,
        "mc_count": cfg.mc_count, "basis_degree": cfg.basis_degree,
        "law_factors": cfg.law_factors, "opt_starts": cfg.opt_starts,
        "opt_max_iter": cfg.opt_max_iter, "workers": cfg.workers,
    }


def config_from_dict(data: Dict) -> RunConfig:
    cfg = RunConfig()
    known = set(_config_dict(cfg))
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    return replace(cfg, **data)


# --------------------------------------------------------------------------
# optimizer entry point (CLI "optimize")


def run_optimize(config: RunConfig) -> Dict:
    """Run the quotient minimizer from several starts; returns a summary."""
    config.validate()
    if config.model != "sphere" or config.m != 1:
        raise ConfigError("the optimizer runs on the sphere model with m=1")
    rule = ym.product_rule(config.quad_radial, config.quad_angle)
    basis = ym.build_basis(rule, config.basis_degree)
    opt = ym.OptimizerConfig(max_iter=config.opt_max_iter)
    sharp = ym.sharp_constant(1)
    starts = []
    best = None
    for s in range(config.opt_starts):
        c, q, trace = ym.minimize_yamabe(basis, config=opt,
                                         seed=config.seed + s,
                                         start_scale=0.3)
        f_term, _ = basis.function(c)
        fit = ym.fit_family(rule, f_term ** 2)
        starts.append({
            "seed": config.seed + s,
            "value": float(q),
            "relative_excess": float(q / sharp - 1.0),
            "iterations": len(trace),
            "fit_residual": float(fit.residual),
            "fit_scale": float(fit.c),
            "fit_parameter": float(fit.t),
            "in_family": bool(fit.in_family),
        })
        if best is None or q < best:
            best = float(q)
    return {
        "sharp_constant": float(sharp),
        "basis_size": basis.size,
        "starts": starts,
        "best_value": best,
        "success": bool(best <= sharp * (1.0 + 1e-3)),
    }


# --------------------------------------------------------------------------
# serialization (byte-deterministic)


def _dump_json(obj, indent: int = 0) -> str:
    pad = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f'{pad}  "{k}": {_dump_json(v, indent + 1)}'
                 for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [f"{pad}  {_dump_json(v, indent + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, float):
        if not np.isfinite(obj):
            raise ValueError("reports must contain only finite numbers")
        return format(obj, ".17g")
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, str):
        import json as _json
        return _json.dumps(obj)
    if obj is None:
        return "null"
    raise TypeError(f"cannot serialize {type(obj)!r}")


def _report_dict(report: VerificationReport) -> Dict:
    return {
        "meta": report.meta,
        "checks": [{
            "id": c.id, "anchor": c.anchor, "points": c.points,
            "max_residual": c.max_residual,
            "mean_residual": c.mean_residual,
            "tolerance": c.tolerance, "verdict": c.verdict,
        } for c in report.checks],
        "verdict": report.verdict,
    }


def report_to_json(report: VerificationReport) -> str:
    return _dump_json(_report_dict(report)) + "\n"


def report_from_json(text: str) -> VerificationReport:
    import json as _json
    data = _json.loads(text)
    checks = [CheckRecord(id=c["id"], anchor=c["anchor"],
                          points=int(c["points"]),
                          max_residual=float(c["max_residual"]),
                          mean_residual=float(c["mean_residual"]),
                          tolerance=float(c["tolerance"]),
                          verdict=c["verdict"])
              for c in data["checks"]]
    return VerificationReport(meta=data["meta"], checks=checks)


def report_to_csv(report: VerificationReport) -> str:
    lines = ["id,points,max_residual,mean_residual,tolerance,verdict"]
    for c in report.checks:
        lines.append(",".join([
            c.id, str(c.points), format(c.max_residual, ".17g"),
            format(c.mean_residual, ".17g"), format(c.tolerance, ".17g"),
            c.verdict]))
    lines.append(f"overall,,,,,{report.verdict}")
    return "\n".join(lines) + "\n"


def emit_report(report: VerificationReport, path: Optional[str],
                fmt: str = "json") -> str:
    """Serialize a report; write to `path` when given, return the text."""
    if fmt == "json":
        text = report_to_json(report)
    elif fmt == "csv-summary":
        text = report_to_csv(report)
    else:
        raise ConfigError(f"unknown report format {fmt!r}")
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    return text
