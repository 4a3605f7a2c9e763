"""Conformal change of contact form and the induced curvature laws.

For a positive factor w the rescaled form tw = w^{-1} * theta has torsion,
trace-free Ricci and scalar curvature expressible through covariant
derivatives of w taken with respect to theta's own connection:

    A~_{ab}   = A_{ab} - i w^{-1} w_{a,b}
    B~_{ab-}  = B_{ab-} + (m+2)(w^{-1} w_{a,b-} - w^{-2} w_a w_b-)
                - ((m+2)/m)(w^{-1} sum_g w_{g,g-} - w^{-2}|dw|^2) delta_{ab}
    R~        = w R + (m+1) Lap_b w - (m+1)(m+2) w^{-1} |dw|^2

with components relative to theta's unitary frame.  The scalar law is also
available in the f-convention tw = f^{2/m} theta:

    -(2(m+1)/m) Lap_b f + R f = R~ f^{(m+2)/m}.

The coefficient of the |dw|^2 term in the R~ law is the one forced by
consistency with the f-convention law and the trace of the B~ law; the
dual-path tests below adjudicate it numerically.

Every predicted law can be cross-checked against a direct recomputation on
tw by the engine, with the change of unitary frame between the two gauges
solved for (never assumed) at each point.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List

import numpy as np

from .contact import (ConformalFactor, ContactModel, ExprFactor, PowerFactor,
                      RatioFactor, unitary_frame)
from .engine import CJet, CovJet, PHState, analyze, cov_derivs
from .jets import Jet, jet_pow

__all__ = [
    "TransformedInvariants",
    "transform_invariants",
    "scalar_transform_residual",
    "frame_transport",
    "direct_vs_law_residual",
    "direct_vs_law_values",
]


@dataclass
class TransformedInvariants:
    """Predicted invariants of w^{-1}*theta in theta's unitary frame."""

    torsion: List[List[CJet]]
    traceless: List[List[CJet]]
    scalar: Jet


def transform_invariants(state: PHState, cov: CovJet) -> TransformedInvariants:
    """Predict (A~, B~, R~) of (factor)^{-1} * theta from theta-side data."""
    m = state.m
    if np.any(cov.phi.value <= 0):
        raise ValueError("conformal factor must be positive")
    k = min(cov.d2hh.order, state.traceless[0][0].order)
    winv = cov.phi.cut(k).reciprocal()
    wc = CJet(winv)
    g2 = cov.grad2().cut(k)
    tors = [[state.torsion[a][b].cut(k)
             - 1j * wc * cov.d2hh.comps[(a, b)].cut(k)
             for b in range(m)] for a in range(m)]
    trace_part = None
    for g in range(m):
        t = wc * cov.d2ha.comps[(g, g)].cut(k)
        trace_part = t if trace_part is None else trace_part + t
    trace_part = trace_part - CJet(winv * winv * g2)
    btl = []
    for a in range(m):
        row = []
        for b in range(m):
            t = state.traceless[a][b].cut(k)
            t = t + (m + 2.0) * (wc * cov.d2ha.comps[(a, b)].cut(k)
                                 - CJet(winv * winv)
                                 * cov.d1h.comps[(a,)].cut(k)
                                 * cov.d1h.comps[(b,)].conj().cut(k))
            if a == b:
                t = t - ((m + 2.0) / m) * trace_part
            row.append(t)
        btl.append(row)
    scal = (cov.phi.cut(k) * state.scalar.cut(k)
            + (m + 1.0) * cov.sublaplacian().cut(k)
            - (m + 1.0) * (m + 2.0) * winv * g2)
    return TransformedInvariants(torsion=tors, traceless=btl, scalar=scal)


def scalar_transform_residual(model: ContactModel, base: ConformalFactor,
                              f_factor: ConformalFactor, points: np.ndarray,
                              order: int = 4) -> float:
    """Residual of the scalar law for tw = f^{2/m} * theta, both paths."""
    m = model.m
    state = analyze(model, base, points, order)
    f_jet = f_factor.eval(model, state.fd.coords)
    if np.any(f_jet.value <= 0):
        raise ValueError("f must be positive")
    cov = cov_derivs(state, f_jet)
    tilde = ExprFactor(
        fn=lambda mo, co: base.eval(mo, co) * jet_pow(f_factor.eval(mo, co),
                                                      2.0 / m),
        label="scaled")
    state_t = analyze(model, tilde, points, order)
    fv = f_jet.value
    lhs = (-(2.0 * (m + 1.0) / m) * cov.sublaplacian().value
           + state.scalar.value * fv)
    rhs = state_t.scalar.value * fv ** ((m + 2.0) / m)
    return float(np.max(np.abs(lhs - rhs)))


def frame_transport(state: PHState, state_t: PHState, w_jet: Jet) -> np.ndarray:
    """Unitary matrix M with T~_a = w^{1/2} sum_b M[a,b] T_b (point values).

    Solved from coframe pairings; a non-unitary result signals an
    inconsistent gauge and raises.
    """
    m = state.m
    n = state.fd.model.dim
    k = state_t.fd.order
    ws = np.sqrt(w_jet.value)
    batch = state.scalar.batch_shape
    M = np.zeros(batch + (m, m), dtype=complex)
    for a in range(m):
        for b in range(m):
            s = None
            for i in range(n):
                t = (state.fd.coframe[b][i].cut(k)
                     * state_t.fd.frame[a][i]).value
                s = t if s is None else s + t
            M[..., a, b] = s / ws
    err = np.max(np.abs(M @ np.conj(np.swapaxes(M, -1, -2))
                        - np.eye(m)))
    if err > 1e-8:
        raise RuntimeError(f"frame transport is not unitary (residual {err:g})")
    return M


def direct_vs_law_values(model: ContactModel, base: ConformalFactor,
                         w_factor: ConformalFactor, points: np.ndarray,
                         order: int = 4) -> dict:
    """Per-point deviation between predicted and directly computed invariants.

    The direct path computes the engine on tw = w^{-1} * theta and maps
    components back to theta's frame through the computed transport matrix;
    tensors pick up one factor of w per frame vector.
    """
    m = model.m
    state = analyze(model, base, points, order)
    w_jet = w_factor.eval(model, state.fd.coords)
    cov = cov_derivs(state, w_jet)
    pred = transform_invariants(state, cov)
    state_t = analyze(model, RatioFactor(base, w_factor), points, order)
    M = frame_transport(state, state_t, w_jet)
    wv = w_jet.value

    def grab(tensor):
        return np.stack([np.stack([tensor[a][b].value for b in range(m)],
                                  axis=-1) for a in range(m)], axis=-2)

    a_direct = grab(state_t.torsion)          # components in the tilde frame
    b_direct = grab(state_t.traceless)
    a_pred = np.einsum("...ac,...bd,...cd->...ab", M, M,
                       grab(pred.torsion)) * wv[..., None, None]
    b_pred = np.einsum("...ac,...bd,...cd->...ab", M, np.conj(M),
                       grab(pred.traceless)) * wv[..., None, None]
    return {
        "torsion": np.max(np.abs(a_direct - a_pred), axis=(-1, -2)),
        "traceless_ricci": np.max(np.abs(b_direct - b_pred), axis=(-1, -2)),
        "scalar": np.abs(state_t.scalar.value - pred.scalar.value),
    }


def direct_vs_law_residual(model: ContactModel, base: ConformalFactor,
                           w_factor: ConformalFactor, points: np.ndarray,
                           order: int = 4) -> dict:
    """Max-over-points version of `direct_vs_law_values`."""
    vals = direct_vs_law_values(model, base, w_factor, points, order)
    return {k: float(np.max(v)) for k, v in vals.items()}
