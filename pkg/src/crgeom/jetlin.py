"""Small dense linear solves over jet-valued matrices.

All systems in the frame pipeline are tiny (<= 7x7).  To stay vectorized
over batched base points we avoid pivot selection entirely: every solve is
reduced to a Hermitian positive definite system (normal equations where
needed) and handled by a pivot-free Cholesky factorization in jet
arithmetic.
"""

from __future__ import annotations

from typing import List

from .jets import CJet, Jet, jet_sqrt


def cholesky_real(a: List[List[Jet]]) -> List[List[Jet]]:
    """Lower Cholesky factor of a symmetric positive definite jet matrix."""
    n = len(a)
    low = [[None] * n for _ in range(n)]
    for j in range(n):
        d = a[j][j]
        for k in range(j):
            d = d - low[j][k] * low[j][k]
        low[j][j] = jet_sqrt(d)
        for i in range(j + 1, n):
            s = a[i][j]
            for k in range(j):
                s = s - low[i][k] * low[j][k]
            low[i][j] = s / low[j][j]
    return low


def cholesky_herm(a: List[List[CJet]]) -> List[List[CJet]]:
    """Lower Cholesky factor of a Hermitian positive definite CJet matrix."""
    n = len(a)
    low = [[None] * n for _ in range(n)]
    for j in range(n):
        d = a[j][j].re
        for k in range(j):
            d = d - low[j][k].abs2()
        djj = jet_sqrt(d)
        low[j][j] = CJet(djj)
        inv = djj.reciprocal()
        for i in range(j + 1, n):
            s = a[i][j]
            for k in range(j):
                s = s - low[i][k] * low[j][k].conj()
            low[i][j] = CJet(s.re * inv, s.im * inv)
    return low


def solve_chol_real(low, b):
    """Solve L L^T x = b for one right-hand side (list of jets)."""
    n = len(low)
    y = list(b)
    for i in range(n):
        s = y[i]
        for k in range(i):
            s = s - low[i][k] * y[k]
        y[i] = s / low[i][i]
    x = y
    for i in reversed(range(n)):
        s = x[i]
        for k in range(i + 1, n):
            s = s - low[k][i] * x[k]
        x[i] = s / low[i][i]
    return x


def solve_chol_herm(low, b):
    """Solve L L^H x = b for one right-hand side (list of CJets)."""
    n = len(low)
    y = list(b)
    for i in range(n):
        s = y[i]
        for k in range(i):
            s = s - low[i][k] * y[k]
        y[i] = s / low[i][i]
    x = y
    for i in reversed(range(n)):
        s = x[i]
        for k in range(i + 1, n):
            s = s - low[k][i].conj() * x[k]
        x[i] = s / low[i][i]
    return x


def solve_spd_real(a, rhs_list):
    low = cholesky_real(a)
    return [solve_chol_real(low, b) for b in rhs_list]


def solve_normal_herm(rows, rhs_list):
    """Least-squares solve of (rows) x = b via Hermitian normal equations.

    rows: list of equations, each a list of CJet coefficients.
    """
    ncol = len(rows[0])
    gram = [[None] * ncol for _ in range(ncol)]
    for i in range(ncol):
        for j in range(i + 1):
            s = None
            for r in rows:
                term = r[i].conj() * r[j]
                s = term if s is None else s + term
            gram[i][j] = s
            if j != i:
                gram[j][i] = s.conj()
    low = cholesky_herm(gram)
    out = []
    for b in rhs_list:
        atb = []
        for i in range(ncol):
            s = None
            for r, bv in zip(rows, b):
                term = r[i].conj() * bv
                s = term if s is None else s + term
            atb.append(s)
        out.append(solve_chol_herm(low, atb))
    return out
