"""Forward-mode automatic differentiation with truncated multivariate Taylor jets.

A Jet stores the Taylor coefficients of a smooth real function at a base
point, for all multi-indices I with |I| <= order.  The partial derivative
for multi-index I equals coeffs[I] * I!.  Coefficient arrays may carry a
leading batch dimension so that a single Jet represents the expansions at
many base points at once; all arithmetic broadcasts over that dimension.

CJet is the complex layer: a pair of real jets (re, im).
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Callable, Iterable, Sequence, Tuple

import numpy as np
import scipy.sparse as sp

__all__ = [
    "Jet",
    "CJet",
    "seed_variable",
    "seed_point",
    "constant",
    "partial",
    "jet_exp",
    "jet_log",
    "jet_sqrt",
    "jet_sin",
    "jet_cos",
    "jet_pow",
    "jet_atan2",
]

DIV_EPS = 1e-300


class JetDomainError(ArithmeticError):
    """Raised when a lifted function is evaluated outside its domain."""


class JetShapeError(ValueError):
    """Raised when jets with different (order, nvars) are combined."""


def _multi_indices(nvars: int, order: int) -> list:
    """All multi-indices with |I| <= order, graded, lex within each degree."""
    out = []
    for deg in range(order + 1):
        level = [()]
        for _ in range(nvars):
            level = [t + (k,) for t in level for k in range(deg - sum(t) + 1)]
        out.extend(sorted(t for t in level if sum(t) == deg))
    return out


class _Space:
    """Precomputed index tables for jets with a fixed (nvars, order)."""

    def __init__(self, nvars: int, order: int):
        self.nvars = nvars
        self.order = order
        self.indices = _multi_indices(nvars, order)
        self.size = len(self.indices)
        self.pos = {I: k for k, I in enumerate(self.indices)}
        self.degree = np.array([sum(I) for I in self.indices])
        # sizes of the truncations to each lower order (graded ordering makes
        # each truncation a prefix)
        self.trunc_size = [int(np.sum(self.degree <= k)) for k in range(order + 1)]
        self.fact = np.array([
            math.prod(math.factorial(v) for v in I) for I in self.indices
        ], dtype=np.float64)
        # multiplication table: all (i, j) with |I_i + I_j| <= order
        ii, jj, kk = [], [], []
        for i, I in enumerate(self.indices):
            for j, J in enumerate(self.indices):
                if sum(I) + sum(J) <= order:
                    ii.append(i)
                    jj.append(j)
                    kk.append(self.pos[tuple(a + b for a, b in zip(I, J))])
        self.mul_i = np.array(ii)
        self.mul_j = np.array(jj)
        self.mul_scatter = sp.csr_matrix(
            (np.ones(len(kk)), (np.arange(len(kk)), np.array(kk))),
            shape=(len(kk), self.size),
        )
        # derivative maps: for variable v, target index J picks source J+e_v
        self.dsrc = []
        self.dfac = []
        if order >= 1:
            small = _multi_indices(nvars, order - 1)
            for v in range(nvars):
                src = np.array([self.pos[J[:v] + (J[v] + 1,) + J[v + 1:]] for J in small])
                fac = np.array([J[v] + 1.0 for J in small])
                self.dsrc.append(src)
                self.dfac.append(fac)

    def mul_coeffs(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        a, b = np.broadcast_arrays(a, b)
        prods = a[..., self.mul_i] * b[..., self.mul_j]
        flat = prods.reshape(-1, prods.shape[-1])
        out = self.mul_scatter.T.dot(flat.T).T
        return np.ascontiguousarray(out.reshape(a.shape[:-1] + (self.size,)))


@lru_cache(maxsize=None)
def _space(nvars: int, order: int) -> _Space:
    return _Space(nvars, order)


class Jet:
    """Truncated Taylor expansion of a real scalar in `nvars` variables."""

    __slots__ = ("order", "nvars", "coeffs", "_sp")

    def __init__(self, order: int, nvars: int, coeffs: np.ndarray):
        if order < 0 or nvars < 1:
            raise JetShapeError(f"invalid jet shape (order={order}, nvars={nvars})")
        self._sp = _space(nvars, order)
        coeffs = np.asarray(coeffs, dtype=np.float64)
        if coeffs.shape[-1] != self._sp.size:
            raise JetShapeError(
                f"coefficient array has {coeffs.shape[-1]} entries, "
                f"expected {self._sp.size}")
        self.order = order
        self.nvars = nvars
        self.coeffs = coeffs

    # -- construction helpers ------------------------------------------------

    @staticmethod
    def const(value, order: int, nvars: int) -> "Jet":
        value = np.asarray(value, dtype=np.float64)
        c = np.zeros(value.shape + (_space(nvars, order).size,))
        c[..., 0] = value
        return Jet(order, nvars, c)

    def like_const(self, value) -> "Jet":
        return Jet.const(value, self.order, self.nvars)

    # -- basic queries ---------------------------------------------------------

    @property
    def value(self):
        return self.coeffs[..., 0]

    @property
    def batch_shape(self):
        return self.coeffs.shape[:-1]

    def partial(self, index: Sequence[int]):
        index = tuple(int(v) for v in index)
        if len(index) != self.nvars:
            raise JetShapeError(f"multi-index {index} has wrong length")
        if sum(index) > self.order:
            raise JetShapeError(f"multi-index {index} exceeds jet order {self.order}")
        k = self._sp.pos[index]
        return self.coeffs[..., k] * self._sp.fact[k]

    def _check(self, other: "Jet") -> None:
        if self.order != other.order or self.nvars != other.nvars:
            raise JetShapeError(
                f"mixing jets of different shape: ({self.order},{self.nvars}) "
                f"vs ({other.order},{other.nvars})")

    def _coerce(self, other):
        if isinstance(other, Jet):
            self._check(other)
            return other
        if np.isscalar(other) or isinstance(other, np.ndarray):
            return self.like_const(other)
        return NotImplemented

    # -- arithmetic ------------------------------------------------------------

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return Jet(self.order, self.nvars, self.coeffs + other.coeffs)

    __radd__ = __add__

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return Jet(self.order, self.nvars, self.coeffs - other.coeffs)

    def __rsub__(self, other):
        return (-self) + other

    def __neg__(self):
        return Jet(self.order, self.nvars, -self.coeffs)

    def __mul__(self, other):
        if np.isscalar(other) or isinstance(other, np.ndarray):
            return Jet(self.order, self.nvars,
                       self.coeffs * np.asarray(other)[..., None])
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return Jet(self.order, self.nvars,
                   self._sp.mul_coeffs(self.coeffs, other.coeffs))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if np.isscalar(other) or isinstance(other, np.ndarray):
            return self * (1.0 / np.asarray(other))
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, p):
        if isinstance(p, int):
            if p < 0:
                return self.reciprocal() ** (-p)
            out = self.like_const(1.0)
            for _ in range(p):
                out = out * self
            return out
        return jet_pow(self, p)

    # -- calculus ----------------------------------------------------------------

    def cut(self, order: int) -> "Jet":
        """Truncate to a lower order (prefix of the graded coefficients)."""
        if order == self.order:
            return self
        if order > self.order:
            raise JetShapeError(f"cannot extend order {self.order} to {order}")
        return Jet(order, self.nvars, self.coeffs[..., :self._sp.trunc_size[order]])

    def deriv(self, var: int) -> "Jet":
        """Partial derivative jet, one order lower."""
        if self.order < 1:
            raise JetShapeError("cannot differentiate an order-0 jet")
        sp_ = self._sp
        return Jet(self.order - 1, self.nvars,
                   self.coeffs[..., sp_.dsrc[var]] * sp_.dfac[var])

    def compose_scalar(self, derivs: np.ndarray) -> "Jet":
        """Analytic composition: derivs[k] is f^(k) at the jet's value.

        Horner evaluation of sum_k f^(k)(v)/k! * (self - v)^k; exact because
        the zero-value part of a jet is nilpotent at the truncation order.
        """
        h = Jet(self.order, self.nvars, self.coeffs.copy())
        h.coeffs[..., 0] = 0.0
        out = self.like_const(derivs[self.order] / math.factorial(self.order))
        for k in range(self.order - 1, -1, -1):
            out = out * h + self.like_const(derivs[k] / math.factorial(k))
        return out

    def reciprocal(self) -> "Jet":
        v = self.value
        if np.any(np.abs(v) <= DIV_EPS):
            raise JetDomainError("division by (near-)zero jet value")
        ks = np.arange(self.order + 1.0)
        derivs = np.array([
            ((-1.0) ** k) * math.factorial(int(k)) * v ** (-k - 1) for k in ks
        ])
        return self.compose_scalar(derivs)

    def __repr__(self):
        return f"Jet(order={self.order}, nvars={self.nvars}, value={self.value!r})"


# -- lifted analytic functions -----------------------------------------------------

def jet_exp(a: Jet) -> Jet:
    e = np.exp(a.value)
    return a.compose_scalar(np.array([e] * (a.order + 1)))


def jet_log(a: Jet) -> Jet:
    v = a.value
    if np.any(v <= 0):
        raise JetDomainError("log of non-positive jet value")
    derivs = [np.log(v)]
    for k in range(1, a.order + 1):
        derivs.append(((-1.0) ** (k - 1)) * math.factorial(k - 1) * v ** (-k))
    return a.compose_scalar(np.array(derivs))


def jet_sqrt(a: Jet) -> Jet:
    v = a.value
    if np.any(v <= 0):
        raise JetDomainError("sqrt of non-positive jet value")
    return jet_pow(a, 0.5)


def jet_pow(a: Jet, p: float) -> Jet:
    v = a.value
    if np.any(v <= 0):
        raise JetDomainError("fractional power of non-positive jet value")
    derivs = []
    c = 1.0
    for k in range(a.order + 1):
        derivs.append(c * v ** (p - k))
        c *= (p - k)
    return a.compose_scalar(np.array(derivs))


def jet_sin(a: Jet) -> Jet:
    v = a.value
    table = [np.sin(v), np.cos(v), -np.sin(v), -np.cos(v)]
    return a.compose_scalar(np.array([table[k % 4] for k in range(a.order + 1)]))


def jet_cos(a: Jet) -> Jet:
    v = a.value
    table = [np.cos(v), -np.sin(v), -np.cos(v), np.sin(v)]
    return a.compose_scalar(np.array([table[k % 4] for k in range(a.order + 1)]))


def jet_atan2(y: Jet, x: Jet) -> Jet:
    """Smooth branch of atan2 around the base value; needs x^2 + y^2 > 0.

    Uses atan2(y, x) = atan2(y0, x0) + atan(w/u) with u = x*x0 + y*y0 and
    w = y*x0 - x*y0, which has u > 0 at the base point.
    """
    x0 = x.value
    y0 = y.value
    r2 = x0 ** 2 + y0 ** 2
    if np.any(r2 <= 0):
        raise JetDomainError("atan2 at the origin")
    u = x * x0 + y * y0
    w = y * x0 - x * y0
    t = w / u
    v = t.value
    # atan^(k)(v) = (-1)^(k-1) (k-1)! Im[(v - i)^-k]
    derivs = [np.arctan(v)]
    zi = 1.0 / (v - 1j)
    zk = zi.copy()
    for k in range(1, t.order + 1):
        derivs.append(((-1.0) ** (k - 1)) * math.factorial(k - 1) * np.imag(zk))
        zk = zk * zi
    out = t.compose_scalar(np.array(derivs))
    out.coeffs[..., 0] = np.arctan2(y0, x0)
    return out


# -- seeding -------------------------------------------------------------------------

def seed_variable(i: int, x0, order: int, nvars: int) -> Jet:
    """Jet of the i-th coordinate function at base value x0."""
    if not (0 <= i < nvars):
        raise JetShapeError(f"variable index {i} out of range for nvars={nvars}")
    j = Jet.const(x0, order, nvars)
    if order >= 1:
        unit = tuple(1 if k == i else 0 for k in range(nvars))
        j.coeffs[..., j._sp.pos[unit]] = 1.0
    return j


def seed_point(x, order: int) -> list:
    """Seed all coordinates of point(s) x (shape (..., n)) at once."""
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[-1]
    return [seed_variable(i, x[..., i], order, n) for i in range(n)]


def constant(value, order: int, nvars: int) -> Jet:
    return Jet.const(value, order, nvars)


def partial(j: Jet, index: Sequence[int]):
    return j.partial(index)


# -- complex jets ----------------------------------------------------------------------

class CJet:
    """Complex-valued jet as a pair of real jets."""

    __slots__ = ("re", "im")

    def __init__(self, re: Jet, im: Jet = None):
        if im is None:
            im = re.like_const(np.zeros(re.batch_shape))
        re._check(im)
        self.re = re
        self.im = im

    @staticmethod
    def const(value, order: int, nvars: int) -> "CJet":
        value = np.asarray(value, dtype=np.complex128)
        return CJet(Jet.const(value.real, order, nvars),
                    Jet.const(value.imag, order, nvars))

    @property
    def order(self):
        return self.re.order

    @property
    def nvars(self):
        return self.re.nvars

    @property
    def value(self):
        return self.re.value + 1j * self.im.value

    def _coerce(self, other):
        if isinstance(other, CJet):
            return other
        if isinstance(other, Jet):
            return CJet(other)
        if np.isscalar(other) or isinstance(other, np.ndarray):
            return CJet.const(other, self.order, self.nvars)
        return NotImplemented

    def conj(self) -> "CJet":
        return CJet(self.re, -self.im)

    def abs2(self) -> Jet:
        return self.re * self.re + self.im * self.im

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return CJet(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return CJet(self.re - other.re, self.im - other.im)

    def __rsub__(self, other):
        return (-self) + other

    def __neg__(self):
        return CJet(-self.re, -self.im)

    def __mul__(self, other):
        if np.isscalar(other) and not isinstance(other, complex):
            return CJet(self.re * other, self.im * other)
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        ac = self.re * other.re
        bd = self.im * other.im
        s = (self.re + self.im) * (other.re + other.im)
        return CJet(ac - bd, s - ac - bd)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        inv = other.abs2().reciprocal()
        num = self * other.conj()
        return CJet(num.re * inv, num.im * inv)

    def __rtruediv__(self, other):
        other = self._coerce(other)
        return other / self

    def cut(self, order: int) -> "CJet":
        return CJet(self.re.cut(order), self.im.cut(order))

    def deriv(self, var: int) -> "CJet":
        return CJet(self.re.deriv(var), self.im.deriv(var))

    def exp(self) -> "CJet":
        mag = jet_exp(self.re)
        return CJet(mag * jet_cos(self.im), mag * jet_sin(self.im))

    def __repr__(self):
        return f"CJet(order={self.order}, nvars={self.nvars}, value={self.value!r})"


def as_cjet(x, order: int, nvars: int) -> CJet:
    if isinstance(x, CJet):
        return x
    if isinstance(x, Jet):
        return CJet(x)
    return CJet.const(x, order, nvars)
