# polynomials.py
"""
Exact multivariate Laurent polynomials.

Coefficients are `Fraction`s and exponents are integer tuples (negative entries allowed),
so Ricci components, the polynomialized flow and its chart transforms can be built and
compared exactly. `CompiledSystem` turns a list of polynomials into numpy arrays over a
shared monomial basis for fast batch evaluation at floating-point points.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from math import lcm
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Set, Tuple, Union

import numpy as np

logger = logging.getLogger(__name__)

Exponents = Tuple[int, ...]
Scalar = Union[int, Fraction]


def as_fraction(value: Union[int, str, Fraction]) -> Fraction:
    """Exact conversion; floats are refused so that nothing inexact leaks into coefficients."""
    if isinstance(value, bool):
        raise TypeError("booleans are not coefficients")
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"expected int, str or Fraction, got {type(value).__name__}")


class LaurentPolynomial:
    """A finite sum of terms c * x1^e1 * ... * xn^en with rational c and integer e."""

    __slots__ = ("nvars", "_terms")

    def __init__(self, nvars: int, terms: Optional[Mapping[Sequence[int], Scalar]] = None):
        if nvars < 0:
            raise ValueError("nvars must be non-negative")
        self.nvars = nvars
        acc: Dict[Exponents, Fraction] = {}
        for exps, coeff in (terms or {}).items():
            key = tuple(int(e) for e in exps)
            if len(key) != nvars:
                raise ValueError(f"exponent tuple {key} does not have {nvars} entries")
            acc[key] = acc.get(key, Fraction(0)) + as_fraction(coeff)
        self._terms: Dict[Exponents, Fraction] = {k: c for k, c in acc.items() if c != 0}

    # ---------- Construction ----------

    @classmethod
    def zero(cls, nvars: int) -> "LaurentPolynomial":
        return cls(nvars)

    @classmethod
    def constant(cls, nvars: int, value: Scalar) -> "LaurentPolynomial":
        return cls(nvars, {(0,) * nvars: value})

    @classmethod
    def monomial(cls, nvars: int, exps: Sequence[int], coeff: Scalar = 1) -> "LaurentPolynomial":
        return cls(nvars, {tuple(exps): coeff})

    @classmethod
    def variable(cls, nvars: int, index: int) -> "LaurentPolynomial":
        """The coordinate x_{index+1} (0-based index)."""
        exps = [0] * nvars
        exps[index] = 1
        return cls.monomial(nvars, exps)

    # ---------- Inspection ----------

    @property
    def terms(self) -> Dict[Exponents, Fraction]:
        return dict(self._terms)

    def items(self) -> Iterable[Tuple[Exponents, Fraction]]:
        return self._terms.items()

    def __len__(self) -> int:
        return len(self._terms)

    @property
    def is_zero(self) -> bool:
        return not self._terms

    def coefficient(self, exps: Sequence[int]) -> Fraction:
        return self._terms.get(tuple(exps), Fraction(0))

    def degrees(self) -> Set[int]:
        return {sum(e) for e in self._terms}

    def is_homogeneous(self) -> bool:
        return len(self.degrees()) <= 1

    @property
    def degree(self) -> int:
        """Common total degree; only defined for non-zero homogeneous polynomials."""
        degs = self.degrees()
        if len(degs) != 1:
            raise ValueError(f"polynomial has no single total degree (degrees: {sorted(degs)})")
        return next(iter(degs))

    def is_polynomial(self) -> bool:
        return all(e >= 0 for exps in self._terms for e in exps)

    def is_monomial(self) -> bool:
        return len(self._terms) == 1

    def denominator_monomial(self) -> Exponents:
        """Smallest exponents m >= 0 such that x^m * self has no negative powers."""
        out = [0] * self.nvars
        for exps in self._terms:
            for i, e in enumerate(exps):
                if -e > out[i]:
                    out[i] = -e
        return tuple(out)

    def coefficient_denominator_lcm(self) -> int:
        return lcm(1, *(c.denominator for c in self._terms.values()))

    def depends_on(self, index: int) -> bool:
        return any(exps[index] != 0 for exps in self._terms)

    # ---------- Arithmetic ----------

    def _coerce(self, other: Union["LaurentPolynomial", Scalar]) -> "LaurentPolynomial":
        if isinstance(other, LaurentPolynomial):
            if other.nvars != self.nvars:
                raise ValueError(f"variable count mismatch: {self.nvars} vs {other.nvars}")
            return other
        return LaurentPolynomial.constant(self.nvars, other)

    def __add__(self, other):
        other = self._coerce(other)
        acc = dict(self._terms)
        for exps, c in other._terms.items():
            acc[exps] = acc.get(exps, Fraction(0)) + c
        return LaurentPolynomial(self.nvars, acc)

    __radd__ = __add__

    def __neg__(self):
        return LaurentPolynomial(self.nvars, {e: -c for e, c in self._terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, LaurentPolynomial):
            factor = as_fraction(other)
            return LaurentPolynomial(self.nvars, {e: c * factor for e, c in self._terms.items()})
        other = self._coerce(other)
        acc: Dict[Exponents, Fraction] = {}
        for e1, c1 in self._terms.items():
            for e2, c2 in other._terms.items():
                key = tuple(a + b for a, b in zip(e1, e2))
                acc[key] = acc.get(key, Fraction(0)) + c1 * c2
        return LaurentPolynomial(self.nvars, acc)

    __rmul__ = __mul__

    def __pow__(self, power: int) -> "LaurentPolynomial":
        if power < 0:
            return self.inverse() ** (-power)
        out = LaurentPolynomial.constant(self.nvars, 1)
        base = self
        while power:
            if power & 1:
                out = out * base
            base = base * base
            power >>= 1
        return out

    def inverse(self) -> "LaurentPolynomial":
        """Reciprocal of a single non-zero monomial."""
        if not self.is_monomial():
            raise ValueError("only monomials have a Laurent-polynomial inverse")
        (exps, c), = self._terms.items()
        return LaurentPolynomial.monomial(self.nvars, [-e for e in exps], 1 / c)

    def shift(self, exps: Sequence[int]) -> "LaurentPolynomial":
        """Multiply by the monomial x^exps."""
        return LaurentPolynomial(
            self.nvars,
            {tuple(a + b for a, b in zip(e, exps)): c for e, c in self._terms.items()},
        )

    def __eq__(self, other) -> bool:
        if isinstance(other, LaurentPolynomial):
            return self.nvars == other.nvars and self._terms == other._terms
        if isinstance(other, (int, Fraction)):
            return self == LaurentPolynomial.constant(self.nvars, other)
        return NotImplemented

    def __hash__(self) -> int:
        return hash((self.nvars, frozenset(self._terms.items())))

    # ---------- Calculus and substitution ----------

    def derivative(self, index: int) -> "LaurentPolynomial":
        acc: Dict[Exponents, Fraction] = {}
        for exps, c in self._terms.items():
            e = exps[index]
            if e == 0:
                continue
            key = exps[:index] + (e - 1,) + exps[index + 1:]
            acc[key] = c * e
        return LaurentPolynomial(self.nvars, acc)

    def substitute(self, images: Sequence["LaurentPolynomial"]) -> "LaurentPolynomial":
        """
        Replace x_i by images[i] (all images share one variable count).

        Negative powers of x_i are only allowed when images[i] is a monomial.
        """
        if len(images) != self.nvars:
            raise ValueError(f"need {self.nvars} images, got {len(images)}")
        if not images:
            return LaurentPolynomial(0, self._terms)
        target = images[0].nvars
        powers: Dict[Tuple[int, int], LaurentPolynomial] = {}

        def power(i: int, e: int) -> LaurentPolynomial:
            key = (i, e)
            if key not in powers:
                powers[key] = images[i] ** e
            return powers[key]

        out = LaurentPolynomial.zero(target)
        for exps, c in self._terms.items():
            term = LaurentPolynomial.constant(target, c)
            for i, e in enumerate(exps):
                if e:
                    term = term * power(i, e)
            out = out + term
        return out

    def fix_variable(self, index: int, value: Scalar) -> "LaurentPolynomial":
        """Set x_index to a non-zero constant and drop it from the variable list."""
        value = as_fraction(value)
        if value == 0:
            return self.restrict_zero(index).drop_variable(index)
        acc: Dict[Exponents, Fraction] = {}
        for exps, c in self._terms.items():
            key = exps[:index] + exps[index + 1:]
            acc[key] = acc.get(key, Fraction(0)) + c * value ** exps[index]
        return LaurentPolynomial(self.nvars - 1, acc)

    def restrict_zero(self, index: int) -> "LaurentPolynomial":
        """Restriction to the hyperplane x_index = 0 (variable kept, terms dropped)."""
        kept: Dict[Exponents, Fraction] = {}
        for exps, c in self._terms.items():
            if exps[index] < 0:
                raise ValueError(f"x{index + 1} appears with a negative power; cannot set it to 0")
            if exps[index] == 0:
                kept[exps] = c
        return LaurentPolynomial(self.nvars, kept)

    def drop_variable(self, index: int) -> "LaurentPolynomial":
        if self.depends_on(index):
            raise ValueError(f"polynomial still depends on x{index + 1}")
        return LaurentPolynomial(
            self.nvars - 1, {e[:index] + e[index + 1:]: c for e, c in self._terms.items()}
        )

    # ---------- Evaluation ----------

    def evaluate(self, point: Sequence):
        """Exact for int/Fraction points, float otherwise."""
        if len(point) != self.nvars:
            raise ValueError(f"expected {self.nvars} coordinates, got {len(point)}")
        # int ** negative int would give a float
        point = [Fraction(x) if isinstance(x, int) else x for x in point]
        total = Fraction(0)
        for exps, c in self._terms.items():
            term = c
            for x, e in zip(point, exps):
                if e:
                    term = term * x ** e
            total = total + term
        return total

    def __call__(self, *point):
        return self.evaluate(point)

    # ---------- Display ----------

    def to_string(self, names: Optional[Sequence[str]] = None) -> str:
        if not self._terms:
            return "0"
        names = names or [f"x{i + 1}" for i in range(self.nvars)]
        parts: List[str] = []
        for exps in sorted(self._terms, key=lambda e: (-sum(e), [-x for x in e])):
            c = self._terms[exps]
            factors = []
            for name, e in zip(names, exps):
                if e == 1:
                    factors.append(name)
                elif e:
                    factors.append(f"{name}^{e}")
            mag = abs(c)
            if factors:
                body = "*".join(factors) if mag == 1 else f"{mag}*" + "*".join(factors)
            else:
                body = str(mag)
            sign = "-" if c < 0 else "+"
            parts.append(f"{sign} {body}")
        text = " ".join(parts)
        return text[2:] if text.startswith("+ ") else "-" + text[2:]

    def __str__(self) -> str:
        return self.to_string()

    def __repr__(self) -> str:
        return f"LaurentPolynomial({self.nvars}, {self.to_string()!r})"


def jacobian_matrix(polys: Sequence[LaurentPolynomial]) -> List[List[LaurentPolynomial]]:
    """Symbolic Jacobian d(polys[k]) / d(x_j)."""
    if not polys:
        return []
    n = polys[0].nvars
    return [[p.derivative(j) for j in range(n)] for p in polys]


def common_denominator(polys: Iterable[LaurentPolynomial]) -> Exponents:
    """Componentwise max of the denominator monomials (the monomial lcm)."""
    polys = list(polys)
    if not polys:
        return ()
    out = [0] * polys[0].nvars
    for p in polys:
        for i, e in enumerate(p.denominator_monomial()):
            out[i] = max(out[i], e)
    return tuple(out)


# -----------------------------
# Compiled (numpy) evaluation
# -----------------------------
@dataclass(frozen=True)
class CompiledSystem:
    """
    k polynomials in n variables over a shared basis of M monomials.

    exponents: (M, n); coefficients: (k, M); evaluation at a batch of points is one
    monomial table followed by a matrix product.
    """

    nvars: int
    exponents: np.ndarray
    coefficients: np.ndarray

    @classmethod
    def from_polynomials(cls, polys: Sequence[LaurentPolynomial]) -> "CompiledSystem":
        if not polys:
            raise ValueError("cannot compile an empty system")
        nvars = polys[0].nvars
        basis: Dict[Exponents, int] = {}
        for p in polys:
            if p.nvars != nvars:
                raise ValueError("all polynomials must share one variable count")
            for exps, _ in p.items():
                basis.setdefault(exps, len(basis))
        exps_arr = np.zeros((max(len(basis), 1), nvars), dtype=float)
        for exps, idx in basis.items():
            exps_arr[idx] = exps
        coeffs = np.zeros((len(polys), exps_arr.shape[0]), dtype=float)
        for k, p in enumerate(polys):
            for exps, c in p.items():
                coeffs[k, basis[exps]] = float(c)
        return cls(nvars=nvars, exponents=exps_arr, coefficients=coeffs)

    @property
    def size(self) -> int:
        return self.coefficients.shape[0]

    def monomials(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        if pts.shape[-1] != self.nvars:
            raise ValueError(f"expected {self.nvars} coordinates, got {pts.shape[-1]}")
        return np.prod(pts[..., None, :] ** self.exponents, axis=-1)

    def log_monomials(self, logs) -> np.ndarray:
        """Monomial table at exp(logs); the points are positive by construction."""
        return np.exp(np.asarray(logs, dtype=float) @ self.exponents.T)

    def __call__(self, points) -> np.ndarray:
        return self.monomials(points) @ self.coefficients.T

    def jacobian(self, points) -> np.ndarray:
        """(..., k, n) matrix of partial derivatives."""
        pts = np.asarray(points, dtype=float)
        cols = []
        for j in range(self.nvars):
            ej = self.exponents[:, j]
            shifted = self.exponents.copy()
            shifted[:, j] = np.where(ej != 0, ej - 1, 0)
            mon = np.prod(pts[..., None, :] ** shifted, axis=-1) * ej
            cols.append(mon @ self.coefficients.T)
        return np.stack(cols, axis=-1)

    def log_evaluate(self, logs) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Values, Jacobian in log coordinates and magnitudes at exp(logs)."""
        mon = self.log_monomials(logs)
        values = mon @ self.coefficients.T
        k, m = self.coefficients.shape
        # d/dw_j of c * exp(w.e) is c * e_j * exp(w.e)
        weights = (self.coefficients[:, :, None] * self.exponents[None, :, :]).transpose(1, 0, 2)
        jac = (mon @ weights.reshape(m, k * self.nvars)).reshape(*mon.shape[:-1], k, self.nvars)
        scale = mon @ np.abs(self.coefficients).T
        return values, jac, scale
