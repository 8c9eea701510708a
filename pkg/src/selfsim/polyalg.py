"""Coefficient algebra for polynomials over basis functions of ``s``.

A polynomial in ``k`` basis functions ``phi_1 .. phi_k`` is stored as a dense
``k``-dimensional array whose axes all have the same length ``n``.  Only the
entries whose (0-based) index tuple is non-decreasing may be nonzero.  The
entry at ``(i_1, ..., i_k)`` multiplies

    phi_1 ** (n-1-i_k) * phi_2 ** (i_k - i_{k-1}) * ... * phi_k ** (i_2 - i_1)

so the total degree of an entry is ``n-1-i_1``.  For ``k == 1`` this is the
usual descending-power coefficient vector (constant term last); for ``k == 2``
it is an upper-triangular matrix whose entry ``(p, q)`` multiplies
``phi_1**(n-1-q) * phi_2**(q-p)``.  With this layout polynomial multiplication
is plain full ``k``-dimensional convolution and polynomial addition aligns the
smaller array with the constant-term corner of the larger one.

Coefficients are double-precision throughout; complex numbers only appear
when a tensor is evaluated at a complex ``s``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Iterable, Mapping, Sequence, Union

import numpy as np
import scipy.signal

from .errors import InvalidArgument, PoleEvaluationError, UnsupportedReduction

__all__ = [
    "MonomialPower",
    "SqrtPoly",
    "BasisSet",
    "CoeffTensor",
    "TransferFunction",
    "S_BASIS",
    "conv_vec",
    "conv_mat",
    "conv",
    "add_aligned",
    "reduce",
    "evaluate",
    "normalize",
    "cancel_common_power",
    "lift",
    "express_in",
    "unify_bases",
    "from_json",
    "basis_from_json",
]

TRIM_RTOL = 1e-12
POLE_ATOL = 1e-300
# normalize only drops exactly-zero leading shells: with coefficients spread
# over many decades a relative cut discards genuine leading terms
NORMALIZE_RTOL = 0.0
SQRT_MATCH_RTOL = 1e-12
# Two square-root definitions closer than this but not within SQRT_MATCH_RTOL
# are almost certainly the same function computed two ways.
SQRT_CONFLICT_RTOL = 1e-6

Number = Union[int, float, complex]


# ---------------------------------------------------------------------------
# basis functions


@dataclass(frozen=True)
class MonomialPower:
    """``s ** exponent`` on the principal branch (cut along the negative real axis)."""

    exponent: Fraction = Fraction(1)

    def __post_init__(self):
        exponent = Fraction(self.exponent).limit_denominator(10**6)
        if exponent <= 0:
            raise InvalidArgument(f"monomial exponent must be positive, got {exponent}")
        object.__setattr__(self, "exponent", exponent)

    @property
    def s_degree(self) -> Fraction:
        return self.exponent

    def __call__(self, s):
        s = np.asarray(s, dtype=complex)
        if self.exponent == 1:
            return s
        if self.exponent == Fraction(1, 2):
            return np.sqrt(s)
        if self.exponent.denominator == 1:
            return s ** int(self.exponent)
        return np.power(s, float(self.exponent))

    def to_json(self) -> dict:
        return {"type": "power", "exponent": str(self.exponent)}

    def __str__(self):
        return "s" if self.exponent == 1 else f"s^({self.exponent})"


@dataclass(frozen=True)
class SqrtPoly:
    """Square root of a polynomial in ``s`` (coefficients in descending powers).

    The branch is fixed by factoring the radicand: ``sqrt(lead) * prod(sqrt(s - r))``
    over its roots ``r``, each factor on the principal branch.  When every root
    lies in the closed left half-plane this is the branch that is analytic on the
    open right half-plane and positive for real ``s > 0``, so it varies
    continuously along ``s = i*omega``.  A plain principal square root of the
    whole radicand can jump sign on that axis.
    """

    coeffs: tuple

    def __post_init__(self):
        coeffs = tuple(float(c) for c in self.coeffs)
        if len(coeffs) < 2:
            raise InvalidArgument("SqrtPoly needs at least two coefficients")
        if coeffs[0] == 0:
            raise InvalidArgument("SqrtPoly leading coefficient must be nonzero")
        object.__setattr__(self, "coeffs", coeffs)

    @cached_property
    def roots(self) -> np.ndarray:
        return np.roots(self.coeffs)

    @property
    def s_degree(self) -> Fraction:
        return Fraction(len(self.coeffs) - 1, 2)

    def radicand(self, s):
        return _horner(np.asarray(self.coeffs, dtype=float), np.asarray(s, dtype=complex))

    def __call__(self, s):
        s = np.asarray(s, dtype=complex)
        value = np.sqrt(complex(self.coeffs[0])) * np.ones_like(s)
        for r in self.roots:
            value = value * np.sqrt(s - r)
        return value

    def matches(self, other: "SqrtPoly", rtol: float = SQRT_MATCH_RTOL) -> bool:
        return _coeff_distance(self, other) <= rtol

    def to_json(self) -> dict:
        return {"type": "sqrt_poly", "coeffs": list(self.coeffs)}

    def __str__(self):
        return f"sqrt({_poly_str(self.coeffs)})"


BasisFunction = Union[MonomialPower, SqrtPoly]


def _coeff_distance(a: SqrtPoly, b: SqrtPoly) -> float:
    if len(a.coeffs) != len(b.coeffs):
        return math.inf
    x, y = np.asarray(a.coeffs), np.asarray(b.coeffs)
    scale = max(np.max(np.abs(x)), np.max(np.abs(y)))
    return float(np.max(np.abs(x - y)) / scale)


def _poly_str(coeffs) -> str:
    n = len(coeffs) - 1
    parts = []
    for i, c in enumerate(coeffs):
        p = n - i
        if c == 0:
            continue
        mono = "" if p == 0 else ("s" if p == 1 else f"s^{p}")
        parts.append(f"{c:g}{'*' if mono else ''}{mono}")
    return " + ".join(parts) or "0"


@dataclass(frozen=True)
class BasisSet:
    """Ordered basis functions, plus square relations ``phi_i**2 = R_i``.

    ``relations`` holds ``(index, ((exponents, coeff), ...))`` pairs expressing
    ``phi_index ** 2`` over this same basis.  Relations for :class:`SqrtPoly`
    members are derived automatically whenever ``s`` is an integer power of a
    monomial member.
    """

    functions: tuple
    relations: tuple = ()

    def __post_init__(self):
        functions = tuple(self.functions)
        if not functions:
            raise InvalidArgument("a BasisSet needs at least one function")
        for f in functions:
            if not isinstance(f, (MonomialPower, SqrtPoly)):
                raise InvalidArgument(f"not a basis function: {f!r}")
        object.__setattr__(self, "functions", functions)
        object.__setattr__(self, "relations", tuple(self.relations))

    def __len__(self):
        return len(self.functions)

    def __iter__(self):
        return iter(self.functions)

    def __getitem__(self, i):
        return self.functions[i]

    def __str__(self):
        return "{" + ", ".join(str(f) for f in self.functions) + "}"

    def s_monomial(self):
        """``(index, m)`` with ``phi_index ** m == s``, or ``None``."""
        for i, f in enumerate(self.functions):
            if isinstance(f, MonomialPower) and f.exponent.numerator == 1:
                return i, f.exponent.denominator
        return None

    def relation(self, index: int):
        """Terms of ``phi_index ** 2`` over this basis, or ``None`` if unknown."""
        for i, terms in self.relations:
            if i == index:
                return dict(terms)
        f = self.functions[index]
        if not isinstance(f, SqrtPoly):
            return None
        found = self.s_monomial()
        if found is None:
            return None
        at, m = found
        degree = len(f.coeffs) - 1
        terms = {}
        for i, c in enumerate(f.coeffs):
            if c != 0:
                e = [0] * len(self.functions)
                e[at] = m * (degree - i)
                terms[tuple(e)] = c
        return terms

    def evaluate(self, s) -> list:
        return [f(s) for f in self.functions]

    def to_json(self) -> list:
        return [f.to_json() for f in self.functions]


S_BASIS = BasisSet((MonomialPower(1),))


# ---------------------------------------------------------------------------
# index <-> exponent encoding


@lru_cache(maxsize=256)
def _support_mask(n: int, k: int) -> np.ndarray:
    if k == 1:
        mask = np.ones(n, dtype=bool)
    else:
        idx = np.indices((n,) * k)
        mask = np.all(idx[:-1] <= idx[1:], axis=0)
    mask.flags.writeable = False
    return mask


def _exponents(index: Sequence[int], n: int) -> tuple:
    k = len(index)
    exps = [n - 1 - index[-1]]
    for j in range(2, k + 1):
        exps.append(index[k - j + 1] - index[k - j])
    return tuple(exps)


def _index(exps: Sequence[int], n: int) -> tuple:
    k = len(exps)
    i = [n - 1 - sum(exps)]
    for j in range(k, 1, -1):
        i.append(i[-1] + exps[j - 1])
    return tuple(i)


def _as_array(data) -> np.ndarray:
    arr = np.array(data)
    if arr.dtype.kind in "biuf":
        arr = arr.astype(float)
    elif arr.dtype.kind == "c":
        arr = arr.astype(complex)
    else:
        raise InvalidArgument(f"coefficients must be numeric, got dtype {arr.dtype}")
    return arr


# ---------------------------------------------------------------------------
# tensors


@dataclass(frozen=True, eq=False)
class CoeffTensor:
    """Coefficients of a polynomial over ``basis`` (see module docstring)."""

    basis: BasisSet
    data: np.ndarray

    def __post_init__(self):
        data = _as_array(self.data)
        k = len(self.basis)
        if k == 1 and data.ndim == 0:
            data = data.reshape(1)
        if data.ndim != k:
            raise InvalidArgument(f"basis has {k} functions but data has {data.ndim} axes")
        n = data.shape[0]
        if n == 0:
            raise InvalidArgument("coefficient tensor must be non-empty")
        if any(d != n for d in data.shape):
            raise InvalidArgument(f"coefficient tensor must be square, got shape {data.shape}")
        if k > 1 and np.any(data[~_support_mask(n, k)] != 0):
            raise InvalidArgument("coefficient tensor has entries below the diagonal")
        data = data.copy()
        data.flags.writeable = False
        object.__setattr__(self, "data", data)

    # construction -----------------------------------------------------

    @classmethod
    def zero(cls, basis: BasisSet = S_BASIS) -> "CoeffTensor":
        return cls(basis, np.zeros((1,) * len(basis)))

    @classmethod
    def constant(cls, value, basis: BasisSet = S_BASIS) -> "CoeffTensor":
        return cls(basis, np.full((1,) * len(basis), value))

    @classmethod
    def vector(cls, coeffs, basis: BasisSet = S_BASIS) -> "CoeffTensor":
        return cls(basis, coeffs)

    @classmethod
    def from_terms(cls, basis: BasisSet, terms: Mapping[tuple, Number]) -> "CoeffTensor":
        """Build a tensor from an ``{exponents: coefficient}`` mapping."""
        k = len(basis)
        terms = {tuple(e): c for e, c in terms.items() if c != 0}
        if not terms:
            return cls.zero(basis)
        for e in terms:
            if len(e) != k or min(e) < 0:
                raise InvalidArgument(f"bad exponent tuple {e} for a {k}-function basis")
        n = max(sum(e) for e in terms) + 1
        dtype = complex if any(isinstance(c, complex) for c in terms.values()) else float
        data = np.zeros((n,) * k, dtype=dtype)
        for e, c in terms.items():
            data[_index(e, n)] += c
        return cls(basis, data)

    # structure --------------------------------------------------------

    @property
    def size(self) -> int:
        return self.data.shape[0]

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def is_zero(self) -> bool:
        return not np.any(self.data)

    def terms(self) -> dict:
        """``{exponents: coefficient}`` for every nonzero entry."""
        n = self.size
        return {
            _exponents(idx, n): self.data[idx]
            for idx in zip(*np.nonzero(self.data))
        }

    def s_degree(self) -> Fraction:
        """Highest power of ``s`` among the nonzero terms (``-1`` for the zero tensor)."""
        degs = [f.s_degree for f in self.basis]
        best = Fraction(-1)
        for e in self.terms():
            best = max(best, sum((d * x for d, x in zip(degs, e)), Fraction(0)))
        return best

    def max_power(self, index: int) -> int:
        return max((e[index] for e in self.terms()), default=0)

    def trim(self, rtol: float = TRIM_RTOL) -> "CoeffTensor":
        """Drop leading shells whose entries are all at most ``rtol * max|entry|``."""
        data = self.data
        scale = np.max(np.abs(data)) if data.size else 0.0
        if scale == 0:
            return CoeffTensor.zero(self.basis)
        threshold = rtol * scale
        start = 0
        while start < data.shape[0] - 1 and np.all(np.abs(data[(start,) + (slice(None),) * (data.ndim - 1)]) <= threshold):
            start += 1
        if start == 0:
            return self
        return CoeffTensor(self.basis, data[(slice(start, None),) * data.ndim])

    def leading(self, rtol: float = TRIM_RTOL) -> Number:
        """First significant coefficient of the leading shell, in row-major order."""
        t = self.trim(rtol)
        row = t.data[(0,) + (slice(None),) * (t.ndim - 1)].ravel()
        scale = np.max(np.abs(t.data))
        significant = np.flatnonzero(np.abs(row) > rtol * scale)
        return row[significant[0]] if significant.size else row[0]

    # arithmetic -------------------------------------------------------

    def __mul__(self, other):
        if isinstance(other, CoeffTensor):
            return conv(self, other)
        if np.isscalar(other):
            return CoeffTensor(self.basis, self.data * other)
        return NotImplemented

    __rmul__ = __mul__

    def __add__(self, other):
        if isinstance(other, CoeffTensor):
            return add_aligned(self, other)
        if np.isscalar(other):
            return add_aligned(self, CoeffTensor.constant(other, self.basis))
        return NotImplemented

    __radd__ = __add__

    def __neg__(self):
        return CoeffTensor(self.basis, -self.data)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __call__(self, s):
        return evaluate_tensor(self, s)

    def allclose(self, other: "CoeffTensor", rtol=1e-12, atol=0.0) -> bool:
        if self.basis != other.basis or self.data.shape != other.data.shape:
            return False
        return bool(np.allclose(self.data, other.data, rtol=rtol, atol=atol))

    # serialization ----------------------------------------------------

    def to_json(self) -> dict:
        shape = {1: "vector", 2: "matrix"}.get(self.ndim, "tensor")
        out = {"basis": self.basis.to_json(), "shape": shape}
        if np.iscomplexobj(self.data):
            out["dtype"] = "complex"
            out["data"] = np.stack([self.data.real, self.data.imag], axis=-1).tolist()
        else:
            out["data"] = self.data.tolist()
        return out

    def __repr__(self):
        return f"CoeffTensor(basis={self.basis}, data={self.data.tolist()!r})"


def basis_from_json(items: Iterable[Mapping]) -> BasisSet:
    functions = []
    for item in items:
        kind = item.get("type")
        if kind == "power":
            functions.append(MonomialPower(Fraction(item["exponent"])))
        elif kind == "sqrt_poly":
            functions.append(SqrtPoly(tuple(item["coeffs"])))
        else:
            raise InvalidArgument(f"unknown basis function type {kind!r}")
    return BasisSet(tuple(functions))


def from_json(obj: Mapping) -> CoeffTensor:
    """Inverse of :meth:`CoeffTensor.to_json`."""
    basis = basis_from_json(obj["basis"])
    data = np.asarray(obj["data"], dtype=float)
    if obj.get("dtype") == "complex":
        data = data[..., 0] + 1j * data[..., 1]
    expected = {"vector": 1, "matrix": 2}.get(obj.get("shape"))
    if expected is not None and data.ndim != expected:
        raise InvalidArgument(f"shape {obj['shape']!r} does not match data with {data.ndim} axes")
    return CoeffTensor(basis, data)


# ---------------------------------------------------------------------------
# convolution and addition


def _validate_vec(a, name):
    a = _as_array(a)
    if a.ndim != 1 or a.size == 0:
        raise InvalidArgument(f"{name} must be a non-empty coefficient vector")
    return a


def conv_vec(a, b) -> np.ndarray:
    """Coefficient vector of the product of two descending-power polynomials."""
    a = _validate_vec(a, "a")
    b = _validate_vec(b, "b")
    return np.convolve(a, b)


def _validate_mat(m, name):
    m = _as_array(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.size == 0:
        raise InvalidArgument(f"{name} must be a non-empty square matrix, got shape {m.shape}")
    if np.any(np.tril(m, -1) != 0):
        raise InvalidArgument(f"{name} must be upper-triangular")
    return m


def _convolve_full(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.ndim == 1:
        return np.convolve(a, b)
    # direct summation, not FFT, so integer-valued inputs give exact products
    return scipy.signal.convolve(a, b, mode="full", method="direct")


def conv_mat(a, b) -> np.ndarray:
    """Coefficient matrix of the product of two bivariate polynomials.

    ``c[j, k] = sum_{p, q} a[p, q] * b[j - p, k - q]`` over legal subscripts.
    """
    a = _validate_mat(a, "A")
    b = _validate_mat(b, "B")
    return _convolve_full(a, b)


def _check_same_basis(a: CoeffTensor, b: CoeffTensor):
    if a.basis != b.basis:
        raise InvalidArgument(f"basis mismatch: {a.basis} vs {b.basis}")


def conv(a: CoeffTensor, b: CoeffTensor) -> CoeffTensor:
    """Product of two tensors over the same basis."""
    _check_same_basis(a, b)
    return CoeffTensor(a.basis, _convolve_full(a.data, b.data))


def add_aligned(a: CoeffTensor, b: CoeffTensor) -> CoeffTensor:
    """Sum of two tensors, the smaller aligned to the constant-term corner."""
    _check_same_basis(a, b)
    if a.size < b.size:
        a, b = b, a
    out = a.data.astype(np.result_type(a.data, b.data), copy=True)
    offset = a.size - b.size
    out[(slice(offset, None),) * out.ndim] += b.data
    return CoeffTensor(a.basis, out)


# ---------------------------------------------------------------------------
# reduction


def reduce(t: CoeffTensor) -> CoeffTensor:
    """Rewrite every ``phi_i ** p`` with ``p >= 2`` using the basis relations.

    Only basis functions that carry a relation are reduced (square roots of
    polynomials); powers of monomials are ordinary polynomial powers.
    """
    basis = t.basis
    relations = {}
    for i, f in enumerate(basis):
        rel = basis.relation(i)
        if rel is not None:
            relations[i] = rel
        elif isinstance(f, SqrtPoly) and t.max_power(i) >= 2:
            raise UnsupportedReduction(
                f"{f} appears squared but {basis} cannot express its radicand"
            )
    if not relations:
        return t
    pending = dict(t.terms())
    done: dict = {}
    while pending:
        e, c = pending.popitem()
        hit = next((i for i in relations if e[i] >= 2), None)
        if hit is None:
            done[e] = done.get(e, 0) + c
            continue
        base = list(e)
        base[hit] -= 2
        for re_, rc in relations[hit].items():
            ne = tuple(x + y for x, y in zip(base, re_))
            pending[ne] = pending.get(ne, 0) + c * rc
    return CoeffTensor.from_terms(basis, done)


# ---------------------------------------------------------------------------
# evaluation


def _horner(coeffs: np.ndarray, x):
    acc = np.zeros(np.shape(x), dtype=complex) + coeffs[0]
    for c in coeffs[1:]:
        acc = acc * x + c
    return acc


def evaluate_tensor(t: CoeffTensor, s):
    """Value of the polynomial at ``s`` (scalar or array)."""
    s = np.asarray(s, dtype=complex)
    if t.ndim == 1:
        return _horner(t.data, t.basis[0](s))
    phis = t.basis.evaluate(s)
    # Horner in phi_1 for every combination of the remaining exponents.
    groups: dict = {}
    for e, c in t.terms().items():
        groups.setdefault(e[1:], {})[e[0]] = c
    total = np.zeros(s.shape, dtype=complex)
    for rest, by_power in groups.items():
        top = max(by_power)
        coeffs = np.array([by_power.get(p, 0.0) for p in range(top, -1, -1)])
        term = _horner(coeffs, phis[0])
        for phi, p in zip(phis[1:], rest):
            if p:
                term = term * phi**p
        total = total + term
    return total


# ---------------------------------------------------------------------------
# transfer functions


@dataclass(frozen=True, eq=False)
class TransferFunction:
    """``num(s) / den(s)`` with both tensors over one basis."""

    num: CoeffTensor
    den: CoeffTensor
    normalization: str = "raw"

    def __post_init__(self):
        if self.num.basis != self.den.basis:
            raise InvalidArgument("numerator and denominator bases differ")
        if self.den.is_zero:
            raise InvalidArgument("denominator is the zero tensor")
        if self.normalization not in ("raw", "den-leading-one"):
            raise InvalidArgument(f"unknown normalization {self.normalization!r}")

    @classmethod
    def from_vectors(cls, num, den, basis: BasisSet = S_BASIS) -> "TransferFunction":
        return cls(CoeffTensor(basis, num), CoeffTensor(basis, den))

    @property
    def basis(self) -> BasisSet:
        return self.num.basis

    def __call__(self, s):
        return evaluate(self, s)

    def normalized(self) -> "TransferFunction":
        return normalize(self)

    def to_json(self) -> dict:
        return {
            "basis": self.basis.to_json(),
            "normalization": self.normalization,
            "num": self.num.to_json(),
            "den": self.den.to_json(),
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> "TransferFunction":
        return cls(from_json(obj["num"]), from_json(obj["den"]), obj.get("normalization", "raw"))

    def __repr__(self):
        return f"TransferFunction(num={self.num.data.tolist()}, den={self.den.data.tolist()}, basis={self.basis})"


def _raise_on_pole(den, s):
    bad = np.abs(den) < POLE_ATOL
    if np.any(bad):
        where = np.asarray(s)[bad] if np.ndim(s) else s
        raise PoleEvaluationError(f"denominator vanishes at s = {where}")


def evaluate(tf: TransferFunction, s):
    """``N(s) / D(s)``; raises :class:`PoleEvaluationError` where ``|D(s)| < 1e-300``.

    Univariate tensors with ``|phi(s)| > 1`` are evaluated through the
    reversed polynomials in ``1/phi`` so high degrees do not overflow.
    """
    s = np.asarray(s, dtype=complex)
    if tf.num.ndim == 1:
        num, den = tf.num.data, tf.den.data
        x = tf.basis[0](s)
        big = np.abs(x) > 1
        with np.errstate(divide="ignore", invalid="ignore"):
            y = np.where(big, 1 / np.where(big, x, 1), x)
            n_val = np.where(big, _horner(num[::-1], y), _horner(num, y))
            d_val = np.where(big, _horner(den[::-1], y), _horner(den, y))
            _raise_on_pole(d_val, s)
            shift = num.size - den.size
            ratio = n_val / d_val
            if shift:
                ratio = ratio * np.where(big, x, 1) ** float(shift)
        return ratio[()]
    n_val = evaluate_tensor(tf.num, s)
    d_val = evaluate_tensor(tf.den, s)
    _raise_on_pole(d_val, s)
    return (n_val / d_val)[()]


def normalize(tf: TransferFunction) -> TransferFunction:
    """Trim leading zeros and scale so the denominator's leading coefficient is 1."""
    den = tf.den.trim(NORMALIZE_RTOL)
    if den.is_zero:
        raise InvalidArgument("cannot normalize a zero denominator")
    num = tf.num.trim(NORMALIZE_RTOL)
    lead = den.leading(NORMALIZE_RTOL)
    # dividing (rather than multiplying by 1/lead) makes the leading entry exactly 1
    return TransferFunction(
        CoeffTensor(num.basis, num.data / lead), CoeffTensor(den.basis, den.data / lead), "den-leading-one"
    )


def _significant_terms(t: CoeffTensor, rtol: float) -> dict:
    scale = np.max(np.abs(t.data)) if t.data.size else 0.0
    return {e: c for e, c in t.terms().items() if abs(c) >= rtol * scale}


def cancel_common_power(tf: TransferFunction, rtol: float = NORMALIZE_RTOL) -> TransferFunction:
    """Divide out the largest monomial in the basis functions shared by num and den.

    The recurrences never cancel common factors, so an unreduced result such as
    ``s (a s + b) / (s (c s + d))`` keeps its factor ``s``.  This changes the
    function only at the roots of the cancelled factor.
    """
    num_terms = _significant_terms(tf.num, rtol)
    den_terms = _significant_terms(tf.den, rtol)
    if not num_terms:
        return tf
    k = len(tf.basis)
    common = [min(e[i] for e in list(num_terms) + list(den_terms)) for i in range(k)]
    if not any(common):
        return tf

    def shifted(terms):
        return CoeffTensor.from_terms(
            tf.basis, {tuple(x - c for x, c in zip(e, common)): v for e, v in terms.items()}
        )

    return TransferFunction(shifted(num_terms), shifted(den_terms), tf.normalization)


# ---------------------------------------------------------------------------
# changing basis


def express_in(t: CoeffTensor, target: BasisSet) -> CoeffTensor:
    """Re-encode ``t`` over ``target``.

    A monomial ``s**a`` maps onto a target monomial ``s**b`` when ``a/b`` is an
    integer; a square-root function maps onto a structurally equal one.
    """
    if t.basis == target:
        return t
    mapping = []
    for f in t.basis:
        mapping.append(_locate(f, target))
    k = len(target)
    terms: dict = {}
    for e, c in t.terms().items():
        ne = [0] * k
        for (at, mult), p in zip(mapping, e):
            ne[at] += mult * p
        ne = tuple(ne)
        terms[ne] = terms.get(ne, 0) + c
    return CoeffTensor.from_terms(target, terms)


def _locate(f: BasisFunction, target: BasisSet):
    for i, g in enumerate(target):
        if isinstance(f, MonomialPower) and isinstance(g, MonomialPower):
            ratio = f.exponent / g.exponent
            if ratio.denominator == 1:
                return i, int(ratio)
        elif isinstance(f, SqrtPoly) and isinstance(g, SqrtPoly) and f.matches(g):
            return i, 1
    raise InvalidArgument(f"{f} cannot be expressed over {target}")


def lift(poly_s: Sequence[Number], basis: BasisSet) -> CoeffTensor:
    """Tensor over ``basis`` for a polynomial in ``s`` given in descending powers."""
    return express_in(CoeffTensor(S_BASIS, list(poly_s)), basis)


def unify_bases(*bases: BasisSet) -> BasisSet:
    """Smallest basis over which every tensor on ``bases`` can be written.

    Monomials merge into one with the gcd of their exponents (placed first);
    square-root functions merge when structurally equal and are otherwise
    appended in order of appearance.
    """
    exps = [f.exponent for b in bases for f in b if isinstance(f, MonomialPower)]
    roots: list = []
    for b in bases:
        for f in b:
            if not isinstance(f, SqrtPoly):
                continue
            if any(f.matches(g) for g in roots):
                continue
            for g in roots:
                d = _coeff_distance(f, g)
                if d <= SQRT_CONFLICT_RTOL:
                    raise InvalidArgument(f"conflicting definitions {f} and {g} (relative gap {d:.1e})")
            roots.append(f)
    functions = []
    if exps:
        functions.append(MonomialPower(_fraction_gcd(exps)))
    functions.extend(roots)
    return BasisSet(tuple(functions))


def _fraction_gcd(values: Sequence[Fraction]) -> Fraction:
    num = 0
    den = 1
    for v in values:
        den = den * v.denominator // math.gcd(den, v.denominator)
    for v in values:
        num = math.gcd(num, v.numerator * (den // v.denominator))
    return Fraction(num, den)
