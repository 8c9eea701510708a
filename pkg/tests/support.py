"""Shared test helpers: independent decoders and printed-precision comparison."""

from __future__ import annotations

import math
from decimal import Decimal

import numpy as np
import sympy


def rel_err(a, b):
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    return np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-300))


def last_digit_unit(text: str) -> float:
    """Value of one unit in the last printed digit of ``text`` (e.g. "2.6e8" -> 1e7)."""
    exponent = Decimal(text).as_tuple().exponent
    return float(Decimal(1).scaleb(exponent))


def matches_printed(actual: float, text: str) -> bool:
    """``actual`` agrees with a printed decimal up to one unit in its last digit.

    One unit rather than half absorbs rounding slips in printed tables.
    """
    return abs(actual - float(text)) <= last_digit_unit(text) * (1 + 1e-9)


def same_sig_figs(actual: float, expected: float, digits: int) -> bool:
    if expected == 0:
        return abs(actual) < 10.0 ** (-digits)
    scale = 10.0 ** (math.floor(math.log10(abs(expected))) - digits + 1)
    return abs(actual - expected) <= 0.5 * scale * (1 + 1e-9) + 1e-12 * abs(expected)


# ---------------------------------------------------------------------------
# sympy oracle for the coefficient encoding


def tensor_to_sympy(data: np.ndarray, symbols):
    """Polynomial for a coefficient tensor, decoded from the documented exponent map.

    Entry ``(i_1, ..., i_k)`` of an ``n``-sided tensor multiplies
    ``x_1^(n-1-i_k) * x_2^(i_k - i_(k-1)) * ... * x_k^(i_2 - i_1)``.
    """
    data = np.asarray(data)
    n = data.shape[0]
    expr = sympy.Integer(0)
    for idx in np.ndindex(*data.shape):
        c = data[idx]
        if c == 0:
            continue
        exps = [n - 1 - idx[-1]] + [idx[len(idx) - j] - idx[len(idx) - j - 1] for j in range(1, len(idx))]
        term = sympy.nsimplify(float(c), rational=True) if float(c).is_integer() else sympy.Float(float(c), 30)
        for x, e in zip(symbols, exps):
            term *= x**e
        expr += term
    return sympy.expand(expr)


def sympy_to_dict(expr, symbols) -> dict:
    poly = sympy.Poly(expr, *symbols)
    return {tuple(int(e) for e in mon): float(c) for mon, c in zip(poly.monoms(), poly.coeffs())}


def tensor_terms(data: np.ndarray) -> dict:
    """Exponent dict of a tensor via the same documented map (no library code)."""
    x = sympy.symbols(f"x1:{np.ndim(data) + 1}")
    expr = tensor_to_sympy(data, x)
    return sympy_to_dict(expr, x) if expr != 0 else {}
