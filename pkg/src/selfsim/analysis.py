"""What to do with a transfer function once you have it.

* :func:`disturbance` isolates the effect of a change of condition as a
  multiplicative factor ``Gb = Ga * delta``.
* :func:`zeros_poles` extracts the roots of integer-order transfer functions.
* :func:`approx_constants` and :func:`build_H` turn the finite electrical
  ladder into a rational approximation of ``sqrt(s^2 + beta*s + gamma)``.
* :func:`convergence_sweep` tabulates how fast finite networks approach the
  infinite one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument, NoSolutionError, UnsupportedBasis
from .models import ELECTRICAL_LADDER, ELadderConstants
from .netcore import EMPTY, DamageCase, NetworkModel, freq_fin, freq_inf, tran_fin
from .polyalg import (
    NORMALIZE_RTOL,
    S_BASIS,
    CoeffTensor,
    TransferFunction,
    express_in,
    unify_bases,
)

__all__ = [
    "Disturbance",
    "disturbance",
    "RootSet",
    "zeros_poles",
    "approx_constants",
    "target_function",
    "build_H",
    "approximation_error",
    "ConvergenceTable",
    "convergence_sweep",
]


# ---------------------------------------------------------------------------
# multiplicative disturbance


@dataclass(frozen=True)
class Disturbance:
    """``delta = Gb / Ga`` kept as the unreduced ratio ``Nb*Da / (Na*Db)``."""

    delta: TransferFunction

    @property
    def basis(self):
        return self.delta.basis

    def __call__(self, s):
        return self.delta(s)


def disturbance(ga: TransferFunction, gb: TransferFunction) -> Disturbance:
    """Multiplicative disturbance taking ``ga`` to ``gb``.

    The two transfer functions are first rewritten over the union of their
    bases, e.g. ``{s}`` and ``{s^(1/2)}`` become ``{s^(1/2)}``.
    """
    basis = unify_bases(ga.basis, gb.basis)
    na, da = express_in(ga.num, basis), express_in(ga.den, basis)
    nb, db = express_in(gb.num, basis), express_in(gb.den, basis)
    return Disturbance(TransferFunction(nb * da, na * db).normalized())


# ---------------------------------------------------------------------------
# zeros and poles


@dataclass(frozen=True)
class RootSet:
    """Zeros and poles with multiplicity.

    ``suspect_*`` flag roots in the open right half-plane; the shipped networks
    are passive, so such roots at high degree are round-off rather than physics.
    ``*_residual`` hold the relative backward error ``|p(r)| / sum |a_i| |r|^i``
    of each root ``r``.  ``ill_conditioned`` marks degrees above
    :data:`ILL_CONDITIONED_DEGREE`, where roots may be far from exact.
    """

    zeros: np.ndarray
    poles: np.ndarray
    zero_residual: np.ndarray
    pole_residual: np.ndarray
    gain: float

    @property
    def ill_conditioned(self) -> bool:
        return max(self.zeros.size, self.poles.size) > ILL_CONDITIONED_DEGREE

    @property
    def suspect_zeros(self) -> np.ndarray:
        return self.zeros.real > 0

    @property
    def suspect_poles(self) -> np.ndarray:
        return self.poles.real > 0

    def to_json(self) -> dict:
        def pairs(values):
            return [[float(v.real), float(v.imag)] for v in values]

        return {
            "gain": float(self.gain),
            "zeros": pairs(self.zeros),
            "poles": pairs(self.poles),
            "zeros_suspect": [bool(x) for x in self.suspect_zeros],
            "poles_suspect": [bool(x) for x in self.suspect_poles],
            "ill_conditioned": self.ill_conditioned,
            "max_residual": float(max(np.max(self.zero_residual, initial=0.0), np.max(self.pole_residual, initial=0.0))),
        }


# roots of degree above this are reported but numerically fragile
ILL_CONDITIONED_DEGREE = 40


def _backward_error(coeffs: np.ndarray, roots: np.ndarray) -> np.ndarray:
    # large roots go through the reversed polynomial in 1/r so nothing overflows
    mags = np.abs(coeffs)
    out = np.empty(roots.shape)
    for i, r in enumerate(roots):
        if abs(r) > 1:
            c, m, x = coeffs[::-1], mags[::-1], 1 / r
        else:
            c, m, x = coeffs, mags, r
        out[i] = abs(np.polyval(c, x)) / np.polyval(m, abs(x))
    return out


def _roots(coeffs: np.ndarray):
    # numpy builds the companion matrix; LAPACK balances it before the eigensolve
    roots = np.roots(coeffs).astype(complex)
    return roots, _backward_error(coeffs, roots)


def zeros_poles(tf: TransferFunction) -> RootSet:
    """Roots of the numerator and denominator of an integer-order transfer function."""
    if tf.basis != S_BASIS:
        raise UnsupportedBasis(f"root extraction needs the basis {{s}}, got {tf.basis}")
    num = tf.num.trim(NORMALIZE_RTOL).data
    den = tf.den.trim(NORMALIZE_RTOL).data
    zeros, zres = _roots(num) if np.any(num) else (np.zeros(0, complex), np.zeros(0))
    poles, pres = _roots(den)
    gain = num[0] / den[0]
    return RootSet(zeros, poles, zres, pres, float(np.real(gain)))


# ---------------------------------------------------------------------------
# rational approximation of sqrt(s^2 + beta*s + gamma)


def approx_constants(beta: float, gamma: float, r1: float = 1.0):
    """Ladder constants ``(r2, c)`` whose radicand is ``s^2 + beta*s + gamma``.

    Eliminating ``c`` from ``(2 r1 + 4 r2)/(r1 r2 c) = beta`` and
    ``(r1 + 4 r2)/(r1 r2^2 c^2) = gamma`` leaves
    ``16 gamma r2^2 + 4 r1 (4 gamma - beta^2) r2 + r1^2 (4 gamma - beta^2) = 0``,
    which has exactly one positive root when ``beta^2 > 4 gamma`` and none
    otherwise.
    """
    for name, value in (("beta", beta), ("gamma", gamma), ("r1", r1)):
        if not (math.isfinite(value) and value > 0):
            raise InvalidArgument(f"{name} must be positive, got {value!r}")
    d = beta * beta - 4.0 * gamma
    if d <= 0:
        raise NoSolutionError(
            f"no positive ladder constants: the radicand needs beta^2 > 4*gamma (got beta^2 - 4*gamma = {d:g})"
        )
    # r2 = r1 * x with 16 gamma x^2 - 4 d x - d = 0; take the positive root
    a, b, cc = 16.0 * gamma, -4.0 * d, -d
    x = (-b + math.sqrt(b * b - 4 * a * cc)) / (2 * a)
    r2 = r1 * x
    c = (2 * r1 + 4 * r2) / (beta * r1 * r2)
    return r2, c


def target_function(beta: float, gamma: float):
    """``F(s) = sqrt(s^2 + beta*s + gamma)`` on the principal branch."""

    def f(s):
        return np.sqrt(np.asarray(s) ** 2 + beta * np.asarray(s) + gamma)

    return f


def build_H(g: int, c: ELadderConstants) -> TransferFunction:
    """Rational approximation ``H_g = G_g (2 s / r1 + 2/(r1 r2 c)) - s - 1/(r2 c)``.

    ``G_g`` is the undamaged ``g``-generation ladder impedance; as ``g`` grows
    ``H_g`` tends to the square root appearing in the infinite ladder.
    """
    gtf = tran_fin(ELECTRICAL_LADDER, EMPTY, c, g)
    scale = CoeffTensor.vector([2.0 / c.r1, 2.0 / (c.r1 * c.r2 * c.c)])
    shift = CoeffTensor.vector([1.0, 1.0 / (c.r2 * c.c)])
    num = gtf.num * scale - gtf.den * shift
    return TransferFunction(num, gtf.den).normalized()


def approximation_error(h: TransferFunction, beta: float, gamma: float, omega) -> np.ndarray:
    """Pointwise ``|H(i w) - F(i w)| / |F(i w)|``."""
    s = 1j * np.asarray(omega, dtype=float)
    f = target_function(beta, gamma)(s)
    return np.abs(h(s) - f) / np.abs(f)


# ---------------------------------------------------------------------------
# convergence to the infinite network


@dataclass(frozen=True)
class ConvergenceTable:
    """``error[i, j] = |G_{g_list[i]}(i w_j) - G_inf(i w_j)|``."""

    g_list: tuple
    omega: np.ndarray
    error: np.ndarray
    infinite: np.ndarray


def _is_infinite(g) -> bool:
    return g == math.inf or (isinstance(g, str) and g.lower() in ("inf", "infinite"))


def convergence_sweep(model: NetworkModel, damage: DamageCase, undamaged, g_list, omega) -> ConvergenceTable:
    """Distance between finite responses and the infinite one on a frequency grid."""
    w = np.atleast_1d(np.asarray(omega, dtype=float))
    reference = np.atleast_1d(freq_inf(model, damage, undamaged, w))
    rows = []
    for g in g_list:
        if _is_infinite(g):
            rows.append(np.zeros(w.shape))
            continue
        rows.append(np.abs(np.atleast_1d(freq_fin(model, damage, undamaged, w, int(g))) - reference))
    return ConvergenceTable(tuple(g_list), w, np.array(rows).reshape(len(rows), w.size), reference)
