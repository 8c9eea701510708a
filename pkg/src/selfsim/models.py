"""The three shipped network families.

* ``tree``: spring-damper tree without intermediate masses; quantity of
  interest is the compliance ``(X_11 - X_last) / F``.
* ``electrical_ladder``: series resistor, shunt resistor and capacitor per
  generation; quantity of interest is the input impedance.
* ``mechanical_ladder``: masses coupled by PID controllers, each also damped
  against the constant-speed last vehicle; quantity of interest is ``X / F``.

Each family provides numeric hooks (``g1``, ``gr``, ``gund``) working on
complex arrays, and coefficient hooks (``c1``, ``cr``, ``cund``) working on
:class:`~selfsim.polyalg.CoeffTensor`.  The recurrence hooks lift their
``s``-polynomial multipliers into whatever basis the sub-network tensors use,
so the same ``cr`` serves finite and infinite networks.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, fields

import numpy as np

from .errors import InvalidArgument, PoleEvaluationError
from .netcore import ComponentId, NetworkModel
from .polyalg import (
    BasisSet,
    CoeffTensor,
    MonomialPower,
    SqrtPoly,
    TransferFunction,
    lift,
)

__all__ = [
    "TreeConstants",
    "ELadderConstants",
    "MLadderConstants",
    "TREE",
    "ELECTRICAL_LADDER",
    "MECHANICAL_LADDER",
    "MODELS",
    "get_model",
    "eladder_phi2",
    "mladder_radicand",
]


def _checked_positive(obj):
    for f in fields(obj):
        value = getattr(obj, f.name)
        if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
            raise InvalidArgument(f"{type(obj).__name__}.{f.name} must be positive, got {value!r}")
        object.__setattr__(obj, f.name, float(value))


def _div(num, den):
    den = np.asarray(den)
    if np.any(np.abs(den) < 1e-300):
        raise PoleEvaluationError("recurrence denominator vanishes")
    return num / den


def _nonzero_s(s):
    if np.any(np.asarray(s) == 0):
        raise PoleEvaluationError("the infinite network is singular at s = 0")


# ---------------------------------------------------------------------------
# tree


@dataclass(frozen=True)
class TreeConstants:
    """Spring constant ``k`` (N/m) and damper constant ``b`` (N s/m)."""

    k: float = 2.0
    b: float = 1.0

    def __post_init__(self):
        _checked_positive(self)


def tree_g1(c: TreeConstants, s):
    return _div(1.0, c.k + c.b * s)


def tree_gr(c: TreeConstants, subs, s):
    # spring in series with sub-network 1, damper in series with sub-network 2
    g1, g2 = subs
    kbs = c.k * c.b * s
    num = kbs * g1 * g2 + c.k * g1 + c.b * s * g2 + 1
    den = kbs * (g1 + g2) + c.k + c.b * s
    return _div(num, den)


def tree_gund(c: TreeConstants, s):
    _nonzero_s(s)
    return 1.0 / (math.sqrt(c.k * c.b) * np.sqrt(s))


def tree_basis(c: TreeConstants = None) -> BasisSet:
    return BasisSet((MonomialPower("1/2"),))


def tree_c1(c: TreeConstants) -> TransferFunction:
    return TransferFunction.from_vectors([1.0], [c.b, c.k])


def tree_cr(c: TreeConstants, subs) -> TransferFunction:
    (n1, d1), (n2, d2) = [(t.num, t.den) for t in subs]
    basis = n1.basis
    kbs = lift([c.k * c.b, 0.0], basis)
    bs = lift([c.b, 0.0], basis)
    bs_k = lift([c.b, c.k], basis)
    num = kbs * n1 * n2 + c.k * (n1 * d2) + bs * n2 * d1 + d1 * d2
    den = kbs * (n1 * d2 + n2 * d1) + bs_k * d1 * d2
    return TransferFunction(num, den)


def tree_cund(c: TreeConstants) -> TransferFunction:
    return TransferFunction.from_vectors([1.0], [math.sqrt(c.k * c.b), 0.0], tree_basis(c))


_TREE_LABEL = re.compile(r"^(k|b)_?\{?\s*(\d+)\s*,\s*(\d+)\s*\}?$")


def _tree_parse(label: str) -> ComponentId:
    m = _TREE_LABEL.match(label.strip())
    if not m:
        raise InvalidArgument(f"not a tree component label: {label!r} (expected e.g. 'k_{{2,1}}')")
    return ComponentId(m.group(1), int(m.group(2)), int(m.group(3)))


def _tree_format(cid: ComponentId) -> str:
    return f"{cid.kind}_{{{cid.generation},{cid.branch}}}"


# ---------------------------------------------------------------------------
# electrical ladder


@dataclass(frozen=True)
class ELadderConstants:
    """Series resistance ``r1`` and shunt resistance ``r2`` (ohm), capacitance ``c`` (F)."""

    r1: float = 10.0
    r2: float = 1000.0
    c: float = 1e-4

    def __post_init__(self):
        _checked_positive(self)


def eladder_g1(c: ELadderConstants, s):
    return _div(c.r1 * c.r2 * c.c * s + c.r1 + c.r2, c.r2 * c.c * s + 1)


def eladder_gr(c: ELadderConstants, subs, s):
    (g,) = subs
    num = (c.r1 * c.r2 * c.c * s + c.r1 + c.r2) * g + c.r1 * c.r2
    den = (c.r2 * c.c * s + 1) * g + c.r2
    return _div(num, den)


def eladder_phi2(c: ELadderConstants) -> SqrtPoly:
    """``sqrt(s^2 + (2 r1 + 4 r2)/(r1 r2 c) s + (r1 + 4 r2)/(r1 r2^2 c^2))``."""
    lin = (2 * c.r1 + 4 * c.r2) / (c.r1 * c.r2 * c.c)
    const = (c.r1 + 4 * c.r2) / (c.r1 * c.r2**2 * c.c**2)
    return SqrtPoly((1.0, lin, const))


def eladder_basis(c: ELadderConstants) -> BasisSet:
    return BasisSet((MonomialPower(1), eladder_phi2(c)))


def eladder_gund(c: ELadderConstants, s):
    phi2 = eladder_phi2(c)(s)
    a = 1.0 / (c.r2 * c.c)
    return _div(s + a + phi2, (2.0 / c.r1) * (s + a))


def eladder_c1(c: ELadderConstants) -> TransferFunction:
    return TransferFunction.from_vectors([c.r1 * c.r2 * c.c, c.r1 + c.r2], [c.r2 * c.c, 1.0])


def eladder_cr(c: ELadderConstants, subs) -> TransferFunction:
    ((n, d),) = [(t.num, t.den) for t in subs]
    basis = n.basis
    series = lift([c.r1 * c.r2 * c.c, c.r1 + c.r2], basis)
    shunt = lift([c.r2 * c.c, 1.0], basis)
    num = series * n + (c.r1 * c.r2) * d
    den = shunt * n + c.r2 * d
    return TransferFunction(num, den)


def eladder_cund(c: ELadderConstants) -> TransferFunction:
    basis = eladder_basis(c)
    a = 1.0 / (c.r2 * c.c)
    num = CoeffTensor(basis, [[1.0, 1.0], [0.0, a]])
    den = CoeffTensor(basis, [[2.0 / c.r1, 0.0], [0.0, 2.0 / (c.r1 * c.r2 * c.c)]])
    return TransferFunction(num, den)


_ER_LABEL = re.compile(r"^r_?\{?\s*(\d+)\s*,\s*([12])\s*\}?$")
_EC_LABEL = re.compile(r"^c_?\{?\s*(\d+)\s*\}?$")


def _eladder_parse(label: str) -> ComponentId:
    text = label.strip()
    m = _ER_LABEL.match(text)
    if m:
        return ComponentId(f"r{m.group(2)}", int(m.group(1)))
    m = _EC_LABEL.match(text)
    if m:
        return ComponentId("c", int(m.group(1)))
    raise InvalidArgument(f"not an electrical-ladder label: {label!r} (expected 'r_{{g,1}}', 'r_{{g,2}}' or 'c_{{g}}')")


def _eladder_format(cid: ComponentId) -> str:
    if cid.kind == "c":
        return f"c_{{{cid.generation}}}"
    return f"r_{{{cid.generation},{cid.kind[1]}}}"


# ---------------------------------------------------------------------------
# mechanical ladder


@dataclass(frozen=True)
class MLadderConstants:
    """Mass ``m`` (kg), PID gains ``kp``, ``ki``, ``kd`` and follow-damper ``b`` (N s/m)."""

    m: float = 1.0
    kp: float = 10.0
    ki: float = 0.5
    kd: float = 2.0
    b: float = 1.0

    def __post_init__(self):
        _checked_positive(self)

    def pid(self, s):
        """``K(s) = kp + ki/s + kd*s``."""
        return self.kp + self.ki / s + self.kd * s


def mladder_g1(c: MLadderConstants, s):
    _nonzero_s(s)
    return _div(1.0, c.m * s**2 + c.b * s + c.pid(s))


def mladder_gr(c: MLadderConstants, subs, s):
    _nonzero_s(s)
    (g,) = subs
    k = c.pid(s)
    inner = g * k + 1
    return _div(inner, (c.m * s**2 + c.b * s) * inner + k)


def mladder_radicand(c: MLadderConstants) -> tuple:
    """Coefficients of ``A(s)**2`` in descending powers of ``s``."""
    m, b, kp, ki, kd = c.m, c.b, c.kp, c.ki, c.kd
    return (
        m * m,
        2 * m * b + 4 * m * kd,
        b * b + 4 * m * kp + 4 * b * kd,
        4 * (m * ki + b * kp),
        4 * b * ki,
    )


def mladder_basis(c: MLadderConstants) -> BasisSet:
    return BasisSet((MonomialPower(1), SqrtPoly(mladder_radicand(c))))


def _mladder_und_den(c: MLadderConstants):
    m, b, kp, ki, kd = c.m, c.b, c.kp, c.ki, c.kd
    return [2 * m * kd, 2 * (m * kp + b * kd), 2 * (m * ki + b * kp), 2 * b * ki]


def mladder_gund(c: MLadderConstants, s):
    _nonzero_s(s)
    a = SqrtPoly(mladder_radicand(c))(s)
    den = np.polyval(_mladder_und_den(c), s)
    return _div(-c.m * s**2 - c.b * s + a, den)


def mladder_c1(c: MLadderConstants) -> TransferFunction:
    return TransferFunction.from_vectors([1.0, 0.0], [c.m, c.b + c.kd, c.kp, c.ki])


def mladder_cr(c: MLadderConstants, subs) -> TransferFunction:
    ((n, d),) = [(t.num, t.den) for t in subs]
    basis = n.basis
    s_pid = lift([c.kd, c.kp, c.ki], basis)
    s_only = lift([1.0, 0.0], basis)
    inertia = lift([c.m, c.b, 0.0], basis)
    full = lift([c.m, c.b + c.kd, c.kp, c.ki], basis)
    num = s_pid * n + s_only * d
    den = inertia * s_pid * n + full * d
    return TransferFunction(num, den)


def mladder_cund(c: MLadderConstants) -> TransferFunction:
    basis = mladder_basis(c)
    num = CoeffTensor(basis, [[-c.m, 0.0, 0.0], [0.0, -c.b, 1.0], [0.0, 0.0, 0.0]])
    den = CoeffTensor(basis, np.diag(_mladder_und_den(c)))
    return TransferFunction(num, den)


_MK_LABEL = re.compile(r"^k_?\{?\s*([pid])\s*(\d+)\s*\}?$")
_MB_LABEL = re.compile(r"^b_?\{?\s*(\d+)\s*\}?$")


def _mladder_parse(label: str) -> ComponentId:
    text = label.strip()
    m = _MK_LABEL.match(text)
    if m:
        return ComponentId(f"k{m.group(1)}", int(m.group(2)))
    m = _MB_LABEL.match(text)
    if m:
        return ComponentId("b", int(m.group(1)))
    raise InvalidArgument(f"not a mechanical-ladder label: {label!r} (expected 'k_{{p2}}', 'k_{{i2}}', 'k_{{d2}}' or 'b_{{2}}')")


def _mladder_format(cid: ComponentId) -> str:
    if cid.kind == "b":
        return f"b_{{{cid.generation}}}"
    return f"k_{{{cid.kind[1]}{cid.generation}}}"


# ---------------------------------------------------------------------------
# registry


TREE = NetworkModel(
    name="tree",
    n_sub=2,
    alphabet=("k", "b"),
    constants_type=TreeConstants,
    g1=tree_g1,
    gr=tree_gr,
    gund=tree_gund,
    c1=tree_c1,
    cr=tree_cr,
    cund=tree_cund,
    infinite_basis=tree_basis,
    parse_label=_tree_parse,
    format_label=_tree_format,
)

ELECTRICAL_LADDER = NetworkModel(
    name="electrical_ladder",
    n_sub=1,
    alphabet=("r1", "r2", "c"),
    constants_type=ELadderConstants,
    g1=eladder_g1,
    gr=eladder_gr,
    gund=eladder_gund,
    c1=eladder_c1,
    cr=eladder_cr,
    cund=eladder_cund,
    infinite_basis=eladder_basis,
    parse_label=_eladder_parse,
    format_label=_eladder_format,
)

MECHANICAL_LADDER = NetworkModel(
    name="mechanical_ladder",
    n_sub=1,
    alphabet=("kp", "ki", "kd", "b"),
    constants_type=MLadderConstants,
    g1=mladder_g1,
    gr=mladder_gr,
    gund=mladder_gund,
    c1=mladder_c1,
    cr=mladder_cr,
    cund=mladder_cund,
    infinite_basis=mladder_basis,
    parse_label=_mladder_parse,
    format_label=_mladder_format,
)

MODELS = {m.name: m for m in (TREE, ELECTRICAL_LADDER, MECHANICAL_LADDER)}


def get_model(name: str) -> NetworkModel:
    try:
        return MODELS[name]
    except KeyError:
        raise InvalidArgument(f"unknown model {name!r}; choose from {sorted(MODELS)}") from None
