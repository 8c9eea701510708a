"""Model-agnostic recursive engines for self-similar networks.

The four engines share one shape.  Split the damage case into the
first-generation part and one part per sub-network, scale the first-generation
constants, and combine the sub-networks' results with the model's recurrence.
The recursion bottoms out at the one-generation formula (finite networks) or at
the undamaged closed form once a sub-network carries no damage (infinite
networks).
"""

from __future__ import annotations

import contextlib
import dataclasses
import sys
from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Sequence

import numpy as np

from .errors import CoefficientOverflow, InvalidArgument
from .polyalg import S_BASIS, BasisSet, TransferFunction

__all__ = [
    "ComponentId",
    "DamageCase",
    "EMPTY",
    "NetworkModel",
    "OpCounter",
    "partition",
    "get_g1_constants",
    "freq_fin",
    "tran_fin",
    "freq_inf",
    "tran_inf",
    "random_damage",
]


@dataclass(frozen=True, order=True)
class ComponentId:
    """One component: its kind, generation (1-based) and branch within the generation."""

    kind: str
    generation: int
    branch: int = 1

    def __post_init__(self):
        if int(self.generation) != self.generation or self.generation < 1:
            raise InvalidArgument(f"generation must be a positive integer, got {self.generation!r}")
        if int(self.branch) != self.branch or self.branch < 1:
            raise InvalidArgument(f"branch must be a positive integer, got {self.branch!r}")
        object.__setattr__(self, "generation", int(self.generation))
        object.__setattr__(self, "branch", int(self.branch))


@dataclass(frozen=True)
class DamageCase:
    """Damaged components and their multiplicative factors.

    Factors must be positive.  Values in ``(0, 1]`` weaken a component, ``1`` is a
    no-op and values above ``1`` strengthen it.
    """

    entries: tuple = ()

    def __post_init__(self):
        entries = tuple((cid, float(eps)) for cid, eps in self.entries)
        seen = set()
        for cid, eps in entries:
            if not isinstance(cid, ComponentId):
                raise InvalidArgument(f"damage entries need ComponentId keys, got {cid!r}")
            if not np.isfinite(eps) or eps <= 0:
                raise InvalidArgument(f"damage factor for {cid} must be positive and finite, got {eps}")
            if cid in seen:
                raise InvalidArgument(f"duplicate damage entry for {cid}")
            seen.add(cid)
        object.__setattr__(self, "entries", entries)

    @classmethod
    def of(cls, model: "NetworkModel", labels: Sequence[str], factors: Sequence[float]) -> "DamageCase":
        """Build a case from component labels such as ``"k_{2,1}"`` or ``"r_{3,2}"``."""
        if len(labels) != len(factors):
            raise InvalidArgument("labels and factors must have equal length")
        case = cls(tuple((model.parse_label(label), eps) for label, eps in zip(labels, factors)))
        model.validate(case)
        return case

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __bool__(self):
        return bool(self.entries)

    @property
    def depth(self) -> int:
        """Deepest damaged generation (0 when undamaged)."""
        return max((cid.generation for cid, _ in self.entries), default=0)

    def factors(self) -> dict:
        return dict(self.entries)

    def label(self, model: "NetworkModel") -> str:
        names = ", ".join(model.format_label(cid) for cid, _ in self.entries)
        values = ", ".join(f"{eps:g}" for _, eps in self.entries)
        return f"([{names}], [{values}])"


EMPTY = DamageCase()


@dataclass(frozen=True)
class NetworkModel:
    """Everything the engines need to know about one network family.

    ``g1``/``gr``/``gund`` are the numeric one-generation formula, recurrence and
    undamaged infinite closed form; ``c1``/``cr``/``cund`` are their coefficient
    counterparts.  Per-instance constants are frozen dataclasses whose field
    names include every kind in ``alphabet``.
    """

    name: str
    n_sub: int
    alphabet: tuple
    constants_type: type
    g1: Callable
    gr: Callable
    gund: Callable
    c1: Callable
    cr: Callable
    cund: Callable
    infinite_basis: Callable[[Any], BasisSet]
    parse_label: Callable[[str], ComponentId]
    format_label: Callable[[ComponentId], str]
    finite_basis: BasisSet = S_BASIS

    def branch_count(self, generation: int) -> int:
        return self.n_sub ** (generation - 1)

    def validate_id(self, cid: ComponentId) -> None:
        if cid.kind not in self.alphabet:
            raise InvalidArgument(f"{self.name} has no component kind {cid.kind!r} (expected one of {self.alphabet})")
        limit = self.branch_count(cid.generation)
        if cid.branch > limit:
            raise InvalidArgument(
                f"{self.name} generation {cid.generation} has {limit} branch(es); got branch {cid.branch}"
            )

    def validate(self, damage: DamageCase) -> None:
        for cid, _ in damage:
            self.validate_id(cid)

    def defaults(self):
        return self.constants_type()


@dataclass
class OpCounter:
    """Tally of model-hook invocations made by one engine run."""

    calls: Counter = field(default_factory=Counter)

    def bump(self, hook: str) -> None:
        self.calls[hook] += 1

    @property
    def total(self) -> int:
        return sum(self.calls.values())


# ---------------------------------------------------------------------------
# damage bookkeeping


def partition(damage: DamageCase, model: NetworkModel):
    """Split ``damage`` into the generation-1 part and one case per sub-network.

    A generation-``g`` component (``g >= 2``) on branch ``j`` belongs to
    sub-network ``(j-1) // w`` with new branch ``(j-1) % w + 1``, where
    ``w = n_sub ** (g-2)`` is the width of one sub-network at that depth.
    """
    model.validate(damage)
    first = []
    subs = [[] for _ in range(model.n_sub)]
    for cid, eps in damage:
        if cid.generation == 1:
            first.append((cid, eps))
            continue
        width = model.n_sub ** (cid.generation - 2)
        which, offset = divmod(cid.branch - 1, width)
        subs[which].append((ComponentId(cid.kind, cid.generation - 1, offset + 1), eps))
    return DamageCase(tuple(first)), [DamageCase(tuple(s)) for s in subs]


def get_g1_constants(first_gen: DamageCase, undamaged):
    """Undamaged constants with each listed first-generation component scaled."""
    changes = {}
    for cid, eps in first_gen:
        if cid.generation != 1:
            raise InvalidArgument(f"{cid} is not a first-generation component")
        changes[cid.kind] = eps * getattr(undamaged, cid.kind)
    return dataclasses.replace(undamaged, **changes) if changes else undamaged


# ---------------------------------------------------------------------------
# engines


@contextlib.contextmanager
def _recursion_room(depth: int):
    old = sys.getrecursionlimit()
    needed = 3 * depth + 200
    if needed > old:
        sys.setrecursionlimit(needed)
    try:
        yield
    finally:
        sys.setrecursionlimit(old)


def _laplace(omega) -> np.ndarray:
    w = np.asarray(omega, dtype=float)
    if not np.all(np.isfinite(w)) or np.any(w <= 0):
        raise InvalidArgument("angular frequencies must be positive and finite")
    return 1j * w


def _check_finite_args(model, damage, generations):
    if int(generations) != generations or generations < 1:
        raise InvalidArgument(f"generations must be a positive integer, got {generations!r}")
    model.validate(damage)
    if damage.depth > generations:
        raise InvalidArgument(f"damage reaches generation {damage.depth} but the network has {generations}")


def freq_fin(model: NetworkModel, damage: DamageCase, undamaged, omega, generations: int, *, counter=None):
    """Frequency response ``G(i*omega)`` of a finite ``generations``-deep network.

    ``omega`` may be a scalar or an array; the result has the same shape.
    """
    _check_finite_args(model, damage, generations)
    s = _laplace(omega)
    with _recursion_room(generations):
        return _freq_fin(model, damage, undamaged, s, int(generations), counter)[()]


def _chain_constants(model, damage, undamaged, generations=None):
    # single-sub-network models recurse along a chain; walk it with a loop
    levels = []
    case = damage
    while (len(levels) < generations) if generations is not None else bool(case):
        first, (case,) = partition(case, model) if case else (EMPTY, [EMPTY])
        levels.append(get_g1_constants(first, undamaged))
    return levels


def _fold_chain(levels, base, step, counter, names):
    value = base()
    if counter is not None:
        counter.bump(names[0])
    for cst in reversed(levels):
        value = step(cst, [value])
        if counter is not None:
            counter.bump(names[1])
    return value


def _freq_fin(model, damage, undamaged, s, generations, counter):
    if model.n_sub == 1:
        levels = _chain_constants(model, damage, undamaged, generations)
        return _fold_chain(
            levels[:-1], lambda: model.g1(levels[-1], s), lambda c, v: model.gr(c, v, s), counter, ("g1", "gr")
        )
    first, subs = partition(damage, model) if damage else (EMPTY, [EMPTY] * model.n_sub)
    g1cst = get_g1_constants(first, undamaged)
    if generations == 1:
        if counter is not None:
            counter.bump("g1")
        return model.g1(g1cst, s)
    sub_values = [_freq_fin(model, sub, undamaged, s, generations - 1, counter) for sub in subs]
    if counter is not None:
        counter.bump("gr")
    return model.gr(g1cst, sub_values, s)


def tran_fin(model: NetworkModel, damage: DamageCase, undamaged, generations: int, *, counter=None) -> TransferFunction:
    """Rational transfer function of a finite network, normalized.

    Raises :class:`CoefficientOverflow` when the coefficients do not fit in
    double precision (trees beyond nine generations).
    """
    _check_finite_args(model, damage, generations)
    with _recursion_room(generations), np.errstate(over="ignore", invalid="ignore"):
        tf = _tran_fin(model, damage, undamaged, int(generations), counter)
    if not (np.all(np.isfinite(tf.num.data)) and np.all(np.isfinite(tf.den.data))):
        raise CoefficientOverflow(
            f"{model.name} coefficients for {generations} generations exceed the double-precision range"
        )
    return tf


def _tran_fin(model, damage, undamaged, generations, counter):
    if model.n_sub == 1:
        levels = _chain_constants(model, damage, undamaged, generations)
        return _fold_chain(
            levels[:-1],
            lambda: model.c1(levels[-1]).normalized(),
            lambda c, v: model.cr(c, v).normalized(),
            counter,
            ("c1", "cr"),
        )
    first, subs = partition(damage, model) if damage else (EMPTY, [EMPTY] * model.n_sub)
    g1cst = get_g1_constants(first, undamaged)
    if generations == 1:
        if counter is not None:
            counter.bump("c1")
        return model.c1(g1cst).normalized()
    sub_tfs = [_tran_fin(model, sub, undamaged, generations - 1, counter) for sub in subs]
    if counter is not None:
        counter.bump("cr")
    return model.cr(g1cst, sub_tfs).normalized()


def freq_inf(model: NetworkModel, damage: DamageCase, undamaged, omega, *, counter=None):
    """Frequency response of the infinite network with finitely many damaged components."""
    model.validate(damage)
    s = _laplace(omega)
    with _recursion_room(damage.depth + 1):
        return _freq_inf(model, damage, undamaged, s, counter)[()]


def _freq_inf(model, damage, undamaged, s, counter):
    if model.n_sub == 1:
        levels = _chain_constants(model, damage, undamaged)
        return _fold_chain(levels, lambda: model.gund(undamaged, s), lambda c, v: model.gr(c, v, s), counter, ("gund", "gr"))
    if not damage:
        if counter is not None:
            counter.bump("gund")
        return model.gund(undamaged, s)
    first, subs = partition(damage, model)
    sub_values = [_freq_inf(model, sub, undamaged, s, counter) for sub in subs]
    g1cst = get_g1_constants(first, undamaged)
    if counter is not None:
        counter.bump("gr")
    return model.gr(g1cst, sub_values, s)


def tran_inf(model: NetworkModel, damage: DamageCase, undamaged, *, counter=None) -> TransferFunction:
    """Transfer function of the damaged infinite network over the model's infinite basis."""
    model.validate(damage)
    with _recursion_room(damage.depth + 1):
        return _tran_inf(model, damage, undamaged, counter)


def _tran_inf(model, damage, undamaged, counter):
    if model.n_sub == 1:
        levels = _chain_constants(model, damage, undamaged)
        return _fold_chain(
            levels, lambda: model.cund(undamaged), lambda c, v: model.cr(c, v).normalized(), counter, ("cund", "cr")
        )
    if not damage:
        if counter is not None:
            counter.bump("cund")
        return model.cund(undamaged)
    first, subs = partition(damage, model)
    sub_tfs = [_tran_inf(model, sub, undamaged, counter) for sub in subs]
    g1cst = get_g1_constants(first, undamaged)
    if counter is not None:
        counter.bump("cr")
    return model.cr(g1cst, sub_tfs).normalized()


# ---------------------------------------------------------------------------
# sampling


def random_damage(
    model: NetworkModel,
    rng: np.random.Generator,
    max_depth: int = 4,
    max_entries: int = 4,
    eps_range: Iterable[float] = (0.05, 1.0),
) -> DamageCase:
    """Random damage case with at most ``max_entries`` components, none deeper than ``max_depth``."""
    lo, hi = eps_range
    count = int(rng.integers(1, max_entries + 1))
    picked = {}
    for _ in range(count):
        generation = int(rng.integers(1, max_depth + 1))
        branch = int(rng.integers(1, model.branch_count(generation) + 1))
        kind = str(rng.choice(model.alphabet))
        picked[ComponentId(kind, generation, branch)] = float(rng.uniform(lo, hi))
    return DamageCase(tuple(sorted(picked.items())))
