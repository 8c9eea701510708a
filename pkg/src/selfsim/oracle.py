"""Brute-force frequency responses from the full network equations.

Every node variable of the finite network gets its own unknown and the linear
system is solved directly at ``s = i*omega``.  Nothing here uses the
recurrences, so agreement with :func:`selfsim.netcore.freq_fin` is a genuine
cross-check.

* tree: massless nodes ``(h, j)``; the spring at node ``(h, j)`` runs to node
  ``(h+1, 2j-1)``, the damper to ``(h+1, 2j)``; generation-``g`` components end
  on the fixed terminal ``x_last = 0``.  Force ``F`` enters at ``(1, 1)``.
* electrical ladder: node voltages ``v_1..v_g``; node ``j`` shunts to ground
  through ``r2_j`` parallel ``c_j`` and connects to node ``j+1`` through
  ``r1_{j+1}``; a unit current enters through ``r1_1``.
* mechanical ladder: displacements relative to the constant-speed last
  vehicle; mass ``j`` is damped by ``b_j`` against that vehicle and coupled to
  mass ``j+1`` (or the vehicle, for ``j = g``) by the PID link ``K_j``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

from .errors import InvalidArgument, SingularFrequencyError
from .netcore import ComponentId, DamageCase, NetworkModel

__all__ = ["AssembledSystem", "assemble", "direct_freq", "SPARSE_FROM"]

# tree systems with at least this many generations are solved sparsely
SPARSE_FROM = 10


@dataclass(frozen=True)
class AssembledSystem:
    """``matrix @ x = rhs`` plus the map from node labels to unknown indices.

    ``output`` gives the value of interest as ``offset + x[output_index]``
    (scaled by the unit input).
    """

    unknowns: dict
    matrix: object
    rhs: np.ndarray
    output_index: int
    offset: complex = 0.0

    @property
    def size(self) -> int:
        return self.rhs.shape[0]


def _constant(factors, undamaged, kind, generation, branch=1):
    base = getattr(undamaged, kind)
    return base * factors.get(ComponentId(kind, generation, branch), 1.0)


def _index_map(labels, order):
    if order is None:
        return {label: i for i, label in enumerate(labels)}
    order = list(order)
    if sorted(order) != list(range(len(labels))):
        raise InvalidArgument(f"order must be a permutation of range({len(labels)})")
    return {label: order[i] for i, label in enumerate(labels)}


class _Stamp:
    """Accumulates two-terminal admittances into a nodal matrix."""

    def __init__(self, index, sparse):
        self.index = index
        n = len(index)
        self.rows, self.cols, self.vals = [], [], []
        self.n = n
        self.sparse = sparse

    def add(self, a, b, y):
        # a or b may be None for the reference node
        ia = None if a is None else self.index[a]
        ib = None if b is None else self.index[b]
        for i, j, v in ((ia, ia, y), (ib, ib, y), (ia, ib, -y), (ib, ia, -y)):
            if i is not None and j is not None:
                self.rows.append(i)
                self.cols.append(j)
                self.vals.append(v)

    def matrix(self):
        m = scipy.sparse.coo_matrix((self.vals, (self.rows, self.cols)), shape=(self.n, self.n), dtype=complex)
        return m.tocsc() if self.sparse else m.toarray()


def _assemble_tree(factors, undamaged, g, s, order):
    labels = [(h, j) for h in range(1, g + 1) for j in range(1, 2 ** (h - 1) + 1)]
    index = _index_map(labels, order)
    stamp = _Stamp(index, sparse=g >= SPARSE_FROM)
    for h, j in labels:
        k = _constant(factors, undamaged, "k", h, j)
        b = _constant(factors, undamaged, "b", h, j)
        spring_end = (h + 1, 2 * j - 1) if h < g else None
        damper_end = (h + 1, 2 * j) if h < g else None
        stamp.add((h, j), spring_end, k)
        stamp.add((h, j), damper_end, b * s)
    rhs = np.zeros(len(labels), dtype=complex)
    rhs[index[(1, 1)]] = 1.0
    return AssembledSystem(index, stamp.matrix(), rhs, index[(1, 1)])


def _assemble_eladder(factors, undamaged, g, s, order):
    labels = list(range(1, g + 1))
    index = _index_map(labels, order)
    stamp = _Stamp(index, sparse=False)
    for j in labels:
        r2 = _constant(factors, undamaged, "r2", j)
        c = _constant(factors, undamaged, "c", j)
        stamp.add(j, None, 1.0 / r2 + c * s)
        if j < g:
            stamp.add(j, j + 1, 1.0 / _constant(factors, undamaged, "r1", j + 1))
    rhs = np.zeros(g, dtype=complex)
    rhs[index[1]] = 1.0
    # input voltage is the drop across r1_1 plus the node-1 voltage
    return AssembledSystem(index, stamp.matrix(), rhs, index[1], offset=_constant(factors, undamaged, "r1", 1))


def _assemble_mladder(factors, undamaged, g, s, order):
    labels = list(range(1, g + 1))
    index = _index_map(labels, order)
    stamp = _Stamp(index, sparse=False)
    m = undamaged.m
    for j in labels:
        b = _constant(factors, undamaged, "b", j)
        pid = (
            _constant(factors, undamaged, "kp", j)
            + _constant(factors, undamaged, "ki", j) / s
            + _constant(factors, undamaged, "kd", j) * s
        )
        stamp.add(j, None, m * s * s + b * s)
        stamp.add(j, j + 1 if j < g else None, pid)
    rhs = np.zeros(g, dtype=complex)
    rhs[index[1]] = 1.0
    return AssembledSystem(index, stamp.matrix(), rhs, index[1])


_ASSEMBLERS = {
    "tree": _assemble_tree,
    "electrical_ladder": _assemble_eladder,
    "mechanical_ladder": _assemble_mladder,
}


def assemble(model: NetworkModel, damage: DamageCase, undamaged, g: int, omega: float, order=None) -> AssembledSystem:
    """Nodal equations of the ``g``-generation network at ``s = i*omega``.

    ``order`` optionally permutes the unknown numbering (a sequence giving the
    index of each node in natural order).
    """
    if model.name not in _ASSEMBLERS:
        raise InvalidArgument(f"no direct assembly for model {model.name!r}")
    if int(g) != g or g < 1:
        raise InvalidArgument(f"generations must be a positive integer, got {g!r}")
    if not np.isfinite(omega) or omega <= 0:
        raise InvalidArgument("angular frequency must be positive and finite")
    model.validate(damage)
    if damage.depth > g:
        raise InvalidArgument(f"damage reaches generation {damage.depth} but the network has {g}")
    return _ASSEMBLERS[model.name](damage.factors(), undamaged, int(g), 1j * float(omega), order)


def _solve(system: AssembledSystem) -> np.ndarray:
    a = system.matrix
    if scipy.sparse.issparse(a):
        with warnings.catch_warnings():
            warnings.simplefilter("error", scipy.sparse.linalg.MatrixRankWarning)
            try:
                x = scipy.sparse.linalg.spsolve(a, system.rhs)
            except (scipy.sparse.linalg.MatrixRankWarning, RuntimeError) as exc:
                raise SingularFrequencyError(str(exc)) from exc
    else:
        with warnings.catch_warnings(), np.errstate(divide="ignore", invalid="ignore"):
            warnings.simplefilter("error", scipy.linalg.LinAlgWarning)
            try:
                x = scipy.linalg.solve(a, system.rhs)
            except (np.linalg.LinAlgError, scipy.linalg.LinAlgWarning) as exc:
                raise SingularFrequencyError(str(exc)) from exc
    if not np.all(np.isfinite(x)):
        raise SingularFrequencyError("the network equations are singular at this frequency")
    return x


def direct_freq(model: NetworkModel, damage: DamageCase, undamaged, g: int, omega, order=None):
    """Quantity of interest of the finite network at ``omega`` by direct solve.

    ``omega`` may be a scalar or an array.
    """
    w = np.asarray(omega, dtype=float)
    out = np.empty(w.shape, dtype=complex)
    for pos, value in np.ndenumerate(w):
        system = assemble(model, damage, undamaged, g, float(value), order)
        x = _solve(system)
        out[pos] = system.offset + x[system.output_index]
    return out[()]
