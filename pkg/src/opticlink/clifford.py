"""Single-qubit Clifford group as Bloch-sphere rotations.

The 24 elements are generated by breadth-first search over the physical gate
set {X, Y, +-X/2, +-Y/2}, so every element carries a shortest decomposition
into 120 ns pulses.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import InternalError
from .qubit import PulseSpec, QubitParams, rotation_matrix

# name -> (rotation angle in units of pi, drive phase)
GATES = {
    "X": (1.0, 0.0),
    "Y": (1.0, math.pi / 2),
    "X/2": (0.5, 0.0),
    "-X/2": (0.5, math.pi),
    "Y/2": (0.5, math.pi / 2),
    "-Y/2": (0.5, 3 * math.pi / 2),
}

# sha256 over the sorted decomposition strings; guards against silent edits
TABLE_DIGEST = "b7850fb885c7ebea97d7d2a8ebe8f2e0da1b4ac10a8bc9dafa403ffe0e8899da"


def gate_matrix(name: str) -> np.ndarray:
    frac, phase = GATES[name]
    return rotation_matrix((math.cos(phase), math.sin(phase), 0.0), frac * math.pi)


def gate_pulse(name: str, q: QubitParams) -> PulseSpec:
    frac, phase = GATES[name]
    return PulseSpec(duration=q.pi_duration, amplitude=frac, phase=phase)


def _key(m: np.ndarray) -> tuple:
    return tuple(np.rint(m).astype(int).ravel())


@dataclass(frozen=True)
class CliffordTable:
    matrices: tuple  # 24 x (3x3) arrays
    decompositions: tuple  # gate-name tuples, applied left to right
    mult: np.ndarray  # mult[a, b] = index of (b after a)
    inverse: np.ndarray

    @property
    def mean_gates(self) -> float:
        return float(np.mean([len(d) for d in self.decompositions]))

    def digest(self) -> str:
        text = "|".join(sorted(" ".join(d) for d in self.decompositions))
        return hashlib.sha256(text.encode()).hexdigest()

    def compose(self, indices) -> int:
        """Index of the product applying ``indices`` in order."""
        acc = 0
        for i in indices:
            acc = self.mult[acc, i]
        return int(acc)


def _build() -> CliffordTable:
    ident = np.eye(3)
    seen = {_key(ident): 0}
    mats = [ident]
    decs = [()]
    frontier = [0]
    while frontier:
        nxt = []
        for idx in frontier:
            for g in GATES:
                m = gate_matrix(g) @ mats[idx]
                k = _key(m)
                if k not in seen:
                    seen[k] = len(mats)
                    mats.append(np.rint(m))
                    decs.append(decs[idx] + (g,))
                    nxt.append(seen[k])
        frontier = nxt
    n = len(mats)
    mult = np.zeros((n, n), dtype=int)
    inv = np.zeros(n, dtype=int)
    for a in range(n):
        for b in range(n):
            mult[a, b] = seen[_key(mats[b] @ mats[a])]
        inv[a] = seen[_key(mats[a].T)]
    return CliffordTable(tuple(mats), tuple(decs), mult, inv)


def verify(table: CliffordTable) -> None:
    """Raise ``InternalError`` if the table is not the 24-element group."""
    problems = []
    if len(table.matrices) != 24:
        problems.append(f"{len(table.matrices)} elements")
    for m, d in zip(table.matrices, table.decompositions):
        prod = np.eye(3)
        for g in d:
            prod = gate_matrix(g) @ prod
        if not np.allclose(prod, m, atol=1e-9):
            problems.append(f"decomposition {d} does not reproduce its element")
        if not np.allclose(m @ m.T, np.eye(3)) or not math.isclose(np.linalg.det(m), 1.0):
            problems.append("element is not a rotation")
    n = len(table.matrices)
    if any(table.mult[a, table.inverse[a]] != 0 for a in range(n)):
        problems.append("inverse table broken")
    if table.digest() != TABLE_DIGEST:
        problems.append("digest mismatch")
    if problems:
        raise InternalError("Clifford table checksum failed: " + "; ".join(problems))


@lru_cache(maxsize=1)
def clifford_table() -> CliffordTable:
    t = _build()
    verify(t)
    return t


def random_sequence(rng: np.random.Generator, m: int) -> list[int]:
    """``m`` uniform random Cliffords followed by the recovery element."""
    t = clifford_table()
    seq = [int(i) for i in rng.integers(0, 24, size=m)]
    total = t.compose(seq)
    return seq + [int(t.inverse[total])]
