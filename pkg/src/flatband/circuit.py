"""Gate-level circuits, first-order Trotter steps, and depth accounting."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.linalg import expm

from .hamiltonian import HamiltonianTerms

__all__ = [
    "Gate",
    "Circuit",
    "bond_groups",
    "trotter_step",
    "trotter_circuit",
    "depth",
    "compression_ratio",
]

_UNITARY_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class Gate:
    """One- or two-qubit unitary. For two targets ``(a, b)`` the matrix acts on
    ``|q_a q_b>`` with ``q_a`` as the high bit."""

    targets: tuple[int, ...]
    matrix: np.ndarray

    def __post_init__(self):
        targets = tuple(int(q) for q in self.targets)
        object.__setattr__(self, "targets", targets)
        m = np.asarray(self.matrix, dtype=complex)
        object.__setattr__(self, "matrix", m)
        if len(targets) not in (1, 2) or len(set(targets)) != len(targets):
            raise ValueError(f"bad targets {targets}")
        dim = 2 ** len(targets)
        if m.shape != (dim, dim):
            raise ValueError(f"matrix shape {m.shape} does not match {len(targets)} targets")
        if np.max(np.abs(m.conj().T @ m - np.eye(dim))) > _UNITARY_TOL:
            raise ValueError("gate matrix is not unitary")

    @property
    def is_two_qubit(self) -> bool:
        return len(self.targets) == 2


@dataclass(frozen=True, eq=False)
class Circuit:
    n_qubits: int
    gates: tuple[Gate, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        for g in self.gates:
            if max(g.targets) >= self.n_qubits or min(g.targets) < 0:
                raise ValueError(f"gate targets {g.targets} outside {self.n_qubits} qubits")

    def __len__(self):
        return len(self.gates)

    def __add__(self, other: "Circuit") -> "Circuit":
        if other.n_qubits != self.n_qubits:
            raise ValueError("qubit count mismatch")
        return Circuit(self.n_qubits, self.gates + other.gates)

    def repeat(self, r: int) -> "Circuit":
        return Circuit(self.n_qubits, self.gates * r)

    @cached_property
    def layers(self) -> tuple[tuple[int, ...], ...]:
        """ASAP schedule: each gate goes one layer after the last gate on its qubits."""
        last = [-1] * self.n_qubits
        layers: list[list[int]] = []
        for k, g in enumerate(self.gates):
            slot = max(last[q] for q in g.targets) + 1
            if slot == len(layers):
                layers.append([])
            layers[slot].append(k)
            for q in g.targets:
                last[q] = slot
        return tuple(tuple(layer) for layer in layers)

    def unitary(self) -> np.ndarray:
        """Full 2^n matrix; intended for small n only."""
        from .simulator import apply_gate

        n = self.n_qubits
        dim = 2**n
        cols = np.eye(dim, dtype=complex).reshape((2,) * n + (dim,))
        for g in self.gates:
            cols = apply_gate(cols, g.matrix, g.targets)
        return cols.reshape(dim, dim)

    def to_text(self) -> str:
        lines = [f"# n_qubits {self.n_qubits}"]
        for g in self.gates:
            entries = " ".join(f"{float(z.real)!r},{float(z.imag)!r}" for z in g.matrix.ravel())
            lines.append(f"{' '.join(map(str, g.targets))} | {entries}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Circuit":
        n_qubits = None
        gates = []
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                parts = line[1:].split()
                if parts[:1] == ["n_qubits"]:
                    n_qubits = int(parts[1])
                continue
            head, body = line.split("|")
            targets = tuple(int(q) for q in head.split())
            vals = [complex(*map(float, e.split(","))) for e in body.split()]
            dim = 2 ** len(targets)
            gates.append(Gate(targets, np.array(vals).reshape(dim, dim)))
        if n_qubits is None:
            raise ValueError("missing '# n_qubits' header")
        return cls(n_qubits, tuple(gates))


def depth(circuit: Circuit) -> int:
    """Number of scheduled layers that contain at least one two-qubit gate."""
    gates = circuit.gates
    return sum(any(gates[k].is_two_qubit for k in layer) for layer in circuit.layers)


def compression_ratio(d_uqc: int, d_oqc: int) -> float:
    """Percentage depth reduction of the optimized circuit."""
    if d_uqc <= 0:
        raise ValueError("UQC depth must be positive")
    return (d_uqc - d_oqc) / d_uqc * 100.0


def bond_groups(bonds) -> list[list[tuple[int, int]]]:
    """Greedy edge colouring in ascending (i, j) order.

    Bonds within a group share no qubit. On a 1D chain this is the usual
    odd/even split.
    """
    used: dict[int, set[int]] = {}
    colour_of = {}
    for a, b in sorted(bonds):
        taken = used.get(a, set()) | used.get(b, set())
        c = 0
        while c in taken:
            c += 1
        colour_of[(a, b)] = c
        used.setdefault(a, set()).add(c)
        used.setdefault(b, set()).add(c)
    n_colours = max(colour_of.values(), default=-1) + 1
    groups = [[] for _ in range(n_colours)]
    for bond in sorted(colour_of):
        groups[colour_of[bond]].append(bond)
    return groups


def _local_hamiltonians(terms: HamiltonianTerms):
    bonds: dict[tuple[int, int], np.ndarray] = {}
    sites: dict[int, np.ndarray] = {}
    for t in terms:
        sup = t.support
        if len(sup) > 2:
            raise ValueError(f"term {t.operators} acts on more than two qubits")
        if len(sup) == 2:
            bonds[sup] = bonds.get(sup, 0) + t.local_matrix()
        else:
            sites[sup[0]] = sites.get(sup[0], 0) + t.local_matrix()
    return bonds, sites


def trotter_step(terms: HamiltonianTerms, dt: float) -> Circuit:
    """One first-order Trotter step ``prod_groups exp(-i H_group dt)``.

    One two-qubit gate per bond (all Pauli terms on that pair fused), bonds
    ordered by colour group; single-qubit terms follow as one gate per qubit.
    """
    bonds, sites = _local_hamiltonians(terms)
    gates = []
    for group in bond_groups(bonds):
        for bond in group:
            gates.append(Gate(bond, expm(-1j * dt * bonds[bond])))
    for q in sorted(sites):
        gates.append(Gate((q,), expm(-1j * dt * sites[q])))
    return Circuit(terms.n_qubits, tuple(gates))


def trotter_circuit(terms: HamiltonianTerms, t: float, dt: float) -> Circuit:
    """``r = t / dt`` repetitions of :func:`trotter_step`."""
    if t < 0:
        raise ValueError("t must be non-negative")
    if dt <= 0:
        raise ValueError("dt must be positive")
    r = n_steps(t, dt)
    return trotter_step(terms, dt).repeat(r)


def n_steps(t: float, dt: float) -> int:
    r = t / dt
    if abs(r - round(r)) > 1e-9:
        raise ValueError(f"t = {t} is not an integer multiple of dt = {dt}")
    return int(round(r))
