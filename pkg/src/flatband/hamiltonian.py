"""Qubit Hamiltonians as sums of real-coefficient Pauli strings.

Qubit convention: ``|1>`` is an occupied site, ``n = (1 - Z) / 2``, and
qubit 0 is the leftmost character of a bitstring (most significant bit of
the basis index).

Non-adjacent hops are mapped without Jordan-Wigner strings, i.e. each bond
becomes ``-(|A|/2)[cos(t)(XX + YY) + sin(t)(YX - XY)]``. For one particle
this is identical to the fermionic model; for two or more particles it
describes hard-core bosons.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import reduce

import numpy as np

from .lattice import LatticeSpec

__all__ = [
    "PAULI",
    "PauliTerm",
    "HamiltonianTerms",
    "hopping_terms",
    "interaction_terms",
    "to_matrix",
    "sector_basis",
    "number_operator",
]

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

_DROP_TOL = 1e-14
DEFAULT_MAX_QUBITS = 16


@dataclass(frozen=True)
class PauliTerm:
    coefficient: float
    operators: str

    def __post_init__(self):
        c = float(self.coefficient)
        if not np.isfinite(c) or c == 0.0:
            raise ValueError("coefficient must be finite and nonzero")
        if set(self.operators) - set("IXYZ"):
            raise ValueError(f"bad Pauli string {self.operators!r}")
        if set(self.operators) <= {"I"}:
            raise ValueError("identity-only terms are kept as an energy offset instead")
        object.__setattr__(self, "coefficient", c)

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(q for q, p in enumerate(self.operators) if p != "I")

    def local_matrix(self) -> np.ndarray:
        """Dense matrix on the support qubits only (ascending order)."""
        return self.coefficient * reduce(np.kron, [PAULI[self.operators[q]] for q in self.support])


@dataclass(frozen=True)
class HamiltonianTerms:
    n_qubits: int
    terms: tuple[PauliTerm, ...] = ()
    particle_number_symmetric: bool = True
    offset: float = 0.0  # identity part; a global phase under evolution

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        for t in self.terms:
            if len(t.operators) != self.n_qubits:
                raise ValueError("Pauli string length must equal n_qubits")

    def __len__(self):
        return len(self.terms)

    def __iter__(self):
        return iter(self.terms)

    def __add__(self, other: "HamiltonianTerms") -> "HamiltonianTerms":
        if other.n_qubits != self.n_qubits:
            raise ValueError("qubit count mismatch")
        return _merge(
            self.n_qubits,
            [(t.operators, t.coefficient) for t in self.terms + other.terms],
            self.offset + other.offset,
            self.particle_number_symmetric and other.particle_number_symmetric,
        )

    def to_lines(self) -> str:
        lines = [f"{t.coefficient: .16g}  {t.operators}" for t in self.terms]
        if self.offset:
            lines.append(f"{self.offset: .16g}  {'I' * self.n_qubits}")
        return "\n".join(lines)

    @classmethod
    def from_lines(cls, text: str, particle_number_symmetric: bool = True) -> "HamiltonianTerms":
        pairs = []
        for line in text.strip().splitlines():
            coeff, ops = line.split()
            pairs.append((ops, float(coeff)))
        if not pairs:
            raise ValueError("empty term list; n_qubits cannot be inferred")
        return _merge(len(pairs[0][0]), pairs, 0.0, particle_number_symmetric)

    def matrix(self, sector: int | None = None, max_qubits: int = DEFAULT_MAX_QUBITS):
        return to_matrix(self, sector=sector, max_qubits=max_qubits)


def _merge(n_qubits, pairs, offset=0.0, symmetric=True) -> HamiltonianTerms:
    acc: dict[str, float] = {}
    for ops, c in pairs:
        if set(ops) <= {"I"}:
            offset += c
            continue
        acc[ops] = acc.get(ops, 0.0) + c
    terms = tuple(PauliTerm(c, ops) for ops, c in acc.items() if abs(c) >= _DROP_TOL)
    return HamiltonianTerms(n_qubits, terms, symmetric, offset)


def _string(n: int, placed: dict[int, str]) -> str:
    return "".join(placed.get(q, "I") for q in range(n))


def hopping_terms(spec: LatticeSpec) -> HamiltonianTerms:
    if len(spec.qubit_order) != spec.n_sites:
        raise ValueError("qubit_order does not match n_sites")
    n = spec.n_sites
    pairs = []
    for i, j, amp in spec.edges:
        a, b = spec.qubit_order[i], spec.qubit_order[j]
        mag, theta = abs(amp), np.angle(amp)
        c, s = -0.5 * mag * np.cos(theta), -0.5 * mag * np.sin(theta)
        pairs += [
            (_string(n, {a: "X", b: "X"}), c),
            (_string(n, {a: "Y", b: "Y"}), c),
            (_string(n, {a: "Y", b: "X"}), s),
            (_string(n, {a: "X", b: "Y"}), -s),
        ]
    return _merge(n, pairs)


def interaction_terms(spec: LatticeSpec, V: float, bare_zz: bool = False) -> HamiltonianTerms:
    """Density-density interaction ``V n_i n_j`` on every hopping bond.

    ``V n_i n_j = (V/4)(1 - Z_i - Z_j + Z_i Z_j)``; the constant goes into
    ``offset``. With ``bare_zz`` only the ``(V/4) Z_i Z_j`` part is kept.
    """
    n = spec.n_sites
    if V == 0:
        return HamiltonianTerms(n)
    pairs = []
    offset = 0.0
    for i, j, _ in spec.edges:
        a, b = spec.qubit_order[i], spec.qubit_order[j]
        pairs.append((_string(n, {a: "Z", b: "Z"}), V / 4))
        if not bare_zz:
            pairs += [(_string(n, {a: "Z"}), -V / 4), (_string(n, {b: "Z"}), -V / 4)]
            offset += V / 4
    return _merge(n, pairs, offset)


def sector_basis(n_qubits: int, n_particles: int) -> np.ndarray:
    """Basis indices with exactly ``n_particles`` ones.

    Ordered lexicographically by occupied sites, so the one-particle sector
    lists sites 0, 1, 2, ... (descending integer index).
    """
    if not 0 <= n_particles <= n_qubits:
        raise ValueError("particle number out of range")
    idx = [
        sum(1 << (n_qubits - 1 - q) for q in occ)
        for occ in itertools.combinations(range(n_qubits), n_particles)
    ]
    return np.array(idx, dtype=np.int64)


def _pauli_action(ops: str, basis: np.ndarray):
    """Return (flipped indices, phases) with ``P|b> = phase * |b ^ xmask>``."""
    n = len(ops)
    xmask = zmask = 0
    n_y = 0
    for q, p in enumerate(ops):
        bit = 1 << (n - 1 - q)
        if p in "XY":
            xmask |= bit
        if p in "YZ":
            zmask |= bit
        if p == "Y":
            n_y += 1
    parity = np.zeros(basis.shape, dtype=np.int64)
    masked = basis & zmask
    while np.any(masked):
        parity ^= masked & 1
        masked = masked >> 1
    phase = (1j**n_y) * (1 - 2 * parity)
    return basis ^ xmask, phase


def to_matrix(
    terms: HamiltonianTerms, sector: int | None = None, max_qubits: int = DEFAULT_MAX_QUBITS
) -> np.ndarray:
    """Dense matrix of the Pauli sum, optionally restricted to a particle-number sector.

    The sector basis is :func:`sector_basis` order. The identity offset is
    not included.
    """
    n = terms.n_qubits
    if sector is None:
        if n > max_qubits:
            raise ValueError(f"full-space matrix for {n} qubits exceeds cap of {max_qubits}")
        basis = np.arange(2**n, dtype=np.int64)
    else:
        basis = sector_basis(n, sector)
    dim = len(basis)
    order = np.argsort(basis)
    m = np.zeros((dim, dim), dtype=complex)
    cols = np.arange(dim)
    for t in terms.terms:
        flipped, phase = _pauli_action(t.operators, basis)
        # sector restriction is the projection P H P: out-of-sector images are dropped
        pos = np.clip(np.searchsorted(basis, flipped, sorter=order), 0, dim - 1)
        rows = order[pos]
        keep = basis[rows] == flipped
        np.add.at(m, (rows[keep], cols[keep]), t.coefficient * phase[keep])
    return m


def number_operator(n_qubits: int) -> np.ndarray:
    """Diagonal of the total particle-number operator on the full space."""
    idx = np.arange(2**n_qubits)
    return np.array([bin(i).count("1") for i in idx], dtype=float)
