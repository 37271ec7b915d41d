"""Statevector evolution, the exact-diagonalization oracle, shots, and noise.

States are stored as flat arrays of ``2**n`` amplitudes with qubit 0 as the
most significant bit, so ``amplitudes.reshape((2,) * n)`` has one axis per
qubit.
"""
from __future__ import annotations

import csv
import io
import itertools
from dataclasses import dataclass

import numpy as np

from .circuit import Circuit
from .hamiltonian import HamiltonianTerms, sector_basis, to_matrix

__all__ = [
    "StateVector",
    "ShotRecord",
    "EmptyRecordError",
    "apply_gate",
    "prepare_initial",
    "apply_circuit",
    "SectorPropagator",
    "exact_evolve",
    "particle_number",
    "sample_shots",
    "post_select",
    "apply_noisy_circuit",
    "PAULI_2Q",
]

NORM_TOL = 1e-9
SECTOR_TOL = 1e-10
DEFAULT_SECTOR_CAP = 5000


@dataclass(frozen=True, eq=False)
class StateVector:
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.ascontiguousarray(np.asarray(self.amplitudes, dtype=complex).ravel())
        n = amps.size.bit_length() - 1
        if amps.size != 2**n or n < 1:
            raise ValueError("amplitude count must be a power of two >= 2")
        norm = np.vdot(amps, amps).real
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state is not normalized (|psi|^2 = {norm:.12g})")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def n_qubits(self) -> int:
        return self.amplitudes.size.bit_length() - 1

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape((2,) * self.n_qubits)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def overlap(self, other: "StateVector") -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def fidelity(self, other: "StateVector") -> float:
        return abs(self.overlap(other)) ** 2


def apply_gate(psi: np.ndarray, matrix: np.ndarray, targets) -> np.ndarray:
    """Apply a gate to a state tensor with one axis per qubit (extra trailing axes allowed)."""
    k = len(targets)
    psi = np.moveaxis(psi, targets, tuple(range(k)))
    shape = psi.shape
    out = (matrix @ psi.reshape(2**k, -1)).reshape(shape)
    return np.moveaxis(out, tuple(range(k)), targets)


def prepare_initial(n_qubits: int, occupied=()) -> StateVector:
    """Computational basis state with ones on the ``occupied`` qubits."""
    occupied = sorted(set(int(q) for q in occupied))
    if any(q < 0 or q >= n_qubits for q in occupied):
        raise ValueError(f"occupied sites {occupied} out of range for {n_qubits} qubits")
    amps = np.zeros(2**n_qubits, dtype=complex)
    amps[sum(1 << (n_qubits - 1 - q) for q in occupied)] = 1.0
    return StateVector(amps)


def apply_circuit(state: StateVector, circuit: Circuit) -> StateVector:
    if circuit.n_qubits != state.n_qubits:
        raise ValueError("circuit and state qubit counts differ")
    psi = state.tensor()
    for g in circuit.gates:
        psi = apply_gate(psi, g.matrix, g.targets)
    return StateVector(psi.ravel())


def particle_number(state: StateVector, tol: float = SECTOR_TOL) -> int:
    """Particle number of a state confined to one sector; raises otherwise."""
    n = state.n_qubits
    probs = state.probabilities()
    counts = _popcounts(n)
    weights = np.bincount(counts, weights=probs, minlength=n + 1)
    best = int(np.argmax(weights))
    if 1.0 - weights[best] > tol:
        raise ValueError("state mixes particle-number sectors")
    return best


def _popcounts(n: int) -> np.ndarray:
    idx = np.arange(2**n, dtype=np.int64)
    out = np.zeros(2**n, dtype=np.int64)
    for q in range(n):
        out += (idx >> q) & 1
    return out


class SectorPropagator:
    """Exact ``exp(-iHt)`` inside one particle-number sector via eigendecomposition.

    The Hamiltonian's identity offset is dropped (global phase only).
    """

    def __init__(self, terms: HamiltonianTerms, n_particles: int, cap: int = DEFAULT_SECTOR_CAP):
        self.n_qubits = terms.n_qubits
        self.n_particles = n_particles
        self.basis = sector_basis(terms.n_qubits, n_particles)
        if len(self.basis) > cap:
            raise ValueError(f"sector dimension {len(self.basis)} exceeds cap {cap}")
        h = to_matrix(terms, sector=n_particles)
        self.energies, self.vectors = np.linalg.eigh(h)

    def evolve_sector(self, coeffs: np.ndarray, t: float) -> np.ndarray:
        return self.vectors @ (np.exp(-1j * self.energies * t) * (self.vectors.conj().T @ coeffs))

    def evolve(self, state: StateVector, t: float) -> StateVector:
        coeffs = state.amplitudes[self.basis]
        out = np.zeros(2**self.n_qubits, dtype=complex)
        out[self.basis] = self.evolve_sector(coeffs, t)
        return StateVector(out / np.linalg.norm(out))


def exact_evolve(terms: HamiltonianTerms, state: StateVector, t: float) -> StateVector:
    if state.n_qubits != terms.n_qubits:
        raise ValueError("state and Hamiltonian qubit counts differ")
    return SectorPropagator(terms, particle_number(state)).evolve(state, t)


class EmptyRecordError(ValueError):
    """Post-selection removed every shot."""


@dataclass(frozen=True)
class ShotRecord:
    counts: dict
    n_shots: int
    n_qubits: int
    discarded: int = 0

    def __post_init__(self):
        if sum(self.counts.values()) + self.discarded != self.n_shots:
            raise ValueError("counts plus discarded must equal n_shots")
        for b in self.counts:
            if len(b) != self.n_qubits or set(b) - {"0", "1"}:
                raise ValueError(f"bad bitstring {b!r}")

    @property
    def kept(self) -> int:
        return self.n_shots - self.discarded

    @property
    def discard_fraction(self) -> float:
        return self.discarded / self.n_shots

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["bitstring", "count"])
        for b in sorted(self.counts):
            w.writerow([b, self.counts[b]])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, n_shots: int | None = None) -> "ShotRecord":
        rows = list(csv.reader(io.StringIO(text)))
        counts = {b: int(c) for b, c in rows[1:] if b}
        kept = sum(counts.values())
        n_shots = kept if n_shots is None else n_shots
        n_qubits = len(next(iter(counts))) if counts else 0
        return cls(counts, n_shots, n_qubits, n_shots - kept)


def sample_shots(state: StateVector, n_shots: int, seed) -> ShotRecord:
    """Multinomial draw of computational-basis outcomes."""
    if n_shots < 1:
        raise ValueError("n_shots must be positive")
    rng = np.random.default_rng(seed)
    probs = state.probabilities()
    probs = probs / probs.sum()
    draws = rng.multinomial(n_shots, probs)
    n = state.n_qubits
    counts = {format(int(i), f"0{n}b"): int(draws[i]) for i in np.flatnonzero(draws)}
    return ShotRecord(counts, n_shots, n)


def post_select(record: ShotRecord, n_particles: int) -> ShotRecord:
    """Keep only bitstrings with ``n_particles`` ones."""
    kept = {b: c for b, c in record.counts.items() if b.count("1") == n_particles}
    if not kept:
        raise EmptyRecordError(f"no shot has {n_particles} particles")
    dropped = sum(record.counts.values()) - sum(kept.values())
    return ShotRecord(kept, record.n_shots, record.n_qubits, record.discarded + dropped)


PAULI_2Q = tuple(
    np.kron(a, b)
    for a, b in itertools.product(
        [np.eye(2), np.array([[0, 1], [1, 0]]), np.array([[0, -1j], [1j, 0]]), np.diag([1, -1])],
        repeat=2,
    )
)[1:]


def apply_noisy_circuit(state: StateVector, circuit: Circuit, p2: float, seed) -> StateVector:
    """One stochastic-Pauli trajectory.

    After every two-qubit gate a uniformly random non-identity two-qubit
    Pauli hits its targets with probability ``p2``. ``seed`` may be an int
    or a ``numpy.random.Generator`` (shared generators let several circuits
    form one continuous trajectory).
    """
    if not 0.0 <= p2 <= 1.0:
        raise ValueError("p2 must lie in [0, 1]")
    if circuit.n_qubits != state.n_qubits:
        raise ValueError("circuit and state qubit counts differ")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    psi = state.tensor()
    for g in circuit.gates:
        psi = apply_gate(psi, g.matrix, g.targets)
        if g.is_two_qubit and p2 > 0.0 and rng.random() < p2:
            psi = apply_gate(psi, PAULI_2Q[rng.integers(15)], g.targets)
    return StateVector(psi.ravel())
