"""Variational compression of Trotter circuits into brick-wall ansatz circuits.

Each two-qubit block is ``U(theta) = exp(-i sum_k theta_k G_k)``. The
default ``"su4"`` chart uses the 15 non-identity two-qubit Pauli products
(global phase excluded); the ``"u1"`` chart keeps the 5 of their
combinations that commute with ``Z_1 + Z_2``, so every block conserves
particle number. ``theta = 0`` is the identity. The loss is the state infidelity
``1 - |<target| W(theta) |initial>|^2`` and its gradient is computed
exactly by one forward and one backward sweep over the blocks.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.optimize import minimize

from .circuit import Circuit, Gate, compression_ratio, depth, trotter_circuit
from .hamiltonian import HamiltonianTerms
from .simulator import (
    SectorPropagator,
    StateVector,
    apply_circuit,
    particle_number,
)

__all__ = [
    "N_BLOCK_PARAMS",
    "GENERATORS",
    "U1_GENERATORS",
    "BLOCK_CHARTS",
    "block_unitary",
    "block_unitary_and_derivatives",
    "AnsatzCircuit",
    "CompressConfig",
    "CompressionResult",
    "loss",
    "gradient",
    "loss_and_gradient",
    "compress",
    "compress_incremental",
]

log = logging.getLogger(__name__)

N_BLOCK_PARAMS = 15

_P1 = [
    np.eye(2, dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
]
GENERATORS = np.array([np.kron(a, b) for a in _P1 for b in _P1][1:])  # (15, 4, 4)
_I, _X, _Y, _Z = _P1
U1_GENERATORS = np.array(
    [
        np.kron(_Z, _I),
        np.kron(_I, _Z),
        np.kron(_Z, _Z),
        (np.kron(_X, _X) + np.kron(_Y, _Y)) / np.sqrt(2),
        (np.kron(_X, _Y) - np.kron(_Y, _X)) / np.sqrt(2),
    ]
)
BLOCK_CHARTS = {"su4": GENERATORS, "u1": U1_GENERATORS}


def block_unitary(theta, generators=GENERATORS) -> np.ndarray:
    h = np.tensordot(np.asarray(theta, dtype=float), generators, axes=1)
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * w)) @ v.conj().T


def block_unitary_and_derivatives(theta, generators=GENERATORS):
    """Return ``U`` and ``dU/dtheta_k`` (shape (K, 4, 4) for K generators).

    ``theta`` may also be a stack of shape (M, K), giving (M, 4, 4) and
    (M, K, 4, 4). Uses the eigenbasis form of the exponential's
    derivative, ``dU = V (Phi o (V^dag dA V)) V^dag`` with ``A = -iH`` and
    divided differences ``Phi_ab = (e^a - e^b) / (a - b)``.
    """
    theta = np.asarray(theta, dtype=float)
    single = theta.ndim == 1
    theta = np.atleast_2d(theta)
    h = np.einsum("mk,kab->mab", theta, generators)
    w, v = np.linalg.eigh(h)
    vh = np.conj(np.swapaxes(v, -1, -2))
    mu = -1j * w
    e = np.exp(mu)
    u = (v * e[:, None, :]) @ vh
    x = mu[:, :, None] - mu[:, None, :]
    small = np.abs(x) < 1e-8
    x_safe = np.where(small, 1.0, x)
    ratio = np.where(small, 1.0 + x / 2.0, np.expm1(x_safe) / x_safe)
    phi = e[:, None, :] * ratio
    g = vh[:, None] @ (-1j * generators)[None] @ v[:, None]
    du = v[:, None] @ (phi[:, None] * g) @ vh[:, None]
    if single:
        return u[0], du[0]
    return u, du


@dataclass(frozen=True)
class AnsatzCircuit:
    """Brick-wall ansatz: per layer, blocks on (0,1),(2,3),... then (1,2),(3,4),..."""

    n_qubits: int
    n_layers: int
    block: str = "su4"

    def __post_init__(self):
        if self.n_qubits < 2:
            raise ValueError("ansatz needs at least two qubits")
        if self.n_layers < 0:
            raise ValueError("n_layers must be non-negative")
        if self.block not in BLOCK_CHARTS:
            raise ValueError(f"block must be one of {sorted(BLOCK_CHARTS)}")

    @property
    def generators(self) -> np.ndarray:
        return BLOCK_CHARTS[self.block]

    @property
    def block_params(self) -> int:
        return len(self.generators)

    @cached_property
    def blocks(self) -> tuple[tuple[int, int], ...]:
        even = [(q, q + 1) for q in range(0, self.n_qubits - 1, 2)]
        odd = [(q, q + 1) for q in range(1, self.n_qubits - 1, 2)]
        return tuple((even + odd) * self.n_layers)

    @property
    def n_params(self) -> int:
        return self.block_params * len(self.blocks)

    def split(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        if theta.size != self.n_params:
            raise ValueError(f"expected {self.n_params} parameters, got {theta.size}")
        return theta.reshape(len(self.blocks), self.block_params)

    def to_circuit(self, theta) -> Circuit:
        gates = [Gate(pair, block_unitary(p, self.generators)) for pair, p in zip(self.blocks, self.split(theta))]
        return Circuit(self.n_qubits, tuple(gates))

    def apply(self, theta, state: StateVector) -> StateVector:
        return apply_circuit(state, self.to_circuit(theta))

    def grown(self, extra: int = 1) -> "AnsatzCircuit":
        return AnsatzCircuit(self.n_qubits, self.n_layers + extra, self.block)


def _check_dims(ansatz: AnsatzCircuit, initial: StateVector, target: StateVector):
    if initial.n_qubits != ansatz.n_qubits or target.n_qubits != ansatz.n_qubits:
        raise ValueError("ansatz, initial and target dimensions differ")


def _apply_adjacent(psi: np.ndarray, u: np.ndarray, q: int, n: int) -> np.ndarray:
    """Apply a 4x4 gate to qubits (q, q+1) of a flat state."""
    tail = 2 ** (n - q - 2)
    psi = psi.reshape(2**q, 4, tail)
    if tail >= 8:
        return (u @ psi).reshape(-1)
    return np.moveaxis(np.tensordot(u, psi, axes=(1, 1)), 0, 1).reshape(-1)


def loss(ansatz: AnsatzCircuit, theta, initial: StateVector, target: StateVector) -> float:
    _check_dims(ansatz, initial, target)
    n = ansatz.n_qubits
    psi = initial.amplitudes
    for (q, _), p in zip(ansatz.blocks, ansatz.split(theta)):
        psi = _apply_adjacent(psi, block_unitary(p, ansatz.generators), q, n)
    amp = np.vdot(target.amplitudes, psi)
    return float(np.clip(1.0 - abs(amp) ** 2, 0.0, 1.0))


def loss_and_gradient(ansatz: AnsatzCircuit, theta, initial: StateVector, target: StateVector):
    """Loss and its exact gradient from one forward and one backward sweep."""
    _check_dims(ansatz, initial, target)
    n = ansatz.n_qubits
    params = ansatz.split(theta)
    heads = [q for q, _ in ansatz.blocks]
    if not heads:
        amp = np.vdot(target.amplitudes, initial.amplitudes)
        return float(np.clip(1.0 - abs(amp) ** 2, 0.0, 1.0)), np.zeros(0)
    unitaries, derivs = block_unitary_and_derivatives(params, ansatz.generators)
    states = [initial.amplitudes]
    for q, u in zip(heads, unitaries):
        states.append(_apply_adjacent(states[-1], u, q, n))
    amp = np.vdot(target.amplitudes, states[-1])

    envs = np.empty((len(heads), 4, 4), dtype=complex)
    lam = target.amplitudes
    for m in range(len(heads) - 1, -1, -1):
        q = heads[m]
        shape = (2**q, 4, 2 ** (n - q - 2))
        # amp = tr(U_m env_m) with env[j, i] = sum phi_j conj(lam_i)
        envs[m] = np.tensordot(states[m].reshape(shape), lam.reshape(shape).conj(), axes=([0, 2], [0, 2]))
        lam = _apply_adjacent(lam, unitaries[m].conj().T, q, n)
    d_amp = np.einsum("mkij,mji->mk", derivs, envs)
    grad = -2.0 * np.real(np.conj(amp) * d_amp)
    value = float(np.clip(1.0 - abs(amp) ** 2, 0.0, 1.0))
    return value, grad.ravel()


def gradient(ansatz: AnsatzCircuit, theta, initial: StateVector, target: StateVector) -> np.ndarray:
    return loss_and_gradient(ansatz, theta, initial, target)[1]


@dataclass(frozen=True)
class CompressConfig:
    fidelity_target: float = 0.999
    max_layers: int = 12
    seed: int = 0
    restarts: int = 1
    max_iter: int = 2000
    gtol: float = 1e-9
    memory: int = 10
    saturation_window: int = 50
    saturation_tol: float = 1e-7
    loss_floor: float = 1e-13
    stop_at_target: bool = True
    init_scale: float = 1e-2
    restart_scale: float = 0.1
    uqc_dt: float = 0.1
    target_mode: str = "exact"  # or "trotter"
    trotter_dt: float = 0.1
    block: str = "su4"  # or "u1" (number-conserving blocks)

    def __post_init__(self):
        if not 0.0 < self.fidelity_target <= 1.0:
            raise ValueError("fidelity_target must lie in (0, 1]")
        if self.max_layers < 1 or self.restarts < 1:
            raise ValueError("max_layers and restarts must be >= 1")
        if self.target_mode not in ("exact", "trotter"):
            raise ValueError("target_mode must be 'exact' or 'trotter'")
        if self.block not in BLOCK_CHARTS:
            raise ValueError(f"block must be one of {sorted(BLOCK_CHARTS)}")


@dataclass
class CompressionResult:
    parameters: np.ndarray
    n_layers: int
    infidelity: float
    iterations: int
    cr: float | None
    t: float
    n_qubits: int
    converged: bool
    d_uqc: int = 0
    d_oqc: int = 0
    initial: StateVector | None = field(default=None, repr=False)
    block: str = "su4"

    @property
    def ansatz(self) -> AnsatzCircuit:
        return AnsatzCircuit(self.n_qubits, self.n_layers, self.block)

    def to_circuit(self) -> Circuit:
        return self.ansatz.to_circuit(self.parameters)

    def to_dict(self) -> dict:
        return {
            "t": self.t,
            "n_qubits": self.n_qubits,
            "n_layers": self.n_layers,
            "block": self.block,
            "infidelity": self.infidelity,
            "iterations": self.iterations,
            "converged": self.converged,
            "cr": self.cr,
            "d_uqc": self.d_uqc,
            "d_oqc": self.d_oqc,
            "parameters": [float(x) for x in self.parameters],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, doc: dict, initial: StateVector | None = None) -> "CompressionResult":
        return cls(
            parameters=np.asarray(doc["parameters"], dtype=float),
            n_layers=int(doc["n_layers"]),
            infidelity=float(doc["infidelity"]),
            iterations=int(doc["iterations"]),
            cr=doc["cr"],
            t=float(doc["t"]),
            n_qubits=int(doc["n_qubits"]),
            converged=bool(doc["converged"]),
            d_uqc=int(doc.get("d_uqc", 0)),
            d_oqc=int(doc.get("d_oqc", 0)),
            initial=initial,
            block=doc.get("block", "su4"),
        )


class _Saturated(Exception):
    pass


def _optimize(ansatz, theta0, initial, target, config: CompressConfig):
    """L-BFGS run; returns (theta, loss, iterations)."""
    history = []
    stop_loss = config.loss_floor
    if config.stop_at_target:
        stop_loss = max(stop_loss, 1.0 - config.fidelity_target)
    best = {"theta": np.array(theta0, dtype=float), "loss": np.inf}

    def fun(x):
        value, grad = loss_and_gradient(ansatz, x, initial, target)
        if value < best["loss"]:
            best["theta"], best["loss"] = x.copy(), value
        return value, grad

    def callback(intermediate_result):
        value = intermediate_result.fun
        history.append(value)
        if value <= stop_loss:
            raise StopIteration
        w = config.saturation_window
        if len(history) > w:
            old = history[-w - 1]
            if old <= 0 or (old - value) / old < config.saturation_tol:
                raise StopIteration

    res = minimize(
        fun,
        np.asarray(theta0, dtype=float),
        jac=True,
        method="L-BFGS-B",
        callback=callback,
        options={
            "maxcor": config.memory,
            "maxiter": config.max_iter,
            "gtol": config.gtol,
            "ftol": 1e-16,
            "maxfun": 4 * config.max_iter,
        },
    )
    theta = best["theta"] if best["loss"] <= res.fun else res.x
    return theta, min(best["loss"], float(res.fun)), int(res.nit)


def _target_state(terms, initial, t, config: CompressConfig, propagator=None) -> StateVector:
    if config.target_mode == "trotter":
        return apply_circuit(initial, trotter_circuit(terms, t, config.trotter_dt))
    if propagator is None:
        propagator = SectorPropagator(terms, particle_number(initial))
    return propagator.evolve(initial, t)


def _uqc_depth(terms, t, config) -> int:
    return depth(trotter_circuit(terms, t, config.uqc_dt))


def _finish(theta, ansatz, value, iters, t, initial, terms, config) -> CompressionResult:
    threshold = 1.0 - config.fidelity_target
    d_oqc = depth(ansatz.to_circuit(theta)) if ansatz.n_layers else 0
    d_uqc = _uqc_depth(terms, t, config) if t > 0 else 0
    cr = compression_ratio(d_uqc, d_oqc) if d_uqc > 0 else None
    return CompressionResult(
        parameters=np.asarray(theta, dtype=float),
        n_layers=ansatz.n_layers,
        infidelity=float(value),
        iterations=iters,
        cr=cr,
        t=float(t),
        n_qubits=ansatz.n_qubits,
        converged=bool(value <= threshold),
        d_uqc=d_uqc,
        d_oqc=d_oqc,
        initial=initial,
        block=ansatz.block,
    )


def _grow_and_fit(ansatz, theta, initial, target, config, iters=0):
    """Fit at the current depth, adding layers while the fidelity target is missed."""
    threshold = 1.0 - config.fidelity_target
    block_params = ansatz.grown().n_params - ansatz.n_params
    while True:
        best_theta, best_loss = None, np.inf
        for r in range(config.restarts):
            rng = np.random.default_rng(
                np.random.SeedSequence(config.seed, spawn_key=(ansatz.n_layers, r))
            )
            start = theta if r == 0 else theta + rng.normal(scale=config.restart_scale, size=theta.shape)
            cand, value, nit = _optimize(ansatz, start, initial, target, config)
            iters += nit
            if value < best_loss:
                best_theta, best_loss = cand, value
        log.debug("layers=%d infidelity=%.3e", ansatz.n_layers, best_loss)
        if best_loss <= threshold or ansatz.n_layers >= config.max_layers:
            return ansatz, best_theta, best_loss, iters
        rng = np.random.default_rng(np.random.SeedSequence(config.seed, spawn_key=(ansatz.n_layers, 999)))
        ansatz = ansatz.grown()
        fresh = rng.uniform(-config.init_scale, config.init_scale, size=block_params)
        theta = np.concatenate([best_theta, fresh])


def compress(
    terms: HamiltonianTerms,
    initial: StateVector,
    t: float,
    config: CompressConfig = CompressConfig(),
    propagator: SectorPropagator | None = None,
) -> CompressionResult:
    """Find a shallow brick-wall circuit mapping ``initial`` to ``exp(-iHt) initial``.

    Starts from one layer with small random parameters and grows the depth
    one layer at a time (warm-started) until the fidelity target is met or
    ``max_layers`` is reached; unmet targets come back with
    ``converged=False``.
    """
    if t < 0:
        raise ValueError("t must be non-negative")
    target = _target_state(terms, initial, t, config, propagator)
    n = initial.n_qubits
    if 1.0 - initial.fidelity(target) <= 1e-12:
        return _finish(np.zeros(0), AnsatzCircuit(n, 0, config.block), 0.0, 0, t, initial, terms, config)
    ansatz = AnsatzCircuit(n, 1, config.block)
    rng = np.random.default_rng(np.random.SeedSequence(config.seed, spawn_key=(0, 0)))
    theta0 = rng.uniform(-config.init_scale, config.init_scale, size=ansatz.n_params)
    ansatz, theta, value, iters = _grow_and_fit(ansatz, theta0, initial, target, config)
    return _finish(theta, ansatz, value, iters, t, initial, terms, config)


def compress_incremental(
    previous: CompressionResult,
    terms: HamiltonianTerms,
    dt: float,
    config: CompressConfig = CompressConfig(),
    propagator: SectorPropagator | None = None,
) -> CompressionResult:
    """Advance a compressed circuit by ``dt``, warm-starting from ``previous``."""
    if dt == 0:
        return previous
    if previous.initial is None:
        raise ValueError("previous result does not carry its initial state")
    initial = previous.initial
    t = round(previous.t + dt, 12)
    if previous.n_layers == 0:
        return compress(terms, initial, t, config, propagator)
    target = _target_state(terms, initial, t, config, propagator)
    ansatz = AnsatzCircuit(previous.n_qubits, previous.n_layers, previous.block)
    ansatz, theta, value, iters = _grow_and_fit(
        ansatz, np.array(previous.parameters, dtype=float), initial, target, config
    )
    return _finish(theta, ansatz, value, iters, t, initial, terms, config)
