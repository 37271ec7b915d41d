"""Lattice geometries for diamond-chain quantum walks.

All hoppings are dimensionless multiples of the global energy unit J, and
times are in units of 1/J. A lattice is stored as an undirected weighted
graph: each bond ``(i, j, A)`` with ``i < j`` stands for the hopping term
``-(A c_i^dag c_j + h.c.)``.

Diamond-chain site order (``n_cells`` plaquettes, ``3 n_cells + 1`` sites)::

        u1        u2
       /  \\      /  \\
     c0    c1 ---    c2  ...
       \\  /      \\  /
        d1        d2

    index:  c0=0, u1=1, d1=2, c1=3, u2=4, d2=5, c2=6, ...

Every ``c`` hub couples to the ``u``/``d`` pair on each side. The chain is
terminated by hubs on both ends (the dangling ``u0``/``d0`` pair of the
leftmost cell is dropped), so the 13-site lattice has its central hub at
site 6 and the 7-site two-plaquette lattice has it at site 3. The flux
phase ``exp(-i phi)`` sits on the ``u_k - c_k`` bond of every plaquette.
"""
from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "LatticeSpec",
    "BandStructure",
    "build_diamond_chain",
    "build_single_plaquette",
    "build_embedded_chain",
    "band_structure",
]


@dataclass(frozen=True)
class LatticeSpec:
    """Weighted hopping graph with complex amplitudes.

    ``qubit_order[s]`` is the qubit that encodes site ``s``.
    """

    n_sites: int
    edges: tuple[tuple[int, int, complex], ...]
    site_labels: tuple[str, ...] = ()
    qubit_order: tuple[int, ...] = ()
    name: str = ""

    def __post_init__(self):
        n = self.n_sites
        if n < 1:
            raise ValueError("lattice needs at least one site")
        edges = tuple((int(i), int(j), complex(a)) for i, j, a in self.edges)
        object.__setattr__(self, "edges", edges)
        if not self.site_labels:
            object.__setattr__(self, "site_labels", tuple(str(s) for s in range(n)))
        if not self.qubit_order:
            object.__setattr__(self, "qubit_order", tuple(range(n)))
        object.__setattr__(self, "qubit_order", tuple(int(q) for q in self.qubit_order))

        if len(self.site_labels) != n:
            raise ValueError("one label per site required")
        if sorted(self.qubit_order) != list(range(n)):
            raise ValueError("qubit_order must be a permutation of range(n_sites)")
        seen = set()
        for i, j, a in edges:
            if not (0 <= i < j < n):
                raise ValueError(f"edge ({i}, {j}) must satisfy 0 <= i < j < n_sites")
            if (i, j) in seen:
                raise ValueError(f"duplicate edge ({i}, {j})")
            if a == 0:
                raise ValueError(f"edge ({i}, {j}) has zero amplitude")
            seen.add((i, j))
        if not _connected(n, edges):
            raise ValueError("lattice graph is not connected")

    def hopping_matrix(self) -> np.ndarray:
        """Single-particle Hamiltonian in the site basis (``H_ij = -A_ij``)."""
        h = np.zeros((self.n_sites, self.n_sites), dtype=complex)
        for i, j, a in self.edges:
            h[i, j] -= a
            h[j, i] -= np.conj(a)
        return h

    def neighbors(self, site: int) -> list[int]:
        out = [j for i, j, _ in self.edges if i == site]
        out += [i for i, j, _ in self.edges if j == site]
        return sorted(out)

    def with_qubit_order(self, qubit_order) -> "LatticeSpec":
        return LatticeSpec(self.n_sites, self.edges, self.site_labels, tuple(qubit_order), self.name)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "n_sites": self.n_sites,
            "site_labels": list(self.site_labels),
            "qubit_order": list(self.qubit_order),
            "edges": [
                {"i": i, "j": j, "re": a.real, "im": a.imag} for i, j, a in self.edges
            ],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "LatticeSpec":
        edges = tuple(
            (e["i"], e["j"], complex(e["re"], e.get("im", 0.0))) for e in doc["edges"]
        )
        return cls(
            n_sites=int(doc["n_sites"]),
            edges=edges,
            site_labels=tuple(doc.get("site_labels", ())),
            qubit_order=tuple(doc.get("qubit_order", ())),
            name=doc.get("name", ""),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "LatticeSpec":
        return cls.from_dict(json.loads(text))


def _connected(n: int, edges) -> bool:
    adj = [[] for _ in range(n)]
    for i, j, _ in edges:
        adj[i].append(j)
        adj[j].append(i)
    seen = {0}
    queue = deque([0])
    while queue:
        s = queue.popleft()
        for t in adj[s]:
            if t not in seen:
                seen.add(t)
                queue.append(t)
    return len(seen) == n


def build_diamond_chain(n_cells: int, phi: float) -> LatticeSpec:
    """Open diamond chain with ``n_cells`` plaquettes and flux ``phi`` per plaquette.

    ``build_diamond_chain(4, 0)`` is the 13-site flat-band lattice and
    ``build_diamond_chain(2, np.pi)`` the 7-site all-bands-flat trap.
    """
    if n_cells < 1:
        raise ValueError("n_cells must be >= 1")
    phase = np.exp(-1j * phi)
    # snap the phase so phi = pi gives an exactly real -1
    phase = complex(round(phase.real, 15), round(phase.imag, 15))
    edges = []
    labels = ["c0"]
    for k in range(1, n_cells + 1):
        hub_left = 3 * (k - 1)
        u, d, hub = hub_left + 1, hub_left + 2, hub_left + 3
        labels += [f"u{k}", f"d{k}", f"c{k}"]
        edges += [
            (hub_left, u, 1.0),
            (hub_left, d, 1.0),
            (u, hub, phase),
            (d, hub, 1.0),
        ]
    return LatticeSpec(
        n_sites=3 * n_cells + 1,
        edges=tuple(edges),
        site_labels=tuple(labels),
        name=f"diamond_chain(n_cells={n_cells}, phi={phi:.6g})",
    )


def build_single_plaquette(reversed_link: bool = False) -> LatticeSpec:
    """Four-site plaquette 0-{1,2}-3; ``reversed_link`` flips the 1-3 bond to -1."""
    edges = ((0, 1, 1.0), (0, 2, 1.0), (1, 3, -1.0 if reversed_link else 1.0), (2, 3, 1.0))
    kind = "ABF" if reversed_link else "FB"
    return LatticeSpec(4, edges, ("c0", "u1", "d1", "c1"), name=f"plaquette({kind})")


def build_embedded_chain(
    n_left: int, n_right: int, plaquette_amp: float = 1.0, reversed_link: bool = False
) -> LatticeSpec:
    """One plaquette inserted into an open 1D chain.

    Sites ``0 .. n_left-1`` form the left lead; the last of them is the
    entrance vertex. The two plaquette arms follow, then ``n_right`` sites
    starting with the exit vertex. Plaquette bonds carry ``plaquette_amp``
    (the ratio ``|J'|/J``); with ``reversed_link`` the upper arm-exit bond
    is negated. ``build_embedded_chain(3, 5, 1.0, True)`` gives the 10-site
    lattice with right-lead sites 6..9.
    """
    if n_left < 1 or n_right < 1:
        raise ValueError("leads must contain at least one site each")
    if plaquette_amp <= 0:
        raise ValueError("plaquette_amp must be positive")
    entrance = n_left - 1
    arm_u, arm_d, exit_ = n_left, n_left + 1, n_left + 2
    n_sites = n_left + 2 + n_right
    edges = [(s, s + 1, 1.0) for s in range(entrance)]
    amp = float(plaquette_amp)
    edges += [
        (entrance, arm_u, amp),
        (entrance, arm_d, amp),
        (arm_u, exit_, -amp if reversed_link else amp),
        (arm_d, exit_, amp),
    ]
    edges += [(s, s + 1, 1.0) for s in range(exit_, n_sites - 1)]
    labels = [f"L{s}" for s in range(entrance)] + ["in", "up", "down", "out"]
    labels += [f"R{s}" for s in range(exit_ + 1, n_sites)]
    kind = "ABF" if reversed_link else "FB"
    return LatticeSpec(
        n_sites,
        tuple(edges),
        tuple(labels),
        name=f"embedded_chain({n_left}, {n_right}, {amp:g}, {kind})",
    )


@dataclass(frozen=True)
class BandStructure:
    q_grid: np.ndarray
    bands: np.ndarray = field(repr=False)  # shape (3, len(q_grid)), ascending per q


def bloch_matrix(q, phi: float) -> np.ndarray:
    """3x3 Bloch Hamiltonian on the (u, c, d) basis; broadcasts over ``q``."""
    q = np.asarray(q, dtype=float)
    t_u = np.exp(-1j * phi) + np.exp(1j * q)
    t_d = 1.0 + np.exp(1j * q)
    h = np.zeros(q.shape + (3, 3), dtype=complex)
    h[..., 0, 1] = -t_u
    h[..., 1, 0] = -np.conj(t_u)
    h[..., 2, 1] = -t_d
    h[..., 1, 2] = -np.conj(t_d)
    return h


def band_structure(phi: float, n_q: int = 201) -> BandStructure:
    if n_q < 2:
        raise ValueError("n_q must be >= 2")
    q = np.linspace(-np.pi, np.pi, n_q)
    energies = np.linalg.eigvalsh(bloch_matrix(q, phi))
    return BandStructure(q_grid=q, bands=energies.T.copy())
