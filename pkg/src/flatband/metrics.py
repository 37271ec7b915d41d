"""Observables: site densities, distribution fidelity, overlap, spectra, transmission."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .simulator import EmptyRecordError, ShotRecord, StateVector

__all__ = [
    "DensitySeries",
    "Spectrum",
    "site_densities",
    "sector_densities",
    "fidelity_bc",
    "overlap",
    "fft_spectrum",
    "transmission",
    "time_avg_transmission",
]


def site_densities(source) -> np.ndarray:
    """Per-site occupations ``n_i = <(1 - Z_i)/2>``.

    ``source`` is a :class:`StateVector` or a :class:`ShotRecord`; for records
    the densities are normalized over the kept shots.
    """
    if isinstance(source, StateVector):
        n = source.n_qubits
        probs = source.probabilities().reshape((2,) * n)
        return np.array([probs.sum(axis=tuple(a for a in range(n) if a != q))[1] for q in range(n)])
    if isinstance(source, ShotRecord):
        total = sum(source.counts.values())
        if total == 0:
            raise EmptyRecordError("record has no kept shots")
        acc = np.zeros(source.n_qubits)
        for bits, c in source.counts.items():
            acc += c * (np.frombuffer(bits.encode(), dtype=np.uint8) - ord("0")).astype(float)
        return acc / total
    raise TypeError(f"cannot take densities of {type(source).__name__}")


def sector_densities(state: StateVector, n_particles: int) -> tuple[np.ndarray, float]:
    """Densities after projecting onto the ``n_particles`` sector.

    Returns the renormalized densities and the kept probability; this is the
    infinite-shot limit of :func:`post_select` followed by :func:`site_densities`.
    """
    n = state.n_qubits
    probs = state.probabilities()
    idx = np.arange(probs.size)
    bits = (idx[:, None] >> (n - 1 - np.arange(n))[None, :]) & 1
    mask = bits.sum(axis=1) == n_particles
    kept = probs[mask].sum()
    if kept <= 0:
        raise EmptyRecordError(f"state has no weight in the {n_particles}-particle sector")
    return probs[mask] @ bits[mask] / kept, float(kept)


def fidelity_bc(p, q) -> float:
    """Squared Bhattacharyya coefficient of two profiles (each normalized first)."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValueError("distributions have different lengths")
    if np.any(p < -1e-12) or np.any(q < -1e-12):
        raise ValueError("distributions must be non-negative")
    sp, sq = p.sum(), q.sum()
    if sp <= 0 or sq <= 0:
        raise ValueError("distributions must have positive total weight")
    bc = np.sum(np.sqrt(np.clip(p, 0, None) / sp * np.clip(q, 0, None) / sq))
    return float(min(bc, 1.0) ** 2)


def overlap(n0, nt) -> float:
    n0 = np.asarray(n0, dtype=float)
    nt = np.asarray(nt, dtype=float)
    if n0.shape != nt.shape:
        raise ValueError("density vectors have different lengths")
    return float(n0 @ nt)


@dataclass(frozen=True)
class Spectrum:
    frequencies: np.ndarray
    magnitudes: np.ndarray

    def peak(self) -> tuple[int, float]:
        """Bin index and frequency of the largest non-DC positive-frequency component."""
        half = len(self.frequencies) // 2
        k = 1 + int(np.argmax(self.magnitudes[1 : half + 1]))
        return k, float(self.frequencies[k])

    def to_csv(self, header: str = "") -> str:
        return _csv(header, ["f", "magnitude"], np.column_stack([self.frequencies, self.magnitudes]))


def fft_spectrum(series, dt: float) -> Spectrum:
    """``|sum_t O(t) exp(-2 pi i k t / N)|`` at frequencies ``k / (N dt)``; no window."""
    series = np.asarray(series, dtype=float)
    if series.size < 2:
        raise ValueError("need at least two samples")
    n = series.size
    return Spectrum(np.arange(n) / (n * dt), np.abs(np.fft.fft(series)))


def transmission(densities, sites) -> float:
    densities = np.asarray(densities, dtype=float)
    sites = list(sites)
    if any(s < 0 or s >= densities.size for s in sites):
        raise ValueError(f"sites {sites} out of range")
    return float(densities[sites].sum())


@dataclass(frozen=True)
class DensitySeries:
    times: np.ndarray
    densities: np.ndarray  # (n_times, n_sites)

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        d = np.asarray(self.densities, dtype=float)
        if d.ndim != 2 or d.shape[0] != t.size:
            raise ValueError("densities must have one row per time")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "densities", d)

    @property
    def dt(self) -> float:
        return float(np.median(np.diff(self.times))) if self.times.size > 1 else 0.0

    def at(self, t: float) -> np.ndarray:
        k = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[k] - t) > 1e-9:
            raise KeyError(f"time {t} not on the sampling grid")
        return self.densities[k]

    def to_csv(self, header: str = "") -> str:
        cols = ["t"] + [f"n_{i}" for i in range(self.densities.shape[1])]
        return _csv(header, cols, np.column_stack([self.times, self.densities]))

    @classmethod
    def from_csv(cls, text: str) -> "DensitySeries":
        rows = [r for r in csv.reader(io.StringIO(text)) if r and not r[0].startswith("#")]
        data = np.array(rows[1:], dtype=float)
        return cls(data[:, 0], data[:, 1:])


def time_avg_transmission(series: DensitySeries, sites, t_i: float, t_f: float) -> float:
    """Mean of ``tau(t)`` over samples with ``t_i < t <= t_f``.

    With spacing ``dt`` this averages exactly ``(t_f - t_i) / dt`` samples.
    """
    if not t_i < t_f:
        raise ValueError("need t_i < t_f")
    eps = 1e-9
    mask = (series.times > t_i + eps) & (series.times <= t_f + eps)
    if not mask.any():
        raise ValueError(f"no samples in ({t_i}, {t_f}]")
    return float(np.mean([transmission(d, sites) for d in series.densities[mask]]))


def _csv(header: str, columns, data) -> str:
    buf = io.StringIO()
    for line in header.splitlines():
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in data:
        w.writerow([f"{x:.10g}" for x in row])
    return buf.getvalue()
