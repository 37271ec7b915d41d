"""Experiment runner: wires lattices, pipelines and metrics into reproducible runs.

A run is described by an :class:`ExperimentConfig` (JSON document, scenario
defaults filled in). :func:`simulate` computes everything in memory;
:func:`run_experiment` also writes the CSV files and a manifest.

Pipelines
---------
``exact``      sector eigendecomposition, no sampling (the reference)
``trotter``    noiseless first-order Trotter circuit (UQC)
``oqc``        noiseless compressed brick-wall circuit
``noisy_uqc``  Trotter circuit under stochastic two-qubit Pauli noise
``noisy_oqc``  compressed circuit under the same noise
"""
from __future__ import annotations

import dataclasses
import json
import platform
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import scipy

from .circuit import depth, n_steps, trotter_circuit, trotter_step
from .compressor import CompressConfig, CompressionResult, compress, compress_incremental
from .hamiltonian import HamiltonianTerms, hopping_terms, interaction_terms
from .lattice import LatticeSpec, build_diamond_chain, build_embedded_chain, build_single_plaquette
from .metrics import (
    DensitySeries,
    fft_spectrum,
    fidelity_bc,
    overlap,
    site_densities,
    time_avg_transmission,
    transmission,
)
from .simulator import (
    SectorPropagator,
    ShotRecord,
    StateVector,
    apply_circuit,
    apply_noisy_circuit,
    post_select,
    prepare_initial,
)

__all__ = [
    "PIPELINES",
    "SCENARIOS",
    "ConfigError",
    "ExperimentConfig",
    "RunResult",
    "build_lattice",
    "build_hamiltonian",
    "simulate",
    "run_experiment",
    "sweep",
    "overlap_series",
]

PIPELINES = ("exact", "trotter", "oqc", "noisy_uqc", "noisy_oqc")
_PIPE_ID = {p: k for k, p in enumerate(PIPELINES)}


class ConfigError(ValueError):
    """Invalid experiment configuration; the message names the offending field."""


_FIG6 = dict(
    lattice="embedded", n_left=3, n_right=5, plaquette_amp=1.0, reversed_link=True,
    occupied=[0, 1], t_max=6.0, transmission_sites=[6, 7, 8, 9], window=[5.1, 6.0],
)

SCENARIOS: dict[str, dict] = {
    "fig3": dict(
        description="13-site flat-band diamond chain, particle at the central hub",
        lattice="diamond", n_cells=4, phi=0.0, occupied=[6], t_max=6.0,
        pipelines=["exact", "trotter", "oqc"], shots=4096, seed=0,
    ),
    "fig4_plaquette": dict(
        description="single plaquette walk from site 0 (reversed_link=true gives the caged case)",
        lattice="plaquette", reversed_link=False, occupied=[0], t_max=17.5,
        pipelines=["exact", "trotter", "oqc"],
    ),
    "fig4_trapping": dict(
        description="two-plaquette all-bands-flat trap, particle at the centre; overlap spectroscopy",
        lattice="diamond", n_cells=2, phi=float(np.pi), occupied=[3], t_max=17.5,
        pipelines=["exact", "trotter", "oqc"],
    ),
    "fig5": dict(
        description="plaquette embedded in a chain as a quantum switch, particle at site 0",
        lattice="embedded", n_left=3, n_right=4, plaquette_amp=1.0, reversed_link=True,
        occupied=[0], t_max=8.0, pipelines=["exact"], transmission_sites=[6, 7, 8],
    ),
    "fig6": dict(
        description="two particles crossing an embedded all-bands-flat plaquette",
        pipelines=["exact", "trotter", "oqc"], **_FIG6,
    ),
    "fig7a": dict(
        description="time-averaged transmission vs |J'| (sweep plaquette_amp)",
        pipelines=["exact"], **_FIG6,
    ),
    "fig7b": dict(
        description="transmission tau(t_max) on a (V, |J'|) grid",
        pipelines=["exact"], grid_V=[float(v) for v in range(11)], grid_amp=[1.0, 5.0, 10.0],
        **_FIG6,
    ),
    "custom": dict(description="all lattice and evolution fields given explicitly"),
}


@dataclass
class ExperimentConfig:
    scenario: str = "custom"
    # lattice
    lattice: str = ""  # diamond | plaquette | embedded
    n_cells: int = 4
    phi: float = 0.0
    n_left: int = 3
    n_right: int = 4
    plaquette_amp: float = 1.0
    reversed_link: bool = False
    # physics
    V: float = 0.0
    bare_zz: bool = False
    occupied: list = field(default_factory=list)
    # evolution
    t_max: float = 6.0
    dt: float = 0.1
    pipelines: list = field(default_factory=lambda: ["exact"])
    # sampling and noise
    shots: int = 0
    seed: int | None = None
    trajectories: int = 200
    p2: float = 0.005
    post_select: bool = True
    # compression passthrough (CompressConfig fields; pipelines default to block="u1")
    compression: dict = field(default_factory=dict)
    # observables
    transmission_sites: list = field(default_factory=list)
    window: list = field(default_factory=list)
    grid_V: list = field(default_factory=list)
    grid_amp: list = field(default_factory=list)
    output_dir: str = "runs/out"
    workers: int = 1

    @classmethod
    def from_scenario(cls, scenario: str, **overrides) -> "ExperimentConfig":
        if scenario not in SCENARIOS:
            raise ConfigError(f"scenario: unknown id {scenario!r}; choose from {sorted(SCENARIOS)}")
        doc = {k: v for k, v in SCENARIOS[scenario].items() if k != "description"}
        doc.update(overrides)
        doc["scenario"] = scenario
        return cls.from_dict(doc)

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        doc = dict(doc)
        scenario = doc.get("scenario", "custom")
        if scenario not in SCENARIOS:
            raise ConfigError(f"scenario: unknown id {scenario!r}; choose from {sorted(SCENARIOS)}")
        merged = {k: v for k, v in SCENARIOS[scenario].items() if k != "description"}
        merged.update(doc)
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(merged) - names)
        if unknown:
            raise ConfigError(f"{unknown[0]}: unknown config field")
        cfg = cls(**merged)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def replace(self, **changes) -> "ExperimentConfig":
        cfg = dataclasses.replace(self, **changes)
        cfg.validate()
        return cfg

    def validate(self):
        if self.lattice not in ("diamond", "plaquette", "embedded"):
            raise ConfigError("lattice: must be one of diamond, plaquette, embedded")
        if not self.occupied:
            raise ConfigError("occupied: at least one occupied site is required")
        if not self.dt > 0:
            raise ConfigError("dt: must be positive")
        if self.t_max < 0:
            raise ConfigError("t_max: must be non-negative")
        try:
            n_steps(self.t_max, self.dt)
        except ValueError:
            raise ConfigError("t_max: must be an integer multiple of dt") from None
        bad = [p for p in self.pipelines if p not in PIPELINES]
        if bad or not self.pipelines:
            raise ConfigError(f"pipelines: unknown or empty {bad}; choose from {list(PIPELINES)}")
        if self.shots < 0:
            raise ConfigError("shots: must be non-negative")
        noisy = any(p.startswith("noisy") for p in self.pipelines)
        if (self.shots > 0 or noisy) and self.seed is None:
            raise ConfigError("seed: required when sampling or noise is enabled")
        if noisy and self.trajectories < 1:
            raise ConfigError("trajectories: must be >= 1 with noisy pipelines")
        if not 0.0 <= self.p2 <= 1.0:
            raise ConfigError("p2: must lie in [0, 1]")
        if self.window and (len(self.window) != 2 or not self.window[0] < self.window[1]):
            raise ConfigError("window: expected [t_i, t_f] with t_i < t_f")
        if self.window and self.window[1] > self.t_max + 1e-9:
            raise ConfigError("window: t_f exceeds t_max")
        if self.window and not self.transmission_sites:
            raise ConfigError("transmission_sites: required when window is set")
        try:
            CompressConfig(**self.compression)
        except TypeError as exc:
            raise ConfigError(f"compression: {exc}") from None
        except ValueError as exc:
            raise ConfigError(f"compression: {exc}") from None
        try:
            spec = build_lattice(self)
        except ValueError as exc:
            raise ConfigError(f"lattice: {exc}") from None
        if any(not 0 <= s < spec.n_sites for s in self.occupied):
            raise ConfigError(f"occupied: sites must lie in [0, {spec.n_sites})")
        if any(not 0 <= s < spec.n_sites for s in self.transmission_sites):
            raise ConfigError(f"transmission_sites: sites must lie in [0, {spec.n_sites})")


def build_lattice(cfg: ExperimentConfig) -> LatticeSpec:
    if cfg.lattice == "diamond":
        return build_diamond_chain(cfg.n_cells, cfg.phi)
    if cfg.lattice == "plaquette":
        return build_single_plaquette(cfg.reversed_link)
    return build_embedded_chain(cfg.n_left, cfg.n_right, cfg.plaquette_amp, cfg.reversed_link)


def build_hamiltonian(cfg: ExperimentConfig, spec: LatticeSpec | None = None) -> HamiltonianTerms:
    spec = spec or build_lattice(cfg)
    return hopping_terms(spec) + interaction_terms(spec, cfg.V, bare_zz=cfg.bare_zz)


@dataclass
class RunResult:
    config: ExperimentConfig
    times: np.ndarray
    densities: dict  # pipeline -> DensitySeries
    fidelity: dict  # pipeline -> array vs exact
    discard_fraction: dict  # pipeline -> array
    compression: list  # CompressionResult per time (oqc pipelines)
    uqc_depths: np.ndarray | None
    summary: dict
    grid: np.ndarray | None = None  # (len(grid_amp), len(grid_V)) tau(t_max)
    wall_time: float = 0.0


def _seed(cfg, *key) -> np.random.SeedSequence:
    return np.random.SeedSequence(int(cfg.seed or 0), spawn_key=tuple(int(k) for k in key))


def _sampled_densities(probs, n_qubits, n_particles, cfg, seed_key):
    """Densities from a probability vector, via shots and/or post-selection."""
    if cfg.shots > 0:
        rng = np.random.default_rng(_seed(cfg, *seed_key))
        draws = rng.multinomial(cfg.shots, probs / probs.sum())
        counts = {format(int(i), f"0{n_qubits}b"): int(draws[i]) for i in np.flatnonzero(draws)}
        record = ShotRecord(counts, cfg.shots, n_qubits)
        if cfg.post_select:
            record = post_select(record, n_particles)
        return site_densities(record), record.discard_fraction
    bits = (np.arange(probs.size)[:, None] >> (n_qubits - 1 - np.arange(n_qubits))[None, :]) & 1
    kept = probs
    if cfg.post_select:
        kept = np.where(bits.sum(axis=1) == n_particles, probs, 0.0)
    total = kept.sum()
    return kept @ bits / total, float(1.0 - total / probs.sum())


def _compression_series(cfg, terms, initial, prop, n_t) -> list[CompressionResult]:
    # number-conserving blocks keep noiseless OQC runs inside the particle sector
    defaults = {"uqc_dt": cfg.dt, "seed": int(cfg.seed or 0), "block": "u1"}
    ccfg = CompressConfig(**{**defaults, **cfg.compression})
    results = [compress(terms, initial, 0.0, ccfg, prop)]
    for _ in range(n_t):
        results.append(compress_incremental(results[-1], terms, cfg.dt, ccfg, prop))
    return results


def simulate(cfg: ExperimentConfig) -> RunResult:
    """Run every requested pipeline on the ``k * dt`` time grid (no files written)."""
    cfg.validate()
    start = time.perf_counter()
    spec = build_lattice(cfg)
    terms = build_hamiltonian(cfg, spec)
    n = spec.n_sites
    qubits = [spec.qubit_order[s] for s in cfg.occupied]
    n_particles = len(set(qubits))
    initial = prepare_initial(n, qubits)
    n_t = n_steps(cfg.t_max, cfg.dt)
    times = np.round(np.arange(n_t + 1) * cfg.dt, 12)
    prop = SectorPropagator(terms, n_particles)

    def to_sites(d):
        return np.asarray(d)[list(spec.qubit_order)]

    exact = np.array([to_sites(site_densities(prop.evolve(initial, t))) for t in times])
    densities = {"exact": DensitySeries(times, exact)}
    discard = {}

    needs_oqc = any(p in cfg.pipelines for p in ("oqc", "noisy_oqc"))
    comp = _compression_series(cfg, terms, initial, prop, n_t) if needs_oqc else []
    uqc_depths = None
    if needs_oqc or "trotter" in cfg.pipelines:
        uqc_depths = np.array([depth(trotter_circuit(terms, t, cfg.dt)) for t in times])

    if "trotter" in cfg.pipelines:
        step = trotter_step(terms, cfg.dt)
        state, rows, disc = initial, [], []
        for k in range(n_t + 1):
            if k:
                state = apply_circuit(state, step)
            d, f = _sampled_densities(state.probabilities(), n, n_particles, cfg, (_PIPE_ID["trotter"], k))
            rows.append(to_sites(d))
            disc.append(f)
        densities["trotter"] = DensitySeries(times, np.array(rows))
        discard["trotter"] = np.array(disc)

    if "oqc" in cfg.pipelines:
        rows, disc = [], []
        for k, res in enumerate(comp):
            state = apply_circuit(initial, res.to_circuit()) if res.n_layers else initial
            d, f = _sampled_densities(state.probabilities(), n, n_particles, cfg, (_PIPE_ID["oqc"], k))
            rows.append(to_sites(d))
            disc.append(f)
        densities["oqc"] = DensitySeries(times, np.array(rows))
        discard["oqc"] = np.array(disc)

    if "noisy_uqc" in cfg.pipelines:
        step = trotter_step(terms, cfg.dt)
        mix = np.zeros((n_t + 1, 2**n))
        for j in range(cfg.trajectories):
            rng = np.random.default_rng(_seed(cfg, _PIPE_ID["noisy_uqc"], 1_000_000 + j))
            state = initial
            mix[0] += state.probabilities()
            for k in range(1, n_t + 1):
                state = apply_noisy_circuit(state, step, cfg.p2, rng)
                mix[k] += state.probabilities()
        mix /= cfg.trajectories
        rows, disc = [], []
        for k in range(n_t + 1):
            d, f = _sampled_densities(mix[k], n, n_particles, cfg, (_PIPE_ID["noisy_uqc"], k))
            rows.append(to_sites(d))
            disc.append(f)
        densities["noisy_uqc"] = DensitySeries(times, np.array(rows))
        discard["noisy_uqc"] = np.array(disc)

    if "noisy_oqc" in cfg.pipelines:
        rows, disc = [], []
        for k, res in enumerate(comp):
            circ = res.to_circuit() if res.n_layers else None
            mix = np.zeros(2**n)
            for j in range(cfg.trajectories):
                if circ is None:
                    mix += initial.probabilities()
                    continue
                rng = np.random.default_rng(_seed(cfg, _PIPE_ID["noisy_oqc"], 1_000_000 + j, k))
                mix += apply_noisy_circuit(initial, circ, cfg.p2, rng).probabilities()
            mix /= cfg.trajectories
            d, f = _sampled_densities(mix, n, n_particles, cfg, (_PIPE_ID["noisy_oqc"], k))
            rows.append(to_sites(d))
            disc.append(f)
        densities["noisy_oqc"] = DensitySeries(times, np.array(rows))
        discard["noisy_oqc"] = np.array(disc)

    fidelity = {
        p: np.array([fidelity_bc(a, b) for a, b in zip(s.densities, exact)])
        for p, s in densities.items()
        if p != "exact"
    }
    densities = {p: densities[p] for p in ["exact"] + [q for q in cfg.pipelines if q != "exact"]}
    grid = _transmission_grid(cfg) if cfg.grid_V and cfg.grid_amp else None
    result = RunResult(
        config=cfg,
        times=times,
        densities=densities,
        fidelity=fidelity,
        discard_fraction=discard,
        compression=comp,
        uqc_depths=uqc_depths,
        summary={},
        grid=grid,
    )
    result.summary = _summarize(result, n_particles)
    result.wall_time = time.perf_counter() - start
    return result


def _transmission_grid(cfg: ExperimentConfig) -> np.ndarray:
    out = np.zeros((len(cfg.grid_amp), len(cfg.grid_V)))
    for a, amp in enumerate(cfg.grid_amp):
        for v, V in enumerate(cfg.grid_V):
            sub = cfg.replace(plaquette_amp=float(amp), V=float(V), pipelines=["exact"], grid_V=[], grid_amp=[], shots=0)
            spec = build_lattice(sub)
            terms = build_hamiltonian(sub, spec)
            qubits = [spec.qubit_order[s] for s in sub.occupied]
            state = SectorPropagator(terms, len(qubits)).evolve(prepare_initial(spec.n_sites, qubits), sub.t_max)
            d = np.asarray(site_densities(state))[list(spec.qubit_order)]
            out[a, v] = transmission(d, sub.transmission_sites)
    return out


def overlap_series(series: DensitySeries) -> np.ndarray:
    """``O(t) = n(0) . n(t)`` for every sample of a density series."""
    n0 = series.densities[0]
    return np.array([overlap(n0, d) for d in series.densities])


def _summarize(res: RunResult, n_particles: int) -> dict:
    cfg = res.config
    out: dict = {"n_particles": n_particles, "n_times": int(res.times.size)}
    for p, series in res.densities.items():
        entry: dict = {}
        if p in res.fidelity and res.times.size > 1:
            f = res.fidelity[p][1:]
            entry["mean_fidelity"] = float(f.mean())
            entry["min_fidelity"] = float(f.min())
        if p in res.discard_fraction:
            entry["mean_discard_fraction"] = float(res.discard_fraction[p].mean())
        ov = overlap_series(series)
        if ov.size >= 2:
            k, f_peak = fft_spectrum(ov, cfg.dt).peak()
            entry["spectrum_peak_bin"] = k
            entry["spectrum_peak_frequency"] = f_peak
        if cfg.transmission_sites:
            entry["tau_final"] = transmission(series.densities[-1], cfg.transmission_sites)
            if cfg.window:
                entry["tau_avg"] = time_avg_transmission(series, cfg.transmission_sites, *cfg.window)
        out[p] = entry
    if res.compression:
        final = res.compression[-1]
        out["compression"] = {
            "final_cr": final.cr,
            "final_layers": final.n_layers,
            "final_infidelity": final.infidelity,
            "unconverged_times": [r.t for r in res.compression if not r.converged],
        }
    return out


def _header(cfg: ExperimentConfig, pipeline: str) -> str:
    return f"scenario={cfg.scenario} pipeline={pipeline} seed={cfg.seed}"


def _table(cfg, pipeline, columns, rows) -> str:
    lines = [f"# {_header(cfg, pipeline)}", ",".join(columns)]
    for row in rows:
        lines.append(",".join(x if isinstance(x, str) else f"{x:.10g}" for x in row))
    return "\n".join(lines) + "\n"


def write_outputs(res: RunResult, out_dir) -> list[str]:
    cfg = res.config
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = {}
    for p, series in res.densities.items():
        files[f"densities_{p}.csv"] = series.to_csv(_header(cfg, p))
        ov = overlap_series(series)
        files[f"overlap_{p}.csv"] = _table(cfg, p, ["t", "overlap"], zip(res.times, ov))
        if ov.size >= 2:
            files[f"spectrum_{p}.csv"] = fft_spectrum(ov, cfg.dt).to_csv(_header(cfg, p))
        if cfg.transmission_sites:
            tau = [transmission(d, cfg.transmission_sites) for d in series.densities]
            files[f"transmission_{p}.csv"] = _table(cfg, p, ["t", "tau"], zip(res.times, tau))
    if res.fidelity:
        pipes = list(res.fidelity)
        rows = [[t] + [res.fidelity[p][k] for p in pipes] for k, t in enumerate(res.times)]
        files["fidelity.csv"] = _table(cfg, "+".join(pipes), ["t"] + [f"F_{p}" for p in pipes], rows)
    if res.discard_fraction:
        pipes = list(res.discard_fraction)
        rows = [[t] + [res.discard_fraction[p][k] for p in pipes] for k, t in enumerate(res.times)]
        files["discard.csv"] = _table(cfg, "+".join(pipes), ["t"] + pipes, rows)
    if res.compression:
        rows = []
        for k, r in enumerate(res.compression):
            cr = "" if r.cr is None else f"{r.cr:.10g}"
            rows.append([r.t, int(res.uqc_depths[k]), r.d_oqc, r.n_layers, cr, r.infidelity])
        files["depth.csv"] = _table(
            cfg, "oqc", ["t", "depth_uqc", "depth_oqc", "layers", "cr_percent", "infidelity"], rows
        )
        files["compression.json"] = json.dumps([r.to_dict() for r in res.compression], indent=1) + "\n"
    if res.grid is not None:
        rows = [[amp] + list(res.grid[a]) for a, amp in enumerate(cfg.grid_amp)]
        cols = ["plaquette_amp"] + [f"tau_V={v:g}" for v in cfg.grid_V]
        files["transmission_grid.csv"] = _table(cfg, "exact", cols, rows)
    for name, text in files.items():
        (out / name).write_text(text)
    return sorted(files)


def _manifest(res: RunResult, files) -> dict:
    import flatband

    return {
        "scenario": res.config.scenario,
        "config": res.config.to_dict(),
        "seed": res.config.seed,
        "summary": res.summary,
        "files": files,
        "versions": {
            "flatband": flatband.__version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
        "wall_time_s": res.wall_time,
        "finished_utc": datetime.now(timezone.utc).isoformat(),
    }


def run_experiment(cfg: ExperimentConfig, out_dir=None) -> RunResult:
    """Simulate and write per-pipeline CSVs plus ``manifest.json``."""
    res = simulate(cfg)
    out = Path(out_dir or cfg.output_dir)
    files = write_outputs(res, out)
    (out / "manifest.json").write_text(json.dumps(_manifest(res, files), indent=2, default=float) + "\n")
    return res


_SUMMARY_KEYS = ("mean_fidelity", "min_fidelity", "mean_discard_fraction", "tau_final", "tau_avg",
                 "spectrum_peak_frequency")


def _sweep_point(args):
    cfg, axis, value, index, out_dir = args
    changes = {axis: value, "seed": None if cfg.seed is None else cfg.seed + index}
    point = cfg.replace(**changes)
    res = run_experiment(point, Path(out_dir) / f"{index:03d}_{axis}={value:g}") if out_dir else simulate(point)
    row = {axis: value}
    for p in point.pipelines:
        for key in _SUMMARY_KEYS:
            if key in res.summary.get(p, {}):
                row[f"{p}.{key}"] = res.summary[p][key]
    if "compression" in res.summary:
        row["oqc.final_cr"] = res.summary["compression"]["final_cr"]
    return row


def sweep(cfg: ExperimentConfig, axis: str, values, out_dir=None) -> tuple[list[dict], str]:
    """One run per value of a numeric config field; returns rows and aggregated CSV.

    Point ``i`` uses seed ``cfg.seed + i``; points run in a process pool
    when ``cfg.workers > 1`` and are aggregated in value order.
    """
    fields = {f.name: f for f in dataclasses.fields(ExperimentConfig)}
    if axis not in fields or not isinstance(getattr(cfg, axis), (int, float)) or isinstance(getattr(cfg, axis), bool):
        raise ConfigError(f"{axis}: sweep axis must name a numeric config field")
    kind = type(getattr(cfg, axis))
    values = [kind(v) for v in values]
    jobs = [(cfg, axis, v, i, out_dir) for i, v in enumerate(values)]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            rows = list(pool.map(_sweep_point, jobs))
    else:
        rows = [_sweep_point(j) for j in jobs]
    cols = [axis] + sorted({k for r in rows for k in r} - {axis})
    lines = [f"# scenario={cfg.scenario} sweep={axis} seed={cfg.seed}", ",".join(cols)]
    for r in rows:
        lines.append(",".join("" if r.get(c) is None else f"{r[c]:.10g}" for c in cols))
    text = "\n".join(lines) + "\n"
    if out_dir:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
        (Path(out_dir) / f"sweep_{axis}.csv").write_text(text)
    return rows, text
