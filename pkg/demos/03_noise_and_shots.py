"""Emulated hardware noise and the cost of finite shots.

Both circuits see the same two-qubit Pauli error rate, but the compressed
circuit has far fewer gates, so its post-selected densities stay much closer
to the exact ones. A few thousand shots already match 10 000.
"""
import numpy as np

from flatband import build_diamond_chain, prepare_initial
from flatband.experiments import ExperimentConfig, simulate
from flatband.metrics import fidelity_bc, site_densities
from flatband.simulator import apply_circuit, post_select, sample_shots

cfg = ExperimentConfig.from_scenario(
    "fig3", pipelines=["exact", "noisy_uqc", "noisy_oqc"], shots=0, trajectories=100, p2=0.005
)
res = simulate(cfg)
print(" t   noisy UQC  noisy OQC  UQC discarded")
for k in range(10, 61, 10):
    print(
        f"{res.times[k]:3.0f}   {res.fidelity['noisy_uqc'][k]:.4f}     {res.fidelity['noisy_oqc'][k]:.4f}"
        f"     {res.discard_fraction['noisy_uqc'][k]:.2f}"
    )

final = res.compression[-1]
state = apply_circuit(prepare_initial(13, [6]), final.to_circuit())
exact = res.densities["exact"].densities[-1]
order = list(build_diamond_chain(4, 0.0).qubit_order)
for shots in (16, 256, 4096, 10000):
    fids = [fidelity_bc(site_densities(post_select(sample_shots(state, shots, seed), 1))[order], exact) for seed in range(20)]
    print(f"{shots:6d} shots: fidelity at t = 6 is {np.mean(fids):.4f} +- {np.std(fids):.4f}")
