"""Flat bands of the diamond chain and Aharonov-Bohm caging on one plaquette.

With zero flux the chain has one flat band between two dispersive ones; at
pi flux all three bands are flat and a walker launched at site 0 of a
single plaquette never reaches the opposite corner.
"""
import numpy as np

from flatband import band_structure, build_single_plaquette, prepare_initial
from flatband.hamiltonian import hopping_terms
from flatband.metrics import site_densities
from flatband.simulator import SectorPropagator

for phi, name in [(0.0, "flat band (phi = 0)"), (np.pi, "all bands flat (phi = pi)")]:
    bands = band_structure(phi, n_q=9).bands
    print(name)
    for label, row in zip(("lower", "middle", "upper"), bands):
        print(f"  {label:6s} " + " ".join(f"{e:+.3f}" for e in row))

psi0 = prepare_initial(4, [0])
for reversed_link in (False, True):
    prop = SectorPropagator(hopping_terms(build_single_plaquette(reversed_link)), 1)
    n3 = [site_densities(prop.evolve(psi0, t))[3] for t in np.linspace(0, 10, 101)]
    kind = "pi-flux" if reversed_link else "uniform"
    print(f"{kind:8s} plaquette: max density on the far corner over t <= 10 is {max(n3):.3g}")
