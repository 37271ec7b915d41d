import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from flatband.lattice import (
    LatticeSpec,
    band_structure,
    bloch_matrix,
    build_diamond_chain,
    build_embedded_chain,
    build_single_plaquette,
)


def test_fig3_lattice_has_13_sites():
    spec = build_diamond_chain(4, 0.0)
    assert spec.n_sites == 13
    assert len(spec.edges) == 16
    assert spec.site_labels[6] == "c2"


def test_single_abf_cell_has_one_negative_edge():
    spec = build_diamond_chain(1, np.pi)
    amps = sorted(a.real for _, _, a in spec.edges)
    assert amps == [-1.0, 1.0, 1.0, 1.0]
    assert all(a.imag == 0 for _, _, a in spec.edges)


def test_two_plaquette_trap_is_seven_sites():
    assert build_diamond_chain(2, np.pi).n_sites == 7


@pytest.mark.parametrize("reversed_link, product", [(False, 1.0), (True, -1.0)])
def test_plaquette_sign_product(reversed_link, product):
    spec = build_single_plaquette(reversed_link)
    assert np.prod([a for _, _, a in spec.edges]) == product


def test_plaquette_spectra():
    # {-2, 0, 0, 2} belongs to the uniform plaquette; pi flux gives +-sqrt(2) twice
    fb = np.linalg.eigvalsh(build_single_plaquette(False).hopping_matrix())
    abf = np.linalg.eigvalsh(build_single_plaquette(True).hopping_matrix())
    np.testing.assert_allclose(fb, [-2, 0, 0, 2], atol=1e-12)
    r = np.sqrt(2)
    np.testing.assert_allclose(abf, [-r, -r, r, r], atol=1e-12)


def test_embedded_chain_geometry():
    spec = build_embedded_chain(3, 4, 1.0, True)
    assert spec.n_sites == 9
    assert sorted(spec.neighbors(2)) == [1, 3, 4]
    assert sorted(spec.neighbors(5)) == [3, 4, 6]
    big = build_embedded_chain(3, 5, 1.0, True)
    assert big.n_sites == 10
    assert big.neighbors(9) == [8]


def test_embedded_chain_scales_plaquette_only():
    h = build_embedded_chain(3, 5, 10.0, False).hopping_matrix()
    assert h[0, 1] == -1 and h[2, 3] == -10 and h[5, 6] == -1


def test_hopping_matrix_hermitian_and_signed():
    spec = build_diamond_chain(3, 0.7)
    h = spec.hopping_matrix()
    np.testing.assert_allclose(h, h.conj().T)
    assert h[1, 3] == pytest.approx(-np.exp(-0.7j))


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(n_sites=3, edges=((0, 1, 1.0),)),  # disconnected
        dict(n_sites=2, edges=((0, 1, 0.0),)),
        dict(n_sites=2, edges=((0, 0, 1.0),)),
        dict(n_sites=2, edges=((0, 1, 1.0), (1, 0, 1.0))),
        dict(n_sites=2, edges=((0, 1, 1.0),), qubit_order=(0, 0)),
    ],
)
def test_invalid_specs_rejected(kwargs):
    with pytest.raises(ValueError):
        LatticeSpec(**kwargs)


def test_json_roundtrip():
    spec = build_diamond_chain(2, 0.3).with_qubit_order([6, 5, 4, 3, 2, 1, 0])
    back = LatticeSpec.from_json(spec.to_json())
    assert back == spec


def test_abf_bands_flat():
    bands = band_structure(np.pi).bands
    assert np.ptp(bands, axis=1).max() < 1e-12
    np.testing.assert_allclose(bands[:, 0], [-2, 0, 2], atol=1e-12)


def test_fb_bands():
    bs = band_structure(0.0, n_q=101)
    assert np.abs(bs.bands[1]).max() < 1e-12
    np.testing.assert_allclose(bs.bands[2], 2 * np.sqrt(2) * np.abs(np.cos(bs.q_grid / 2)), atol=1e-12)
    assert abs(bs.bands[2][0]) < 1e-7 and abs(bs.bands[0][-1]) < 1e-7


def test_fb_bands_at_zone_centre():
    # outer bands at q = 0 sit at +-2 sqrt(2) (see decisions ledger)
    bs = band_structure(0.0, n_q=3)
    np.testing.assert_allclose(bs.bands[:, 1], [-2 * np.sqrt(2), 0, 2 * np.sqrt(2)], atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(phi=st.floats(0, 2 * np.pi), q=st.floats(-np.pi, np.pi))
def test_bloch_sum_rule(phi, q):
    # eigenvalues are 0 and +-sqrt(|t_u|^2 + |t_d|^2)
    ev = np.linalg.eigvalsh(bloch_matrix(q, phi))
    r = np.sqrt(abs(np.exp(-1j * phi) + np.exp(1j * q)) ** 2 + abs(1 + np.exp(1j * q)) ** 2)
    np.testing.assert_allclose(ev, [-r, 0, r], atol=1e-10)


@settings(max_examples=20, deadline=None)
@given(n=st.integers(1, 6), phi=st.floats(-np.pi, np.pi))
def test_diamond_chain_counts(n, phi):
    spec = build_diamond_chain(n, phi)
    assert spec.n_sites == 3 * n + 1
    assert len(spec.edges) == 4 * n
    assert all(len(spec.neighbors(3 * k)) == (2 if k in (0, n) else 4) for k in range(n + 1))
