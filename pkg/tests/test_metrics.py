import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from flatband.hamiltonian import hopping_terms
from flatband.lattice import build_single_plaquette
from flatband.metrics import (
    DensitySeries,
    fft_spectrum,
    fidelity_bc,
    overlap,
    sector_densities,
    site_densities,
    time_avg_transmission,
    transmission,
)
from flatband.simulator import EmptyRecordError, ShotRecord, StateVector, exact_evolve, prepare_initial


def test_densities_basis_state():
    np.testing.assert_array_equal(site_densities(prepare_initial(2, [0])), [1, 0])


def test_densities_uniform_superposition():
    n = 5
    amps = np.zeros(2**n, dtype=complex)
    amps[[1 << k for k in range(n)]] = 1 / np.sqrt(n)
    np.testing.assert_allclose(site_densities(StateVector(amps)), np.full(n, 1 / n))


def test_fb_plaquette_transfer():
    psi = exact_evolve(hopping_terms(build_single_plaquette(False)), prepare_initial(4, [0]), np.pi / 2)
    np.testing.assert_allclose(site_densities(psi), [0, 0, 0, 1], atol=1e-9)


def test_record_densities_normalized_over_kept():
    rec = ShotRecord({"10": 30, "01": 10}, 50, 2, discarded=10)
    np.testing.assert_allclose(site_densities(rec), [0.75, 0.25])
    with pytest.raises(EmptyRecordError):
        site_densities(ShotRecord({}, 5, 2, discarded=5))


def test_sector_densities_projects():
    amps = np.zeros(4, dtype=complex)
    amps[0b01] = amps[0b11] = 1 / np.sqrt(2)
    dens, kept = sector_densities(StateVector(amps), 1)
    np.testing.assert_allclose(dens, [0, 1])
    assert kept == pytest.approx(0.5)


def test_fidelity_examples():
    p = np.array([0.2, 0.3, 0.5])
    assert fidelity_bc(p, p) == pytest.approx(1.0)
    assert fidelity_bc([1, 0], [0, 1]) == 0.0
    assert fidelity_bc([0.5, 0.5], [1, 0]) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        fidelity_bc([1, 0], [1, 0, 0])


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=3, max_size=3), st.lists(st.floats(0, 1), min_size=3, max_size=3))
def test_fidelity_bounded_and_symmetric(p, q):
    if sum(p) < 1e-6 or sum(q) < 1e-6:
        return
    f = fidelity_bc(p, q)
    assert 0 <= f <= 1
    assert f == pytest.approx(fidelity_bc(q, p))


def test_overlap_one_hot():
    nt = np.array([0.1, 0.6, 0.3])
    assert overlap(np.eye(3)[1], nt) == pytest.approx(0.6)
    assert overlap(np.eye(3)[0], np.eye(3)[0]) == 1.0


def test_fft_constant_and_tone():
    spec = fft_spectrum(np.full(64, 0.3), 0.1)
    assert np.abs(spec.magnitudes[1:]).max() < 1e-12
    n, dt, k0 = 100, 0.1, 7
    t = np.arange(n) * dt
    spec = fft_spectrum(np.cos(2 * np.pi * k0 / (n * dt) * t), dt)
    assert spec.peak() == (k0, pytest.approx(k0 / (n * dt)))


def test_transmission():
    d = np.array([0.5, 0.5, 0.2, 0.3, 0.5])
    assert transmission(d, [2, 3, 4]) == pytest.approx(1.0)
    assert transmission(np.eye(10)[0] + np.eye(10)[1], range(6, 10)) == 0.0
    with pytest.raises(ValueError):
        transmission(d, [5])


def test_time_average_window_is_open_on_left():
    times = np.round(np.arange(61) * 0.1, 12)
    dens = np.zeros((61, 2))
    dens[:, 1] = times
    series = DensitySeries(times, dens)
    # nine samples: 5.2 .. 6.0
    assert time_avg_transmission(series, [1], 5.1, 6.0) == pytest.approx(np.mean(np.arange(52, 61) / 10))
    with pytest.raises(ValueError):
        time_avg_transmission(series, [1], 6.0, 5.0)


def test_density_series_csv_roundtrip():
    series = DensitySeries([0.0, 0.1], [[1.0, 0.0], [0.75, 0.25]])
    text = series.to_csv("scenario=x pipeline=exact seed=0")
    assert text.startswith("# scenario=x")
    back = DensitySeries.from_csv(text)
    np.testing.assert_allclose(back.densities, series.densities)
    assert back.dt == pytest.approx(0.1)
    np.testing.assert_allclose(back.at(0.1), [0.75, 0.25])
    with pytest.raises(KeyError):
        back.at(0.05)
