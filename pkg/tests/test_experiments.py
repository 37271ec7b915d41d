import json

import numpy as np
import pytest

from flatband.cli import main
from flatband.experiments import SCENARIOS, ConfigError, ExperimentConfig, run_experiment, simulate, sweep


def _small(**kw):
    base = dict(t_max=1.0, pipelines=["exact", "trotter", "oqc"], shots=512, seed=3)
    base.update(kw)
    return ExperimentConfig.from_scenario("fig4_plaquette", **base)


def test_every_scenario_validates():
    for name in SCENARIOS:
        if name == "custom":
            with pytest.raises(ConfigError, match="lattice"):
                ExperimentConfig.from_scenario(name)
        else:
            assert ExperimentConfig.from_scenario(name).scenario == name


@pytest.mark.parametrize(
    "change, field",
    [
        (dict(dt=0.0), "dt"),
        (dict(t_max=0.25), "t_max"),
        (dict(pipelines=["magic"]), "pipelines"),
        (dict(seed=None), "seed"),
        (dict(occupied=[9]), "occupied"),
        (dict(p2=2.0), "p2"),
        (dict(compression={"fidelity_target": 3}), "compression"),
        (dict(colour="red"), "colour"),
        (dict(window=[0.5, 2.0], transmission_sites=[3]), "window"),
    ],
)
def test_config_errors_name_the_field(change, field):
    with pytest.raises(ConfigError, match=field):
        _small(**change)


def test_sampling_requires_seed():
    with pytest.raises(ConfigError, match="seed"):
        ExperimentConfig.from_scenario("fig3", seed=None)


def test_scenario_defaults():
    assert ExperimentConfig.from_scenario("fig4_trapping").t_max == 17.5
    assert ExperimentConfig.from_scenario("fig5").t_max == 8.0
    fig6 = ExperimentConfig.from_scenario("fig6")
    assert fig6.occupied == [0, 1] and fig6.transmission_sites == [6, 7, 8, 9]


def test_noiseless_run_conserves_particles():
    res = simulate(_small())
    for p, series in res.densities.items():
        np.testing.assert_allclose(series.densities.sum(axis=1), 1.0, atol=1e-6)
    assert res.discard_fraction["trotter"].max() == 0


def test_noisy_run_reports_discards():
    cfg = _small(pipelines=["exact", "noisy_uqc"], trajectories=20, p2=0.05, shots=0)
    res = simulate(cfg)
    assert res.discard_fraction["noisy_uqc"][1:].max() > 0
    np.testing.assert_allclose(res.densities["noisy_uqc"].densities.sum(axis=1), 1.0, atol=1e-12)


def test_run_writes_outputs_and_is_reproducible(tmp_path):
    cfg = _small()
    run_experiment(cfg, tmp_path / "a")
    run_experiment(cfg, tmp_path / "b")
    files = sorted(p.name for p in (tmp_path / "a").iterdir())
    for name in ("densities_exact.csv", "fidelity.csv", "depth.csv", "compression.json", "manifest.json"):
        assert name in files
    text = (tmp_path / "a" / "densities_oqc.csv").read_text()
    assert text.startswith("# scenario=fig4_plaquette pipeline=oqc seed=3")
    for name in files:
        if name != "manifest.json":
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes(), name
    manifest = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert manifest["config"]["seed"] == 3 and "numpy" in manifest["versions"]


def test_transmission_grid():
    cfg = ExperimentConfig.from_scenario("fig7b", grid_V=[0.0, 6.0], grid_amp=[1.0])
    res = simulate(cfg)
    assert res.grid.shape == (1, 2)
    assert res.grid[0, 0] > res.grid[0, 1]


def test_sweep_order_and_parallel_match():
    cfg = ExperimentConfig.from_scenario("fig7a", t_max=2.0, window=[1.0, 2.0])
    rows, text = sweep(cfg, "plaquette_amp", [1, 2, 3])
    assert [r["plaquette_amp"] for r in rows] == [1.0, 2.0, 3.0]
    _, par = sweep(cfg.replace(workers=2), "plaquette_amp", [1, 2, 3])
    assert par == text
    with pytest.raises(ConfigError):
        sweep(cfg, "pipelines", [1])


def test_cli_list_and_validate(capsys, tmp_path):
    assert main(["list-scenarios"]) == 0
    out = capsys.readouterr().out
    assert all(name in out for name in SCENARIOS)
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"scenario": "fig5", "reversed_link": False}))
    assert main(["validate-config", "--config", str(cfg)]) == 0
    assert json.loads(capsys.readouterr().out)["reversed_link"] is False
    cfg.write_text(json.dumps({"scenario": "fig5", "dt": -1}))
    assert main(["validate-config", "--config", str(cfg)]) == 2
    assert "dt" in capsys.readouterr().err


def test_cli_run_and_sweep(tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["run", "--scenario", "fig5", "--t-max", "1.0", "--output", str(out)]) == 0
    assert (out / "transmission_exact.csv").exists()
    capsys.readouterr()
    assert main(["sweep", "--scenario", "fig7b", "--set", "grid_V=[]", "--set", "window=[]", "--t-max", "1.0",
                 "--axis", "V", "--values", "0,2", "--output", str(tmp_path / "sw")]) == 0
    lines = [l for l in capsys.readouterr().out.splitlines() if not l.startswith("#")]
    assert lines[0].startswith("V,") and len(lines) == 3
    assert (tmp_path / "sw" / "sweep_V.csv").exists()
