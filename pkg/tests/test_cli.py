import math

import pandas as pd
import pytest

from src import main as entry
from src.algebra.sparse import to_sparse
from src.cli.plotdata import PLOT_COLUMNS, emit_plot_data
from src.cli.runner import config_hash, load_document, prepare_config, run, run_directory
from src.cli.schema import parse_override, resolve_config
from src.core.errors import ConfigError, NumericalError
from src.database.connection import RegistryConnection
from src.hamiltonians.builder import build_from_couplings
from src.models.run import Run
from src.spectral.analysis import full_spectrum, gaps
from src.utils.io import read_couplings, read_json, write_json


class TestConfigResolution:

    def test_defaults_are_merged(self):
        config = resolve_config({"mode": "spectrum", "model": {"L": 6}})
        assert config["model"]["theta"] == pytest.approx(math.pi / 2)
        assert config["model"]["perturbation"] == "none"
        assert config["spectrum"]["k"] == 32

    def test_missing_seed(self):
        with pytest.raises(ConfigError) as info:
            resolve_config({"mode": "dynamics", "model": {"L": 4}})
        assert info.value.key == "dynamics.seed"

    def test_wrong_type(self):
        with pytest.raises(ConfigError) as info:
            resolve_config({"mode": "spectrum", "model": {"L": "four"}})
        assert info.value.key == "model.L"

    def test_odd_length(self):
        with pytest.raises(ConfigError) as info:
            resolve_config({"mode": "spectrum"}, ["model.L=3"])
        assert info.value.key == "model.L"

    def test_unknown_key(self):
        with pytest.raises(ConfigError) as info:
            resolve_config({"mode": "spectrum", "model": {"L": 4, "foo": 1}})
        assert info.value.key == "model.foo"

    def test_unknown_mode(self):
        with pytest.raises(ConfigError) as info:
            resolve_config({"mode": "transport"})
        assert info.value.key == "mode"

    def test_parse_override(self):
        assert parse_override("dynamics.sites=[1,2]") == (["dynamics", "sites"], [1, 2])
        assert parse_override("model.perturbation=inter") == (["model", "perturbation"], "inter")
        assert parse_override("model.rescaled=true") == (["model", "rescaled"], True)
        with pytest.raises(ConfigError):
            parse_override("model.L")

    def test_iontrap_dynamics_defaults(self):
        config = resolve_config({"mode": "iontrap-dynamics", "dynamics": {"seed": 1}})
        assert config["dynamics"]["axes"] == ["x", "y", "z"]
        assert config["dynamics"]["N"] == 40
        assert config["active"]["L"] == 8

    def test_window_larger_than_crystal(self):
        with pytest.raises(ConfigError) as info:
            resolve_config({"mode": "iontrap", "trap": {"N": 10}, "active": {"L": 8}})
        assert info.value.key == "active.L"

    def test_site_outside_chain(self):
        with pytest.raises(ConfigError) as info:
            resolve_config({"mode": "dynamics", "model": {"L": 4}, "dynamics": {"seed": 0, "sites": [5]}})
        assert info.value.key == "dynamics.sites"

    def test_subcommand_must_match_document(self):
        with pytest.raises(ConfigError) as info:
            prepare_config({"mode": "dynamics"}, "spectrum")
        assert info.value.key == "mode"

    def test_hash_ignores_output_dir(self, tmp_path):
        a = prepare_config({}, "spectrum", ["model.L=4"], output=tmp_path / "a")
        b = prepare_config({}, "spectrum", ["model.L=4"], output=tmp_path / "b")
        assert config_hash(a) == config_hash(b)

    def test_load_document(self, tmp_path):
        with pytest.raises(ConfigError):
            load_document(tmp_path / "missing.json")
        broken = tmp_path / "broken.json"
        broken.write_text("{")
        with pytest.raises(ConfigError):
            load_document(broken)


class TestPipelines:

    def test_spectrum_run(self, settings, tmp_path):
        config = prepare_config({}, "spectrum", ["model.L=4"], output=tmp_path / "run")
        outcome = run(config, settings)
        assert outcome.manifest["summary"]["ground_multiplicity"] == 4
        assert read_json(outcome.output_dir / "oracle.json")["pass"] is True
        assert run_directory(settings, outcome.run_id) == outcome.output_dir
        assert "диагонализация" in (outcome.output_dir / "run.log").read_text(encoding="utf-8")
        assert "run.log" not in {f["path"] for f in outcome.manifest["files"]}

        first = {f["path"]: f["blob"] for f in outcome.manifest["files"]}
        again = run(config, settings)
        assert {f["path"]: f["blob"] for f in again.manifest["files"]} == first
        assert again.run_id != outcome.run_id

    def test_zeromode_run(self, settings, tmp_path):
        document = {"mode": "zeromode", "zeromode": {"kinds": ["A"], "L_values": [4, 6]}}
        outcome = run(prepare_config(document, output=tmp_path / "zm"), settings)
        checks = read_json(outcome.output_dir / "checks.json")
        assert checks["failed"] == []
        residuals = pd.read_csv(outcome.output_dir / "residuals.csv")
        assert list(residuals["L"]) == [4, 6]
        assert residuals["ratio"].iloc[1] == pytest.approx(1.0 / 1.4)

    def test_dynamics_run_and_plot_data(self, settings, tmp_path):
        overrides = [
            "model.L=4",
            "model.delta=0.4",
            "model.perturbation=inter",
            "dynamics.seed=5",
            "dynamics.N=3",
            "dynamics.T=2.0",
            "dynamics.method=exact",
        ]
        outcome = run(prepare_config({}, "dynamics", overrides, output=tmp_path / "dyn"), settings)
        ttc = pd.read_csv(outcome.output_dir / "ttc_z1.csv")
        assert len(ttc) == 21
        assert ttc["re"].iloc[0] == pytest.approx(0.25)
        assert list(ttc.columns) == ["t", "re", "im", "variance"]

        table = pd.read_csv(emit_plot_data(outcome.output_dir))
        assert list(table.columns) == PLOT_COLUMNS
        assert set(table["series"]) == {"ttc", "ttc_abs", "fft"}
        assert len(table) == 21 + 21 + 11

    def test_dynamics_convergence_report(self, settings, tmp_path):
        overrides = [
            "model.L=4",
            "model.delta=0.4",
            "model.perturbation=inter",
            "dynamics.seed=2",
            "dynamics.N=2",
            "dynamics.T=2.0",
        ]
        outcome = run(prepare_config({}, "dynamics", overrides, output=tmp_path / "conv"), settings)
        summary = outcome.manifest["summary"]
        assert summary["samples"] == 2
        assert summary["convergence_samples"] == 4
        assert 0.0 <= summary["z1"]["dt_convergence"] <= settings.CONVERGENCE_TOL
        assert 0.0 <= summary["z1"]["ensemble_convergence"] <= 0.5
        ttc = pd.read_csv(outcome.output_dir / "ttc_z1.csv")
        assert ttc["re"].iloc[0] == pytest.approx(0.25)

    def test_convergence_checks_can_be_disabled(self, settings, tmp_path):
        overrides = [
            "model.L=4",
            "dynamics.seed=2",
            "dynamics.N=2",
            "dynamics.T=1.0",
            "dynamics.step_check=false",
            "dynamics.ensemble_check=false",
        ]
        outcome = run(prepare_config({}, "dynamics", overrides, output=tmp_path / "plain"), settings)
        summary = outcome.manifest["summary"]
        assert summary["convergence_samples"] == 2
        assert summary["z1"]["dt_convergence"] is None
        assert summary["z1"]["ensemble_convergence"] is None

    def test_step_check_rejects_unconverged_series(self, settings, tmp_path):
        settings.CONVERGENCE_TOL = 0.0
        overrides = [
            "model.L=4",
            "model.delta=0.4",
            "model.perturbation=inter",
            "dynamics.seed=2",
            "dynamics.N=1",
            "dynamics.T=2.0",
            "dynamics.dt=0.05",
            "dynamics.ensemble_check=false",
        ]
        with pytest.raises(NumericalError):
            run(prepare_config({}, "dynamics", overrides, output=tmp_path / "coarse"), settings)

    def test_iontrap_run(self, settings, tmp_path):
        overrides = ["trap.N=12", "trap.restarts=2", "active.L=8"]
        outcome = run(prepare_config({}, "iontrap", overrides, output=tmp_path / "trap"), settings)
        couplings = pd.read_csv(outcome.output_dir / "couplings.csv")
        assert len(couplings) == 8 * 7 // 2
        bonds = couplings[couplings["j"] == couplings["i"] + 1]
        odd, even = bonds[bonds["i"] % 2 == 1], bonds[bonds["i"] % 2 == 0]
        assert even["Jxx"].median() - odd["Jxx"].median() == pytest.approx(1.0)
        assert odd["Jzz"].median() == pytest.approx(1.0)
        report = read_json(outcome.output_dir / "iontrap.json")
        assert report["modes"]["com_frequency"] == pytest.approx(125.0, rel=1e-9)
        assert report["active"]["hidden"] == [1, 4, 7, 10]
        crystal = pd.read_csv(outcome.output_dir / "crystal.csv")
        assert (crystal["role"] == "active").sum() == 8

    @pytest.mark.slow
    def test_default_seventy_ion_mapping(self, settings, tmp_path):
        outcome = run(prepare_config({}, "iontrap", [], output=tmp_path / "trap70"), settings)
        report = read_json(outcome.output_dir / "iontrap.json")
        assert report["crystal"]["max_abs_y"] <= 1e-8
        assert report["modes"]["com_frequency"] == pytest.approx(125.0, rel=1e-9)
        crystal = pd.read_csv(outcome.output_dir / "crystal.csv")
        rows = crystal.loc[crystal["role"] != "spectator", "row"].to_numpy()
        assert (rows != 0).all() and (rows[1:] == -rows[:-1]).all()

        assert report["inter_row_leak"] < 0.05
        assert 2.5 <= report["decay_exponent"]["zz"] <= 3.5
        assert 2.5 <= report["decay_exponent"]["xx"] <= 3.5
        assert 0.5 <= report["match"]["delta_eff"] <= 0.7
        assert 0.05 <= report["match"]["max_residual_ratio"] <= 0.2

    @pytest.mark.slow
    def test_matched_chain_revival_grows_with_length(self, settings, tmp_path):
        revival = {}
        for L in (6, 8):
            outcome = run(prepare_config({}, "iontrap", [f"active.L={L}"], output=tmp_path / f"trap{L}"), settings)
            H = to_sparse(build_from_couplings(read_couplings(outcome.output_dir / "couplings.csv", n=L)))
            revival[L] = 2.0 * math.pi / gaps(full_spectrum(H)).delta_L
        assert revival[8] > revival[6]

    def test_iontrap_dynamics_run(self, settings, tmp_path):
        overrides = [
            "trap.N=6",
            "trap.restarts=2",
            "active.L=4",
            "dynamics.seed=1",
            "dynamics.N=2",
            "dynamics.T=1.0",
            "dynamics.method=exact",
        ]
        outcome = run(prepare_config({}, "iontrap-dynamics", overrides, output=tmp_path / "trapdyn"), settings)
        series = {f["path"] for f in outcome.manifest["files"] if f["kind"] == "series"}
        assert series == {"ttc_x1.csv", "ttc_y1.csv", "ttc_z1.csv"}

    def test_failed_run_is_registered(self, settings, tmp_path):
        overrides = ["model.L=4", "dynamics.seed=0", "dynamics.T=1.05"]
        with pytest.raises(ConfigError):
            run(prepare_config({}, "dynamics", overrides, output=tmp_path / "bad"), settings)
        db = RegistryConnection(settings.REGISTRY_PATH)
        try:
            records = Run(db).find()
        finally:
            db.close()
        assert [r["status"] for r in records] == ["failed"]


class TestPlotData:

    def test_empty_run_writes_header(self, tmp_path):
        write_json(tmp_path / "manifest.json", {"files": [{"path": "gaps.json", "kind": "summary", "blob": ""}]})
        path = emit_plot_data(tmp_path)
        assert path.read_text() == ",".join(PLOT_COLUMNS) + "\n"

    def test_missing_artifact(self, tmp_path):
        write_json(
            tmp_path / "manifest.json",
            {"files": [{"path": "ttc_z1.csv", "kind": "series", "blob": "", "site": 1, "axis": "z"}]},
        )
        with pytest.raises(FileNotFoundError):
            emit_plot_data(tmp_path)


class TestMain:

    @pytest.fixture(autouse=True)
    def isolated_settings(self, monkeypatch, settings):
        monkeypatch.setattr(entry, "Config", lambda: settings)

    def test_config_error_exit_code(self):
        assert entry.main(["spectrum", "--set", "model.L=3"]) == 2

    def test_numerical_error_exit_code(self, monkeypatch):
        def failing_run(config, settings):
            raise NumericalError("нет сходимости")

        monkeypatch.setattr(entry, "run", failing_run)
        assert entry.main(["spectrum", "--set", "model.L=4"]) == 3

    def test_successful_run_prints_directory(self, tmp_path, capsys):
        target = tmp_path / "cli-run"
        assert entry.main(["zeromode", "--set", "zeromode.L_values=[4]", "--output", str(target)]) == 0
        assert capsys.readouterr().out.strip() == str(target)
        assert (target / "manifest.json").exists()

    def test_plotdata_for_unknown_run(self):
        assert entry.main(["plotdata", "--run-id", "42"]) == 2
