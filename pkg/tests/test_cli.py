import json

import numpy as np
import pytest

from jkaraim.cli import main


TOY_GEOMETRY = {
    "G": [[1.0], [1.0]],
    "sigmas": [1.0, 1.0],
    "axis": 0,
    "constellations": ["GPS", "GPS"],
    "sat_ids": ["a", "b"],
}

TOY_BUDGET = """
# toy budget, single axis at 1e-7
i_req_vert = 1e-7
i_req_horiz = 2e-7
c_req_fa_vert = 5e-8
c_req_fa_horiz = 5e-8
p_sat = 1e-5
p_const = 0
b_nom = 0
"""


@pytest.fixture
def toy_files(tmp_path):
    geom = tmp_path / "geom.json"
    geom.write_text(json.dumps(TOY_GEOMETRY))
    cfg = tmp_path / "budget.cfg"
    cfg.write_text(TOY_BUDGET)
    return str(geom), str(cfg)


class TestCmdPl:
    def test_toy_matches_library_pl(self, toy_files, capsys):
        geom, cfg = toy_files
        assert main(["--config", cfg, "pl", geom]) == 0
        doc = json.loads(capsys.readouterr().out)

        from jkaraim import jackknife
        from jkaraim.distkit import Gaussian, PairedBound
        from jkaraim.integrity import IntegrityBudget, pl_solve
        from jkaraim.model_core import LinearModel, SolutionOps
        from jkaraim.threat import enumerate_modes

        model = LinearModel(np.array([[1.0], [1.0]]), np.ones(2),
                            np.zeros(2), ["a", "b"], ["GPS", "GPS"])
        ops = SolutionOps(model)
        budget = IntegrityBudget(i_req_vert=1e-7, i_req_horiz=2e-7,
                                 c_req_fa_vert=5e-8, c_req_fa_horiz=5e-8,
                                 p_const=0.0, b_nom=0.0)
        tm = enumerate_modes(2, 1, {"GPS": range(2)}, 1e-5, 0.0, m=1)
        acc = [Gaussian(1.0)] * 2
        dists, _ = jackknife.stat_distributions(model, ops, tm, acc,
                                                axis=0)
        thresh = jackknife.thresholds(tm, dists, budget.c_req_fa_total)
        bounds = [PairedBound(a, 0.0) for a in acc]
        expect = pl_solve(model, tm, bounds, thresh, budget, axis=0,
                          ops=ops, gaussian_sigmas=np.ones(2))
        assert doc["pl_m"] == pytest.approx(expect, abs=1e-6)

    def test_jk_and_baseline_agree(self, toy_files, capsys):
        geom, cfg = toy_files
        assert main(["--config", cfg, "pl", geom]) == 0
        jk = json.loads(capsys.readouterr().out)["pl_m"]
        assert main(["--config", cfg, "pl", geom,
                     "--algorithm", "baseline"]) == 0
        base = json.loads(capsys.readouterr().out)["pl_m"]
        assert jk == pytest.approx(base, rel=0.05)

    def test_missing_file_exit_2(self, toy_files, capsys):
        _, cfg = toy_files
        assert main(["--config", cfg, "pl", "/nonexistent/geom.json"]) == 2
        assert "geom.json" in capsys.readouterr().err

    def test_no_redundancy_exit_3(self, tmp_path, toy_files, capsys):
        _, cfg = toy_files
        geom = tmp_path / "square.json"
        geom.write_text(json.dumps({"G": [[1.0]], "sigmas": [1.0],
                                    "axis": 0,
                                    "constellations": ["GPS"]}))
        assert main(["--config", cfg, "pl", str(geom)]) == 3


class TestCmdSim:
    def coarse_cfg(self, tmp_path, **extra):
        lines = ["grid_step_deg = 90", "epoch_step_s = 43200",
                 "duration_s = 86400", "seed = 3"]
        lines += [f"{k} = {v}" for k, v in extra.items()]
        path = tmp_path / "scenario.cfg"
        path.write_text("\n".join(lines) + "\n")
        return str(path)

    def test_outputs_and_manifest(self, tmp_path, capsys):
        cfg = self.coarse_cfg(tmp_path)
        out = str(tmp_path / "run")
        assert main(["--quiet", "sim", cfg, "-o", out]) == 0
        summary = json.loads((tmp_path / "run.json").read_text())
        for level in ("0.75", "0.95", "0.995"):
            assert level in summary["coverage"]
        manifest = json.loads((tmp_path / "run.manifest.json").read_text())
        assert cfg in manifest["input_digests"]
        assert len(manifest["input_digests"][cfg]) == 64

    def test_rerun_byte_identical(self, tmp_path):
        cfg = self.coarse_cfg(tmp_path)
        outs = []
        for name in ("a", "b"):
            out = str(tmp_path / name)
            assert main(["--quiet", "sim", cfg, "-o", out]) == 0
            outs.append((tmp_path / f"{name}.csv").read_bytes())
        assert outs[0] == outs[1]

    def test_dual_constellation_mode_count(self, tmp_path):
        cfg = self.coarse_cfg(tmp_path, constellations="GPS,GAL",
                              epoch_step_s=86400)
        out = str(tmp_path / "dual")
        assert main(["--quiet", "sim", cfg, "-o", out]) == 0
        summary = json.loads((tmp_path / "dual.json").read_text())
        assert summary["mode_count_max"] == 1178


class TestCmdFit:
    def test_standard_normal_sigma(self, tmp_path, capsys):
        rng = np.random.default_rng(1)
        path = tmp_path / "normal.csv"
        np.savetxt(path, rng.standard_normal(100000))
        assert main(["fit", str(path)]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["gaussian_sigma"] == pytest.approx(1.0, abs=0.02)

    def test_bgmm_file_yields_passing_pgo(self, tmp_path, capsys):
        rng = np.random.default_rng(3)
        n = 100000
        comp = rng.random(n) < 0.9
        x = np.where(comp, rng.standard_normal(n),
                     3.0 * rng.standard_normal(n))
        path = tmp_path / "bgmm.csv"
        np.savetxt(path, x)
        assert main(["fit", str(path)]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["bgmm"]["p1"] == pytest.approx(0.9, rel=0.05)
        assert doc["dominance"]["passes"]

    def test_empty_file_exit_2(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("")
        assert main(["fit", str(path)]) == 2


class TestCmdDetect:
    def test_toy_hand_statistics(self, toy_files, tmp_path, capsys):
        geom, cfg = toy_files
        obs = tmp_path / "obs.json"
        obs.write_text("[1.0, 3.0]")
        assert main(["--config", cfg, "detect", geom, str(obs)]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert not doc["alert"]
        assert sorted(abs(v) for v in doc["stats"].values()) == [2.0, 2.0]

    def test_large_bias_alerts(self, toy_files, tmp_path, capsys):
        geom, cfg = toy_files
        obs = tmp_path / "obs.json"
        obs.write_text("[0.0, 100.0]")
        assert main(["--config", cfg, "detect", geom, str(obs)]) == 0
        assert json.loads(capsys.readouterr().out)["alert"]

    def test_wrong_observation_count_exit_2(self, toy_files, tmp_path,
                                            capsys):
        geom, cfg = toy_files
        obs = tmp_path / "obs.json"
        obs.write_text("[1.0, 2.0, 3.0]")
        assert main(["--config", cfg, "detect", geom, str(obs)]) == 2
