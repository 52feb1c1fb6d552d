"""End-to-end command line workflow on small inputs."""

import json
import xml.etree.ElementTree as ET

import pytest

from tessperc.cli import _read_csv, build_parser, main


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr().out


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    return tmp_path_factory.mktemp("cli")


@pytest.fixture(scope="module")
def tess_file(workdir):
    path = workdir / "tess.json"
    code = main(["generate", "--model", "lattice", "--lattice-code",
                 "4.4.4.4", "--t", "100", "--seed", "3", "--out", str(path)])
    assert code == 0
    return path


@pytest.fixture(scope="module")
def colored_file(workdir, tess_file):
    path = workdir / "colored.json"
    code = main(["color", "--in", str(tess_file), "--mode", "2",
                 "--p", "0.45", "--seed", "7", "--out", str(path)])
    assert code == 0
    return path


class TestParser:
    def test_requires_subcommand(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args([])

    def test_all_subcommands_present(self):
        ap = build_parser()
        sub = next(a for a in ap._actions
                   if isinstance(a, type(ap._subparsers._group_actions[0])))
        names = set(sub.choices)
        assert names == {"generate", "color", "measure", "estimate",
                         "analytic", "compare", "render", "validate"}


class TestWorkflow:
    def test_generate_validate(self, capsys, workdir):
        code, out = run(capsys, "generate", "--model", "voronoi", "--t", "60",
                        "--seed", "1", "--validate",
                        "--out", str(workdir / "v.json"))
        assert code == 0
        head, rep = out.strip().split("\n")
        assert "cells=" in head
        assert json.loads(rep)["ok"] is True

    def test_color_reports_counts(self, capsys, tess_file, workdir):
        code, out = run(capsys, "color", "--in", str(tess_file), "--mode",
                        "1", "--p", "0.5", "--seed", "2",
                        "--out", str(workdir / "c1.json"))
        assert code == 0
        assert out.startswith("mode=1 p=0.5 black=")

    def test_measure_checks_pass(self, capsys, colored_file):
        code, out = run(capsys, "measure", "--in", str(colored_file),
                        "--window-t", "49", "--check-euler",
                        "--check-duality")
        assert code == 0
        doc = json.loads(out)
        for key in ("interior", "boundary", "closed", "steiner"):
            assert len(doc[key]) == 3
        assert doc["euler_ok"] is True
        assert doc["euler_formula_open"] == doc["euler_combinatorial"]
        assert max(abs(r) for r in doc["duality_residuals"]) < 1e-9
        assert max(abs(r) for r in doc["kinematic_residual"]) < 1e-9

    def test_measure_default_window_single_method(self, capsys, colored_file):
        code, out = run(capsys, "measure", "--in", str(colored_file),
                        "--method", "interior")
        assert code == 0
        doc = json.loads(out)
        assert "interior" in doc and "closed" not in doc

    def test_measure_requires_coloring(self, tess_file):
        with pytest.raises(SystemExit):
            main(["measure", "--in", str(tess_file)])

    def test_measure_window_must_fit(self, colored_file):
        with pytest.raises(SystemExit):
            main(["measure", "--in", str(colored_file),
                  "--window-t", "400"])

    def test_validate_with_oracles(self, capsys, tess_file):
        code, out = run(capsys, "validate", "--in", str(tess_file),
                        "--oracle", "2:0.3:5", "--oracle", "0:0.6:2")
        assert code == 0
        lines = out.strip().split("\n")
        assert json.loads(lines[0])["ok"] is True
        assert all(line.endswith("ok") for line in lines[1:])
        assert len(lines) == 3


@pytest.fixture(scope="module")
def mc_csv(workdir):
    path = workdir / "mc.csv"
    code = main(["estimate", "--model", "lattice", "--t", "100",
                 "--mode", "2", "--p", "0.3,0.6", "--replicates", "24",
                 "--seed", "5", "--covariance", "--out", str(path)])
    assert code == 0
    return path


@pytest.fixture(scope="module")
def ref_csv(workdir):
    path = workdir / "ref.csv"
    code = main(["analytic", "--model", "lattice", "--mode", "2",
                 "--p", "0.3,0.6", "--out", str(path)])
    assert code == 0
    return path


class TestEstimateAnalyticCompare:
    def test_estimate_csv_shape(self, mc_csv):
        meta, data = _read_csv(mc_csv)
        assert meta["model"] == "lattice"
        assert list(data["p"]) == [0.3, 0.6]
        for name in ("delta0", "delta2_err", "sigma00", "sigma12_err"):
            assert name in data

    def test_estimate_reruns_byte_identical(self, workdir, mc_csv):
        path = workdir / "mc2.csv"
        main(["estimate", "--model", "lattice", "--t", "100", "--mode", "2",
              "--p", "0.3,0.6", "--replicates", "24", "--seed", "5",
              "--covariance", "--out", str(path)])
        assert path.read_bytes() == mc_csv.read_bytes()

    def test_estimate_needs_p(self, workdir):
        with pytest.raises(SystemExit):
            main(["estimate", "--model", "lattice", "--mode", "2",
                  "--replicates", "2", "--out", str(workdir / "x.csv")])

    def test_p_grid_expansion(self, capsys, workdir):
        path = workdir / "grid.csv"
        code, _ = run(capsys, "analytic", "--model", "lattice", "--mode",
                      "0", "--p-grid", "0.2:0.8:0.2", "--out", str(path))
        assert code == 0
        _, data = _read_csv(path)
        assert list(data["p"]) == [0.2, 0.4, 0.6, 0.8]

    def test_analytic_voronoi_needs_cell_mode(self, workdir):
        with pytest.raises(SystemExit):
            main(["analytic", "--model", "voronoi", "--mode", "0",
                  "--p", "0.5", "--out", str(workdir / "x.csv")])

    def test_analytic_mu2_is_voronoi_only(self, workdir):
        with pytest.raises(SystemExit):
            main(["analytic", "--model", "lattice", "--mode", "2",
                  "--p", "0.5", "--mu2", "37.8",
                  "--out", str(workdir / "x.csv")])

    def test_analytic_voronoi_variance_column(self, workdir):
        path = workdir / "pvvar.csv"
        main(["analytic", "--model", "voronoi", "--mode", "2",
              "--p", "0.25,0.5", "--mu2", "37.781",
              "--out", str(path)])
        _, data = _read_csv(path)
        assert "sigma00" in data and data["sigma00"][1] > 0

    def test_compare_accepts_matching_curves(self, capsys, mc_csv, ref_csv):
        code, out = run(capsys, "compare", "--mc", str(mc_csv),
                        "--ref", str(ref_csv), "--z", "4.5")
        assert code == 0
        assert "OK: worst z" in out

    def test_compare_flags_bad_reference(self, capsys, workdir, mc_csv):
        bad = workdir / "bad.csv"
        bad.write_text("p,delta2\n0.3,0.8\n0.6,0.1\n")
        code, out = run(capsys, "compare", "--mc", str(mc_csv),
                        "--ref", str(bad), "--z", "3")
        assert code == 2
        assert "FAIL" in out

    def test_compare_needs_shared_columns(self, workdir, mc_csv):
        lonely = workdir / "lonely.csv"
        lonely.write_text("p,other\n0.3,1.0\n")
        with pytest.raises(SystemExit):
            main(["compare", "--mc", str(mc_csv), "--ref", str(lonely)])


class TestRender:
    def test_tessellation_svg(self, capsys, colored_file, workdir):
        path = workdir / "snap.svg"
        code, _ = run(capsys, "render", "--in", str(colored_file),
                      "--window-t", "49", "--out", str(path))
        assert code == 0
        root = ET.fromstring(path.read_text())
        assert root.tag.endswith("svg")

    def test_curve_svg_with_reference_overlay(self, capsys, workdir):
        mc = workdir / "rmc.csv"
        ref = workdir / "rref.csv"
        main(["estimate", "--model", "lattice", "--t", "60", "--mode", "2",
              "--p", "0.2,0.5,0.8", "--replicates", "8", "--seed", "1",
              "--out", str(mc)])
        main(["analytic", "--model", "lattice", "--mode", "2",
              "--p-grid", "0.05:0.95:0.05", "--out", str(ref)])
        path = workdir / "curves.svg"
        code, _ = run(capsys, "render", "--curves", str(mc),
                      "--ref", str(ref), "--out", str(path))
        assert code == 0
        text = path.read_text()
        root = ET.fromstring(text)
        assert root.tag.endswith("svg")
        assert "delta2 ref" in text

    def test_render_needs_an_input(self, workdir):
        with pytest.raises(SystemExit):
            main(["render", "--out", str(workdir / "x.svg")])
