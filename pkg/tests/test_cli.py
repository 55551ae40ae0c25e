import csv
import io
import json
import math
import subprocess
import sys

import pytest

from noisy_hbac.cli import main, manifest_path


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def read_csv(text):
    return list(csv.DictReader(io.StringIO(text)))


@pytest.fixture(scope="module")
def gad_map(tmp_path_factory):
    path = tmp_path_factory.mktemp("maps") / "gad_ppa.csv"
    code = main(["sweep", "--n", "3", "--eps0", "0.11", "--channel", "gad", "--algo", "ppa", "--grid-step", "0.04", "--out", str(path)])
    assert code == 0
    return path


class TestLimit:
    @pytest.mark.parametrize("n, eps0, expected", [(3, 0.11, 0.44), (1, 0.2, 0.2), (4, 0.05, 0.40)])
    def test_values(self, capsys, n, eps0, expected):
        code, out, _ = run(capsys, "limit", "--n", n, "--eps0", eps0)
        assert code == 0
        (row,) = read_csv(out)
        assert float(row["polarization"]) == pytest.approx(expected, rel=1e-15)

    @pytest.mark.parametrize("eps0", ["0", "-0.1"])
    def test_rejects_nonpositive(self, capsys, eps0):
        code, _, err = run(capsys, "limit", "--n", 3, "--eps0", eps0)
        assert code == 2
        assert "eps0" in err

    def test_json(self, capsys):
        _, out, _ = run(capsys, "limit", "--n", 3, "--eps0", 0.11, "--format", "json")
        assert json.loads(out)["polarization"] == pytest.approx(0.44)


class TestIterate:
    def test_noiseless_tsac(self, capsys, tmp_path):
        out = tmp_path / "traj.csv"
        code, _, _ = run(capsys, "iterate", "--n", 3, "--eps0", 0.11, "--algo", "tsac", "--out", out)
        assert code == 0
        rows = read_csv(out.read_text())
        assert list(rows[0]) == ["iteration", "polarization", "lambda", "converged"]
        assert float(rows[-1]["polarization"]) == pytest.approx(0.44, abs=1e-6)
        assert rows[-1]["converged"] == "true"
        assert all(r["converged"] == "false" for r in rows[:-1])
        manifest = json.loads(manifest_path(out).read_text())
        assert manifest["command"] == "iterate"
        assert manifest["params"]["n"] == 3
        assert "version" in manifest and "duration_s" in manifest

    def test_gad_ppa(self, capsys):
        code, out, _ = run(capsys, "iterate", "--n", 3, "--eps0", 0.11, "--algo", "ppa", "--channel", "gad", "--p", 0.68, "--gamma", 0.2)
        assert code == 0
        assert float(read_csv(out)[-1]["polarization"]) > 0.44

    def test_one_iteration(self, capsys, tmp_path):
        out = tmp_path / "t.csv"
        code, _, _ = run(capsys, "iterate", "--n", 3, "--eps0", 0.11, "--max-iters", 1, "--out", out)
        assert code == 3
        rows = read_csv(out.read_text())
        assert len(rows) == 1 and rows[0]["converged"] == "false"

    def test_json_mirrors_csv(self, capsys):
        args = ("iterate", "--n", 2, "--eps0", 0.11, "--algo", "ppa")
        _, text_csv, _ = run(capsys, *args)
        _, text_json, _ = run(capsys, *args, "--format", "json")
        rows = read_csv(text_csv)
        doc = json.loads(text_json)
        assert doc["status"] == "converged"
        assert len(doc["trajectory"]) == len(rows)
        for r, j in zip(rows, doc["trajectory"]):
            assert float(r["lambda"]) == j["lambda"]
            assert (r["converged"] == "true") == j["converged"]

    def test_missing_gamma(self, capsys):
        code, _, _ = run(capsys, "iterate", "--n", 3, "--eps0", 0.11, "--channel", "gad", "--p", 0.5)
        assert code == 2


class TestSweep:
    def test_enhanced_gad_row(self, gad_map):
        rows = read_csv(gad_map.read_text())
        assert list(rows[0]) == ["p", "gamma", "lambda_noisy", "lambda_hbac", "lambda_noise_alone", "E", "status"]
        hit = [r for r in rows if float(r["p"]) == 0.68 and float(r["gamma"]) == 0.2]
        assert len(hit) == 1 and float(hit[0]["E"]) > 0
        keys = [(float(r["p"]), float(r["gamma"])) for r in rows]
        assert keys == sorted(keys)

    def test_depolarizing(self, capsys):
        code, out, _ = run(capsys, "sweep", "--n", 3, "--eps0", 0.11, "--channel", "depolarizing", "--grid-step", 0.1)
        assert code == 0
        assert all(float(r["E"]) <= 0 for r in read_csv(out))

    @pytest.mark.parametrize("step", ["0", "0.3"])
    def test_bad_grid(self, capsys, step):
        code, _, _ = run(capsys, "sweep", "--n", 2, "--eps0", 0.11, "--grid-step", step)
        assert code == 2

    def test_nonconverged_cells(self, capsys):
        code, out, _ = run(capsys, "sweep", "--n", 2, "--eps0", 0.11, "--grid-step", 0.5, "--max-iters", 2)
        assert code == 3
        assert "nonconverged" in {r["status"] for r in read_csv(out)}

    def test_deterministic_and_thread_independent(self, capsys, tmp_path):
        texts = []
        for threads in (1, 1, 2):
            out = tmp_path / f"m{len(texts)}.csv"
            main(["sweep", "--n", "2", "--eps0", "0.11", "--algo", "ppa", "--grid-step", "0.1", "--threads", str(threads), "--out", str(out)])
            texts.append(out.read_bytes())
        assert texts[0] == texts[1] == texts[2]
        assert b"\r" not in texts[0]

    def test_json_format(self, capsys):
        _, out, _ = run(capsys, "sweep", "--n", 2, "--eps0", 0.11, "--grid-step", 0.5, "--format", "json")
        doc = json.loads(out)
        assert doc["channel"] == "gad" and len(doc["cells"]) == 9


class TestVolume:
    def test_from_file_equals_live(self, capsys, gad_map):
        _, from_file, _ = run(capsys, "volume", "--map", gad_map)
        _, live, _ = run(capsys, "volume", "--n", 3, "--eps0", 0.11, "--channel", "gad", "--algo", "ppa", "--grid-step", 0.04)
        a, b = json.loads(from_file), json.loads(live)
        assert abs(a["volume"] - b["volume"]) <= 1e-15
        assert a["volume"] > 0
        assert a["n"] == 3 and a["algorithm"] == "ppa"

    def test_all_negative(self, capsys, tmp_path):
        path = tmp_path / "neg.csv"
        path.write_text(
            "p,gamma,lambda_noisy,lambda_hbac,lambda_noise_alone,E,status\n"
            + "".join(f"{p},{g},0.6,0.7,0.65,-0.1,ok\n" for p in (0, 1) for g in (0, 1))
        )
        code, out, _ = run(capsys, "volume", "--map", path)
        assert code == 0
        assert json.loads(out)["volume"] == 0

    @pytest.mark.parametrize(
        "body, line",
        [
            ("0,0,0.6,0.7,0.65,-0.1,ok\n0,1,0.6,0.7,0.65,oops,ok\n", 3),
            ("0,0,0.6,0.7,0.65,-0.1,ok\n0,1,0.6,0.7,0.65,-0.1\n", 3),
            ("0,0,0.6,0.7,0.65,-0.1,ok\n0,1,0.6,0.7,0.65,-0.1,bogus\n", 3),
        ],
    )
    def test_malformed(self, capsys, tmp_path, body, line):
        path = tmp_path / "bad.csv"
        path.write_text("p,gamma,lambda_noisy,lambda_hbac,lambda_noise_alone,E,status\n" + body)
        code, _, err = run(capsys, "volume", "--map", path)
        assert code == 4
        assert f"line {line}" in err

    def test_bad_header(self, capsys, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b\n1,2\n")
        code, _, err = run(capsys, "volume", "--map", path)
        assert code == 4 and "line 1" in err

    def test_incomplete_grid(self, capsys, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("p,gamma,lambda_noisy,lambda_hbac,lambda_noise_alone,E,status\n0,0,0,0,0,0,ok\n0,1,0,0,0,0,ok\n1,0,0,0,0,0,ok\n")
        code, _, err = run(capsys, "volume", "--map", path)
        assert code == 4 and "incomplete" in err

    def test_missing_file(self, capsys, tmp_path):
        code, _, _ = run(capsys, "volume", "--map", tmp_path / "nope.csv")
        assert code == 4


class TestOasStep:
    def test_one_step_gad(self, capsys, tmp_path):
        out = tmp_path / "step.json"
        code, _, _ = run(capsys, "oas-step", "--n", 3, "--eps0", 0.11, "--p", 0.69, "--gamma", 0.2, "--out", out)
        assert code == 0
        doc = json.loads(out.read_text())
        assert doc["stages"]["after_compression"]["polarization_over_eps0"] == pytest.approx(4.20, abs=0.05)
        assert doc["stages"]["after_noise"]["polarization_over_eps0"] < 4.0
        assert doc["condition_holds"] is (doc["delta_lambda"] > 0)
        assert len(doc["stages"]["oas"]["probs"]) == 8
        assert len(doc["after_compression_full"]) == 16

    def test_identity(self, capsys):
        _, out, _ = run(capsys, "oas-step", "--n", 3, "--eps0", 0.11, "--p", 0.69, "--gamma", 0)
        doc = json.loads(out)
        assert doc["delta_lambda"] == 0
        assert doc["condition_holds"] is False


class TestVerify:
    def test_default(self, capsys):
        code, out, _ = run(capsys, "verify")
        assert code == 0
        assert out.count("PASS") == 6 and "FAIL" not in out

    def test_seeded_reproducible(self, capsys):
        _, a, _ = run(capsys, "verify", "--seed", 42, "--samples", 20)
        _, b, _ = run(capsys, "verify", "--seed", 42, "--samples", 20)
        assert a == b

    def test_zero_samples(self, capsys, caplog):
        code, _, _ = run(capsys, "verify", "--samples", 0)
        assert code == 0
        assert "vacuous" in caplog.text


def test_floats_round_trip(gad_map):
    for row in read_csv(gad_map.read_text()):
        for key in ("lambda_noisy", "E"):
            x = float(row[key])
            assert math.isnan(x) or "%.17g" % x == row[key]


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "noisy_hbac", "limit", "--n", "3", "--eps0", "0.11"], capture_output=True, text=True)
    assert res.returncode == 0
    assert "0.44" in res.stdout
