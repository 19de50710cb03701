import json

import pytest

from mrlab.cli import main


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr().out
    return code, out


def test_gen_gamma_stdout_and_determinism(capsys):
    code1, out1 = run(["gen-gamma", "--family", "constant", "--value", "0.1",
                       "--n", "8"], capsys)
    code2, out2 = run(["gen-gamma", "--family", "constant", "--value", "0.1",
                       "--n", "8"], capsys)
    assert code1 == 0 and out1 == out2
    lines = [l for l in out1.splitlines() if not l.startswith("#")]
    assert lines[0] == "m,c_m,gamma_m,log_gamma_m"
    first = lines[1].split(",")
    assert first[0] == "1" and float(first[2]) == 1.0
    assert "# schema mrlab/gen-gamma/v1" in out1
    assert "# seed 0" in out1


def test_gen_gamma_lacunary_head(capsys):
    code, out = run(["gen-gamma", "--family", "lacunary", "--n", "4"], capsys)
    assert code == 0
    vals = [float(l.split(",")[2]) for l in out.splitlines()
            if l and not l.startswith("#") and not l.startswith("m,")]
    assert vals == [4.0, 2.0, 16.0, 8.0]


def test_pi_table(capsys):
    code, out = run(["pi-table", "--n", "16"], capsys)
    assert code == 0
    rows = {}
    for line in out.splitlines():
        if line.startswith("#") or line.startswith("m,"):
            continue
        m, pi, inv = (int(x) for x in line.split(","))
        rows[m] = (pi, inv)
    assert rows[2] == (2, 2) and rows[6][0] == 4 and rows[10][0] == 8
    assert rows[4][0] == 6 and rows[6][1] == 4  # inverse of pi(4) = 6 is 4
    assert any(l.startswith("# b_list 2 4 8 12") for l in out.splitlines())


def test_semigroup_check_verdicts(tmp_path, capsys):
    out_file = tmp_path / "pos.csv"
    code = main(["semigroup-check", "--gamma", "lacunary", "--n", "64",
                 "--out", str(out_file)])
    assert code == 0
    text = out_file.read_text()
    assert "# verdict true" in text
    code2, out2 = run(["semigroup-check", "--gamma", "constant:0.1", "--n", "64"],
                      capsys)
    assert code2 == 0
    assert "# verdict false" in out2


def test_bv_bound_ok(capsys):
    code, out = run(["bv-bound", "--alpha", "1.0", "--tgrid", "1.0", "--n", "500"],
                    capsys)
    assert code == 0
    row = [l for l in out.splitlines() if l and l[0].isdigit()][0]
    cols = row.split(",")
    assert float(cols[3]) == pytest.approx(16.0 / 2.718281828459045, rel=1e-12)
    assert cols[4] == "true"


def test_bip_check_exit_codes(capsys):
    code, out = run(["bip-check", "--family", "power", "--alpha", "0.25",
                     "--pairs", "100", "--tgrid", "0.1,1"], capsys)
    assert code == 0
    assert "# worst_ratio" in out


def test_rbound_blowup_ratio_two(capsys):
    code, out = run(["rbound-blowup", "--family", "powerlog", "--alpha", "0.25",
                     "--p", "4", "--blocks", "100,10000"], capsys)
    assert code == 0
    rows = [l.split(",") for l in out.splitlines() if l and l[0].isdigit()]
    l100, l10000 = float(rows[0][1]), float(rows[1][1])
    assert l10000 / l100 == pytest.approx(2.0, abs=0.2)


def test_diag_norm_and_uncond(capsys):
    code, out = run(["diag-norm", "--family", "power", "--alpha", "0.25",
                     "--p", "4", "--blocks", "12"], capsys)
    assert code == 0 and "# regular true" in out
    code2, out2 = run(["uncond-constant", "--n", "8", "--p", "2"], capsys)
    assert code2 == 0
    val = float([l for l in out2.splitlines() if l.startswith("8,")][0].split(",")[3])
    assert val >= 1.0


def test_interval_certify_json(capsys):
    code, out = run(["interval-certify", "--left", "1.5", "--right", "3",
                     "--left-closed", "--right-closed"], capsys)
    assert code == 0
    report = json.loads(out)
    assert report["set_equal"] is True
    assert report["interval"] == "[1.5, 3]"
    assert report["plan"]["right_kind"] == "power"
    ps = {entry["p"]: entry["predicted"] for entry in report["per_p"]}
    assert ps[1.5] and ps[3.0] and not ps[3.05] and not ps[1.45]


def test_interval_certify_infinite(capsys):
    code, out = run(["interval-certify", "--left", "1", "--right", "inf"], capsys)
    assert code == 0
    assert json.loads(out)["set_equal"] is True


def test_dissipativity_command(capsys):
    code, out = run(["dissipativity", "--family", "power", "--alpha", "0.25",
                     "--block", "30"], capsys)
    assert code == 0
    row = [l for l in out.splitlines() if l.startswith("30,")][0].split(",")
    assert float(row[1]) > 0.0
    assert float(row[1]) == pytest.approx(float(row[2]), rel=1e-9)


def test_rad_norm_command(capsys):
    code, out = run(["rad-norm", "--k", "8", "--blocks", "5", "--p", "2.5",
                     "--samples", "20000"], capsys)
    assert code == 0
    row = [l for l in out.splitlines() if l.startswith("8,")][0].split(",")
    exact, sampled = float(row[2]), float(row[3])
    assert sampled == pytest.approx(exact, rel=0.05)


def test_sector_probe_command(capsys):
    code, out = run(["sector-probe", "--gamma", "lacunary", "--n", "36",
                     "--angles", "1.0", "--radii", "geom:1:100:3",
                     "--trials", "1"], capsys)
    assert code == 0
    assert "# measured_K" in out


def test_selftest_subset(capsys):
    code, out = run(["selftest", "--only", "6,9"], capsys)
    assert code == 0
    assert out.count("[PASS]") == 2


def test_usage_error_exit_one_and_suggestion(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["gen-gamma", "--famly", "power"])
    assert exc.value.code == 1
    err = capsys.readouterr().err
    assert "--family" in err


def test_config_file_overrides(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"n": 5, "family": "lacunary"}))
    code, out = run(["gen-gamma", "--n", "99", "--config", str(cfg)], capsys)
    assert code == 0
    data_rows = [l for l in out.splitlines() if l and l[0].isdigit()]
    assert len(data_rows) == 5


def test_out_format_aliases(capsys):
    # a bare format name as the target selects stdout in that format
    code, out = run(["rbound-blowup", "--family", "power", "--alpha", "0.25",
                     "--p", "4", "--blocks", "100,1000", "--out", "csv"], capsys)
    assert code == 0 and out.startswith("# mrlab")
    code, out = run(["gen-gamma", "--n", "3", "--format", "json"], capsys)
    assert code == 0
    data = json.loads(out)
    assert data["columns"] == ["m", "c_m", "gamma_m", "log_gamma_m"]
    assert data["rows"][0][1] is None  # no ratio ahead of the first entry
    code, out = run(["interval-certify", "--left", "2", "--right", "5",
                     "--left-closed", "--format", "csv"], capsys)
    assert code == 0 and "# set_equal true" in out


def test_seeded_command_byte_identical(capsys):
    args = ["rad-norm", "--k", "8", "--blocks", "5", "--seed", "7",
            "--samples", "5000"]
    _, out1 = run(args, capsys)
    _, out2 = run(args, capsys)
    assert out1 == out2
    _, out3 = run(args[:-1] + ["5001"], capsys)
    assert out1 != out3


def test_env_seed_default(capsys, monkeypatch):
    monkeypatch.setenv("MRLAB_SEED", "1234")
    code, out = run(["rad-norm", "--k", "6", "--blocks", "4", "--samples", "1000"],
                    capsys)
    assert code == 0
    assert "# seed 1234" in out


def test_unwritable_output_is_io_error():
    with pytest.raises(SystemExit) as exc:
        main(["gen-gamma", "--n", "4", "--out", "/nonexistent-dir/x.csv"])
    assert exc.value.code == 1
