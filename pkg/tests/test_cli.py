import numpy as np
import pytest

from sphex.cli import main, make_oracle
from sphex.errors import InvalidParameterError
from sphex.modelio import load_model
from sphex.sampling import sample_uniform_sphere


@pytest.fixture
def pts_file(tmp_path):
    pts = sample_uniform_sphere(3, 20, 4).points
    path = tmp_path / "pts.txt"
    path.write_text("# test points\n" + "".join(" ".join(f"{x:.17g}" for x in p) + "\n\n" for p in pts))
    return path, pts


def _out(capsys):
    return capsys.readouterr().out.splitlines()


def test_fit_coord1_and_eval(tmp_path, pts_file, capsys):
    model = tmp_path / "m.shex"
    assert main(["fit", "--d", "3", "--q", "1", "--oracle", "coord1", "--s", "32", "--seed", "7",
                 "--out", str(model)]) == 0
    lines = _out(capsys)
    assert lines[:2] == ["s 32", "beta 4"]
    assert load_model(model).s == 32
    path, pts = pts_file
    assert main(["eval", "--model", str(model), "--points", str(path)]) == 0
    values = np.array([float(v) for v in _out(capsys)])
    np.testing.assert_allclose(values, pts[:, 0], atol=1e-10)


def test_fit_from_samples_file(tmp_path, pts_file, capsys):
    pts = sample_uniform_sphere(3, 30, 1).points
    samples = tmp_path / "s.txt"
    samples.write_text("".join(" ".join(f"{x:.17g}" for x in p) + " 1\n" for p in pts))
    model = tmp_path / "c.shex"
    assert main(["fit", "--d", "3", "--q", "2", "--samples-file", str(samples), "--out", str(model)]) == 0
    assert "uniform" in capsys.readouterr().err
    assert main(["eval", "--model", str(model), "--points", str(pts_file[0])]) == 0
    np.testing.assert_allclose([float(v) for v in _out(capsys)], 1.0, atol=1e-10)


def test_fit_errors(tmp_path, capsys):
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    assert main(["fit", "--d", "3", "--q", "2", "--samples-file", str(empty)]) == 1
    bad = tmp_path / "bad.txt"
    bad.write_text("1 0 0 1\n0 2 0 1\n")
    assert main(["fit", "--d", "3", "--q", "2", "--samples-file", str(bad)]) == 1
    assert "bad.txt:2" in capsys.readouterr().err
    assert main(["fit", "--d", "3", "--q", "1", "--oracle", "const", "--s", "0"]) == 1
    assert main(["fit", "--d", "3", "--q", "1", "--oracle", "nope", "--s", "5"]) == 1
    out = tmp_path / "none" / "m.shex"
    assert main(["fit", "--d", "3", "--q", "1", "--oracle", "const", "--s", "5", "--out", str(out)]) == 3


def test_eval_errors(tmp_path, capsys):
    model = tmp_path / "m.shex"
    main(["fit", "--d", "3", "--q", "1", "--oracle", "const", "--s", "8", "--out", str(model)])
    wrong = tmp_path / "w.txt"
    wrong.write_text("1 0 0\n# skip\n1 0\n")
    assert main(["eval", "--model", str(model), "--points", str(wrong)]) == 1
    assert "w.txt:3" in capsys.readouterr().err
    assert main(["eval", "--model", str(tmp_path / "absent.shex"), "--points", str(wrong)]) == 3
    junk = tmp_path / "junk.shex"
    junk.write_bytes(b"SHEX\x01")
    assert main(["eval", "--model", str(junk), "--points", str(wrong)]) == 1


def test_check(capsys):
    assert main(["check", "--suite", "dims", "--d", "3", "--q", "10"]) == 0
    assert all(line.endswith("PASS") for line in _out(capsys))
    assert main(["check", "--suite", "leverage", "--d", "4", "--q", "6"]) == 0
    line = _out(capsys)[0]
    assert "7.0924828549636" in line and line.endswith("PASS")
    with pytest.raises(SystemExit) as exc:
        main(["check", "--suite", "nonsense"])
    assert exc.value.code == 1


def test_phase(tmp_path, capsys):
    args = ["phase", "--d-list", "3", "--q-min", "2", "--q-max", "3", "--s-min", "10", "--s-max", "80",
            "--s-step", "10", "--trials", "20"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(args + ["--out-csv", str(a), "--out-plot", str(tmp_path / "a.gp"),
                        "--out-fig", str(tmp_path / "a.png")]) == 0
    assert main(args + ["--out-csv", str(b), "--workers", "2"]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert (tmp_path / "a.gp").exists() and (tmp_path / "a.png").exists()
    assert main(["phase", "--trials", "0", "--out-csv", str(tmp_path / "c.csv")]) == 1
    assert not (tmp_path / "c.csv").exists()


def test_noisy_command(capsys):
    assert main(["noisy", "--d", "3", "--q", "2", "--s", "60", "--trials", "2", "--mc-points", "5000"]) == 0
    assert _out(capsys)[-2].startswith("median_ratio ")


def test_oracles():
    x = np.array([0.6, 0.8, 0.0])
    assert make_oracle("const", 3)(x) == 1.0
    assert make_oracle("coord1", 3)(x) == 0.6
    z = make_oracle("zonal:3:5", 3)
    noisy = make_oracle("zonal-plus-noise:3:5", 3)
    assert z(x) != noisy(x)
    for bad in ("zonal:3", "zonal:a:1", "const:1"):
        with pytest.raises(InvalidParameterError):
            make_oracle(bad, 3)
