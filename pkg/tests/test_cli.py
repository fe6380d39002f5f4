import json

import numpy as np
import pytest
from click.testing import CliRunner

from gravvortex.cli import (
    EXIT_INPUT,
    EXIT_NONCONVERGENCE,
    EXIT_OK,
    EXIT_UNDERFLOW,
    RunConfig,
    execute,
    main,
)
from gravvortex.errors import PreconditionError
from gravvortex.surface import read_field

PAIR = '[{"point": "0", "multiplicity": 1}, {"point": "inf", "multiplicity": 1}]'
DOUBLE = '[{"point": "0", "multiplicity": 2}]'
TORUS_ONE = '[{"point": [1.25, 1.25], "multiplicity": 1}]'


def run(*args):
    return CliRunner().invoke(main, list(args))


def write_config(path, **kw):
    path.write_text(json.dumps(kw))
    return str(path)


# --- config -------------------------------------------------------------------


def test_config_round_trip():
    cfg = RunConfig(command="solve", surface="sphere", n1=16, n2=32, divisor=(("0", 2), ("inf", 1)),
                    tau=8.0, alpha=0.1, sweep_param="tau", sweep_values=(7.0, 9.0), lattice_modulus=(0.2, 1.1))
    assert RunConfig.from_json(cfg.to_json()) == cfg
    assert RunConfig.from_dict(cfg.to_dict()) == cfg


def test_config_divisor_normalised():
    cfg = RunConfig.from_dict({"divisor": [{"point": [1.0, 2.0], "multiplicity": 1}, {"point": 3, "multiplicity": 2}]})
    assert RunConfig.from_json(cfg.to_json()) == cfg
    assert cfg.N == 3


@pytest.mark.parametrize("bad", [{"surface": "cube"}, {"n1": 4}, {"tau": -1}, {"alpha": -0.1}, {"tol": 0},
                                 {"lattice_modulus": [0, -1]}, {"mode": "magic"}, {"unknown_key": 1},
                                 {"divisor": []}, {"divisor": [{"point": "0", "multiplicity": 0}]}])
def test_config_rejects_invalid(bad):
    with pytest.raises(PreconditionError):
        RunConfig.from_dict(bad)


# --- classify -----------------------------------------------------------------


def test_classify_unstable_point(tmp_path):
    r = run("classify", "--divisor", DOUBLE, "--tau", "6", "--alpha", "1", "--out", str(tmp_path))
    assert r.exit_code == EXIT_OK
    assert "class Unstable" in r.output
    assert "hilbert_mumford_exponent 2" in r.output
    futaki = next(ln for ln in r.output.splitlines() if ln.startswith("futaki"))
    value = complex(futaki.split()[1].replace("i", "j"))
    assert value == pytest.approx(2j * np.pi * 1 * (4 - 6) * (4 - 2))
    assert futaki.endswith("nonzero")


def test_classify_polystable_pair(tmp_path):
    r = run("classify", "--divisor", PAIR, "--out", str(tmp_path))
    assert r.exit_code == EXIT_OK
    assert "class StrictlyPolystable" in r.output
    assert "maximal_weight 0.000000000000e+00" in r.output
    assert "futaki 0.000000000000e+00+0.000000000000e+00i zero" in r.output


def test_classify_empty_divisor(tmp_path):
    r = run("classify", "--divisor", "[]", "--out", str(tmp_path))
    assert r.exit_code == EXIT_INPUT


def test_classify_malformed_divisor(tmp_path):
    r = run("classify", "--divisor", "{not json", "--out", str(tmp_path))
    assert r.exit_code == EXIT_INPUT


# --- futaki -------------------------------------------------------------------


def test_futaki_single_point(tmp_path):
    cfg = write_config(tmp_path / "c.json", surface="sphere", n1=64, n2=128, tau=6.0, alpha=1.0)
    r = run("futaki", "--config", cfg, "--N", "1", "--l", "0", "--out", str(tmp_path / "o"))
    assert r.exit_code == EXIT_OK
    rel = float(r.output.split("relative_error")[1].split()[0])
    assert rel < 1e-6
    assert f"{8 * np.pi:.16e}" in r.output


def test_futaki_balanced(tmp_path):
    cfg = write_config(tmp_path / "c.json", surface="sphere", n1=32, n2=64, tau=6.0)
    r = run("futaki", "--config", cfg, "--N", "2", "--l", "1", "--out", str(tmp_path / "o"))
    assert r.exit_code == EXIT_OK
    values = [ln for ln in r.output.splitlines() if ln.startswith("value")]
    assert len(values) == 2
    for ln in values:
        re_, im = ln.split()[1:3]
        assert abs(float(re_)) < 1e-8 and abs(float(im.rstrip("i"))) < 1e-8


def test_futaki_torus_rejected(tmp_path):
    r = run("futaki", "--N", "1", "--l", "0", "--out", str(tmp_path))
    assert r.exit_code == EXIT_INPUT


# --- solve --------------------------------------------------------------------


def test_solve_eb_polystable(tmp_path):
    cfg = write_config(tmp_path / "c.json", surface="sphere", n1=32, n2=64, tau=6.0, tol=1e-10,
                       divisor=json.loads(PAIR))
    out = tmp_path / "run"
    r = run("solve", "--config", cfg, "--out", str(out))
    assert r.exit_code == EXIT_OK, r.output
    assert "audit PASS" in r.output
    audit = (out / "audit.txt").read_text().splitlines()[1:]
    assert audit and all(ln.endswith("PASS") for ln in audit)
    for name in ("f.txt", "v.txt", "path.txt", "report.txt", "manifest.json"):
        assert (out / name).exists()


def test_solve_eb_unstable_reports_futaki(tmp_path):
    cfg = write_config(tmp_path / "c.json", surface="sphere", n1=24, n2=48, tau=6.0, tol=1e-10,
                       max_iter=20, divisor=json.loads(DOUBLE))
    out = tmp_path / "run"
    r = run("solve", "--config", cfg, "--out", str(out))
    assert r.exit_code == EXIT_NONCONVERGENCE
    line = next(ln for ln in r.output.splitlines() if ln.startswith("futaki_certificate"))
    assert line.endswith("nonzero")
    assert abs(complex(line.split()[1].replace("i", "j"))) > 0


def test_solve_torus_continuity(tmp_path):
    cfg = write_config(tmp_path / "c.json", surface="torus", n1=32, n2=32, tau=6.0, alpha=0.05,
                       divisor=json.loads(TORUS_ONE))
    out = tmp_path / "run"
    r = run("solve", "--config", cfg, "--out", str(out))
    assert r.exit_code == EXIT_OK, r.output
    rows = [ln.split() for ln in (out / "path.txt").read_text().splitlines()[1:]]
    assert len(rows) >= 2
    assert float(rows[0][0]) == 0.0 and float(rows[-1][0]) == pytest.approx(0.05)
    assert all(float(r[1]) < 1e-8 and float(r[2]) < 1e-8 for r in rows)
    meta, f = read_field(out / "f.txt")
    assert meta["kind"] == "torus" and f.shape == (32, 32)


def test_solve_underflow_exit_code(tmp_path):
    cfg = write_config(tmp_path / "c.json", surface="torus", n1=16, n2=16, tau=6.0, alpha=1000.0,
                       max_steps=5, divisor=json.loads(TORUS_ONE))
    r = run("solve", "--config", cfg, "--out", str(tmp_path / "run"))
    assert r.exit_code == EXIT_UNDERFLOW
    assert "last t" in r.output


def test_solve_inadmissible_tau_is_input_error(tmp_path):
    cfg = write_config(tmp_path / "c.json", surface="torus", n1=16, n2=16, tau=2.0, alpha=0.05,
                       divisor=json.loads(TORUS_ONE))
    r = run("solve", "--config", cfg, "--out", str(tmp_path / "run"))
    assert r.exit_code == EXIT_INPUT


def test_solve_vortex_boundary_nonconvergence(tmp_path):
    cfg = write_config(tmp_path / "c.json", surface="torus", n1=16, n2=16, tau=2.0, alpha=0.0,
                       max_iter=400, divisor=json.loads(TORUS_ONE))
    r = run("solve", "--config", cfg, "--out", str(tmp_path / "run"))
    assert r.exit_code == EXIT_NONCONVERGENCE


def test_audit_rereads_fields(tmp_path):
    cfg = write_config(tmp_path / "c.json", surface="torus", n1=16, n2=16, tau=6.0, alpha=0.02,
                       divisor=json.loads(TORUS_ONE))
    out = str(tmp_path / "run")
    assert run("solve", "--config", cfg, "--out", out).exit_code == EXIT_OK
    r = run("audit", "--config", cfg, "--out", out)
    assert r.exit_code == EXIT_OK, r.output
    assert "FAIL" not in r.output


def test_audit_without_solve(tmp_path):
    cfg = write_config(tmp_path / "c.json", surface="torus", n1=16, n2=16, divisor=json.loads(TORUS_ONE))
    r = run("audit", "--config", cfg, "--out", str(tmp_path / "empty"))
    assert r.exit_code == EXIT_INPUT


def test_sweep_runs_each_value(tmp_path):
    cfg = write_config(tmp_path / "c.json", surface="torus", n1=16, n2=16, alpha=0.0,
                       divisor=json.loads(TORUS_ONE), sweep_param="tau", sweep_values=[5.0, 7.0, 2.0],
                       max_iter=400)
    out = tmp_path / "sweep"
    r = run("sweep", "--config", cfg, "--out", str(out))
    rows = (out / "sweep.txt").read_text().splitlines()[1:]
    codes = [int(ln.split()[1]) for ln in rows]
    assert codes == [EXIT_OK, EXIT_OK, EXIT_NONCONVERGENCE]
    assert r.exit_code == EXIT_NONCONVERGENCE
    assert (out / "run_000" / "f.txt").exists()


def test_sweep_parallel_matches_serial(tmp_path):
    base = dict(surface="torus", n1=16, n2=16, alpha=0.0, divisor=json.loads(TORUS_ONE),
                sweep_param="tau", sweep_values=[5.0, 7.0])
    serial = RunConfig.from_dict(dict(base, command="sweep", out=str(tmp_path / "a")))
    parallel = RunConfig.from_dict(dict(base, command="sweep", out=str(tmp_path / "b"), workers=2))
    execute(serial)
    execute(parallel)
    for k in range(2):
        a = (tmp_path / "a" / f"run_{k:03d}" / "f.txt").read_bytes()
        b = (tmp_path / "b" / f"run_{k:03d}" / "f.txt").read_bytes()
        assert a == b


def test_determinism_byte_identical(tmp_path):
    outs = []
    for name in ("a", "b"):
        cfg = RunConfig.from_dict(dict(command="solve", surface="torus", n1=16, n2=16, alpha=0.02, seed=7,
                                       divisor=json.loads(TORUS_ONE), out=str(tmp_path / name)))
        assert execute(cfg).code == EXIT_OK
        outs.append({p: (tmp_path / name / p).read_bytes() for p in ("f.txt", "v.txt", "path.txt", "audit.txt")})
    assert outs[0] == outs[1]


def test_manifest_echoes_config(tmp_path):
    out = tmp_path / "m"
    r = run("classify", "--divisor", PAIR, "--out", str(out), "--seed", "3")
    assert r.exit_code == EXIT_OK
    m = json.loads((out / "manifest.json").read_text())
    assert m["config"]["seed"] == 3
    assert m["exit_code"] == 0
    assert set(m["versions"]) >= {"gravvortex", "numpy", "scipy", "python"}
    assert RunConfig.from_dict(m["config"]).seed == 3


def test_missing_config_file(tmp_path):
    r = run("solve", "--config", str(tmp_path / "nope.json"))
    assert r.exit_code == EXIT_INPUT


def test_invalid_config_json(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{")
    r = run("solve", "--config", str(p), "--out", str(tmp_path / "o"))
    assert r.exit_code == EXIT_INPUT
