import subprocess
import sys

import pytest

from nsfde.cli import EXIT_FAIL, EXIT_OK, EXIT_USAGE, run
from nsfde.sfde import NEUTRAL_CONTRACTION
from nsfde.sfde.config import ConfigError, load_params, load_scenario

SMALL = """\
[model]
n_modes = 3
phi_scale = 0.5
[coefficients]
drift_scale = 2.0
[numerics]
n_steps = 16
n_paths = 64
keep_paths = 2
"""

VIOLATING = SMALL.replace("drift_scale = 2.0", "drift_scale = 2.0\nneutral = linear\nkappa = 0.632455532")


@pytest.fixture
def small_cfg(tmp_path):
    p = tmp_path / "small.ini"
    p.write_text(SMALL)
    return p


def test_solve_writes_all_outputs(small_cfg, tmp_path, capsys):
    out = tmp_path / "out"
    assert run(["solve", "--scenario", str(small_cfg), "--out-dir", str(out)]) == EXIT_OK
    for name in ("iterates.csv", "moments.csv", "cauchy.csv", "report.txt"):
        assert (out / name).is_file()
    assert (out / "moments.csv").read_text().splitlines()[1] == "iter,t,m_n,u_of_t"
    assert "picard converged" in capsys.readouterr().out


def test_outputs_are_byte_identical_without_timestamp(small_cfg, tmp_path):
    blobs = []
    for tag in ("a", "b"):
        out = tmp_path / tag
        assert run(["solve", "--scenario", str(small_cfg), "--out-dir", str(out), "--no-timestamp"]) == EXIT_OK
        blobs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
    assert blobs[0] == blobs[1]
    assert not blobs[0]["cauchy.csv"].startswith(b"#")


def test_seed_override_changes_noise(small_cfg, tmp_path):
    outs = []
    for seed in ("1", "2"):
        out = tmp_path / seed
        run(["solve", "--scenario", str(small_cfg), "--out-dir", str(out), "--no-timestamp", "--seed", seed])
        outs.append((out / "moments.csv").read_bytes())
    assert outs[0] != outs[1]


def test_refusal_exit_code_and_naming(tmp_path, capsys):
    cfg = tmp_path / "bad.ini"
    cfg.write_text(VIOLATING)
    code = run(["solve", "--scenario", str(cfg), "--out-dir", str(tmp_path / "o")])
    assert code == EXIT_FAIL
    out = capsys.readouterr().out
    assert "refused" in out and NEUTRAL_CONTRACTION in out
    assert NEUTRAL_CONTRACTION in (tmp_path / "o" / "report.txt").read_text()


def test_unknown_key_is_a_usage_error(tmp_path, capsys):
    cfg = tmp_path / "typo.ini"
    cfg.write_text("[coefficients]\nkapa = 0.1\n")
    assert run(["solve", "--scenario", str(cfg), "--out-dir", str(tmp_path / "o")]) == EXIT_USAGE
    assert "unknown key 'kapa' in [coefficients]" in capsys.readouterr().err
    with pytest.raises(ConfigError):
        load_params(cfg)


def test_bad_values_and_missing_file(tmp_path):
    cfg = tmp_path / "bad.ini"
    cfg.write_text("[numerics]\nn_steps = many\n")
    assert run(["solve", "--scenario", str(cfg), "--out-dir", str(tmp_path)]) == EXIT_USAGE
    assert run(["solve", "--scenario", str(tmp_path / "nope.ini"), "--out-dir", str(tmp_path)]) == EXIT_USAGE
    cfg.write_text("[model]\ndelay_horizon = 0.1\n")
    assert run(["hypotheses", "--scenario", str(cfg)]) == EXIT_USAGE


def test_print_defaults_round_trip(tmp_path, capsys):
    assert run(["solve", "--print-defaults"]) == EXIT_OK
    text = capsys.readouterr().out
    cfg = tmp_path / "defaults.ini"
    cfg.write_text(text)
    from nsfde.sfde import flagship

    loaded = load_scenario(cfg)
    ref = flagship()
    for field in ("h", "t_end", "r", "n_steps", "n_paths", "seed", "picard_tol", "max_iters", "x0"):
        assert getattr(loaded, field) == getattr(ref, field)
    assert loaded.coeffs.label == ref.coeffs.label
    assert (loaded.phi == ref.phi).all()


def test_usage_errors():
    assert run([]) == EXIT_USAGE
    assert run(["frobnicate"]) == EXIT_USAGE
    assert run(["solve"]) == EXIT_USAGE
    assert run(["fbm", "sample", "--hurst", "0.7", "--out", "x.csv", "--seed", "-1"]) == EXIT_USAGE


def test_fbm_commands(tmp_path, capsys):
    out = tmp_path / "p.csv"
    assert run(["fbm", "sample", "--hurst", "0.7", "--steps", "4", "--paths", "3", "--out", str(out), "--no-timestamp"]) == EXIT_OK
    lines = out.read_text().splitlines()
    assert lines[0] == "path_id,t,value" and len(lines) == 1 + 3 * 5
    assert run(["fbm", "sample", "--hurst", "1.2", "--out", str(out)]) == EXIT_USAGE
    cov = tmp_path / "c.csv"
    assert run(["fbm", "verify-cov", "--hurst", "0.75", "--paths", "10000", "--out", str(cov)]) == EXIT_OK
    assert "PASS" in capsys.readouterr().out


def test_verify_commands(tmp_path):
    assert run(["verify", "bounds", "--which", "abs-norm", "--count", "10", "--out", str(tmp_path / "l1.csv")]) == EXIT_OK
    assert run(["verify", "bihari", "--modulus", "log_splice", "--out", str(tmp_path / "b.csv")]) == EXIT_OK
    assert run(["verify", "bihari", "--modulus", "power", "--out", str(tmp_path / "b.csv")]) == EXIT_FAIL


def test_hypotheses_command(small_cfg, tmp_path, capsys):
    assert run(["hypotheses", "--scenario", str(small_cfg), "--out", str(tmp_path / "h.txt")]) == EXIT_OK
    assert "neutral contraction" in (tmp_path / "h.txt").read_text()


def test_process_exit_code(tmp_path):
    cfg = tmp_path / "bad.ini"
    cfg.write_text(VIOLATING)
    proc = subprocess.run(
        [sys.executable, "-m", "nsfde", "hypotheses", "--scenario", str(cfg)], capture_output=True, text=True
    )
    assert proc.returncode == EXIT_FAIL
    assert NEUTRAL_CONTRACTION in proc.stdout
