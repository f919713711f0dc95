import io
import subprocess
import sys

import pytest

from lawson_sde.cli import ConfigError, RunConfig, main, parse_levels, parse_schemes
from lawson_sde.schemes import COMPARED_SCHEMES, Scheme


def run(*argv):
    out = io.StringIO()
    code = main(list(argv), out=out)
    return code, out.getvalue()


def test_parse_levels_and_schemes():
    assert parse_levels("4..9") == [4, 5, 6, 7, 8, 9]
    assert parse_levels("8,4,6") == [4, 6, 8]
    assert parse_levels("7") == [7]
    with pytest.raises(ConfigError):
        parse_levels("9..4")
    assert parse_schemes("all") == list(COMPARED_SCHEMES)
    assert parse_schemes("mfsl, TDSL") == [Scheme.MFSL, Scheme.TDSL]
    with pytest.raises(ConfigError):
        parse_schemes("MFSL,Euler")


def test_config_text_round_trip():
    cfg = RunConfig("converge", problem="kubo", omega=10.0, levels="3..5", fp_tol=1e-13, linear=True)
    again = RunConfig(**RunConfig.loads(cfg.dumps()))
    assert again == cfg
    assert RunConfig.loads("# comment\n\nseed = 4  # trailing\n") == {"seed": 4}
    with pytest.raises(ConfigError):
        RunConfig.loads("colour=blue")
    with pytest.raises(ConfigError):
        RunConfig.loads("just words")


def test_validate(capsys):
    code, out = run("validate", "--problem", "kubo")
    assert code == 0 and "all checks passed" in out and "tangential_g" in out
    code, out = run("validate", "--problem", "fput")
    assert code == 0 and "commutativity" in out


def test_converge_writes_csv_and_summary(tmp_path):
    dest = tmp_path / "conv.csv"
    code, out = run("converge", "--problem", "rigid-body", "--schemes", "MFSL,Midpoint",
                    "--levels", "2..4", "--ref-level", "6", "--paths", "3", "-o", str(dest))
    assert code == 0
    assert out.startswith("slopes: MFSL=") and "Midpoint=" in out
    assert dest.read_text().splitlines()[0] == "h,eMFSL,ciMFSL,eMidpoint,ciMidpoint,flags"


def test_config_round_trip_reproduces_output(tmp_path):
    first, second, cfg = tmp_path / "a.csv", tmp_path / "b.csv", tmp_path / "run.cfg"
    code, _ = run("converge", "--problem", "kubo", "--schemes", "MFSL,TDSL", "--levels", "3,4",
                  "--ref-level", "6", "--paths", "2", "--seed", "11", "-o", str(first),
                  "--save-config", str(cfg))
    assert code == 0
    code, _ = run("converge", "--config", str(cfg), "-o", str(second))
    assert code == 0
    assert first.read_bytes() == second.read_bytes()


def test_seed_controls_randomness(tmp_path):
    outs = []
    for i, seed in enumerate(("1", "1", "2")):
        dest = tmp_path / f"{i}.csv"
        run("converge", "--schemes", "MFSL", "--levels", "2,3", "--ref-level", "5",
            "--paths", "2", "--seed", seed, "-o", str(dest))
        outs.append(dest.read_bytes())
    assert outs[0] == outs[1] != outs[2]


def test_flags_override_config(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("paths=2\nlevels=2..3\nref-level=5\nschemes=MFSL\nseed=3\n")
    dest = tmp_path / "o.csv"
    code, _ = run("converge", "--config", str(cfg), "--levels", "2", "-o", str(dest))
    assert code == 0
    assert len(dest.read_text().splitlines()) == 2


def test_drift_and_invariant_order(tmp_path):
    code, out = run("drift", "--problem", "kubo", "--schemes", "MFSL,TDSL", "--level", "5",
                    "--T", "2", "-o", str(tmp_path / "d.csv"))
    assert code == 0 and out.startswith("max |I-I0|: MFSL=")
    assert (tmp_path / "d.csv").read_text().startswith("t,MFSL1,MFSL2,TDSL1,TDSL2")
    code, out = run("invariant-order", "--problem", "rigid-body", "--omega", "10", "--sigma", "0.3",
                    "--schemes", "TFSL", "--levels", "3..5", "--paths", "2",
                    "-o", str(tmp_path / "o.csv"))
    assert code == 0 and "TFSL=" in out and (tmp_path / "o.csv").exists()
    code, _ = run("invariant-order", "--schemes", "TFSL,MFSL", "--levels", "3,4", "--paths", "2",
                  "-o", str(tmp_path / "multi.csv"))
    assert code == 0
    assert (tmp_path / "multi_TFSL.csv").exists() and (tmp_path / "multi_MFSL.csv").exists()


def test_fput(tmp_path):
    code, out = run("fput", "--schemes", "TFSL,Midpoint", "--T", "0.25", "--paths", "1",
                    "--ref-factor", "2", "-o", str(tmp_path / "fput"))
    assert code == 0 and "TFSL=" in out
    assert (tmp_path / "fput" / "eTFSL.csv").exists()


@pytest.mark.parametrize("argv", [
    ["converge", "--schemes", "RK4"],
    ["converge", "--levels", "9..4"],
    ["converge", "--levels", "4..9", "--ref-level", "8"],
    ["drift", "--T", "1.01"],
    ["converge", "--config", "/nonexistent/run.cfg"],
    ["converge", "--levels", "2", "--ref-level", "4", "--paths", "1", "-o", "/nonexistent/dir/x.csv"],
])
def test_invalid_configurations_exit_nonzero(argv):
    code, _ = run(*argv)
    assert code == 2


def test_argparse_rejects_unknown_choices():
    with pytest.raises(SystemExit) as info:
        main(["converge", "--problem", "pendulum"])
    assert info.value.code == 2


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "lawson_sde", "validate", "--problem", "rigid-body"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "all checks passed" in proc.stdout


def test_initial_state_flag(tmp_path):
    code, out = run("drift", "--problem", "rigid-body", "--schemes", "MFSL", "--x0", "0,0.6,0.8",
                    "--T", "0.5", "-o", str(tmp_path / "d.csv"))
    assert code == 0
    first = (tmp_path / "d.csv").read_text().splitlines()[1].split(",")
    assert [float(v) for v in first[1:]] == [0.0, 0.6, 0.8]
    assert run("drift", "--problem", "kubo", "--x0", "1,0,0", "-o", str(tmp_path / "e.csv"))[0] == 2
    assert run("drift", "--x0", "1,a,0", "-o", str(tmp_path / "e.csv"))[0] == 2


def test_fput_rejects_other_problems(tmp_path):
    assert run("fput", "--problem", "kubo", "-o", str(tmp_path / "f"))[0] == 2
