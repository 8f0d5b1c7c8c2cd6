"""Command-line surface: outputs, exit codes, determinism."""

import json
import subprocess
import sys

import pytest

from procval.cli import main


SYSTEM = """
consts: C, D;
alphabet: a, b;
rules: C -a-> D; D -b-> eps;
initial: C;
"""

ATOMS = "A: { (D): True; default: False }"
DIAMOND = "<a>_1 atom(A)"


@pytest.fixture
def files(tmp_path):
    paths = {}
    for name, content in [
        ("sys.txt", SYSTEM), ("atoms.txt", ATOMS), ("dia.pel", DIAMOND),
        ("bool.lat", "bool"), ("chain.lat", "chain 3"),
        ("bad.lat", "table { elems: [x,y]; leq: [] }"),
        ("mu.pel", "mu F . F == (atom(A) \\/ <a>_1 F \\/ <b>_1 F)"),
        ("bad.pel", "mu F . atom(A) /\\ F == atom(A)"),
    ]:
        path = tmp_path / name
        path.write_text(content)
        paths[name] = str(path)
    return paths


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_lts_output(capsys, files):
    code, out, _ = run(capsys, "lts", files["sys.txt"])
    assert code == 0
    assert out.splitlines() == [
        "states: 3", "0: C", "1: D", "2: eps",
        "edges: 2", "0 -{a}-> 1", "1 -{b}-> 2",
    ]


def test_lts_json_records(capsys, files):
    code, out, _ = run(capsys, "lts", files["sys.txt"], "--json")
    assert code == 0
    records = [json.loads(line) for line in out.splitlines()]
    assert records[0] == {"type": "summary", "states": 3, "edges": 2}
    kinds = [r["type"] for r in records]
    assert kinds.count("state") == 3 and kinds.count("edge") == 2


def test_lts_deterministic(capsys, files):
    _, first, _ = run(capsys, "lts", files["sys.txt"])
    _, second, _ = run(capsys, "lts", files["sys.txt"])
    assert first == second


def test_lts_cap_exit_code(capsys, files):
    code, _, err = run(capsys, "lts", files["sys.txt"], "--cap", "1")
    assert code == 3


def test_lts_parse_error_exit_code(capsys, tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("rules: C -a->;")
    code, _, err = run(capsys, "lts", str(bad))
    assert code == 2


def test_missing_file_exit_code(capsys):
    code, _, err = run(capsys, "lts", "/nonexistent/system.txt")
    assert code == 5


def test_eval_value_and_table(capsys, files):
    code, out, _ = run(capsys, "eval", "--system", files["sys.txt"],
                       "--formula", files["dia.pel"],
                       "--lattice", files["bool.lat"],
                       "--atoms", files["atoms.txt"],
                       "--tuple", "C", "--table")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "True"
    assert "(C): True" in lines
    assert "(D): False" in lines


def test_eval_mu_formula(capsys, files):
    code, out, _ = run(capsys, "eval", "--system", files["sys.txt"],
                       "--formula", files["mu.pel"],
                       "--lattice", files["bool.lat"],
                       "--atoms", files["atoms.txt"],
                       "--tuple", "C")
    assert code == 0
    assert out.splitlines()[0] == "True"


def test_eval_illformed_equation_exit_code(capsys, files):
    code, _, err = run(capsys, "eval", "--system", files["sys.txt"],
                       "--formula", files["bad.pel"],
                       "--lattice", files["bool.lat"],
                       "--atoms", files["atoms.txt"],
                       "--tuple", "C")
    assert code == 4
    assert "substitution" in err


def test_eval_permissive_downgrades(capsys, files):
    import warnings
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        code, out, _ = run(capsys, "eval", "--system", files["sys.txt"],
                           "--formula", files["bad.pel"],
                           "--lattice", files["bool.lat"],
                           "--atoms", files["atoms.txt"],
                           "--tuple", "C", "--permissive")
    assert code == 0


def test_bisim_modes(capsys, files):
    code, out, _ = run(capsys, "bisim", files["sys.txt"],
                       "--left", "C", "--right", "C")
    assert code == 0 and out.strip() == "BISIMILAR"
    code, out, _ = run(capsys, "bisim", files["sys.txt"],
                       "--left", "C", "--right", "D")
    assert code == 0 and out.startswith("NOT_BISIMILAR distinguishing_depth=")
    code, out, _ = run(capsys, "bisim", files["sys.txt"],
                       "--mode", "approx", "-k", "0",
                       "--left", "C", "--right", "D")
    assert code == 0 and out.strip() == "BISIMILAR k=0"
    code, out, _ = run(capsys, "bisim", files["sys.txt"],
                       "--mode", "via-pel", "--left", "C", "--right", "D")
    assert code == 0 and out.strip() == "NOT_BISIMILAR"
    code, out, _ = run(capsys, "bisim", files["sys.txt"],
                       "--mode", "weak", "--left", "C", "--right", "D")
    assert code == 0 and out.strip() == "NOT_BISIMILAR"


def test_classic_pair_via_cli(capsys, tmp_path):
    system = tmp_path / "classic.txt"
    system.write_text("""
    consts: A, B, C;
    alphabet: a, b, c;
    rules: A -a-> eps; B -b-> eps; C -c-> eps;
    """)
    code, out, _ = run(capsys, "bisim", str(system),
                       "--left", "A ; (B + C)", "--right", "(A ; B) + (A ; C)")
    assert code == 0
    assert out.strip() == "NOT_BISIMILAR distinguishing_depth=2"


def test_synth_command(capsys, files):
    code, out, _ = run(capsys, "synth", "--system", files["sys.txt"],
                       "--lattice", files["bool.lat"],
                       "--formula", files["dia.pel"],
                       "--atoms", files["atoms.txt"],
                       "--target", "True", "--max-depth", "1", "--pool", "C,D")
    assert code == 0
    lines = out.splitlines()
    assert "solution: C" in lines
    assert lines[-1].startswith("solutions: 1 candidates:")


def test_synth_bisimilar_driver(capsys, files):
    code, out, _ = run(capsys, "synth", "--system", files["sys.txt"],
                       "--lattice", files["bool.lat"],
                       "--driver", "bisimilar", "--fixed", "C",
                       "--max-depth", "1", "--pool", "C,D")
    assert code == 0
    assert "solution: C, C" in out.splitlines()


def test_encode_pn_roundtrip(capsys, tmp_path):
    net = tmp_path / "net.txt"
    net.write_text("places: p1, p2\ntransitions: t\narcs: p1 -> t, t -> p2\nmarking: p1\n")
    out_path = tmp_path / "encoded.txt"
    code, out, _ = run(capsys, "encode-pn", str(net), "-o", str(out_path),
                       "--steps", "4")
    assert code == 0
    assert "SIMULATION_OK" in out
    code, out, _ = run(capsys, "lts", str(out_path))
    assert code == 0
    assert "0 -{t}-> 1" in out.splitlines()


def test_encode_tm_simulation(capsys, tmp_path):
    machine = tmp_path / "tm.txt"
    machine.write_text("""
    states: q0, qf
    gamma: b, one
    blank: b
    q0: q0
    finals: qf
    delta: (q0, b) -> (qf, one, R)
    """)
    code, out, _ = run(capsys, "encode-tm", str(machine), "--steps", "5")
    assert code == 0
    assert "SIMULATION_OK" in out


def test_lattice_check(capsys, files):
    code, out, _ = run(capsys, "lattice-check", files["chain.lat"])
    assert code == 0
    assert out.strip() == "OK elements=3 bot=0 top=2"
    code, out, _ = run(capsys, "lattice-check", files["bad.lat"])
    assert code == 4
    assert out.strip() == "NOT_A_LATTICE: pair (x, y) has no join"


def test_subprocess_entry_point(tmp_path):
    system = tmp_path / "sys.txt"
    system.write_text(SYSTEM)
    proc = subprocess.run(
        [sys.executable, "-m", "procval.cli", "lts", str(system)],
        capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.splitlines()[0] == "states: 3"


def test_output_byte_identical_across_hash_seeds(tmp_path):
    import os
    system = tmp_path / "sys.txt"
    system.write_text(SYSTEM)
    atoms = tmp_path / "atoms.txt"
    atoms.write_text(ATOMS)
    formula = tmp_path / "f.pel"
    formula.write_text(DIAMOND)
    lattice = tmp_path / "bool.lat"
    lattice.write_text("bool")
    outputs = set()
    for seed in ("0", "1", "12345"):
        env = dict(os.environ, PYTHONHASHSEED=seed)
        proc = subprocess.run(
            [sys.executable, "-m", "procval.cli", "eval",
             "--system", str(system), "--formula", str(formula),
             "--lattice", str(lattice), "--atoms", str(atoms),
             "--tuple", "C", "--table"],
            capture_output=True, env=env)
        assert proc.returncode == 0
        outputs.add(proc.stdout)
    assert len(outputs) == 1
