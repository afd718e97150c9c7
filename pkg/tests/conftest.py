import math

import numpy as np
import pytest

from cdforge import generate

ACCEPTANCE_LINES: list[str] = []


def corpus():
    return {
        "P2": generate("path", n=2),
        "K3": generate("complete", n=3),
        "S4": generate("star", n=4),
        "C5": generate("cycle", n=5),
        "Q3": generate("hypercube", dim=3),
    }


@pytest.fixture(scope="session")
def graphs():
    return corpus()


@pytest.fixture
def p2():
    return generate("path", n=2)


@pytest.fixture
def k3():
    return generate("complete", n=3)


@pytest.fixture
def weighted_path():
    """a - b - c with w_ab = 1, w_bc = 2, mu(b) = 2."""
    from cdforge import WeightedGraph

    return WeightedGraph({"a": 1.0, "b": 2.0, "c": 1.0}, [("a", "b", 1.0), ("b", "c", 2.0)])


def positive_field(g, seed, low=0.2, high=3.0):
    return np.random.default_rng(seed).uniform(low, high, len(g))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


INF = math.inf


def run_cli(argv, capsys):
    """Run the CLI in-process; returns (exit code, stdout, stderr)."""
    from cdforge.cli import run

    code = run([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def cli_suite(workdir, threads, capsys):
    """Every JSON-emitting subcommand once, with fixed seeds; returns {name: stdout}."""
    workdir.mkdir(parents=True, exist_ok=True)
    g3 = workdir / "k3.json"
    q3 = workdir / "q3.json"
    z1 = workdir / "z1.json"
    for family, extra, path in (("complete", ["--n", 3], g3), ("hypercube", ["--dim", 3], q3),
                                ("lattice_ball", ["--dim", 1, "--radius", 12], z1)):
        code, _, _ = run_cli(["generate", family, *extra, "--out", path], capsys)
        assert code == 0
    th = ["--threads", threads]
    commands = {
        "info": ["info", q3],
        "cd": ["curvature", "cd", "--graph", q3, "--dim", "3", "--all", *th],
        "cde": ["curvature", "cde", "--graph", g3, "--seed", 5, "--starts", 6, *th],
        "kernel": ["heat", "kernel", "--graph", z1, "--x", "0", "--y", "0,1", "--center", "0",
                   "--exhaust", "2:11", "--t", "0.5,1", "--format", "json"],
        "apply": ["heat", "apply", "--graph", g3, "--seed", 3, "--t-range", "0.1:2:4"],
        "thm31": ["verify", "thm31", "--graph", q3, "--dim", "5", "--seed", 2, "--t", "0.1,1", *th],
        "thm32": ["verify", "thm32", "--graph", g3, "--seed", 2, "--t", "0.5", *th],
        "semigroup": ["verify", "semigroup", "--graph", q3, "--seed", 1],
        "lemma32": ["verify", "lemma32", "--graph", g3, "--seed", 1, "--t", "1"],
    }
    outputs = {}
    for name, argv in commands.items():
        code, out, err = run_cli(argv, capsys)
        assert code == 0, (name, err)
        outputs[name] = out
    return outputs
