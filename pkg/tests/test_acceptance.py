"""Acceptance criteria, each at its stated tolerance and runtime budget.

Every test appends one PASS/FAIL line to ``ACCEPTANCE_LINES``; the lines are
printed in the terminal summary under "acceptance criteria".
"""

import math
import time
from contextlib import contextmanager

import numpy as np
import pytest
from scipy.special import iv

from cdforge import (INF, ExhaustionPlan, cd_max_k, cde_search_k, exhaustion_kernel, gamma, gamma2,
                     gamma2_tilde, gamma2_tilde_identity, generate, global_cd_bound, lemma32_derivative_check,
                     random_graph, semigroup_diagnostics, taylor_limit_check, verify_corollary32,
                     verify_thm31, verify_thm32)

from .conftest import ACCEPTANCE_LINES, cli_suite, corpus

pytestmark = pytest.mark.acceptance

TIMES = [0.05, 0.1, 0.25, 0.5, 1.0, 2.0]


@contextmanager
def criterion(number, title, budget):
    """Time the block; record one line; fail on error or on exceeding ``budget`` seconds."""
    info = {}
    start = time.perf_counter()
    try:
        yield info
    except BaseException as exc:
        elapsed = time.perf_counter() - start
        ACCEPTANCE_LINES.append(f"[{number:>2}] FAIL  {title} ({elapsed:.2f}s): {type(exc).__name__}: {exc}"
                                .splitlines()[0])
        raise
    elapsed = time.perf_counter() - start
    detail = ", ".join(f"{k}={v:.3g}" if isinstance(v, float) else f"{k}={v}" for k, v in info.items())
    status = "PASS" if elapsed < budget else "FAIL"
    ACCEPTANCE_LINES.append(f"[{number:>2}] {status}  {title} ({elapsed:.2f}s < {budget}s) {detail}")
    assert elapsed < budget, f"runtime {elapsed:.2f}s over budget {budget}s"


def dense_ratio(g, x, n, fields):
    """(Gamma2 - (Lap f)^2/n) / Gamma at x for each row of ``fields``, via the product rule.

    Independent of the local-form assembly: Gamma(f, h) = (Lap(fh) - f Lap h - h Lap f)/2 and
    Gamma2(f) = (Lap Gamma(f) - 2 Gamma(f, Lap f))/2, all with the dense Laplacian matrix.
    """
    L = g.laplacian_matrix.toarray()
    F = fields.T  # vertices x samples

    def gam(a, b):
        return 0.5 * (L @ (a * b) - a * (L @ b) - b * (L @ a))

    lap = L @ F
    g1 = gam(F, F)
    g2 = 0.5 * (L @ g1) - gam(F, lap)
    i = g.index(x)
    c = 0.0 if math.isinf(n) else 1.0 / n
    return (g2[i] - c * lap[i] ** 2) / g1[i]


def test_criterion_01_two_point_constant():
    with criterion(1, "exact CD constant on P2, n in {1,2,4,inf}", 0.1) as info:
        p2 = generate("path", n=2)
        worst = 0.0
        for n in (1.0, 2.0, 4.0, INF):
            expected = 2.0 - (0.0 if math.isinf(n) else 2.0 / n)
            worst = max(worst, abs(cd_max_k(p2, "0", n).k_max - expected))
        info["max_err"] = worst
        assert worst <= 1e-9


def test_criterion_02_triangle_constant_and_brute_force():
    with criterion(2, "K3 constant 2.5 and 1e5-sample search", 5.0) as info:
        k3 = generate("complete", n=3)
        k = cd_max_k(k3, "0", INF).k_max
        fields = np.random.default_rng(2024).normal(size=(100_000, 3))
        fields -= fields[:, [0]]  # adding constants changes nothing
        best = float(np.min(dense_ratio(k3, "0", INF, fields)))
        info["k_max"] = k
        info["search_min"] = best
        assert abs(k - 2.5) <= 1e-8
        assert best >= k - 1e-6


def test_criterion_03_tilde_identity():
    with criterion(3, "Gamma2~ identity, 100 fields x corpus", 2.0) as info:
        worst = 0.0
        for g in corpus().values():
            for seed in range(100):
                f = np.random.default_rng(seed).uniform(0.2, 3.0, len(g))
                a, b = gamma2_tilde(g, f), gamma2_tilde_identity(g, f)
                scale = np.abs(gamma2(g, f)) + np.abs(gamma(g, f, gamma(g, f) / f))
                worst = max(worst, float(np.max(np.abs(a - b) / scale)))
        info["max_rel_err"] = worst
        assert worst <= 1e-11


def test_criterion_04_kernel_identities():
    with criterion(4, "heat kernel identities on 100 random graphs", 30.0) as info:
        rng = np.random.default_rng(4)
        agg = {"symmetry": 0.0, "min_kernel": math.inf, "row_sum_dev": 0.0, "chapman_kolmogorov": 0.0,
               "heat_eq": 0.0}
        for seed in range(100):
            n = int(rng.integers(2, 41))
            t, s = rng.uniform(0.05, 3.0, 2)
            d = semigroup_diagnostics(random_graph(n, seed), t=t, s=s, seed=seed)
            agg["symmetry"] = max(agg["symmetry"], d["symmetry"])
            agg["min_kernel"] = min(agg["min_kernel"], d["min_kernel"])
            agg["row_sum_dev"] = max(agg["row_sum_dev"], d["row_sum_dev"])
            agg["chapman_kolmogorov"] = max(agg["chapman_kolmogorov"], d["chapman_kolmogorov"])
            agg["heat_eq"] = max(agg["heat_eq"], d["heat_eq_fd_rel"], d["heat_eq_x_rel"], d["heat_eq_y_rel"])
        info.update(agg)
        assert agg["symmetry"] <= 1e-10
        assert agg["min_kernel"] >= -1e-12
        assert agg["row_sum_dev"] <= 1e-10
        assert agg["chapman_kolmogorov"] <= 1e-9
        assert agg["heat_eq"] <= 1e-6


def test_criterion_05_semigroup_and_oracle():
    with criterion(5, "semigroup law, commutation, matrix-exponential oracle", 10.0) as info:
        rng = np.random.default_rng(5)
        law = comm = oracle = 0.0
        for seed in range(30):
            n = int(rng.integers(2, 41))
            t, s = rng.uniform(0.05, 5.0, 2)
            d = semigroup_diagnostics(random_graph(n, 1000 + seed), t=t, s=s, seed=seed)
            law, comm = max(law, d["semigroup_law"]), max(comm, d["commutation"])
            oracle = max(oracle, d["expm_oracle"])
        info.update(semigroup_law=law, commutation=comm, expm=oracle)
        assert law <= 1e-9 and comm <= 1e-9 and oracle <= 1e-9


def test_criterion_06_exhaustion_bessel():
    with criterion(6, "exhaustion on the Z segment vs e^-2 I0(2)", 5.0) as info:
        host = generate("lattice_ball", dim=1, radius=30)
        kv, diag = exhaustion_kernel(host, ExhaustionPlan("0", range(2, 30)), 1.0, "0", "0", tol=1e-8)
        err = abs(kv.value - math.exp(-2) * iv(0, 2))
        info.update(value=kv.value, err=err, min_step=diag["min_increment"], radius=kv.subset_radius)
        assert err <= 1e-6
        assert diag["min_increment"] >= -1e-12


def test_criterion_07_forward_soundness():
    with criterion(7, "forward soundness of the four items, plus P2 equality", 60.0) as info:
        worst = math.inf
        for g in corpus().values():
            for n in (INF, 2.0):
                kappa = global_cd_bound(g, n)
                for seed in range(50):
                    f = np.random.default_rng(seed).uniform(0.2, 3.0, len(g))
                    reps = verify_thm31(g, f, n, kappa, TIMES)
                    worst = min(worst, min(r.margin for r in reps))
        p2 = generate("path", n=2)
        eq = verify_corollary32(p2, [1.0, 3.0], 2.0, TIMES)
        eq_dev = max(abs(r.margin) for r in eq if r.item == "C32_1")
        info.update(min_margin=worst, equality_dev=eq_dev)
        assert worst >= -1e-8
        assert eq_dev <= 1e-10


def test_criterion_08_derivative_identities():
    with criterion(8, "s-derivative identities by finite differences", 10.0) as info:
        worst = 0.0
        for g in corpus().values():
            for seed in range(5):
                f = np.random.default_rng(seed).uniform(0.2, 3.0, len(g))
                worst = max(worst, lemma32_derivative_check(g, f, 1.0, [0.0, 0.25, 0.5, 0.75]))
        info["max_rel_err"] = worst
        assert worst <= 1e-5


def test_criterion_09_taylor_converse():
    with criterion(9, "small-t coefficient and sign flip beyond the constant", 10.0) as info:
        worst_rel, worst_abs = 0.0, 0.0
        flips = []
        for g in corpus().values():
            for n in (INF, 3.0):
                for x in g.ids[:2]:
                    res = cd_max_k(g, x, n)
                    for seed in range(3):
                        f = np.random.default_rng(seed).uniform(0.2, 3.0, len(g))
                        for kappa in (res.k_max, 0.0, -1.0):
                            r = taylor_limit_check(g, f, n, kappa, x)
                            if r.absolute:
                                worst_abs = max(worst_abs, r.rel_err)
                            else:
                                worst_rel = max(worst_rel, r.rel_err)
                    fmin = res.minimizer.to_array(g)
                    flips.append(taylor_limit_check(g, fmin, n, res.k_max + 0.1, x).margin)
        info.update(max_rel_err=worst_rel, max_abs_err=worst_abs, max_flip_margin=max(flips))
        assert worst_rel <= 1e-4
        assert worst_abs <= 1e-6
        assert max(flips) <= -1e-3


def test_criterion_10_sqrt_gradient_bound():
    with criterion(10, "square-root gradient bound with searched constant", 30.0) as info:
        worst, spread = math.inf, 0.0
        for g in corpus().values():
            per_seed = []
            for seed in range(3):
                per_seed.append([cde_search_k(g, x, INF, seed=seed).k_max for x in g.ids])
            per_seed = np.array(per_seed)
            spread = max(spread, float(np.max(per_seed.max(axis=0) - per_seed.min(axis=0))))
            kappa = float(per_seed[0].min())
            for seed in range(20):
                f = np.random.default_rng(seed).uniform(0.2, 3.0, len(g))
                worst = min(worst, min(r.margin for r in verify_thm32(g, f, kappa, TIMES)))
        info.update(min_margin=worst, seed_spread=spread)
        assert spread <= 1e-4
        assert worst >= -1e-8


def test_criterion_11_cli_determinism(tmp_path, capsys):
    with criterion(11, "byte-identical CLI output for --threads 1 and 8", math.inf) as info:
        runs = [cli_suite(tmp_path / f"run{k}", threads, capsys)
                for k, threads in enumerate((1, 8, 1, 8))]
        info["commands"] = len(runs[0])
        assert all(r == runs[0] for r in runs[1:])
