"""Acceptance criteria 1-13, each checked at its stated tolerance.

Each criterion prints one PASS/FAIL line, repeated in the terminal summary.
"""
import json
import math
import time
from fractions import Fraction

import numpy as np
import pytest

from conftest import record
from matchstat.census import (
    chained_triple,
    component_bound_check,
    count_K_prime,
    count_T,
    disjoint_kissing_pairs,
    flower,
    kissing_pair,
    pair_census,
    shift_matchings,
    y_product_expectation,
)
from matchstat.cli import run
from matchstat.counting import brute_force_counts, count_l_matchings_sparse, count_matchings, matchings_complete
from matchstat.formulas import (
    ModelParams,
    exact_ratio,
    exact_variance,
    f_exact,
    mu_n_exact,
    ratio_leading,
    sigma_bar,
    sigma_bar_sq_exact,
)
from matchstat.graph import SeedSpec, complete_graph, gnp_sample
from matchstat.lab import (
    exact_distribution,
    gnm_exhaustive_mean,
    gnm_mean_ratio,
    limit_law_experiment,
    mc_sample,
)
from matchstat.switching import all_transitions, double_count_check

QUARTERS = (Fraction(1, 4), Fraction(1, 2), Fraction(3, 4))


def test_c01_counting_correctness():
    t0 = time.time()
    rng = np.random.default_rng(2024)
    bad = 0
    for g_id in range(200):
        n = int(rng.integers(1, 11))
        p = (0.2, 0.5, 0.8)[g_id % 3]
        g = gnp_sample(n, p, SeedSpec(2024, g_id))
        brute = brute_force_counts(g)
        poly = count_matchings(g)
        sparse = [count_l_matchings_sparse(g, ell) for ell in range(min(4, n // 2) + 1)]
        bad += list(poly) != brute or sparse != brute[: len(sparse)]
    for n in range(1, 15):
        cv = count_matchings(complete_graph(n))
        bad += any(cv[ell] != matchings_complete(n, ell) for ell in range(n // 2 + 1))
    dt = time.time() - t0
    ok = bad == 0 and dt < 60
    record(1, ok, f"mismatches={bad}, {dt:.1f}s")
    assert ok


def test_c02_ell1_identities():
    bad = 0
    for n in range(2, 7):
        N = n * (n - 1) // 2
        for p in QUARTERS:
            var = exact_distribution(n, 1, p).central_moment(2)
            bad += not (sigma_bar_sq_exact(n, 1, p) == N * p * (1 - p) == var)
    record(2, bad == 0, f"mismatches={bad}")
    assert bad == 0


def test_c03_second_moment_identity():
    bad = checked = 0
    for n in range(2, 7):
        for ell in range(1, min(3, n // 2) + 1):
            for p in QUARTERS:
                lhs = sum(f_exact(n, ell, i) * p ** (2 * ell - i) for i in range(ell + 1))
                bad += lhs != exact_distribution(n, ell, p).raw_moment(2)
                checked += 1
    record(3, bad == 0, f"{checked} cases, mismatches={bad}")
    assert bad == 0


def test_c04_pair_census():
    bad = 0
    for n in range(2, 9):
        for ell in range(1, n // 2 + 1):
            t = pair_census(n, ell)
            s = matchings_complete(n, ell)
            bad += t.marginals != [f_exact(n, ell, i) for i in range(ell + 1)]
            bad += sum(f_exact(n, ell, i) for i in range(ell + 1)) != s * s or t.total != s * s
    record(4, bad == 0, f"mismatches={bad}")
    assert bad == 0


def test_c05_switching_double_count():
    t0 = time.time()
    bad = checked = 0
    for n, ell in [(6, 2), (7, 3), (8, 3)]:
        for tr in all_transitions(n, ell):
            lhs, rhs = double_count_check(n, ell, tr)
            bad += lhs != rhs
            checked += 1
    dt = time.time() - t0
    ok = bad == 0 and dt < 300
    record(5, ok, f"{checked} transitions, mismatches={bad}, {dt:.1f}s")
    assert ok


def test_c06_structures_and_component_bound():
    bad = 0
    for ell in (2, 3):
        kp = lambda p: p ** (2 * ell - 1) - p ** (2 * ell)
        for p in (Fraction(1, 10), Fraction(1, 3), Fraction(1, 2), Fraction(4, 5)):
            bad += y_product_expectation(kissing_pair(ell), p) != kp(p)
            bad += y_product_expectation(disjoint_kissing_pairs(ell, 2), p) != kp(p) ** 2
            bad += y_product_expectation(flower(ell, 3), p) != p ** (3 * ell - 2) * (1 - 3 * p + 2 * p * p)
            for k in (3, 5):
                tup = list(chained_triple(ell))
                if k > 3:
                    tup += shift_matchings(disjoint_kissing_pairs(ell, (k - 3) // 2), 100)
                want = kp(p) ** ((k - 3) // 2) * p ** (3 * ell - 2) * (1 - p) ** 2
                bad += y_product_expectation(tup, p) != want
    ps = [Fraction(1, 10), Fraction(1, 2), Fraction(9, 10)]
    checked = violations = 0
    for n in range(2, 7):
        for ell in range(1, n // 2 + 1):
            rep = component_bound_check(n, ell, 4, ps)
            checked += rep.checked
            violations += len(rep.violations)
    ok = bad == 0 and violations == 0
    record(6, ok, f"closed-form mismatches={bad}, {checked} components, bound violations={violations}")
    assert ok


def test_c07_K_prime_vs_T():
    got = {k: (count_K_prime(6, 2, k), count_T(6, 2, k)) for k in (2, 4)}
    ok = all(kp == math.prod(range(k - 1, 0, -2)) * t for k, (kp, t) in got.items())
    record(7, ok, ", ".join(f"k={k}: |K'|={a}, |T|={b}" for k, (a, b) in got.items()))
    assert ok


def test_c08_variance_trend():
    t0 = time.time()

    def ratio(n):
        p = Fraction(1, 5)
        return float(exact_variance(n, 3, p) / sigma_bar_sq_exact(n, 3, p))

    r100, r1000 = ratio(100), ratio(1000)
    dt = time.time() - t0
    ok = 0.9 <= r1000 <= 1.1 and abs(r1000 - 1) < abs(r100 - 1) and dt < 10
    record(8, ok, f"Var/sigma_bar^2: n=100 {r100:.6f}, n=1000 {r1000:.6f}, {dt:.2f}s")
    assert ok
    assert float(sigma_bar(ModelParams(1000, 3, 0.2))) ** 2 == pytest.approx(
        float(sigma_bar_sq_exact(1000, 3, Fraction(1, 5))), rel=1e-9)


def test_c09_ratio_trend():
    errs = []
    for n in (12, 16, 20):
        ell = n // 2 - 1
        errs.append(abs(float(exact_ratio(n, ell, 1)) / ratio_leading(n, ell, 1) - 1))
    ok = errs[0] > errs[1] > errs[2]
    record(9, ok, "relative errors " + ", ".join(f"{e:.4f}" for e in errs))
    assert ok


def test_c10_subcritical_clt():
    t0 = time.time()
    res = limit_law_experiment(300, 2, 0.2, 2000, seed=1)
    dt = time.time() - t0
    ok = res.normal.D < 0.05 and dt < 300
    record(10, ok, f"KS_normal={res.normal.D:.4f}, KS_log={res.lognormal.D:.4f}, {dt:.1f}s")
    assert ok


@pytest.fixture(scope="module")
def supercritical():
    t0 = time.time()
    res = limit_law_experiment(24, 12, 0.2, 500, seed=1, strict=False)
    return res, time.time() - t0


def test_c11_supercritical_lognormal(supercritical):
    res, dt = supercritical
    ok = res.lognormal.D < res.normal.D and res.lognormal.D < 0.15 and dt < 900
    record(11, ok, f"KS_log={res.lognormal.D:.4f} < KS_lin={res.normal.D:.4f}, {dt:.1f}s")
    assert ok


@pytest.mark.xfail(strict=True, reason="an isolated vertex alone has probability about 0.14 at n=24, p=0.2")
def test_c11_zero_exclusion(supercritical):
    res, _ = supercritical
    ok = res.zero_fraction < 0.01
    record(11, ok, f"zero-count exclusion {res.zero_fraction:.1%} (limit 1%)")
    assert ok


def test_c12_gnm_mean():
    exact = gnm_exhaustive_mean(5, 2, 4)
    mu = mu_n_exact(10, 4, matchings_complete(5, 2), 2)
    N = 24 * 23 // 2
    ss = mc_sample("gnm", 24, 12, 500, seed=1, m=round(0.2 * N))
    mean, se = gnm_mean_ratio(ss)
    ok = exact == mu and abs(mean - 1) <= 3 * se
    record(12, ok, f"exhaustive {exact} == {mu}; MC mean ratio {mean:.4f} +/- {se:.4f}")
    assert ok


def test_c13_determinism(tmp_path):
    runs = [
        ["mc-dist", "--n", "20", "--l", "3", "--p", "0.3", "--trials", "60", "--seed", "5"],
        ["mc-dist", "--model", "gnm", "--n", "16", "--l", "8", "--m", "40", "--trials", "40", "--format", "csv"],
        ["transition-scan", "--n", "12", "--p", "0.4", "--trials", "50"],
        ["moments", "--n", "14", "--l", "2", "--p", "0.3", "--source", "mc", "--trials", "50"],
        ["pairs", "--n", "7", "--l", "3"],
        ["exact-dist", "--n", "5", "--l", "2", "--p", "1/3"],
    ]
    bad = 0
    for j, argv in enumerate(runs):
        out = tmp_path / f"run{j}.out"
        blobs = []
        for threads in (1, 1, 3):
            assert run(argv + ["--threads", str(threads), "--out", str(out)]) == 0
            blobs.append(out.read_bytes())
        bad += len(set(blobs)) != 1
    record(13, bad == 0, f"{len(runs)} configs x threads (1, 1, 3), differing={bad}")
    assert bad == 0
