"""Acceptance gate: the eleven release criteria, each at its stated
tolerance and runtime budget, printing one PASS line per criterion.

Run with `pytest tests/test_acceptance.py -v` (add -s to stream the PASS
lines; they also appear in captured output).
"""

import itertools
import math
import time

import numpy as np
import pytest

import gwtree as gw
from gwtree.rng import derive_seed

C_GRID = [round(1.1 + 0.1 * i, 1) for i in range(50)]  # 1.1 .. 6.0


def report(num, elapsed, budget, text):
    assert elapsed < budget, f"criterion {num} exceeded budget: {elapsed:.1f}s"
    print(f"ACCEPTANCE {num:2d} PASS ({elapsed:6.1f}s < {budget:.0f}s) {text}")


@pytest.fixture(scope="module")
def f_estimates():
    """Shared entropy estimates for criteria 6 and 7 (K = 60, 1e5 samples)."""
    out = {}
    for c in (1.5, 2.0, 2.25, 3.0, 3.25, 4.0):
        out[c] = gw.estimate_f(c, 60, 100_000, seed=derive_seed(2024, "acc-f", c))
    return out


def test_criterion_01_fixed_point_and_duality():
    t0 = time.perf_counter()
    for c in C_GRID:
        p = gw.extinction_prob(c, tol=1e-12)
        assert p.fixed_point_residual() <= 1e-12, c
        assert p.duality_residual() <= 1e-10, c
    report(1, time.perf_counter() - t0, 1.0,
           "fixed-point residual <= 1e-12 and duality residual <= 1e-10 "
           "on c = 1.1 .. 6.0")


def test_criterion_02_exact_tail_domination():
    t0 = time.perf_counter()
    grid = [1.1, 1.5, 2.0, 3.0, 4.0]
    pairs = list(itertools.combinations(grid, 2))
    for lam, mu in pairs:
        rep = gw.verify_tail_domination(lam, mu, kmax=200)
        assert rep.violated_at is None, (lam, mu, rep)
        # a hair more than the boundary mass must fail immediately at k = 1
        rep_bad = gw.verify_tail_domination(
            lam, mu, beta=gw.alpha(lam, mu) + 1e-4, kmax=200, dps=60)
        assert rep_bad.violated_at == 1, (lam, mu, rep_bad)
    report(2, time.perf_counter() - t0, 5.0,
           f"tail domination exact on {len(pairs)} pairs, k <= 200; "
           "excess mass violates at k = 1")


def test_criterion_03_derivative_lemma_inequalities():
    t0 = time.perf_counter()
    params = {c: gw.extinction_prob(c) for c in C_GRID}
    for lam, mu in itertools.combinations(C_GRID, 2):
        assert gw.alpha(lam, mu) < mu - lam, (lam, mu)
        pl, pm = params[lam], params[mu]
        assert gw.alpha(pl.ctheta, pm.ctheta) > pl.cq - pm.cq, (lam, mu)
    report(3, time.perf_counter() - t0, 1.0,
           "both derivative-lemma inequalities strict on all grid pairs")


def test_criterion_04_coupling_soundness():
    t0 = time.perf_counter()
    lam, mu, n = 1.2, 1.5, 10_000
    pl, pm = gw.extinction_prob(lam), gw.extinction_prob(mu)
    lo_deg = np.zeros(n, int)
    hi_deg = np.zeros(n, int)
    for i in range(n):
        pair = gw.sample_coupled_trees(lam, mu, 6, derive_seed(2024, "acc4", i))
        pair.validate_embedding()  # raises on any violation
        assert pair.audit_le1(), i
        lo_deg[i] = len(pair.lo.children[pair.lo.root])
        hi_deg[i] = len(pair.hi.children[pair.hi.root])
    for k in range(1, 13):
        for deg, params in [(lo_deg, pl), (hi_deg, pm)]:
            want = gw.degree_pmf(params, k)
            got = float((deg == k).mean())
            band = 4.0 * math.sqrt(want * (1.0 - want) / n) + 1e-12
            assert abs(got - want) <= band, (params.c, k, got, want)
    report(4, time.perf_counter() - t0, 120.0,
           f"{n} coupled pairs at (1.2, 1.5): embeddings valid, child-size "
           "domination holds, root-degree marginals within 4 sigma")


def test_criterion_05_return_integral_monotone():
    t0 = time.perf_counter()
    cs = [1.5, 2.0, 3.0, 4.0]
    reps = {c: gw.estimate_return_integral(c, 60, 100_000,
                                           seed=derive_seed(2024, "acc5", c))
            for c in cs}
    for ca, cb in itertools.combinations(cs, 2):
        gap = reps[ca].value - reps[cb].value
        sep = 3.0 * math.hypot(reps[ca].stderr, reps[cb].stderr)
        assert gap >= sep, (ca, cb, gap, sep)
    vals = ", ".join(f"{c}: {reps[c].value:.4f}" for c in cs)
    report(5, time.perf_counter() - t0, 600.0,
           f"return integral strictly decreasing with >= 3 sigma ({vals})")


def test_criterion_06_entropy_increasing_with_slope_bound(f_estimates):
    t0 = time.perf_counter()
    est = f_estimates
    for ca, cb in itertools.combinations([2.0, 3.0, 4.0], 2):
        gap = est[cb].value - est[ca].value
        sep = 3.0 * math.hypot(est[ca].stderr, est[cb].stderr)
        assert gap >= sep, (ca, cb, gap, sep)
    slopes = {}
    for c in (2.0, 3.0):
        slope = (est[c + 0.25].value - est[c].value) / 0.25
        comb = math.hypot(est[c].stderr, est[c + 0.25].stderr) / 0.25
        bound = gw.f_bounds(gw.extinction_prob(c)).fprime_lower
        assert slope >= bound - 2.0 * comb, (c, slope, bound, comb)
        slopes[c] = (slope, bound)
    detail = ", ".join(f"slope({c}) = {s:.3f} >= {b:.3f}"
                       for c, (s, b) in slopes.items())
    report(6, time.perf_counter() - t0, 900.0,
           f"entropy estimates strictly increasing; {detail}")


def test_criterion_07_bounds_sandwich(f_estimates):
    t0 = time.perf_counter()
    for c in (1.5, 2.0, 3.0, 4.0):
        est = f_estimates[c]
        b = gw.f_bounds(gw.extinction_prob(c))
        assert b.f_lower - 2.0 * est.stderr <= est.value, (c, est.value, b)
        assert est.value <= b.f_upper + 2.0 * est.stderr, (c, est.value, b)
    report(7, time.perf_counter() - t0, 900.0,
           "estimates inside [f_lower - 2se, f_upper + 2se] at c in "
           "{1.5, 2, 3, 4}")


def test_criterion_08_cross_pipeline_agreement():
    t0 = time.perf_counter()
    c = 3.0
    walk = gw.estimate_f(c, 60, 100_000, seed=derive_seed(2024, "acc8w", c))
    sweep = {}
    for n in (500, 1000, 1500):
        emp = gw.empirical_f(n, c, 20, seed=derive_seed(2024, "acc8e", n))
        sweep[n] = abs(emp.value - walk.value)
    print("  pilot n-sweep gaps: "
          + ", ".join(f"n={n}: {g:.4f}" for n, g in sweep.items()))
    assert sweep[1500] <= 0.02, sweep
    report(8, time.perf_counter() - t0, 1200.0,
           f"|empirical_f(1500, 3) - estimate_f(3)| = {sweep[1500]:.4f} <= 0.02")


def _complete_graph(n):
    iu = np.triu_indices(n, k=1)
    return gw.SparseGraph(n, np.stack(iu, axis=1))


def _count_spanning_trees_brute(g):
    """Enumeration oracle: acyclic connected (n-1)-edge subsets."""
    n, edges = g.n, [tuple(e) for e in g.edges]
    count = 0
    for subset in itertools.combinations(edges, n - 1):
        parent = list(range(n))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        ok = True
        for u, v in subset:
            ru, rv = find(u), find(v)
            if ru == rv:
                ok = False
                break
            parent[ru] = rv
        count += ok
    return count


def test_criterion_09_matrix_tree_oracle():
    t0 = time.perf_counter()
    for n in range(3, 65):
        got = gw.log_spanning_trees(_complete_graph(n)).log_tau
        assert abs(got - (n - 2) * math.log(n)) <= 1e-8 * n, n
    assert _count_spanning_trees_brute(_complete_graph(4)) == 16
    report(9, time.perf_counter() - t0, 5.0,
           "log tau(K_n) matches (n-2) log n for n = 3..64; "
           "tau(K_4) = 16 by enumeration")


def test_criterion_10_killed_walk_domination():
    t0 = time.perf_counter()
    lam, mu, s, n = 1.5, 2.0, 0.7, 100_000
    x = np.zeros(n, int)
    xp = np.zeros(n, int)
    for i in range(n):
        pair = gw.sample_coupled_trees(lam, mu, 6, derive_seed(2024, "acc10", i))
        x[i] = gw.killed_walk_visits(pair.lo, s,
                                     derive_seed(2024, "acc10-lo", i), grow=lam)
        xp[i] = gw.killed_walk_visits(pair.hi, s,
                                      derive_seed(2024, "acc10-hi", i), grow=mu)
    margins = []
    for m in range(2, 7):
        p, pp = float((x >= m).mean()), float((xp >= m).mean())
        se = math.sqrt(p * (1.0 - p) / n + pp * (1.0 - pp) / n)
        assert p >= pp - 3.0 * se, (m, p, pp)
        margins.append(f"M={m}: {p - pp:+.4f}")
    report(10, time.perf_counter() - t0, 300.0,
           "visit-count domination on coupled pairs (" + ", ".join(margins) + ")")


def test_criterion_11_walk_exactness_under_extension():
    t0 = time.perf_counter()
    depth = 4
    for i in range(100):
        seed = derive_seed(2024, "acc11", i)
        base = gw.sample_pgw_star(2.0, depth, seed)
        extended = gw.sample_pgw_star(2.0, depth + 2, seed)
        p_base = gw.return_probs(base, 2 * depth).probs
        p_ext = gw.return_probs(extended, 2 * depth).probs
        np.testing.assert_allclose(p_base, p_ext, rtol=0, atol=1e-13)
    report(11, time.perf_counter() - t0, 60.0,
           "p_k for k <= 2*depth invariant under two-level tree extension "
           "(100 trees)")
