"""Tree samplers: size laws, two-type structure, uniform trees, statistics."""

import math

import numpy as np
import pytest

from gwtree import (TYPE_F, TYPE_I, RootedTree, borel_pmf, degree_pmf,
                    extinction_prob, sample_pgw, sample_pgw_star,
                    sample_uniform_rooted_tree, subtree_stats, tree_from_text,
                    tree_to_text)
from gwtree.rng import derive_seed

INF = math.inf


def make_path(n):
    t = RootedTree()
    t.add_node(-1, open_=False)
    for v in range(1, n):
        t.add_node(v - 1, open_=False)
    return t


class TestSamplePgw:
    def test_size_law_matches_borel(self):
        n = 100_000
        sizes = np.zeros(n, int)
        for i in range(n):
            t = sample_pgw(0.5, 10_000, derive_seed(0, "borel", i))
            assert not t.capped
            sizes[i] = len(t)
        for k in range(1, 11):
            want = borel_pmf(0.5, k)
            got = float((sizes == k).mean())
            band = 4.0 * math.sqrt(want * (1.0 - want) / n)
            assert abs(got - want) <= band, (k, got, want)

    def test_singleton_probability(self):
        # P(|T| = 1) = e^{-c}: covered by k = 1 of the Borel match; spot value
        assert borel_pmf(0.5, 1) == pytest.approx(math.exp(-0.5), rel=1e-14)

    def test_capped_fraction_is_survival_probability(self):
        # a supercritical tree hits any finite cap iff it survives (the
        # finite-but-huge contribution is astronomically small at c = 2)
        n, cap = 20_000, 5000
        capped = 0
        for i in range(n):
            t = sample_pgw(2.0, cap, derive_seed(1, "cap", i))
            capped += t.capped
            assert t.capped or len(t) <= cap
        theta = extinction_prob(2.0).theta
        band = 3.0 * math.sqrt(theta * (1.0 - theta) / n)
        assert abs(capped / n - theta) <= band

    def test_capped_result_is_explicit(self):
        t = sample_pgw(3.0, 10, seed=12)  # survival is likely; retry seeds
        i = 0
        while not t.capped:
            i += 1
            t = sample_pgw(3.0, 10, seed=12 + i)
        assert any(t.open_)  # unexpanded nodes are marked, not dropped

    def test_validate_on_samples(self):
        for i in range(200):
            sample_pgw(0.8, 10_000, derive_seed(2, i)).validate()

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            sample_pgw(0.0, 10, 0)
        with pytest.raises(ValueError):
            sample_pgw(1.0, 0, 0)


class TestSamplePgwStar:
    def test_root_degree_law(self):
        n = 150_000
        c = 2.0
        params = extinction_prob(c)
        degs = np.zeros(n, int)
        fin_hist = np.zeros(16, int)
        for i in range(n):
            t = sample_pgw_star(c, 1, derive_seed(3, "star", i))
            kids = t.children[t.root]
            degs[i] = len(kids)
            for w in kids:
                if t.ntype[w] == TYPE_F:
                    sz = len(_subtree_nodes(t, w))
                    if sz < 16:
                        fin_hist[sz] += 1
        for k in range(1, 13):
            want = degree_pmf(params, k)
            got = float((degs == k).mean())
            band = 4.0 * math.sqrt(want * (1.0 - want) / n) + 1e-12
            assert abs(got - want) <= band, (k, got, want)
        # mean number of finite root-bushes of size k: (c e^{-c})^k k^{k-1}/k!
        for k in range(1, 7):
            want = math.exp(k * (math.log(c) - c) + (k - 1) * math.log(k)
                            - math.lgamma(k + 1))
            got = fin_hist[k] / n
            band = 4.0 * math.sqrt(want / n) + 1e-12  # Poisson variance = mean
            assert abs(got - want) <= band, (k, got, want)

    def test_spine_limit_at_one(self):
        t = sample_pgw_star(1.0, 8, seed=5)
        t.validate()
        for v in range(len(t)):
            if t.ntype[v] == TYPE_I and not t.open_[v]:
                i_kids = [w for w in t.children[v] if t.ntype[w] == TYPE_I]
                assert len(i_kids) == 1

    def test_structure_invariants_on_samples(self):
        for i in range(10_000):
            t = sample_pgw_star(1.5, 3, derive_seed(4, i))
            t.validate()
            hist = subtree_stats(t)
            assert hist[INF] >= 1  # survival: at least one infinite child

    def test_deepening_reproduces_shallow_tree(self):
        shallow = sample_pgw_star(2.0, 3, seed=77)
        deep = sample_pgw_star(2.0, 5, seed=77)

        def restricted_signature(t, dmax):
            sig = []
            for v in range(len(t)):
                if t.depth[v] <= dmax and not t.open_[v]:
                    kid_types = sorted(t.ntype[w] for w in t.children[v])
                    sig.append((t.depth[v], t.ntype[v], tuple(kid_types)))
            return sorted(sig)

        assert restricted_signature(shallow, 3) == restricted_signature(deep, 3)

    def test_independence_of_bush_and_infinite_counts(self):
        n = 60_000
        n1 = np.zeros(n)
        ninf = np.zeros(n)
        for i in range(n):
            t = sample_pgw_star(2.0, 1, derive_seed(6, "cov", i))
            hist = subtree_stats(t)
            n1[i] = hist.get(1.0, 0)
            ninf[i] = hist.get(INF, 0)
        cov = float(np.cov(n1, ninf)[0, 1])
        prods = (n1 - n1.mean()) * (ninf - ninf.mean())
        se = float(prods.std(ddof=1) / math.sqrt(n))
        assert abs(cov) <= 4.0 * se

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            sample_pgw_star(0.9, 3, 0)
        with pytest.raises(ValueError):
            sample_pgw_star(2.0, -1, 0)


def _subtree_nodes(t, v):
    out = [v]
    stack = [v]
    while stack:
        x = stack.pop()
        for w in t.children[x]:
            out.append(w)
            stack.append(w)
    return out


class TestUniformRootedTree:
    def test_tiny_sizes(self):
        t1 = sample_uniform_rooted_tree(1, 0)
        assert len(t1) == 1
        t2 = sample_uniform_rooted_tree(2, 0)
        assert len(t2) == 2 and t2.parent[1] == 0

    def test_validate_and_size(self):
        for n in [3, 4, 9, 30]:
            t = sample_uniform_rooted_tree(n, derive_seed(8, n))
            t.validate()
            assert len(t) == n

    def test_root_degree_two_on_three_vertices(self):
        # all labeled trees on 3 vertices are paths; a uniform root is the
        # middle vertex with probability exactly 1/3
        n = 30_000
        hits = sum(
            len(sample_uniform_rooted_tree(3, derive_seed(9, i)).children[0]) == 2
            for i in range(n))
        band = 3.0 * math.sqrt((1 / 3) * (2 / 3) / n)
        assert abs(hits / n - 1 / 3) <= band

    def test_mean_root_degree(self):
        # handshake: mean degree of a uniform vertex is 2(n-1)/n
        n = 30_000
        total = sum(
            len(sample_uniform_rooted_tree(8, derive_seed(10, i)).children[0])
            for i in range(n))
        want = 2.0 * 7.0 / 8.0
        # degree of a uniform root of a uniform tree on 8 vertices is in [1,7]
        sd_bound = 1.5
        assert abs(total / n - want) <= 3.0 * sd_bound / math.sqrt(n)

    def test_growth_domination_in_n(self):
        # finite-size consequence of the size-coupled growth: the maximal
        # root-child subtree size is stochastically larger for larger n
        nsamp = 20_000
        data = {}
        for n in (5, 10, 20):
            vals = np.zeros(nsamp)
            for i in range(nsamp):
                t = sample_uniform_rooted_tree(n, derive_seed(11, n, i))
                hist = subtree_stats(t)
                vals[i] = max(hist.keys()) if hist else 0
            data[n] = vals
        for n_small, n_big in [(5, 10), (10, 20)]:
            for m in range(1, n_small + 1):
                p_small = float((data[n_small] >= m).mean())
                p_big = float((data[n_big] >= m).mean())
                se = math.sqrt(p_small * (1 - p_small) / nsamp
                               + p_big * (1 - p_big) / nsamp)
                assert p_big >= p_small - 3.0 * se, (n_small, n_big, m)

    def test_domain_error(self):
        with pytest.raises(ValueError):
            sample_uniform_rooted_tree(0, 0)


class TestSubtreeStats:
    def test_path_sizes(self):
        t = make_path(3)
        subtree_stats(t)
        assert t.subtree_size == [3.0, 2.0, 1.0]

    def test_star_histogram(self):
        t = RootedTree()
        t.add_node(-1, open_=False)
        for _ in range(4):
            t.add_node(0, open_=False)
        hist = subtree_stats(t)
        assert hist == {1.0: 4}

    def test_infinite_markers(self):
        t = sample_pgw_star(2.0, 2, seed=13)
        subtree_stats(t)
        for v in range(len(t)):
            if t.ntype[v] == TYPE_I:
                assert math.isinf(t.subtree_size[v])
            elif not t.open_[v]:
                assert t.subtree_size[v] >= 1.0


class TestSerialization:
    def test_roundtrip(self):
        t = sample_pgw_star(1.5, 3, seed=21)
        text = tree_to_text(t)
        back = tree_from_text(text)
        assert tree_to_text(back) == text
        assert len(back) == len(t)
        assert back.parent == t.parent
        assert back.ntype == t.ntype

    def test_format_fields(self):
        t = make_path(2)
        lines = tree_to_text(t).strip().splitlines()
        assert lines[0].split() == ["0", "-1", "U", "2"]
        assert lines[1].split() == ["1", "0", "U", "1"]
