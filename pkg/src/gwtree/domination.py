"""Offspring-law domination checks and explicit tree couplings.

Notation: Q_r is Poisson(r), Q*_r is Poisson(r) conditioned positive.
For mu > lam the law Q*_lam + Q_beta is dominated by Q*_mu exactly when
beta <= alpha(lam, mu), with equality of the two pmfs at k = 1 when
beta = alpha.  verify_tail_domination checks the full family of tail
inequalities in extended precision; the samplers realize the domination
as a monotone (quantile) coupling, which the underlying result guarantees
to exist but does not construct.

sample_coupled_trees builds a pair (T, T') of survival-conditioned trees
at parameters lam < mu together with a root-preserving node map from T
into T', by recursing the following step over matched type-I vertices:

  * the count S of type-I children on the lam side plus an independent
    Poisson(alpha*) overhead (alpha* = alpha(lam*theta_lam, mu*theta_mu))
    is drawn jointly with the mu-side count H through one uniform and the
    two quantile tables, so H >= S surely;
  * S is split conditionally into the actual lam-side type-I count and
    the overhead W; thinning W with probability g/alpha*
    (g = lam*q_lam - mu*q_mu) yields the number Z' of lam-only finite
    bushes, so Z' <= W and hence H >= (type-I count) + Z';
  * shared finite bushes (count Poisson(mu*q_mu), sizes Borel(mu*q_mu))
    are built once and placed in both trees; the Z' extra bushes (sizes
    proportional to the difference of expected per-size counts) go only
    into the lam-side tree, their roots mapped to spare mu-side type-I
    children.

Superposing the shared and extra bush point processes restores the exact
per-size Poisson counts of the lam-side tree, so both marginals are exact.
The node map covers the matched type-I skeleton, the shared bushes
(isomorphically), and the roots of the extra bushes; interiors of extra
bushes have no structural counterpart on the mu side (their domination
witness is the infinite subtree size of the image).
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from mpmath import mp, mpf

from .analytic import alpha, borel_pmf, extinction_prob
from .rng import substream
from .trees import (TYPE_F, TYPE_I, RootedTree, _positive_poisson,
                    _uniform_rooted_tree)

__all__ = [
    "TailReport",
    "OffspringCouple",
    "CoupledPair",
    "conv_pmf",
    "positive_poisson_pmf",
    "verify_tail_domination",
    "sample_dominated_offspring",
    "sample_dominated_offspring_many",
    "sample_coupled_trees",
    "check_le1",
]


@dataclass(frozen=True)
class TailReport:
    """Result of an exact tail-domination check between Q*_mu and
    Q*_lam + Q_beta.

    margin(k) compares survival functions, P(hi > k) - P(lo > k) for
    k = 1..kmax; min_margin is the smallest margin and violated_at the
    first k with a genuinely negative margin (None when domination holds).
    """

    lam: float
    mu: float
    beta: float
    kmax: int
    min_margin: float
    violated_at: int | None

    def to_dict(self) -> dict:
        return {"lambda": self.lam, "mu": self.mu, "beta": self.beta,
                "kmax": self.kmax, "min_margin": self.min_margin,
                "violated_at": self.violated_at}


@dataclass(frozen=True)
class OffspringCouple:
    """Root-level offspring decomposition of a coupled pair.

    n_fin_lo / n_fin_hi map bush size -> count; the hi counts are the
    shared component, the lo counts additionally include the extra bushes.
    """

    n_fin_lo: dict
    n_fin_hi: dict
    n_inf_lo: int
    n_inf_hi: int

    def extra_total(self) -> int:
        return sum(self.n_fin_lo.values()) - sum(self.n_fin_hi.values())


def conv_pmf(lam: float, beta: float, k: int) -> float:
    """pmf of Q*_lam + Q_beta:
    a_k = e^{-beta}/(e^lam - 1) * ((lam+beta)^k - beta^k)/k!.

    beta = 0 reduces to the positive-Poisson pmf lam^k/((e^lam - 1) k!).
    """
    if k < 1:
        raise ValueError(f"conv_pmf requires k >= 1 (the sum is always >= 1), got {k}")
    if not (lam > 0.0):
        raise ValueError(f"conv_pmf requires lam > 0, got {lam}")
    if beta < 0.0:
        raise ValueError(f"conv_pmf requires beta >= 0, got {beta}")
    log_norm = lam + math.log1p(-math.exp(-lam)) if lam > 30 else math.log(math.expm1(lam))
    lp = (-beta + k * math.log(lam + beta) - math.lgamma(k + 1) - log_norm)
    ratio = (beta / (lam + beta)) ** k
    return math.exp(lp) * (1.0 - ratio)


def positive_poisson_pmf(rate: float, k: int) -> float:
    """pmf of Q*_rate: rate^k / ((e^rate - 1) k!)."""
    return conv_pmf(rate, 0.0, k)


def verify_tail_domination(lam: float, mu: float, beta: float | None = None,
                           kmax: int = 200, dps: int = 400) -> TailReport:
    """Exact check of the tail inequalities P(hi > k) >= P(lo > k), k <= kmax,
    between hi ~ Q*_mu and lo ~ Q*_lam + Q_beta, in dps-digit arithmetic.

    beta=None uses alpha(lam, mu) evaluated at working precision, the
    boundary case where domination holds with equality of the pmfs at
    k = 1.  Callers passing a float beta get the verdict for exactly that
    beta (a float rounded a hair above alpha genuinely violates).

    The margins are computed as finite partial-sum differences
    sum_{j<=k}(a_j - b_j), so no infinite-tail truncation enters; dps=400
    resolves the genuinely tiny positive margins (~1e-340 at k = 200 for
    small mu) well above the rounding floor.
    """
    if not (mu > lam > 0.0):
        raise ValueError(f"requires mu > lam > 0, got lam={lam}, mu={mu}")
    if kmax < 50:
        raise ValueError(f"kmax must be >= 50, got {kmax}")
    with mp.workdps(dps):
        lam_, mu_ = mpf(lam), mpf(mu)
        if beta is None:
            beta_ = (mp.log((mp.e ** mu_ - 1) / mu_)
                     - mp.log((mp.e ** lam_ - 1) / lam_))
        else:
            if beta < 0.0:
                raise ValueError(f"beta must be >= 0, got {beta}")
            beta_ = mpf(beta)
        norm_a = mp.e ** (-beta_) / (mp.e ** lam_ - 1)
        norm_b = 1 / (mp.e ** mu_ - 1)
        cum_a = cum_b = mpf(0)
        fact = mpf(1)
        min_margin = mp.inf
        violated_at = None
        thresh = mpf(10) ** (-(dps - 20))
        for k in range(1, kmax + 1):
            fact *= k
            a_k = norm_a * ((lam_ + beta_) ** k - beta_ ** k) / fact
            b_k = norm_b * mu_ ** k / fact
            cum_a += a_k
            cum_b += b_k
            margin = cum_a - cum_b  # = P(hi > k) - P(lo > k)
            if margin < min_margin:
                min_margin = margin
            if violated_at is None and margin < -thresh:
                violated_at = k
        return TailReport(lam=float(lam), mu=float(mu), beta=float(beta_),
                          kmax=kmax, min_margin=float(min_margin),
                          violated_at=violated_at)


# ---------------------------------------------------------------------------
# quantile-coupled samplers


def _cdf_table(pmf, tol: float = 1e-15, kcap: int = 200_000) -> np.ndarray:
    """cdf[j] = P(X <= j+1) for a law on {1, 2, ...}, extended until the
    remaining tail is below tol."""
    vals = []
    cum = 0.0
    k = 1
    while cum < 1.0 - tol:
        cum += pmf(k)
        vals.append(min(cum, 1.0))
        k += 1
        if k > kcap:
            raise ArithmeticError("cdf table failed to close; improper law?")
    return np.asarray(vals)


def _quantile(cdf: np.ndarray, u) -> np.ndarray | int:
    """Generalized inverse of a {1,2,...}-supported cdf table at u in [0,1)."""
    idx = np.searchsorted(cdf, u, side="left")
    return np.minimum(idx, len(cdf) - 1) + 1


def _dominated_cdf_pair(rate_lo: float, beta: float, rate_hi: float):
    """cdf tables for lo ~ Q*_rate_lo + Q_beta and hi ~ Q*_rate_hi, with the
    hi table clamped below the lo table so the shared-uniform quantile
    coupling satisfies hi >= lo even at float rounding."""
    cdf_lo = _cdf_table(lambda k: conv_pmf(rate_lo, beta, k))
    cdf_hi = _cdf_table(lambda k: positive_poisson_pmf(rate_hi, k))
    n = max(len(cdf_lo), len(cdf_hi))
    cdf_lo = np.pad(cdf_lo, (0, n - len(cdf_lo)), constant_values=1.0)
    cdf_hi = np.pad(cdf_hi, (0, n - len(cdf_hi)), constant_values=1.0)
    cdf_hi = np.minimum(cdf_hi, cdf_lo)
    return cdf_lo, cdf_hi


@lru_cache(maxsize=64)
def _offspring_cdfs(lam: float, mu: float):
    return _dominated_cdf_pair(lam, alpha(lam, mu), mu)


def sample_dominated_offspring(lam: float, mu: float, seed: int) -> tuple[int, int]:
    """One draw of the monotone coupling (lo, hi) with lo ~ Q*_lam + Q_alpha,
    hi ~ Q*_mu, and hi >= lo surely."""
    if not (mu > lam > 0.0):
        raise ValueError(f"requires mu > lam > 0, got lam={lam}, mu={mu}")
    cdf_lo, cdf_hi = _offspring_cdfs(lam, mu)
    u = substream(seed, "domoffspring", lam, mu).random()
    return int(_quantile(cdf_lo, u)), int(_quantile(cdf_hi, u))


def sample_dominated_offspring_many(lam: float, mu: float, n: int,
                                    seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized version of sample_dominated_offspring (one uniform per pair)."""
    if not (mu > lam > 0.0):
        raise ValueError(f"requires mu > lam > 0, got lam={lam}, mu={mu}")
    cdf_lo, cdf_hi = _offspring_cdfs(lam, mu)
    u = substream(seed, "domoffspring", lam, mu).random(n)
    return _quantile(cdf_lo, u), _quantile(cdf_hi, u)


# ---------------------------------------------------------------------------
# coupled survival-conditioned trees


class CoupledPair:
    """Two trees plus the root-preserving node map lo -> hi.

    The map covers the coupled type-I skeleton, all shared finite bushes,
    and the roots of lo-only extra bushes (whose images are spare type-I
    children on the hi side).  Interiors of extra bushes are unmapped;
    their domination witness is the infinite subtree size of the image.
    """

    def __init__(self, lo: RootedTree, hi: RootedTree, node_map: dict,
                 root_couple: OffspringCouple, lam: float, mu: float,
                 depth: int, seed: int):
        self.lo = lo
        self.hi = hi
        self.node_map = node_map
        self.root_couple = root_couple
        self.lam = lam
        self.mu = mu
        self.depth = depth
        self.seed = seed

    def validate_embedding(self) -> None:
        """Injectivity, root preservation, parent compatibility, and
        subtree-size dominance of the node map; raises on violation."""
        from .trees import subtree_stats
        if self.lo.subtree_size is None:
            subtree_stats(self.lo)
        if self.hi.subtree_size is None:
            subtree_stats(self.hi)
        m = self.node_map
        if m.get(self.lo.root) != self.hi.root:
            raise ValueError("node map does not send root to root")
        if len(set(m.values())) != len(m):
            raise ValueError("node map is not injective")
        for u, v in m.items():
            if u != self.lo.root:
                pu = self.lo.parent[u]
                if pu not in m or m[pu] != self.hi.parent[v]:
                    raise ValueError(
                        f"parent of image differs from image of parent at {u}")
            if self.hi.subtree_size[v] < self.lo.subtree_size[u]:
                raise ValueError(f"subtree size dominance fails at {u}")

    def audit_le1(self) -> bool:
        """check_le1 at every mapped pair whose two sides are structurally
        coupled (type-I skeleton pairs and shared-bush pairs).  Extra-bush
        roots map to type-I vertices and are witnessed by N = inf at the
        parent level, not by a recursive child-list comparison."""
        from .trees import subtree_stats
        if self.lo.subtree_size is None:
            subtree_stats(self.lo)
        if self.hi.subtree_size is None:
            subtree_stats(self.hi)
        for u, v in self.node_map.items():
            if self.lo.ntype[u] != self.hi.ntype[v]:
                continue  # extra-bush root onto spare infinite child
            if self.lo.open_[u]:
                continue  # frontier stub
            lo_sizes = [self.lo.subtree_size[w] for w in self.lo.children[u]]
            hi_sizes = [self.hi.subtree_size[w] for w in self.hi.children[v]]
            if not _le1_sorted(lo_sizes, hi_sizes):
                return False
        return True


def _le1_sorted(lo_sizes, hi_sizes) -> bool:
    # Greedy matching on descending-sorted lists is exact for threshold
    # constraints N(i(v)) >= N(v) (standard exchange argument).
    if len(lo_sizes) > len(hi_sizes):
        return False
    lo_s = sorted(lo_sizes, reverse=True)
    hi_s = sorted(hi_sizes, reverse=True)
    return all(x <= y for x, y in zip(lo_s, hi_s))


def check_le1(lo: RootedTree, hi: RootedTree) -> bool:
    """True iff an injection from lo-root children to hi-root children exists
    with N(image) >= N(child).  Both trees need subtree-size annotations
    (filled on demand)."""
    from .trees import subtree_stats
    if lo.subtree_size is None:
        subtree_stats(lo)
    if hi.subtree_size is None:
        subtree_stats(hi)
    return _le1_sorted([lo.subtree_size[w] for w in lo.children[lo.root]],
                       [hi.subtree_size[w] for w in hi.children[hi.root]])


def _log_poisson(rate: float, k: int) -> float:
    return -rate + (k * math.log(rate) if k else 0.0) - math.lgamma(k + 1)


def _mean_count_log(nu: float, k: int) -> float:
    # log of the expected number of size-k finite bushes, (nu e^{-nu})^k k^{k-1}/k!
    return k * (math.log(nu) - nu) + (k - 1) * math.log(k) - math.lgamma(k + 1)


class _CoupledSampler:
    """Precomputed tables for one (lam, mu) pair; see the module docstring
    for the per-vertex coupling step."""

    def __init__(self, lam: float, mu: float):
        if not (mu > lam > 1.0):
            raise ValueError(f"requires mu > lam > 1, got lam={lam}, mu={mu}")
        self.lam, self.mu = lam, mu
        pl, pm = extinction_prob(lam), extinction_prob(mu)
        self.rate_i_lo, self.rate_i_hi = pl.ctheta, pm.ctheta
        self.rate_f_lo, self.rate_f_hi = pl.cq, pm.cq
        self.alpha_star = alpha(self.rate_i_lo, self.rate_i_hi)
        self.g = pl.cq - pm.cq  # expected extra finite mass on the lam side
        self.thin_p = self.g / self.alpha_star  # in (0, 1)
        self.cdf_loplus, self.cdf_ihi = _dominated_cdf_pair(
            self.rate_i_lo, self.alpha_star, self.rate_i_hi)
        self.shared_size_cdf = _cdf_table(lambda k: borel_pmf(self.rate_f_hi, k))
        self.extra_size_cdf = self._extra_size_table()
        self._split_cache: dict[int, np.ndarray] = {}

    def _extra_size_table(self) -> np.ndarray:
        # sizes of lam-only bushes: pmf_k = (m_k(lam) - m_k(mu)) / g, where
        # m_k(nu) is the expected count of size-k bushes at parameter nu
        vals = []
        cum = 0.0
        k = 1
        while cum < 1.0 - 1e-13:
            diff = (math.exp(_mean_count_log(self.lam, k))
                    - math.exp(_mean_count_log(self.mu, k)))
            cum += max(diff, 0.0) / self.g
            vals.append(min(cum, 1.0))
            k += 1
            if k > 100_000:
                break  # remaining mass < 1e-13; quantiles clip to the table end
        return np.asarray(vals)

    def _split_infinite_sum(self, s: int, u: float) -> int:
        """Conditional draw of a from (Q*_rate_i_lo, Q_alpha*) given sum = s."""
        cum = self._split_cache.get(s)
        if cum is None:
            logw = [positive_poisson_log(self.rate_i_lo, a)
                    + _log_poisson(self.alpha_star, s - a)
                    for a in range(1, s + 1)]
            w = np.exp(np.asarray(logw) - max(logw))
            cum = np.cumsum(w / w.sum())
            self._split_cache[s] = cum
        return int(np.searchsorted(cum, u, side="left")) + 1

    def _graft_uniform_bush(self, trees_nodes, size: int, rng) -> list[list[int]]:
        """Attach the same uniform rooted tree of the given size below each
        (tree, node) in trees_nodes; returns the per-tree lists of created
        node ids (bush root included), in identical structural order."""
        proto = _uniform_rooted_tree(size, rng)
        out = []
        for tree, at in trees_nodes:
            ids = [at]
            tree.open_[at] = False
            for v in range(1, len(proto)):
                ids.append(tree.add_node(ids[proto.parent[v]], TYPE_F,
                                         open_=False))
            out.append(ids)
        return out

    def sample(self, depth: int, seed: int) -> CoupledPair:
        # one substream per pair, consumed in fixed traversal order
        rng = substream(seed, "couple", self.lam, self.mu)
        lo, hi = RootedTree(), RootedTree()
        lo.truncation_depth = depth
        hi.truncation_depth = depth
        lo.add_node(-1, TYPE_I)
        hi.add_node(-1, TYPE_I)
        node_map = {0: 0}
        root_couple = None
        stack = [(0, 0)]
        while stack:
            u, v = stack.pop()
            if lo.depth[u] > depth:
                continue  # both stubs stay open
            unif = rng.random()
            s_plus = int(_quantile(self.cdf_loplus, unif))
            h = int(_quantile(self.cdf_ihi, unif))  # h >= s_plus
            a = self._split_infinite_sum(s_plus, rng.random())
            w = s_plus - a
            z_extra = int(rng.binomial(w, self.thin_p)) if w else 0
            z_shared = int(rng.poisson(self.rate_f_hi))
            shared_sizes = [int(_quantile(self.shared_size_cdf, rng.random()))
                            for _ in range(z_shared)]
            extra_sizes = [int(_quantile(self.extra_size_cdf, rng.random()))
                           for _ in range(z_extra)]
            lo.open_[u] = False
            hi.open_[v] = False
            for _ in range(a):
                cu = lo.add_node(u, TYPE_I)
                cv = hi.add_node(v, TYPE_I)
                node_map[cu] = cv
                stack.append((cu, cv))
            spare = []
            for _ in range(h - a):
                cv = hi.add_node(v, TYPE_I)
                spare.append(cv)
                self._expand_marginal_hi(hi, cv, depth, rng)
            for size in shared_sizes:
                bu = lo.add_node(u, TYPE_F)
                bv = hi.add_node(v, TYPE_F)
                ids_lo, ids_hi = self._graft_uniform_bush(
                    [(lo, bu), (hi, bv)], size, rng)
                node_map.update(zip(ids_lo, ids_hi))
            for j, size in enumerate(extra_sizes):
                bu = lo.add_node(u, TYPE_F)
                self._graft_uniform_bush([(lo, bu)], size, rng)
                node_map[bu] = spare[j]  # z_extra <= w <= h - a
            if u == 0:
                root_couple = OffspringCouple(
                    n_fin_lo=dict(Counter(shared_sizes + extra_sizes)),
                    n_fin_hi=dict(Counter(shared_sizes)),
                    n_inf_lo=a, n_inf_hi=h)
        return CoupledPair(lo, hi, node_map, root_couple,
                           self.lam, self.mu, depth, seed)

    def _expand_marginal_hi(self, tree: RootedTree, node: int, depth: int,
                            rng) -> None:
        """Marginal two-type expansion of an unpaired hi subtree down to the
        horizon (same law as sample_pgw_star restricted to a subtree)."""
        stack = [node]
        while stack:
            x = stack.pop()
            if tree.depth[x] > depth:
                continue
            n_i = _positive_poisson(rng.random(), self.rate_i_hi)
            n_f = int(rng.poisson(self.rate_f_hi))
            tree.open_[x] = False
            for _ in range(n_i):
                stack.append(tree.add_node(x, TYPE_I))
            for _ in range(n_f):
                bw = tree.add_node(x, TYPE_F)
                size = int(_quantile(self.shared_size_cdf, rng.random()))
                self._graft_uniform_bush([(tree, bw)], size, rng)


def positive_poisson_log(rate: float, k: int) -> float:
    log_norm = rate + math.log1p(-math.exp(-rate)) if rate > 30 else math.log(math.expm1(rate))
    return k * math.log(rate) - math.lgamma(k + 1) - log_norm


@lru_cache(maxsize=16)
def _coupled_sampler(lam: float, mu: float) -> _CoupledSampler:
    return _CoupledSampler(lam, mu)


def sample_coupled_trees(lam: float, mu: float, depth: int,
                         seed: int) -> CoupledPair:
    """One coupled pair (T, T') of survival-conditioned trees, type-I
    skeletons truncated at the given depth, with T's marginal at parameter
    lam, T' at mu, and the embedding witnessing domination (see module
    docstring)."""
    if depth < 1:
        raise ValueError(f"depth must be >= 1, got {depth}")
    return _coupled_sampler(lam, mu).sample(depth, seed)
