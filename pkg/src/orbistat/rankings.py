"""Distributions of preference rankings on S_m factored through orbits.

A ranking sigma gives object i the rank sigma(i).  The permutations of the
ranks 2..m act on rankings and split S_m into one orbit per top object;
picking one representative per orbit factors sigma into (tau, s), and a
second factorization through the permutations of the bottom ranks gives
(h, t, s).  Mallows-type models with right-invariant metrics live on the
two-part factorization, Hausdorff coset-space models on the three-part one.
All normalizations are exact enumerations (m <= 8).
"""

from __future__ import annotations

import itertools
import math
from functools import cached_property, lru_cache
from typing import Iterable, Sequence

import numpy as np

from .groups import GroupError, FiniteAction, Permutation, PermutationGroup

__all__ = [
    "RankingFrame",
    "MallowsModel",
    "HierarchicalRankingModel",
    "kendall_distance",
    "cayley_distance",
    "hamming_distance",
    "distance",
    "hausdorff_distance",
    "ranking_action",
    "fit_mallows",
    "fit_hierarchical",
]

MAX_EXACT_M = 8  # exact normalization enumerates S_{m-1}


# ---------------------------------------------------------------------------
# right-invariant metrics
# ---------------------------------------------------------------------------

def kendall_distance(a: Permutation, b: Permutation) -> int:
    """Inversion count of a b^-1 (pairs ordered oppositely by a and b)."""
    seq = (a * b.inverse()).images
    n = len(seq)
    return sum(1 for i in range(n) for j in range(i + 1, n) if seq[i] > seq[j])


def cayley_distance(a: Permutation, b: Permutation) -> int:
    """Minimum transpositions from b to a: size minus cycle count of a b^-1."""
    c = a * b.inverse()
    return len(c.domain) - c.cycle_count()


def hamming_distance(a: Permutation, b: Permutation) -> int:
    """Number of points where a and b disagree."""
    if a.domain != b.domain:
        raise GroupError("mismatched ground sets")
    return sum(1 for x, y in zip(a.images, b.images) if x != y)


METRICS = {
    "kendall": kendall_distance,
    "cayley": cayley_distance,
    "hamming": hamming_distance,
}


def distance(metric: str, a: Permutation, b: Permutation) -> int:
    try:
        fn = METRICS[metric]
    except KeyError:
        raise ValueError(f"unknown metric {metric!r}; choose from {sorted(METRICS)}")
    return fn(a, b)


def hausdorff_distance(
    metric: str,
    coset_a: Iterable[Permutation],
    coset_b: Iterable[Permutation],
) -> int:
    """Two-sided max-min distance between two cosets."""
    A, B = list(coset_a), list(coset_b)
    if not A or not B:
        raise ValueError("cosets must be nonempty")
    fn = METRICS[metric]
    d_ab = max(min(fn(a, b) for b in B) for a in A)
    d_ba = max(min(fn(a, b) for a in A) for b in B)
    return max(d_ab, d_ba)


# ---------------------------------------------------------------------------
# the frame: representatives and the two factorizations
# ---------------------------------------------------------------------------

class RankingFrame:
    """Orbit representatives and factorizations for rankings of m objects.

    The default per-orbit representative ranks the top object first and the
    remaining objects in label order ("standings" rule); ``overrides`` maps
    selected top objects i0 to a rival j0 that is forced into last place
    instead.  ``m_prime`` fixes the depth of the interesting ranks for the
    three-part factorization; ``v_rule`` picks how the free positions of the
    bottom ranks are filled in the coset representatives ("increasing" is
    the default, "decreasing" exists to check representative-independence).
    """

    def __init__(
        self,
        m: int,
        m_prime: int | None = None,
        overrides: dict[int, int] | None = None,
        v_rule: str = "increasing",
    ):
        if not 3 <= m <= MAX_EXACT_M:
            raise ValueError(f"m must be in [3, {MAX_EXACT_M}], got {m}")
        if m_prime is not None and not 2 <= m_prime <= m - 1:
            raise ValueError(f"m_prime must be in [2, {m - 1}], got {m_prime}")
        if v_rule not in ("increasing", "decreasing"):
            raise ValueError(f"unknown v_rule {v_rule!r}")
        overrides = dict(overrides or {})
        for i0, j0 in overrides.items():
            if not (1 <= i0 <= m and 1 <= j0 <= m):
                raise ValueError(f"override ({i0}, {j0}) outside 1..{m}")
            if j0 == i0:
                raise ValueError(f"override rival j0 must differ from i0 = {i0}")
        self.m = m
        self.m_prime = m_prime
        self.overrides = overrides
        self.v_rule = v_rule
        self.objects = tuple(range(1, m + 1))
        self.g_domain = tuple(range(2, m + 1))
        self.h_domain = (
            tuple(range(m_prime + 1, m + 1)) if m_prime is not None else None
        )

    # -- orbit representatives (the cross section Z) -------------------------

    def representative(self, i: int) -> Permutation:
        """The modal ranking sigma_i of the orbit that ranks object i first."""
        m = self.m
        if not 1 <= i <= m:
            raise ValueError(f"top object must be in 1..{m}, got {i}")
        ranks = {i: 1}
        j0 = self.overrides.get(i)
        if j0 is None:
            rest = [o for o in self.objects if o != i]
            for r, o in enumerate(rest, start=2):
                ranks[o] = r
        else:
            rest = [o for o in self.objects if o not in (i, j0)]
            for r, o in enumerate(rest, start=2):
                ranks[o] = r
            ranks[j0] = m
        return Permutation(tuple(ranks[o] for o in self.objects), self.objects)

    def z_list(self) -> tuple[Permutation, ...]:
        return tuple(self.representative(i) for i in self.objects)

    @staticmethod
    def top_object(sigma: Permutation) -> int:
        return sigma.inverse()(1)

    # -- two-part factorization sigma = tau s --------------------------------

    def decompose2(self, sigma: Permutation) -> tuple[Permutation, Permutation]:
        """sigma = tau s with s the orbit representative, tau on ranks 2..m."""
        self._check_ranking(sigma)
        s = self.representative(self.top_object(sigma))
        s_inv = s.inverse()
        tau = Permutation(
            tuple(sigma(s_inv(k)) for k in self.g_domain), self.g_domain
        )
        return tau, s

    def compose2(self, tau: Permutation, s: Permutation) -> Permutation:
        return tau.extended_to(self.objects) * s

    # -- three-part factorization sigma = h t s ------------------------------

    def v_representative(self, tau: Permutation) -> Permutation:
        """Representative of the bottom-rank coset containing tau.

        Positions of ranks 2..m' are copied from tau (they are invariants of
        the coset); the remaining positions receive the bottom ranks in
        increasing (or decreasing) position order.
        """
        mp = self._require_m_prime()
        tau_inv = tau.inverse()
        pos = {r: tau_inv(r) for r in range(2, mp + 1)}
        rest = sorted(set(self.g_domain) - set(pos.values()),
                      reverse=(self.v_rule == "decreasing"))
        for r, p in zip(range(mp + 1, self.m + 1), rest):
            pos[r] = p
        mapping = {p: r for r, p in pos.items()}
        return Permutation(
            tuple(mapping[k] for k in self.g_domain), self.g_domain
        )

    def decompose3(
        self, sigma: Permutation
    ) -> tuple[Permutation, Permutation, Permutation]:
        """sigma = h t s with h on the bottom ranks, t the coset representative."""
        tau, s = self.decompose2(sigma)
        t = self.v_representative(tau)
        t_inv = t.inverse()
        h = Permutation(
            tuple(tau(t_inv(k)) for k in self.h_domain), self.h_domain
        )
        return h, t, s

    def compose3(
        self, h: Permutation, t: Permutation, s: Permutation
    ) -> Permutation:
        tau = h.extended_to(self.g_domain) * t
        return self.compose2(tau, s)

    # -- enumerations ---------------------------------------------------------

    def g_elements(self) -> tuple[Permutation, ...]:
        return tuple(
            Permutation(img, self.g_domain)
            for img in itertools.permutations(self.g_domain)
        )

    def h_elements(self) -> tuple[Permutation, ...]:
        self._require_m_prime()
        return tuple(
            Permutation(img, self.h_domain)
            for img in itertools.permutations(self.h_domain)
        )

    def v_list(self) -> tuple[Permutation, ...]:
        """All coset representatives under the frame's v_rule, sorted."""
        mp = self._require_m_prime()
        reps = []
        for chosen in itertools.permutations(self.g_domain, mp - 1):
            pos = dict(zip(range(2, mp + 1), chosen))
            rest = sorted(set(self.g_domain) - set(chosen),
                          reverse=(self.v_rule == "decreasing"))
            for r, p in zip(range(mp + 1, self.m + 1), rest):
                pos[r] = p
            mapping = {p: r for r, p in pos.items()}
            reps.append(
                Permutation(tuple(mapping[k] for k in self.g_domain), self.g_domain)
            )
        return tuple(sorted(reps, key=lambda p: p.images))

    def coset_key(self, tau: Permutation) -> tuple[int, ...]:
        """H-coset invariant: the positions of ranks 2..m'."""
        mp = self._require_m_prime()
        tau_inv = tau.inverse()
        return tuple(tau_inv(r) for r in range(2, mp + 1))

    def coset_of(self, tau: Permutation) -> tuple[Permutation, ...]:
        """The right coset H tau, sorted."""
        self._require_m_prime()
        ext = [h.extended_to(self.g_domain) for h in self.h_elements()]
        return tuple(sorted({h * tau for h in ext}, key=lambda p: p.images))

    def all_rankings(self) -> tuple[Permutation, ...]:
        return tuple(
            Permutation(img, self.objects)
            for img in itertools.permutations(self.objects)
        )

    def _check_ranking(self, sigma: Permutation) -> None:
        if sigma.domain != self.objects:
            raise GroupError(
                f"ranking must permute 1..{self.m}, got domain {sigma.domain}"
            )

    def _require_m_prime(self) -> int:
        if self.m_prime is None:
            raise ValueError("this frame has no m_prime set")
        return self.m_prime


def ranking_action(m: int) -> FiniteAction:
    """The rank-relabelling action of the permutations of 2..m on S_m."""
    frame = RankingFrame(m)
    group = PermutationGroup.symmetric(frame.g_domain)
    points = frame.all_rankings()

    def act(tau: Permutation, sigma: Permutation) -> Permutation:
        return tau.extended_to(frame.objects) * sigma

    return FiniteAction(group, points, act, validate=False)


# ---------------------------------------------------------------------------
# models
# ---------------------------------------------------------------------------

def _normalize_top_probs(p_top, m: int) -> np.ndarray:
    if p_top is None:
        return np.full(m, 1.0 / m)
    arr = np.asarray(list(p_top), dtype=float)
    if arr.shape != (m,):
        raise ValueError(f"p_top must have length {m}")
    if np.any(arr < 0) or not np.all(np.isfinite(arr)) or arr.sum() == 0:
        raise ValueError("p_top must be nonnegative with positive total")
    return arr / arr.sum()


class MallowsModel:
    """Orbit-wise Mallows model: p(sigma) = c exp(theta d(tau, e)) p_top(i).

    theta <= 0 so the representative is the mode of its orbit; the
    normalizer c is computed by exact enumeration of the rank permutations.
    """

    def __init__(
        self,
        frame: RankingFrame,
        theta: float,
        p_top: Sequence[float] | None = None,
        metric: str = "kendall",
    ):
        if theta > 0:
            raise ValueError(f"theta must be <= 0, got {theta}")
        if metric not in METRICS:
            raise ValueError(f"unknown metric {metric!r}")
        self.frame = frame
        self.theta = float(theta)
        self.metric = metric
        self.p_top = _normalize_top_probs(p_top, frame.m)

    @cached_property
    def _taus(self) -> tuple[Permutation, ...]:
        return self.frame.g_elements()

    @cached_property
    def _tau_distances(self) -> np.ndarray:
        e = Permutation.identity(self.frame.g_domain)
        fn = METRICS[self.metric]
        return np.array([fn(t, e) for t in self._taus], dtype=float)

    @cached_property
    def _log_c(self) -> float:
        # c^-1 = sum over S_{m-1} of exp(theta d(tau, e))
        w = np.exp(self.theta * self._tau_distances)
        return -float(np.log(w.sum()))

    def distance_to_mode(self, sigma: Permutation) -> int:
        tau, _ = self.frame.decompose2(sigma)
        return METRICS[self.metric](tau, Permutation.identity(self.frame.g_domain))

    def log_pmf(self, sigma: Permutation) -> float:
        i = self.frame.top_object(sigma)
        pz = self.p_top[i - 1]
        if pz == 0.0:
            return -math.inf
        return self._log_c + self.theta * self.distance_to_mode(sigma) + math.log(pz)

    def pmf(self, sigma: Permutation) -> float:
        return math.exp(self.log_pmf(sigma))

    def log_likelihood(self, data: Sequence[Permutation]) -> float:
        return sum(self.log_pmf(s) for s in data)

    def sample(self, rng: np.random.Generator, n: int) -> list[Permutation]:
        """Part-by-part sampling: s from p_top, tau from its exact table."""
        frame = self.frame
        z = frame.z_list()
        cum_z = np.cumsum(self.p_top)
        w = np.exp(self.theta * self._tau_distances)
        cum_t = np.cumsum(w / w.sum())
        iz = np.minimum(
            np.searchsorted(cum_z, rng.random(n), side="right"), frame.m - 1
        )
        it = np.minimum(
            np.searchsorted(cum_t, rng.random(n), side="right"), len(cum_t) - 1
        )
        taus = self._taus
        return [frame.compose2(taus[b], z[a]) for a, b in zip(iz, it)]


class HierarchicalRankingModel:
    """Coset-level model: p(sigma) = c' exp(theta d'(H tau, H)) p_top(i).

    d' is the Hausdorff metric on the bottom-rank coset space induced by the
    base metric, so the probability is constant on each coset (the bottom
    ranks are uniform) and independent of how coset representatives are
    picked.
    """

    def __init__(
        self,
        frame: RankingFrame,
        theta: float,
        p_top: Sequence[float] | None = None,
        metric: str = "kendall",
    ):
        if frame.m_prime is None:
            raise ValueError("hierarchical model needs a frame with m_prime")
        if theta > 0:
            raise ValueError(f"theta must be <= 0, got {theta}")
        if metric not in METRICS:
            raise ValueError(f"unknown metric {metric!r}")
        self.frame = frame
        self.theta = float(theta)
        self.metric = metric
        self.p_top = _normalize_top_probs(p_top, frame.m)

    @cached_property
    def _cosets(self) -> tuple[tuple[Permutation, ...], ...]:
        frame = self.frame
        return tuple(frame.coset_of(t) for t in frame.v_list())

    @cached_property
    def _coset_index(self) -> dict[tuple[int, ...], int]:
        frame = self.frame
        return {
            frame.coset_key(c[0]): i for i, c in enumerate(self._cosets)
        }

    @cached_property
    def _identity_coset(self) -> tuple[Permutation, ...]:
        e = Permutation.identity(self.frame.g_domain)
        return self._cosets[self._coset_index[self.frame.coset_key(e)]]

    @cached_property
    def _coset_distances(self) -> np.ndarray:
        base = self._identity_coset
        return np.array(
            [hausdorff_distance(self.metric, c, base) for c in self._cosets],
            dtype=float,
        )

    @cached_property
    def _log_c(self) -> float:
        # total mass 1: c'^-1 = |H| * sum over cosets of exp(theta d')
        w = np.exp(self.theta * self._coset_distances)
        h_order = math.factorial(self.frame.m - self.frame.m_prime)
        return -float(np.log(h_order * w.sum()))

    def coset_distance(self, sigma: Permutation) -> float:
        tau, _ = self.frame.decompose2(sigma)
        idx = self._coset_index[self.frame.coset_key(tau)]
        return float(self._coset_distances[idx])

    def log_pmf(self, sigma: Permutation) -> float:
        i = self.frame.top_object(sigma)
        pz = self.p_top[i - 1]
        if pz == 0.0:
            return -math.inf
        return self._log_c + self.theta * self.coset_distance(sigma) + math.log(pz)

    def pmf(self, sigma: Permutation) -> float:
        return math.exp(self.log_pmf(sigma))

    def log_likelihood(self, data: Sequence[Permutation]) -> float:
        return sum(self.log_pmf(s) for s in data)

    def sample(self, rng: np.random.Generator, n: int) -> list[Permutation]:
        """s from p_top, the coset from its exact table, h uniform."""
        frame = self.frame
        z = frame.z_list()
        v = frame.v_list()
        hs = frame.h_elements()
        cum_z = np.cumsum(self.p_top)
        w = np.exp(self.theta * self._coset_distances)
        cum_v = np.cumsum(w / w.sum())
        iz = np.minimum(
            np.searchsorted(cum_z, rng.random(n), side="right"), frame.m - 1
        )
        iv = np.minimum(
            np.searchsorted(cum_v, rng.random(n), side="right"), len(v) - 1
        )
        ih = rng.integers(0, len(hs), size=n)
        return [
            frame.compose3(hs[c], v[b], z[a]) for a, b, c in zip(iz, iv, ih)
        ]


# ---------------------------------------------------------------------------
# fitting
# ---------------------------------------------------------------------------

THETA_SEARCH_INTERVAL = (-20.0, 0.0)
THETA_TOL = 1e-8


def _golden_max(f, lo: float, hi: float, tol: float) -> float:
    """Golden-section maximizer for a unimodal f on [lo, hi]."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    x = (a + b) / 2.0
    # clamp to the boundary when the optimum sits on it
    if f(lo) >= f(x):
        return lo
    if f(hi) >= f(x):
        return hi
    return x


def _empirical_top(data: Sequence[Permutation], m: int) -> np.ndarray:
    counts = np.zeros(m)
    for sigma in data:
        counts[RankingFrame.top_object(sigma) - 1] += 1
    return counts / counts.sum()


def _profile_fit(data_distances: np.ndarray, weight_distances: np.ndarray,
                 log_block: float) -> float:
    """MLE of theta for an exponential-metric family.

    Profile log-likelihood (up to the p_top part):
      theta * sum(d_k)  -  n * log( block * sum exp(theta * d_j) )
    where the sum over j runs over the support distances.
    """
    n = len(data_distances)
    total = float(data_distances.sum())

    def loglik(theta: float) -> float:
        return theta * total - n * (
            log_block + _logsumexp(theta * weight_distances)
        )

    lo, hi = THETA_SEARCH_INTERVAL
    return _golden_max(loglik, lo, hi, THETA_TOL)


def _logsumexp(v: np.ndarray) -> float:
    mx = float(np.max(v))
    return mx + float(np.log(np.exp(v - mx).sum()))


def fit_mallows(
    data: Sequence[Permutation],
    metric: str = "kendall",
    overrides: dict[int, int] | None = None,
) -> tuple[MallowsModel, float]:
    """MLE fit: empirical top-object frequencies, golden-section for theta."""
    data = list(data)
    if not data:
        raise ValueError("empty data")
    m = len(data[0].domain)
    frame = RankingFrame(m, overrides=overrides)
    p_top = _empirical_top(data, m)
    probe = MallowsModel(frame, theta=0.0, metric=metric)
    d_data = np.array([probe.distance_to_mode(s) for s in data], dtype=float)
    theta = _profile_fit(d_data, probe._tau_distances, log_block=0.0)
    model = MallowsModel(frame, theta=theta, p_top=p_top, metric=metric)
    return model, model.log_likelihood(data)


def fit_hierarchical(
    data: Sequence[Permutation],
    m_prime: int,
    metric: str = "kendall",
    overrides: dict[int, int] | None = None,
) -> tuple[HierarchicalRankingModel, float]:
    """MLE fit of the coset-space model at a fixed depth m_prime."""
    data = list(data)
    if not data:
        raise ValueError("empty data")
    m = len(data[0].domain)
    frame = RankingFrame(m, m_prime=m_prime, overrides=overrides)
    p_top = _empirical_top(data, m)
    probe = HierarchicalRankingModel(frame, theta=0.0, metric=metric)
    d_data = np.array([probe.coset_distance(s) for s in data], dtype=float)
    h_order = math.factorial(m - m_prime)
    theta = _profile_fit(
        d_data, probe._coset_distances, log_block=math.log(h_order)
    )
    model = HierarchicalRankingModel(
        frame, theta=theta, p_top=p_top, metric=metric
    )
    return model, model.log_likelihood(data)
