import itertools
import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from randcert import (
    CategoricalDistribution,
    DimensionError,
    DivergenceKind,
    GroundDistance,
    ValidationError,
    divergence,
    hellinger_distance,
    kl_divergence,
    probability_preservation_bound,
    renyi_divergence,
    separation_distance,
    shannon_entropy,
    tv_bound_from_renyi,
    tv_distance,
    wasserstein_distance,
)

mp.mp.dps = 40


def brute_force_tv(p, q):
    """sup over all 2^K events of |p(Z) - q(Z)|."""
    p, q = np.asarray(p), np.asarray(q)
    best = 0.0
    for mask in itertools.product([False, True], repeat=p.size):
        m = np.array(mask)
        best = max(best, abs(p[m].sum() - q[m].sum()))
    return best


def mp_renyi(p, q, beta):
    """Defining sum in 40-digit arithmetic."""
    p = [mp.mpf(v) for v in p]
    q = [mp.mpf(v) for v in q]
    if beta == 1:
        return mp.fsum(a * mp.log(a / b) for a, b in zip(p, q) if a > 0)
    if beta == math.inf:
        return max(mp.log(a / b) for a, b in zip(p, q) if a > 0)
    s = mp.fsum(b * (a / b) ** beta for a, b in zip(p, q) if b > 0)
    return mp.log(s) / (beta - 1)


def random_pair(rng, k, floor=0.0):
    p = rng.dirichlet(np.ones(k)) + floor
    q = rng.dirichlet(np.ones(k)) + floor
    return p / p.sum(), q / q.sum()


prob_vectors = st.integers(2, 8).flatmap(
    lambda k: st.tuples(
        arrays(np.float64, k, elements=st.floats(0.0, 1.0)),
        arrays(np.float64, k, elements=st.floats(0.0, 1.0)),
    )
).filter(lambda t: t[0].sum() > 1e-3 and t[1].sum() > 1e-3).map(
    lambda t: (t[0] / t[0].sum(), t[1] / t[1].sum())
)


class TestCategoricalDistribution:
    def test_renormalizes_small_drift(self):
        d = CategoricalDistribution([0.5, 0.5 + 5e-7])
        assert d.probs.sum() == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("bad", [[0.5, 0.6], [1.0], [-0.1, 1.1], [np.nan, 1.0], [0.5, 0.49]])
    def test_rejects_invalid(self, bad):
        with pytest.raises(ValidationError):
            CategoricalDistribution(bad)

    def test_clips_tiny_negatives(self):
        d = CategoricalDistribution([1.0 + 1e-13, -1e-13])
        assert d.probs.min() >= 0.0

    def test_immutable(self):
        d = CategoricalDistribution([0.3, 0.7])
        with pytest.raises(ValueError):
            d.probs[0] = 1.0

    def test_helpers(self):
        assert CategoricalDistribution.uniform(4).probs.tolist() == [0.25] * 4
        assert CategoricalDistribution.point_mass(1, 3).probs.tolist() == [0, 1, 0]
        assert CategoricalDistribution([0.2, 0.5, 0.3]).top_two() == (0.5, 0.3)
        assert CategoricalDistribution([0.2, 0.8]) == CategoricalDistribution([0.2, 0.8])


class TestTV:
    @pytest.mark.parametrize(
        "p, q, expected",
        [([0.5, 0.5], [0.5, 0.5], 0.0), ([1, 0], [0, 1], 1.0), ([0.7, 0.3], [0.4, 0.6], 0.3)],
    )
    def test_examples(self, p, q, expected):
        assert tv_distance(p, q) == pytest.approx(expected, abs=1e-12)
        assert tv_distance(p, q) == pytest.approx(brute_force_tv(p, q), abs=1e-12)

    def test_mismatched_k(self):
        with pytest.raises(DimensionError):
            tv_distance([0.5, 0.5], [0.2, 0.3, 0.5])

    @pytest.mark.parametrize("k", [2, 3, 5, 8, 12])
    def test_matches_brute_force_sup(self, rng, k):
        for _ in range(5):
            p, q = random_pair(rng, k)
            assert tv_distance(p, q) == pytest.approx(brute_force_tv(p, q), abs=1e-12)

    def test_metric_axioms(self, rng):
        for _ in range(200):
            k = int(rng.integers(2, 8))
            p, q = random_pair(rng, k)
            r = rng.dirichlet(np.ones(k))
            assert tv_distance(p, q) == tv_distance(q, p)
            assert tv_distance(p, p) <= 1e-12
            assert tv_distance(p, r) <= tv_distance(p, q) + tv_distance(q, r) + 1e-12


class TestRenyi:
    def test_examples(self):
        p, q = [0.5, 0.5], [0.25, 0.75]
        assert renyi_divergence(p, q, 2) == pytest.approx(math.log(4 / 3), rel=1e-12)
        assert renyi_divergence(p, q, math.inf) == pytest.approx(math.log(2), rel=1e-12)
        for beta in (1, 1.5, 2, 10, math.inf):
            assert renyi_divergence(p, p, beta) == 0.0

    @pytest.mark.parametrize("beta", [1, 1.01, 1.5, 2, 10, math.inf])
    def test_matches_high_precision(self, rng, beta):
        for _ in range(10):
            p, q = random_pair(rng, int(rng.integers(2, 10)), floor=1e-3)
            assert renyi_divergence(p, q, beta) == pytest.approx(float(mp_renyi(p, q, beta)), rel=1e-9, abs=1e-14)

    def test_kl_alias(self):
        assert kl_divergence([0.7, 0.3], [0.4, 0.6]) == renyi_divergence([0.7, 0.3], [0.4, 0.6], 1)

    @pytest.mark.parametrize("beta", [1, 2, math.inf])
    def test_support_mismatch_is_infinite(self, beta):
        assert renyi_divergence([0.5, 0.5], [1.0, 0.0], beta) == math.inf

    def test_zero_mass_in_p_is_fine(self):
        assert renyi_divergence([1.0, 0.0], [0.5, 0.5], 1) == pytest.approx(math.log(2))

    def test_beta_below_one(self):
        with pytest.raises(ValidationError):
            renyi_divergence([0.5, 0.5], [0.4, 0.6], 0.5)

    @settings(max_examples=200, deadline=None)
    @given(prob_vectors)
    def test_non_decreasing_in_beta(self, pq):
        p, q = pq
        betas = [1, 1.2, 2, 5, 50, math.inf]
        vals = [renyi_divergence(p, q, b) for b in betas]
        for a, b in zip(vals, vals[1:]):
            assert a <= b + 1e-9 or (math.isinf(a) and math.isinf(b))

    @settings(max_examples=200, deadline=None)
    @given(prob_vectors)
    def test_non_negative(self, pq):
        for beta in (1, 2, math.inf):
            assert renyi_divergence(*pq, beta) >= 0.0


class TestOtherMetrics:
    def test_hellinger(self):
        assert hellinger_distance([0.3, 0.7], [0.3, 0.7]) == 0.0
        assert hellinger_distance([1, 0], [0, 1]) == pytest.approx(math.sqrt(2))
        oracle = mp.sqrt((mp.sqrt(0.5) - mp.sqrt(0.25)) ** 2 + (mp.sqrt(0.5) - mp.sqrt(0.75)) ** 2)
        assert hellinger_distance([0.5, 0.5], [0.25, 0.75]) == pytest.approx(float(oracle), abs=1e-12)

    def test_hellinger_below_sqrt_kl(self, rng):
        for _ in range(500):
            p, q = random_pair(rng, int(rng.integers(2, 10)), floor=1e-6)
            assert hellinger_distance(p, q) <= math.sqrt(kl_divergence(p, q)) + 1e-12

    @pytest.mark.parametrize(
        "p, q, expected",
        [([0.4, 0.6], [0.4, 0.6], 0.0), ([0.5, 0.5], [0.25, 0.75], 1 / 3), ([0, 1], [0.5, 0.5], 1.0)],
    )
    def test_separation(self, p, q, expected):
        assert separation_distance(p, q) == pytest.approx(expected, abs=1e-12)

    def test_separation_skips_zero_denominator(self):
        # label 1 has q = 0 and is skipped; label 0 gives 1 - 0.5/1 = 0.5
        assert separation_distance([0.5, 0.5], [1.0, 0.0]) == pytest.approx(0.5)

    def test_separation_not_clamped(self):
        # can be negative only when no label has p <= q, impossible for distributions;
        # the raw sup is still reported as computed
        assert separation_distance([0.2, 0.8], [0.5, 0.5]) == pytest.approx(0.6)

    def test_wasserstein_examples(self):
        line = GroundDistance.ORDERED_LINE
        assert wasserstein_distance([1, 0], [0, 1], line) == pytest.approx(1.0)
        assert wasserstein_distance([0.5, 0, 0.5], [0, 1, 0], line) == pytest.approx(1.0)
        assert wasserstein_distance([1, 0, 0], [0, 0, 1], line) == pytest.approx(2.0)

    def test_wasserstein_trivial_equals_tv(self, rng):
        for _ in range(500):
            p, q = random_pair(rng, int(rng.integers(2, 10)))
            assert wasserstein_distance(p, q, GroundDistance.TRIVIAL) == pytest.approx(tv_distance(p, q), abs=1e-12)

    def test_wasserstein_line_matches_lp(self, rng):
        from scipy.optimize import linprog

        for _ in range(20):
            k = int(rng.integers(2, 6))
            p, q = random_pair(rng, k)
            cost = np.abs(np.subtract.outer(np.arange(k), np.arange(k))).ravel()
            a_eq = np.vstack([np.kron(np.eye(k), np.ones(k)), np.kron(np.ones(k), np.eye(k))])
            res = linprog(cost, A_eq=a_eq, b_eq=np.concatenate([p, q]), bounds=(0, None))
            assert wasserstein_distance(p, q, GroundDistance.ORDERED_LINE) == pytest.approx(res.fun, abs=1e-8)

    @pytest.mark.parametrize(
        "p, expected",
        [([1, 0], 0.0), ([0.25] * 4, math.log(4)), ([0.7, 0.3], 0.6108643020548935)],
    )
    def test_entropy(self, p, expected):
        assert shannon_entropy(p) == pytest.approx(expected, abs=1e-12)

    def test_divergence_dispatch(self):
        p, q = [0.7, 0.3], [0.4, 0.6]
        assert divergence(DivergenceKind.tv(), p, q) == tv_distance(p, q)
        assert divergence(DivergenceKind.renyi(2), p, q) == renyi_divergence(p, q, 2)
        assert divergence(DivergenceKind.hellinger(), p, q) == hellinger_distance(p, q)
        assert divergence(DivergenceKind.separation(), p, q) == separation_distance(p, q)
        assert divergence(DivergenceKind.wasserstein(GroundDistance.ORDERED_LINE), p, q) == pytest.approx(0.3)


class TestInequalities:
    def test_probability_preservation_examples(self):
        assert probability_preservation_bound(0.1, 0.0, math.inf) == pytest.approx(0.1)
        assert probability_preservation_bound(0.1, 0.1, 2) == pytest.approx(
            float(mp.sqrt(mp.e ** mp.mpf("0.1") * mp.mpf("0.1"))), abs=1e-12
        )
        with pytest.raises(ValidationError):
            probability_preservation_bound(0.1, 0.1, 1.0)

    def test_tv_bound_examples(self):
        assert tv_bound_from_renyi(0.0) == 0.0
        second = float(mp.tanh(mp.mpf(3) / 2))
        first = float(1.5 * mp.sqrt(mp.sqrt(1 + mp.mpf(8) / 9) - 1))
        assert first > second  # the tanh branch wins at eps = 2
        assert tv_bound_from_renyi(2.0) == pytest.approx(second, abs=1e-12)
        with pytest.raises(ValidationError):
            tv_bound_from_renyi(-0.1)

    def test_tv_bound_small_eps_is_stable(self):
        # first branch ~ sqrt(eps / 2) for tiny eps, no cancellation to zero
        assert tv_bound_from_renyi(1e-20) == pytest.approx(math.sqrt(1e-20 / 2), rel=1e-6)

    @settings(max_examples=300, deadline=None)
    @given(prob_vectors, st.sampled_from([1, 1.5, 2, 10, math.inf]))
    def test_tv_from_renyi_property(self, pq, beta):
        p, q = pq
        eps = renyi_divergence(p, q, beta)
        assert tv_distance(p, q) <= tv_bound_from_renyi(eps) + 1e-12

    @settings(max_examples=300, deadline=None)
    @given(prob_vectors, st.sampled_from([1.5, 2, 10, math.inf]), st.data())
    def test_probability_preservation_property(self, pq, beta, data):
        p, q = pq
        eps = renyi_divergence(p, q, beta)
        if math.isinf(eps):
            return
        mask = np.array(data.draw(st.lists(st.booleans(), min_size=p.size, max_size=p.size)))
        assert p[mask].sum() <= probability_preservation_bound(q[mask].sum(), eps, beta) + 1e-12
