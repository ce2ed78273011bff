import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from riskcal import ValidationError, bonferroni, fixed_sequence_test


class TestBonferroni:
    def test_threshold_comparison(self):
        out = bonferroni([0.01, 0.03, 0.02, 0.5], delta=0.1)
        assert out.certified == (0, 2)
        assert out.threshold_used == pytest.approx(0.025)

    def test_threshold_for_256(self):
        out = bonferroni([1.0] * 256, delta=0.1)
        assert out.threshold_used == pytest.approx(0.000390625)

    def test_all_ones_certifies_nothing(self):
        assert bonferroni([1.0, 1.0, 1.0], delta=0.5).certified == ()

    def test_strict_inequality(self):
        # p exactly at the threshold is NOT certified
        assert bonferroni([0.05, 0.9], delta=0.1).certified == ()

    def test_rejects_bad_p(self):
        with pytest.raises(ValidationError):
            bonferroni([0.5, 1.5], delta=0.1)

    @given(
        ps=st.lists(st.floats(0, 1), min_size=1, max_size=20),
        delta=st.floats(0.01, 0.99),
        drop=st.floats(0, 1),
        pos=st.integers(0, 19),
    )
    @settings(max_examples=200)
    def test_monotone_in_p(self, ps, delta, drop, pos):
        """Decreasing any p-value never shrinks the certified set."""
        pos = pos % len(ps)
        lowered = list(ps)
        lowered[pos] = ps[pos] * drop
        before = set(bonferroni(ps, delta).certified)
        after = set(bonferroni(lowered, delta).certified)
        assert before <= after

    @given(
        ps=st.lists(st.floats(0, 1), min_size=2, max_size=12),
        seed=st.integers(0, 10**6),
    )
    @settings(max_examples=200)
    def test_reorder_invariance(self, ps, seed):
        rng = np.random.default_rng(seed)
        perm = rng.permutation(len(ps))
        base = set(bonferroni(ps, 0.2).certified)
        shuffled = bonferroni([ps[i] for i in perm], 0.2).certified
        assert {int(perm[j]) for j in shuffled} == base


def brute_force_fst(p_values, ordering, delta):
    """Reference: maximal prefix of the ordering with every p <= delta."""
    best = []
    for k in range(len(ordering) + 1):
        prefix = ordering[:k]
        if all(p_values[i] <= delta for i in prefix):
            best = prefix
    return tuple(best)


class TestFixedSequence:
    def test_stops_at_first_failure(self):
        out = fixed_sequence_test([0.001, 0.004, 0.2, 0.0001], ordering=[0, 1, 2, 3], delta=0.05)
        assert out.certified == (0, 1)

    def test_first_failure_gives_empty(self):
        out = fixed_sequence_test([0.2, 0.001], ordering=[0, 1], delta=0.05)
        assert out.certified == ()

    def test_all_pass(self):
        out = fixed_sequence_test([0.01, 0.02, 0.03], ordering=[2, 0, 1], delta=0.05)
        assert out.certified == (2, 0, 1)

    def test_non_strict_at_delta(self):
        # p exactly equal to delta passes (<=)
        out = fixed_sequence_test([0.05, 0.9], ordering=[0, 1], delta=0.05)
        assert out.certified == (0,)

    def test_bad_permutation(self):
        with pytest.raises(ValidationError, match="permutation"):
            fixed_sequence_test([0.1, 0.2], ordering=[0, 0], delta=0.05)
        with pytest.raises(ValidationError, match="permutation"):
            fixed_sequence_test([0.1, 0.2], ordering=[0], delta=0.05)

    def test_exhaustive_against_brute_force(self):
        """All p-vectors over {0.01, 0.05, 0.2}^4, all 24 orderings."""
        delta = 0.05
        orderings = list(itertools.permutations(range(4)))
        for ps in itertools.product([0.01, 0.05, 0.2], repeat=4):
            for ordering in orderings:
                got = fixed_sequence_test(list(ps), ordering, delta).certified
                assert got == brute_force_fst(ps, list(ordering), delta)

    @given(
        ps=st.lists(st.floats(0, 1), min_size=1, max_size=10),
        delta=st.floats(0.01, 0.99),
        seed=st.integers(0, 10**6),
    )
    @settings(max_examples=200)
    def test_output_is_prefix(self, ps, delta, seed):
        rng = np.random.default_rng(seed)
        ordering = [int(i) for i in rng.permutation(len(ps))]
        out = fixed_sequence_test(ps, ordering, delta)
        assert list(out.certified) == ordering[: len(out.certified)]
