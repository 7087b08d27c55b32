import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from di_lab.prob_core import (Dist, SeqDist, dp_distance, entropy, fidelity, joint_pmf, kappa,
                              mixed_12_distance, purified_distance, seq_fidelity, seq_log_prob,
                              spherise, spherised_seq_distance, tv_distance)


def probs(k):
    return st.lists(st.floats(0, 1), min_size=k, max_size=k).filter(lambda v: sum(v) > 1e-3).map(
        lambda v: np.array(v) / math.fsum(v))


def test_entropy_examples():
    assert entropy([0.5, 0.5]) == 1.0
    assert entropy([1.0, 0.0]) == 0.0
    ref = -(mpmath.mpf("0.25") * mpmath.log(0.25, 2) + mpmath.mpf("0.75") * mpmath.log(0.75, 2))
    assert abs(entropy([0.25, 0.75]) - float(ref)) < 1e-15
    assert abs(entropy([0.25, 0.75], base="e") - float(ref) * math.log(2)) < 1e-15


def test_distance_examples():
    assert abs(tv_distance([0.3, 0.7], [0.7, 0.3]) - 0.4) < 1e-15
    assert tv_distance([1, 0, 0], [0, 0.5, 0.5]) == 1.0
    assert fidelity([1, 0], [0, 1]) == 0.0
    F = float(mpmath.sqrt(0.125) + mpmath.sqrt(0.375))
    assert abs(fidelity([0.5, 0.5], [0.25, 0.75]) - F) < 1e-15
    assert abs(purified_distance([0.5, 0.5], [0.25, 0.75]) - math.sqrt(1 - F * F)) < 1e-12
    assert purified_distance([1, 0], [0, 1]) == 1.0
    s = spherise([0.25, 0.75]).coords
    assert s[0] == 0.5 and abs(s[1] - math.sqrt(0.75)) < 1e-16


def test_dist_validation():
    with pytest.raises(ValueError):
        Dist([0.5, 0.6])
    with pytest.raises(ValueError):
        Dist([-0.1, 1.1])
    with pytest.raises(ValueError):
        Dist([])
    with pytest.raises(ValueError):
        tv_distance([0.5, 0.5], [1.0, 0.0, 0.0])
    d = Dist([0.5, 0.5 + 5e-11])
    assert math.fsum(d.probs) == pytest.approx(1.0, abs=1e-15)
    assert Dist([0.2, 0.8]) == Dist([0.2, 0.8]) and hash(Dist([0.2, 0.8])) == hash(Dist([0.2, 0.8]))


def bern(xs):
    return SeqDist([[1 - x, x] for x in xs])


def test_sequence_distances():
    a, b = bern([0.2, 0.5, 0.9]), bern([0.9, 0.5, 0.2])
    assert mixed_12_distance(a, a) == 0.0
    assert abs(mixed_12_distance(a, b) - math.sqrt(0.98)) < 1e-15
    # brute-force per-letter fidelities
    Fs = [math.sqrt((1 - x) * (1 - y)) + math.sqrt(x * y) for x, y in zip([0.2, 0.5, 0.9], [0.9, 0.5, 0.2])]
    assert abs(dp_distance(a, b) - math.sqrt(sum(1 - f * f for f in Fs))) < 1e-14
    assert abs(seq_fidelity(a, b) - np.prod(Fs)) < 1e-15
    assert spherised_seq_distance(SeqDist([[1, 0]]), SeqDist([[0, 1]])) == pytest.approx(math.sqrt(2), abs=1e-15)
    with pytest.raises(ValueError):
        mixed_12_distance(bern([0.1]), bern([0.1, 0.2]))


def test_seq_log_prob():
    u = bern([0.5, 0.5, 0.5])
    for y in ([0, 0, 0], [1, 0, 1]):
        assert seq_log_prob(u, y) == -3.0
    assert seq_log_prob(bern([0.25]), [1]) == -2.0
    assert seq_log_prob(bern([0.0, 0.5]), [1, 0]) == float("-inf")
    with pytest.raises(ValueError):
        seq_log_prob(u, [0, 1])
    with pytest.raises(ValueError):
        seq_log_prob(u, [0, 1, 2])


def test_joint_pmf_product():
    s = bern([0.25, 0.6])
    p = joint_pmf(s)
    assert p.shape == (4,)
    assert abs(p[2] - 0.25 * 0.4) < 1e-16 and math.fsum(p) == pytest.approx(1.0)


def test_kappa():
    assert kappa(2) == math.log2(3) ** 2
    assert kappa(8) == 9.0


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 8).flatmap(lambda k: st.tuples(probs(k), probs(k))))
def test_fuchs_van_de_graaf_and_sandwich(pq):
    p, q = pq
    tv, F, pd = tv_distance(p, q), fidelity(p, q), purified_distance(p, q)
    sph = math.sqrt(math.fsum((np.sqrt(p) - np.sqrt(q)) ** 2))
    assert 1 - F <= tv + 1e-12
    assert tv <= pd + 1e-12
    assert pd <= sph + 1e-12 <= math.sqrt(2) * pd + 2e-12
    assert 0 <= entropy(p) <= math.log2(len(p)) + 1e-12
