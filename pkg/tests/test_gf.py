import itertools

import numpy as np
import pytest

from di_lab import gf


def min_dist(words):
    W = np.asarray(words)
    return min(int((a != b).sum()) for a, b in itertools.combinations(W, 2))


def test_lexicode_examples():
    c = gf.lexicode(2, 4, 2)
    assert len(c) == 8 and min_dist(c) >= 2
    # brute force: no binary length-4 code with distance 2 has more than 8 words
    words = list(itertools.product(range(2), repeat=4))
    best = 0
    for mask in range(1 << 16):
        S = [w for i, w in enumerate(words) if mask >> i & 1]
        if len(S) > best and all(sum(x != y for x, y in zip(a, b)) >= 2 for a, b in itertools.combinations(S, 2)):
            best = len(S)
    assert best == 8
    assert gf.lexicode(3, 1, 1).tolist() == [[0], [1], [2]]


def test_gv_linear_example():
    code = gf.gv_linear_code(5, 6, 3, seed=0)
    assert code.dim >= 2 and code.size >= 25
    assert gf.min_weight_enumerated(code) >= 3
    words = code.all_words()
    assert len({tuple(w) for w in words}) == code.size


@pytest.mark.parametrize("p,n,d", [(2, 20, 5), (3, 16, 2), (3, 12, 4), (2, 10, 1)])
def test_linear_codes_reach_distance(p, n, d):
    code = gf.gv_linear_code(p, n, d, seed=1)
    if code.size <= 1 << 16:
        assert gf.min_weight_enumerated(code) >= d


def test_random_code_audit_sampled():
    code = gf.random_linear_code(3, 40, 5, seed=0)
    assert code.certification.startswith(("enumeration", "sampled"))


def test_field_helpers():
    assert gf.largest_prime_le(10) == 7 and gf.largest_prime_le(4) == 3
    assert gf.hamming_volume(2, 4, 1) == 5
    assert gf.min_distance_target(20, 0.1) == 2
    H = np.array([[1, 1, 1, 1]])
    N = gf.nullspace_mod(H, 3)
    assert N.shape == (3, 4) and not ((H @ N.T) % 3).any()
    with pytest.raises(ValueError):
        gf.gv_linear_code(4, 5, 2)


def test_linear_json_roundtrip():
    code = gf.gv_linear_code(3, 8, 3, seed=2)
    back = gf.LinearCode.from_json(code.to_json())
    assert np.array_equal(back.G, code.G) and back.p == 3
