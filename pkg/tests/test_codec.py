import itertools
import json
import math

import mpmath
import numpy as np
import pytest

from di_lab import codec
from di_lab.channels import ArcChannel, BernoulliChannel, DMCChannel
from di_lab.prob_core import SeqDist, joint_pmf, kappa, seq_log_prob


def sph_d2(rows, u, v):
    sq = np.sqrt(rows)
    return math.fsum(((sq[u] - sq[v]) ** 2).ravel())


def test_net_example():
    net = codec.build_alphabet_net(BernoulliChannel(), 16, 0.25)
    assert len(net) >= 2
    sq = np.sqrt(net.dists)
    for i, j in itertools.combinations(range(len(net)), 2):
        assert math.sqrt(((sq[i] - sq[j]) ** 2).sum()) >= 0.5 - 1e-12


def test_net_dmc_and_monotone():
    dmc = DMCChannel([[0.9, 0.1], [0.1, 0.9], [0.5, 0.5], [0.9, 0.1]])
    for n in (4, 64, 1024):
        assert len(codec.build_alphabet_net(dmc, n, 0.1)) <= 3
    sizes = [len(codec.build_alphabet_net(BernoulliChannel(), n, 0.25)) for n in (16, 64, 256)]
    assert sizes == sorted(sizes)


def test_net_errors():
    with pytest.raises(ValueError):
        codec.build_alphabet_net(BernoulliChannel(), 16, 0.6)
    with pytest.raises(ValueError):
        codec.build_alphabet_net(ArcChannel(0.3), 16, 0.2)


def test_outer_code_examples():
    c = codec.build_outer_code(2, 7, 3 / 7, "greedy")
    assert c.size == 16 and c.d_target == 3          # Hamming(7,4)
    c = codec.build_outer_code(3, 1, 1e-9, "greedy")
    assert c.words.tolist() == [[0], [1], [2]]
    c = codec.build_outer_code(5, 6, 0.5, "gv_linear")
    assert c.k == 5 and c.size >= 25 and c.d_target == 3
    assert c.linear.certification in ("construction", "enumeration")
    with pytest.raises(ValueError):
        codec.build_outer_code(2, 8, 0.6, "greedy")          # t >= 1 - 1/k
    # greedy meets the counting floor
    c = codec.build_outer_code(4, 6, 0.3, "greedy")
    assert c.size >= math.floor(2.0 ** -6 * 4 ** (6 * 0.7))


def test_outer_code_prime_trim():
    c = codec.build_outer_code(6, 30, 0.2, "gv_linear")
    assert c.k == 5


def test_assemble_bernoulli_example():
    code = codec.assemble_code(BernoulliChannel(), 16, alpha=0.25, t=0.25, delta=1.0)
    assert code.size >= 2
    rows = code.letter_dists
    floor = 0.25 * 16 ** 0.5
    _, W = code.sample_codewords(1, 400)
    W = np.asarray(W)
    sq = np.sqrt(rows)[W]                               # (m, n, |Y|)
    iu = np.triu_indices(len(W), 1)
    ham = (W[:, None, :] != W[None, :, :]).sum(axis=2)[iu]
    d2 = ((sq[:, None] - sq[None, :]) ** 2).sum(axis=(2, 3))[iu]
    assert ham.min() >= 4
    assert d2.min() >= floor - 1e-12
    H = [code.word_entropy(w) for w in W]
    assert max(H) - min(H) <= 1.0
    assert code.meta["certificate"]["pair_sq_sum_lower"] >= floor - 1e-12


def test_entropy_bin_width_explicit():
    code = codec.assemble_code(BernoulliChannel(), 8, alpha=0.2, t=0.25, delta=1.0)
    H = [code.word_entropy(w) for w in code.words]
    assert max(H) - min(H) <= 1.0
    s = code.bin_index
    assert all(s - 1 <= h < s or (s == code.meta["bins_total"] and h <= s) for h in H)


def test_identity_dmc_code():
    code = codec.assemble_code(DMCChannel([[1, 0], [0, 1]]), 6, alpha=0.2, t=0.3, delta=1e-9)
    W = code.words
    assert len({tuple(w) for w in W}) == len(W)
    assert min((a != b).sum() for a, b in itertools.combinations(W, 2)) >= math.ceil(0.3 * 6)
    dec = code.decoder(W[0])
    s = code.seqdist(W[0])
    sent = tuple(int(np.argmax(code.letter_dists[a])) for a in W[0])   # noiseless output
    for y in itertools.product(range(2), repeat=6):
        assert codec.typicality_test(dec, s, y) == (y == sent)


def test_arc_code():
    code = codec.assemble_code(ArcChannel(0.5), 20, t=0.2)
    assert code.decoder_kind == "arc_support"
    assert code.meta["grid_size"] == max(1, math.floor(20 * 0.04))
    code = codec.assemble_code(ArcChannel(0.25), 50, t=0.2)
    assert code.meta["grid_size"] == 2 and code.meta["lambda2_certified"] <= code.meta["lambda2_design"]


def test_degenerate_channel_gives_single_codeword():
    code = codec.assemble_code(DMCChannel([[0.3, 0.7], [0.3, 0.7]]), 8, alpha=0.2, t=0.1)
    assert code.size == 1


def test_typicality_examples():
    u = SeqDist([[0.5, 0.5]] * 4)
    dec = codec.TypicalityDecoder((0,) * 4, 1e-9, 4, 4.0)
    assert dec.lo == -4.0 - 1e-9 * 2 and dec.hi == -4.0 + 1e-9 * 2
    assert all(codec.typicality_test(dec, u, y) for y in itertools.product(range(2), repeat=4))
    pm = SeqDist([[1.0, 0.0], [0.0, 1.0]])
    dec = codec.TypicalityDecoder((0, 1), 0.5, 2, 0.0)
    assert codec.typicality_test(dec, pm, [0, 1])
    assert not codec.typicality_test(dec, pm, [1, 1])
    with pytest.raises(ValueError):
        codec.typicality_test(dec, pm, [0, 1, 0])


def test_typicality_lemma1_bernoulli():
    n, delta = 8, 1.0
    s = SeqDist([[0.75, 0.25]] * n)
    H = n * -(0.75 * math.log2(0.75) + 0.25 * math.log2(0.25))
    dec = codec.TypicalityDecoder((0,) * n, delta, n, H)
    pmf = joint_pmf(s)
    acc = math.fsum(p for p, y in zip(pmf, itertools.product(range(2), repeat=n))
                    if codec.typicality_test(dec, s, y))
    assert acc >= 1 - 2 * math.exp(-delta ** 2 / (36 * kappa(2)))


def test_lemma2_bound():
    K = kappa(2)
    assert codec.lemma2_bound(3.0, 3.0, 16, 1.0, 0.0, 2) == 2 * math.exp(-1 / (36 * K))
    mpmath.mp.dps = 40
    eps = mpmath.mpf(2) ** -12
    ref = 2 * mpmath.exp(-mpmath.mpf(1) / (36 * mpmath.log(3, 2) ** 2)) + eps * (1 + mpmath.mpf(2) ** 8)
    assert abs(codec.lemma2_bound(5.0, 5.0, 16, 1.0, float(eps), 2) - float(ref)) < 1e-14
    vals = [codec.lemma2_bound(4.0, 4.0, 16, d, 1e-3, 2) for d in (0.5, 1, 2, 3)]
    # second term grows with delta sqrt(n)
    assert vals[-1] > vals[-2] > vals[1]


def test_default_delta():
    d = codec.default_delta(1024, 2)
    assert 2 * math.exp(-d * d / (36 * kappa(2))) == pytest.approx(0.05)
    assert codec.default_delta(4, 2) == 2.0          # clipped to the window
    with pytest.raises(ValueError):
        codec.assemble_code(BernoulliChannel(), 4, delta=3.0)


@pytest.mark.parametrize("n,explicit", [(8, True), (24, False)])
def test_code_json_roundtrip(n, explicit):
    code = codec.assemble_code(BernoulliChannel(), n, alpha=0.2, t=0.2, delta=1.25)
    assert code.explicit == explicit
    text = json.dumps(code.to_json())
    back = codec.DICode.from_json(json.loads(text))
    assert json.dumps(back.to_json()) == text
    assert back.size == code.size
    if explicit:
        assert np.array_equal(back.words, code.words)
