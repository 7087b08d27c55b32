import math

import numpy as np
import pytest
from scipy.stats import binom

from di_lab import simulator
from di_lab.channels import ArcChannel, BernoulliChannel, DMCChannel
from di_lab.codec import assemble_code


@pytest.fixture(scope="module")
def small_code():
    return assemble_code(BernoulliChannel(), 6, alpha=0.2, t=0.2, delta=1.0)


def test_reproducible(small_code):
    a = simulator.estimate_errors(small_code, trials=2000, seed=7, pair_budget=20)
    b = simulator.estimate_errors(small_code, trials=2000, seed=7, pair_budget=20)
    assert a.to_json() == b.to_json()
    c = simulator.estimate_errors(small_code, trials=2000, seed=8, pair_budget=20)
    assert c.to_json() != a.to_json()


def test_thread_count_does_not_matter(small_code, monkeypatch):
    monkeypatch.setenv("DI_LAB_THREADS", "1")
    a = simulator.estimate_errors(small_code, trials=1000, seed=3, pair_budget=15)
    monkeypatch.setenv("DI_LAB_THREADS", "4")
    b = simulator.estimate_errors(small_code, trials=1000, seed=3, pair_budget=15)
    assert a.to_json() == b.to_json()


def test_identity_dmc_errors_zero():
    code = assemble_code(DMCChannel([[1, 0], [0, 1]]), 6, alpha=0.2, t=0.3, delta=1e-9)
    est = simulator.estimate_errors(code, trials=1000, seed=0, pair_budget=50)
    assert est.lambda1_hat == 0.0 and est.lambda2_hat == 0.0
    assert simulator.exact_errors_small(code) == (0.0, 0.0)


def test_mc_matches_exact(small_code):
    W = small_code.words
    trials = 20_000
    for tx, dec in ((W[0], W[0]), (W[1], W[0]), (W[2], W[5])):
        p = simulator.exact_acceptance(small_code, tx, dec)
        k = simulator.mc_acceptance(small_code, tx, dec, 99, trials)
        lo, hi = binom.ppf([1e-6, 1 - 1e-6], trials, p)
        assert lo <= k <= hi


def test_exact_matrix_diagonal(small_code):
    A = simulator.exact_acceptance_matrix(small_code)
    for j in range(3):
        assert A[j, j] == simulator.exact_acceptance(small_code, small_code.words[j], small_code.words[j])
    assert np.all((A >= 0) & (A <= 1))


def test_clopper_pearson():
    assert simulator.clopper_pearson(0, 10) == (0.0, pytest.approx(1 - 0.025 ** 0.1))
    lo, hi = simulator.clopper_pearson(5, 10)
    assert lo == pytest.approx(0.187086, abs=1e-6) and hi == pytest.approx(0.812914, abs=1e-6)
    assert simulator.clopper_pearson(10, 10)[1] == 1.0


def test_min_trials(small_code):
    with pytest.raises(ValueError):
        simulator.estimate_errors(small_code, trials=99)


def test_scaling_record_rates():
    r = simulator.ScalingRecord(16, 2 ** 32)
    assert r.rate_exp == 2.0 and r.rate_nlogn == 0.5 and r.rate_nloglogn == 1.0
    assert simulator.ScalingRecord(16, None).rate_exp is None
    assert simulator.csv_row(r) == [16, 2 ** 32, "0.5", "2.0", "", "", "", "", 0]


def test_scaling_sweep_order():
    with pytest.raises(ValueError):
        simulator.scaling_sweep(BernoulliChannel(), [8, 4])
    recs = simulator.scaling_sweep(BernoulliChannel(), [4, 8], error_targets=(1, 1), trials=200,
                                   pair_budget=5)
    assert [r.n for r in recs] == [4, 8] and all(r.targets_met for r in recs)


def test_arc_estimate():
    code = assemble_code(ArcChannel(0.25), 50, t=0.2)
    est = simulator.estimate_errors(code, trials=100, pair_budget=10)
    assert est.lambda1_hat == 0.0 and est.method == "exact-support"
    assert est.lambda2_hat <= code.meta["lambda2_certified"] + 1e-12


def test_lemma_audit(small_code):
    audit = simulator.lemma_audit(small_code)
    assert audit and audit.pairs == small_code.size * (small_code.size - 1)


def test_superactivation_swap():
    a = simulator.superactivation_demo(D=4, n_list=(4,))
    b = simulator.superactivation_demo(D=4, n_list=(4,), swap=True)
    assert a["dimension"]["F"] == b["dimension"]["G"]
    assert a["comparison"][0]["N_FxG"] == b["comparison"][0]["N_FxG"]
    with pytest.raises(ValueError):
        simulator.superactivation_demo(D=7)
