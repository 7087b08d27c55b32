import os
import subprocess
import sys

import numpy as np
import pytest

from di_lab import backend, gf
from di_lab.channels import BernoulliChannel
from di_lab.codec import assemble_code

needs_cython = pytest.mark.skipif("cython" not in backend.available(), reason="extension not built")


@needs_cython
def test_kernels_agree():
    cy, py = backend.get("cython"), backend.get("python")
    code = assemble_code(BernoulliChannel(), 8, alpha=0.2, t=0.25, delta=1.0)
    cdf, logp = code.cdf(), code.logp()
    w, v = code.words[0], code.words[3]
    d = code.decoder(v)
    args = (cdf, logp, np.ascontiguousarray(w), np.ascontiguousarray(v), d.lo, d.hi, 5, 5000)
    assert cy.mc_accept_count(*args) == py.mc_accept_count(*args)

    rng = np.random.default_rng(1)
    pts = np.ascontiguousarray(np.sort(rng.random((2000, 2)), axis=0))
    assert np.array_equal(cy.greedy_pack(pts, 0.02 ** 2, 0.02 * (1 + 1e-9)),
                          py.greedy_pack(pts, 0.02 ** 2, 0.02 * (1 + 1e-9)))
    pts3 = np.ascontiguousarray(rng.random((400, 3)))
    assert np.array_equal(cy.greedy_pack(pts3, 0.2 ** 2, 0.0), py.greedy_pack(pts3, 0.2 ** 2, 0.0))

    pos, sh = gf._ball_patterns(3, 6, 3)
    assert np.array_equal(cy.lexicode(3, 6, pos, sh), py.lexicode(3, 6, pos, sh))

    words = np.ascontiguousarray(code.words[:100])
    sq = np.sqrt(code.letter_dists)
    cost = np.ascontiguousarray(((sq[:, None, :] - sq[None, :, :]) ** 2).sum(axis=2))
    assert cy.min_pair_cost(words, cost) == pytest.approx(py.min_pair_cost(words, cost), rel=1e-12)


def test_env_forces_fallback():
    env = dict(os.environ, DI_LAB_BACKEND="python")
    out = subprocess.run([sys.executable, "-c", "from di_lab import backend; print(backend.NAME)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


def test_unknown_backend():
    with pytest.raises(ValueError):
        backend.get("fortran")
