"""Backend equivalence: the active kernels against the numpy references."""

import os
import subprocess
import sys

import numpy as np

from beamsel import _kernels as kernels


def _random_vb_inputs(rng, t=300, r=7, dims=(9, 8, 11, 4)):
    idx = [rng.integers(0, d, t) for d in dims]
    elnlam = rng.normal(size=r)
    elns = [rng.normal(size=(d, r)) for d in dims]
    return idx, elnlam, elns


def test_resp_update_matches_numpy(rng):
    idx, elnlam, elns = _random_vb_inputs(rng)
    active = kernels.resp_update(idx[0], idx[1], idx[2], idx[3], elnlam, *elns)
    reference = kernels.resp_update_numpy(idx[0], idx[1], idx[2], idx[3], elnlam, *elns)
    np.testing.assert_allclose(active, reference, rtol=1e-12, atol=1e-15)
    np.testing.assert_allclose(active.sum(axis=1), 1.0, atol=1e-12)


def test_count_update_matches_numpy(rng):
    idx, _, _ = _random_vb_inputs(rng)
    resp = rng.random((300, 7))
    resp /= resp.sum(axis=1, keepdims=True)
    active = kernels.count_update(idx[0], resp, 9)
    reference = kernels.count_update_numpy(idx[0], resp, 9)
    np.testing.assert_allclose(active, reference, rtol=1e-13, atol=1e-13)


def test_count_update_empty_input():
    resp = np.zeros((0, 3))
    idx = np.zeros(0, dtype=np.int64)
    out = kernels.count_update(idx, resp, 5)
    assert out.shape == (5, 3)
    assert np.all(out == 0.0)


def test_mlp_kernel_matches_generic_loop(rng):
    # same init and permutations through both training paths
    from beamsel.baselines import MlpHyperparams, _init_params, _train_generic

    t, n_classes = 40, 6
    x = rng.normal(size=(t, 3))
    labels = rng.integers(0, n_classes, t)
    hyper = MlpHyperparams(hidden=(4, 5, 6), epochs=3, batch_size=8, rng_seed=0)
    layer_sizes = (3, 4, 5, 6, n_classes)

    init_rng = np.random.default_rng(0)
    w_ref, b_ref = _init_params(layer_sizes, init_rng)
    perms = np.stack([init_rng.permutation(t) for _ in range(hyper.epochs)]).astype(np.int64)
    loss_ref = _train_generic(x, labels, perms, w_ref, b_ref, hyper)

    init_rng = np.random.default_rng(0)
    w_k, b_k = _init_params(layer_sizes, init_rng)
    params = tuple(np.ascontiguousarray(a) for pair in zip(w_k, b_k) for a in pair)
    mom_m = tuple(np.zeros_like(a) for a in params)
    mom_v = tuple(np.zeros_like(a) for a in params)
    loss_k, _ = kernels.mlp_epochs(np.ascontiguousarray(x), labels, perms, params,
                                   mom_m, mom_v, 0, hyper.learning_rate, hyper.beta1,
                                   hyper.beta2, hyper.epsilon, hyper.batch_size)

    np.testing.assert_allclose(loss_k, loss_ref, rtol=1e-9)
    for got, want in zip(params[0::2], w_ref):
        np.testing.assert_allclose(got, want, rtol=1e-8, atol=1e-10)
    for got, want in zip(params[1::2], b_ref):
        np.testing.assert_allclose(got, want, rtol=1e-8, atol=1e-10)


def test_env_flag_selects_numpy_backend():
    env = dict(os.environ, BEAMSEL_BACKEND="numpy")
    out = subprocess.run(
        [sys.executable, "-c", "import beamsel; print(beamsel.kernel_backend())"],
        capture_output=True, text=True, env=env, check=True,
    )
    assert out.stdout.strip() == "numpy"


def test_invalid_backend_flag_rejected():
    env = dict(os.environ, BEAMSEL_BACKEND="cuda")
    out = subprocess.run(
        [sys.executable, "-c", "import beamsel"],
        capture_output=True, text=True, env=env,
    )
    assert out.returncode != 0
    assert "BEAMSEL_BACKEND" in out.stderr
