"""Compare the jitted kernels against the pure-numpy fallback.

Each backend runs in its own subprocess (selected via BEAMSEL_BACKEND) so
imports, dispatch, and caching behave exactly as they do for users. Run:

    python benchmarks/bench_kernels.py

First numba use in a fresh environment pays a one-time compilation cost;
it is reported separately and cached on disk afterwards.
"""

import json
import os
import subprocess
import sys
import time

import numpy as np

WORKLOADS = ("resp_update", "count_update", "mlp_epochs", "vb_fit")


def _time(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def run_worker() -> None:
    from beamsel import _kernels as kernels
    from beamsel.baselines import MlpHyperparams, _init_params
    from beamsel.pmf import CpdPmfModel, sample_indices
    from beamsel.vb import VbHyperparams, fit_indices

    rng = np.random.default_rng(0)
    out = {"backend": kernels.kernel_backend()}

    # responsibility update: benchmark-scale shapes
    t, r = 20_000, 30
    dims = (80, 60, 64, 4)
    idx = [rng.integers(0, d, t) for d in dims]
    elnlam = rng.normal(size=r)
    elns = [rng.normal(size=(d, r)) for d in dims]
    args = (idx[0], idx[1], idx[2], idx[3], elnlam, *elns)
    compile_start = time.perf_counter()
    kernels.resp_update(*args)
    out["resp_update_first_call"] = time.perf_counter() - compile_start
    out["resp_update"] = _time(lambda: kernels.resp_update(*args), 20)

    resp = rng.dirichlet(np.ones(r), size=t)
    kernels.count_update(idx[0], resp, dims[0])
    out["count_update"] = _time(lambda: kernels.count_update(idx[0], resp, dims[0]), 20)

    # MLP epoch loop at benchmark scale (1600 samples, 256 classes)
    hyper = MlpHyperparams(rng_seed=0)
    n = 1600
    x = rng.normal(size=(n, 3))
    labels = rng.integers(0, 256, n)
    sizes = (3,) + hyper.hidden + (256,)

    def train(epochs):
        init_rng = np.random.default_rng(0)
        w, b = _init_params(sizes, init_rng)
        perms = np.stack([init_rng.permutation(n) for _ in range(epochs)]).astype(np.int64)
        params = tuple(np.ascontiguousarray(a) for pair in zip(w, b) for a in pair)
        mom_m = tuple(np.zeros_like(a) for a in params)
        mom_v = tuple(np.zeros_like(a) for a in params)
        kernels.mlp_epochs(x, labels, perms, params, mom_m, mom_v, 0,
                           hyper.learning_rate, hyper.beta1, hyper.beta2,
                           hyper.epsilon, hyper.batch_size)

    compile_start = time.perf_counter()
    train(1)
    out["mlp_epochs_first_call"] = time.perf_counter() - compile_start
    reps = 3 if out["backend"] == "numba" else 1
    out["mlp_epochs"] = _time(lambda: train(20), reps) / 20.0  # per epoch

    # end-to-end variational fit on synthetic index data
    model = CpdPmfModel.random((20, 20, 64, 4), 4, rng)
    data = sample_indices(model, 2000, rng)
    out["vb_fit"] = _time(
        lambda: fit_indices(data, model.dims, VbHyperparams(r_init=10, rng_seed=0)), 2)

    print(json.dumps(out))


def main() -> int:
    rows = {}
    for backend in ("numba", "numpy"):
        env = dict(os.environ, BEAMSEL_BACKEND=backend)
        proc = subprocess.run([sys.executable, os.path.abspath(__file__), "--worker"],
                              env=env, capture_output=True, text=True, check=True)
        rows[backend] = json.loads(proc.stdout.strip().splitlines()[-1])
        assert rows[backend]["backend"] == backend, "backend selection failed"

    print(f"{'kernel':<14} {'numba':>12} {'numpy':>12} {'speedup':>9}")
    for name in WORKLOADS:
        nb, np_ = rows["numba"][name], rows["numpy"][name]
        print(f"{name:<14} {nb * 1e3:>10.2f}ms {np_ * 1e3:>10.2f}ms {np_ / nb:>8.1f}x")
    print(f"\nnumba first-call (compile+run): "
          f"resp_update {rows['numba']['resp_update_first_call']:.2f}s, "
          f"mlp_epochs {rows['numba']['mlp_epochs_first_call']:.2f}s "
          f"(cached on disk afterwards)")
    return 0


if __name__ == "__main__":
    if "--worker" in sys.argv:
        run_worker()
    else:
        sys.exit(main())
