"""Hot numeric kernels with two interchangeable backends.

The inference and training inner loops (posterior responsibility updates,
count accumulation, MLP epoch training) dominate benchmark runtime. Each
kernel exists as a plain-numpy implementation and a loop implementation
that numba compiles. The active backend is chosen once at import time:

    BEAMSEL_BACKEND=numba   (default) jit-compile the loop kernels
    BEAMSEL_BACKEND=numpy   force the pure-numpy fallback

``beamsel.kernel_backend()`` reports which one is live. Both backends are
kept importable so the benchmark in benchmarks/bench_kernels.py and the
equivalence tests can run them side by side. All kernels are sequential;
results are deterministic for fixed inputs within a backend.
"""

import math
import os

import numpy as np

_requested = os.environ.get("BEAMSEL_BACKEND", "numba").strip().lower()
if _requested not in ("numba", "numpy"):
    raise ValueError(
        f"BEAMSEL_BACKEND must be 'numba' or 'numpy', got {_requested!r}"
    )

_have_numba = False
if _requested == "numba":
    try:
        from numba import njit

        _have_numba = True
    except ImportError:  # pragma: no cover - numba is a declared dependency
        _have_numba = False

BACKEND = "numba" if _have_numba else "numpy"


def kernel_backend() -> str:
    """Name of the active kernel backend ('numba' or 'numpy')."""
    return BACKEND


# ---------------------------------------------------------------------------
# responsibility update: r[t, r] ∝ exp(elnlam[r] + sum_n elnA_n[idx_n[t], r])
# ---------------------------------------------------------------------------

def resp_update_numpy(ix, iy, if_, iw, elnlam, ex, ey, ef, ew):
    """Row-normalized responsibilities, log domain with max subtraction."""
    logp = elnlam[np.newaxis, :] + ex[ix] + ey[iy] + ef[if_] + ew[iw]
    logp -= logp.max(axis=1, keepdims=True)
    np.exp(logp, out=logp)
    logp /= logp.sum(axis=1, keepdims=True)
    return logp


def _resp_update_loop(ix, iy, if_, iw, elnlam, ex, ey, ef, ew):
    n_samples = ix.shape[0]
    n_comp = elnlam.shape[0]
    resp = np.empty((n_samples, n_comp))
    for t in range(n_samples):
        m = -np.inf
        for r in range(n_comp):
            v = elnlam[r] + ex[ix[t], r] + ey[iy[t], r] + ef[if_[t], r] + ew[iw[t], r]
            resp[t, r] = v
            if v > m:
                m = v
        s = 0.0
        for r in range(n_comp):
            e = math.exp(resp[t, r] - m)
            resp[t, r] = e
            s += e
        for r in range(n_comp):
            resp[t, r] /= s
    return resp


# ---------------------------------------------------------------------------
# count accumulation: out[i, r] = sum over samples t with idx[t] == i of resp[t, r]
# ---------------------------------------------------------------------------

def count_update_numpy(idx, resp, n_bins):
    out = np.zeros((n_bins, resp.shape[1]))
    np.add.at(out, idx, resp)
    return out


def _count_update_loop(idx, resp, n_bins):
    n_samples, n_comp = resp.shape
    out = np.zeros((n_bins, n_comp))
    for t in range(n_samples):
        i = idx[t]
        for r in range(n_comp):
            out[i, r] += resp[t, r]
    return out


# ---------------------------------------------------------------------------
# MLP epoch loop (fixed three-hidden-layer architecture)
# ---------------------------------------------------------------------------

def _adam_apply(p, g, m, v, lr, beta1, beta2, eps, c1, c2):
    # p, g, m, v are flat views of one parameter tensor
    for i in range(p.size):
        gi = g[i]
        m[i] = beta1 * m[i] + (1.0 - beta1) * gi
        v[i] = beta2 * v[i] + (1.0 - beta2) * gi * gi
        p[i] -= lr * (m[i] * c1) / (math.sqrt(v[i] * c2) + eps)


def _mlp_epochs_loop(x, labels, perms, params, mom_m, mom_v, step0,
                     lr, beta1, beta2, eps, batch_size):
    """Train for perms.shape[0] epochs; mutates params/moments in place.

    Returns (per-epoch mean cross-entropy, final Adam step count).
    """
    w1, b1, w2, b2, w3, b3, w4, b4 = params
    mw1, mb1, mw2, mb2, mw3, mb3, mw4, mb4 = mom_m
    vw1, vb1, vw2, vb2, vw3, vb3, vw4, vb4 = mom_v
    n_samples = x.shape[0]
    n_epochs = perms.shape[0]
    losses = np.zeros(n_epochs)
    step = step0
    for ep in range(n_epochs):
        perm = perms[ep]
        total = 0.0
        for start in range(0, n_samples, batch_size):
            stop = min(start + batch_size, n_samples)
            xb = x[perm[start:stop]]
            yb = labels[perm[start:stop]]
            nb = stop - start

            h1 = 1.0 / (1.0 + np.exp(-(np.dot(xb, w1) + b1)))
            h2 = 1.0 / (1.0 + np.exp(-(np.dot(h1, w2) + b2)))
            h3 = 1.0 / (1.0 + np.exp(-(np.dot(h2, w3) + b3)))
            logits = np.dot(h3, w4) + b4

            n_classes = logits.shape[1]
            probs = np.empty((nb, n_classes))
            batch_loss = 0.0
            for i in range(nb):
                m = logits[i, 0]
                for c in range(1, n_classes):
                    if logits[i, c] > m:
                        m = logits[i, c]
                s = 0.0
                for c in range(n_classes):
                    e = math.exp(logits[i, c] - m)
                    probs[i, c] = e
                    s += e
                for c in range(n_classes):
                    probs[i, c] /= s
                batch_loss -= math.log(max(probs[i, yb[i]], 1e-300))
                probs[i, yb[i]] -= 1.0
            total += batch_loss

            dlogits = probs / nb
            dw4 = np.dot(h3.T, dlogits)
            db4 = np.sum(dlogits, axis=0)
            dh3 = np.dot(dlogits, w4.T) * h3 * (1.0 - h3)
            dw3 = np.dot(h2.T, dh3)
            db3 = np.sum(dh3, axis=0)
            dh2 = np.dot(dh3, w3.T) * h2 * (1.0 - h2)
            dw2 = np.dot(h1.T, dh2)
            db2 = np.sum(dh2, axis=0)
            dh1 = np.dot(dh2, w2.T) * h1 * (1.0 - h1)
            dw1 = np.dot(xb.T, dh1)
            db1 = np.sum(dh1, axis=0)

            step += 1
            c1 = 1.0 / (1.0 - beta1 ** step)
            c2 = 1.0 / (1.0 - beta2 ** step)
            _adam_apply(w1.reshape(w1.size), dw1.reshape(dw1.size),
                        mw1.reshape(mw1.size), vw1.reshape(vw1.size),
                        lr, beta1, beta2, eps, c1, c2)
            _adam_apply(b1, db1, mb1, vb1, lr, beta1, beta2, eps, c1, c2)
            _adam_apply(w2.reshape(w2.size), dw2.reshape(dw2.size),
                        mw2.reshape(mw2.size), vw2.reshape(vw2.size),
                        lr, beta1, beta2, eps, c1, c2)
            _adam_apply(b2, db2, mb2, vb2, lr, beta1, beta2, eps, c1, c2)
            _adam_apply(w3.reshape(w3.size), dw3.reshape(dw3.size),
                        mw3.reshape(mw3.size), vw3.reshape(vw3.size),
                        lr, beta1, beta2, eps, c1, c2)
            _adam_apply(b3, db3, mb3, vb3, lr, beta1, beta2, eps, c1, c2)
            _adam_apply(w4.reshape(w4.size), dw4.reshape(dw4.size),
                        mw4.reshape(mw4.size), vw4.reshape(vw4.size),
                        lr, beta1, beta2, eps, c1, c2)
            _adam_apply(b4, db4, mb4, vb4, lr, beta1, beta2, eps, c1, c2)
        losses[ep] = total / n_samples
    return losses, step


if BACKEND == "numba":
    resp_update = njit(cache=True)(_resp_update_loop)
    count_update = njit(cache=True)(_count_update_loop)
    _adam_apply = njit(cache=True)(_adam_apply)
    mlp_epochs = njit(cache=True)(_mlp_epochs_loop)
else:
    resp_update = resp_update_numpy
    count_update = count_update_numpy
    mlp_epochs = _mlp_epochs_loop
