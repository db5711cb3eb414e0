"""Comparison methods: inverse fingerprinting and a position-to-pair MLP.

Both baselines emit :class:`~beamsel.select.CandidateList`s, so they plug
into the same RSS refinement and metric pipeline as the PMF model.
"""

from collections import Counter
from dataclasses import dataclass

import numpy as np

from . import _kernels as kernels
from .codebook import BeamPair
from .container import load_container, save_container
from .dataset import BeamDataset, Grid
from .select import CandidateList

FINGERPRINT_KIND = "fingerprint"
MLP_KIND = "mlp"


# ---------------------------------------------------------------------------
# inverse fingerprinting
# ---------------------------------------------------------------------------

@dataclass
class FingerprintDatabase:
    """Per-bin rankings of beam pairs by empirical optimality counts.

    Ranking order is count descending, then flattened pair index ascending,
    so it does not depend on sample order. ``global_ranking`` covers the
    whole training set and backs off queries for unseen bins.
    """

    grid: Grid
    i_f: int
    i_w: int
    bin_rankings: dict[tuple[int, int], list[tuple[int, int]]]  # bin -> [(flat, count)]
    global_ranking: list[tuple[int, int]]

    @property
    def n_pairs(self) -> int:
        return self.i_f * self.i_w


def _ranked(counter: Counter) -> list[tuple[int, int]]:
    return sorted(counter.items(), key=lambda kv: (-kv[1], kv[0]))


def fingerprint_train(train: BeamDataset) -> FingerprintDatabase:
    """Count optimal pairs per position bin and rank them."""
    flats = train.flat_labels()
    per_bin: dict[tuple[int, int], Counter] = {}
    total = Counter()
    for t in range(len(train)):
        key = (int(train.bins[t, 0]), int(train.bins[t, 1]))
        per_bin.setdefault(key, Counter())[int(flats[t])] += 1
        total[int(flats[t])] += 1
    return FingerprintDatabase(
        grid=train.grid, i_f=train.i_f, i_w=train.i_w,
        bin_rankings={key: _ranked(c) for key, c in per_bin.items()},
        global_ranking=_ranked(total),
    )


def fingerprint_ranking(db: FingerprintDatabase, bin_key: tuple[int, int],
                        n_b: int) -> np.ndarray:
    """First n_b distinct flat pair ids for a bin, padded from the global
    ranking and then from the untouched pairs in index order."""
    if n_b < 1 or n_b > db.n_pairs:
        raise ValueError(f"n_b must lie in [1, {db.n_pairs}]")
    out: list[int] = []
    seen = set()
    for flat, _ in db.bin_rankings.get(tuple(bin_key), []):
        out.append(flat)
        seen.add(flat)
        if len(out) == n_b:
            return np.array(out, dtype=np.int64)
    for flat, _ in db.global_ranking:
        if flat not in seen:
            out.append(flat)
            seen.add(flat)
            if len(out) == n_b:
                return np.array(out, dtype=np.int64)
    for flat in range(db.n_pairs):
        if flat not in seen:
            out.append(flat)
            seen.add(flat)
            if len(out) == n_b:
                break
    return np.array(out, dtype=np.int64)


def fingerprint_top_n(db: FingerprintDatabase, bin_key: tuple[int, int],
                      n_b: int) -> CandidateList:
    """Candidate list for a bin; scores are in-bin empirical probabilities
    (zero for entries padded from outside the bin)."""
    flats = fingerprint_ranking(db, bin_key, n_b)
    ranking = db.bin_rankings.get(tuple(bin_key), [])
    bin_total = sum(c for _, c in ranking)
    probs = {flat: count / bin_total for flat, count in ranking} if bin_total else {}
    scores = np.array([probs.get(int(k), 0.0) for k in flats])
    pairs = tuple(BeamPair.from_flat(int(k), db.i_w) for k in flats)
    return CandidateList(pairs=pairs, scores=scores)


def save_fingerprint(db: FingerprintDatabase, path, meta: dict | None = None) -> None:
    keys = sorted(db.bin_rankings)
    bins = np.array(keys, dtype=np.int64).reshape(len(keys), 2)
    offsets = [0]
    ranked, counts = [], []
    for key in keys:
        for flat, count in db.bin_rankings[key]:
            ranked.append(flat)
            counts.append(count)
        offsets.append(len(ranked))
    arrays = {
        "bins": bins,
        "offsets": np.array(offsets, dtype=np.int64),
        "ranked": np.array(ranked, dtype=np.int64),
        "counts": np.array(counts, dtype=np.int64),
        "global_ranked": np.array([f for f, _ in db.global_ranking], dtype=np.int64),
        "global_counts": np.array([c for _, c in db.global_ranking], dtype=np.int64),
    }
    full_meta = {
        "grid": [db.grid.x_min, db.grid.y_min, db.grid.bin_size, db.grid.n_x, db.grid.n_y],
        "i_f": db.i_f, "i_w": db.i_w,
    }
    full_meta.update(meta or {})
    save_container(path, FINGERPRINT_KIND, arrays, full_meta)


def load_fingerprint(path) -> tuple[FingerprintDatabase, dict]:
    kind, arrays, meta = load_container(path)
    if kind != FINGERPRINT_KIND:
        raise ValueError(f"{path} holds a {kind!r} model, expected {FINGERPRINT_KIND!r}")
    g = meta["grid"]
    grid = Grid(x_min=float(g[0]), y_min=float(g[1]), bin_size=float(g[2]),
                n_x=int(g[3]), n_y=int(g[4]))
    bin_rankings = {}
    offsets = arrays["offsets"]
    for k in range(arrays["bins"].shape[0]):
        lo, hi = int(offsets[k]), int(offsets[k + 1])
        key = (int(arrays["bins"][k, 0]), int(arrays["bins"][k, 1]))
        bin_rankings[key] = [(int(f), int(c)) for f, c in
                             zip(arrays["ranked"][lo:hi], arrays["counts"][lo:hi])]
    global_ranking = [(int(f), int(c)) for f, c in
                      zip(arrays["global_ranked"], arrays["global_counts"])]
    db = FingerprintDatabase(grid=grid, i_f=int(meta["i_f"]), i_w=int(meta["i_w"]),
                             bin_rankings=bin_rankings, global_ranking=global_ranking)
    return db, meta


# ---------------------------------------------------------------------------
# fully connected network trained with Adam
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MlpHyperparams:
    hidden: tuple[int, ...] = (6, 18, 48)
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    batch_size: int = 64
    epochs: int = 500
    rng_seed: int = 0

    def __post_init__(self):
        if len(self.hidden) < 1 or any(h < 1 for h in self.hidden):
            raise ValueError("hidden layer sizes must be positive")
        if self.batch_size < 1 or self.epochs < 1:
            raise ValueError("batch_size and epochs must be positive")


@dataclass
class MlpModel:
    """Sigmoid hidden layers, softmax output over flattened pair classes.

    Inputs are standardized with statistics taken from the training split
    only; constant coordinates map to zero.
    """

    weights: list[np.ndarray]
    biases: list[np.ndarray]
    input_mean: np.ndarray
    input_scale: np.ndarray
    i_f: int
    i_w: int

    @property
    def n_classes(self) -> int:
        return self.i_f * self.i_w


@dataclass
class AdamState:
    """Per-parameter moment accumulators plus the shared step count."""

    m: list[np.ndarray]
    v: list[np.ndarray]
    step: int = 0
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    @classmethod
    def for_params(cls, params: list[np.ndarray], hyper: MlpHyperparams) -> "AdamState":
        return cls(m=[np.zeros_like(p) for p in params],
                   v=[np.zeros_like(p) for p in params],
                   learning_rate=hyper.learning_rate, beta1=hyper.beta1,
                   beta2=hyper.beta2, epsilon=hyper.epsilon)


def adam_step(params: list[np.ndarray], grads: list[np.ndarray],
              state: AdamState) -> None:
    """One in-place Adam update with bias correction."""
    state.step += 1
    c1 = 1.0 / (1.0 - state.beta1 ** state.step)
    c2 = 1.0 / (1.0 - state.beta2 ** state.step)
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        p -= state.learning_rate * (m * c1) / (np.sqrt(v * c2) + state.epsilon)


def _init_params(layer_sizes, rng: np.random.Generator):
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        limit = np.sqrt(6.0 / fan_in)
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return weights, biases


def _sigmoid(z):
    return 1.0 / (1.0 + np.exp(-z))


def _softmax(logits):
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def standardize(model: MlpModel, positions: np.ndarray) -> np.ndarray:
    return (np.atleast_2d(positions) - model.input_mean) / model.input_scale


def mlp_forward(model: MlpModel, positions: np.ndarray) -> np.ndarray:
    """Class probabilities; (n_classes,) for a single position, else
    (n, n_classes). Raises on non-finite activations."""
    squeeze = np.ndim(positions) == 1
    h = standardize(model, positions)
    for w, b in zip(model.weights[:-1], model.biases[:-1]):
        h = _sigmoid(h @ w + b)
    probs = _softmax(h @ model.weights[-1] + model.biases[-1])
    if not np.all(np.isfinite(probs)):
        raise FloatingPointError("non-finite activation in forward pass")
    return probs[0] if squeeze else probs


def mlp_loss_and_grads(weights, biases, x_std: np.ndarray, labels: np.ndarray):
    """Mean cross-entropy and analytic gradients on standardized inputs."""
    n = x_std.shape[0]
    activations = [x_std]
    h = x_std
    for w, b in zip(weights[:-1], biases[:-1]):
        h = _sigmoid(h @ w + b)
        activations.append(h)
    probs = _softmax(h @ weights[-1] + biases[-1])
    loss = float(-np.log(np.maximum(probs[np.arange(n), labels], 1e-300)).mean())

    delta = probs.copy()
    delta[np.arange(n), labels] -= 1.0
    delta /= n
    grad_w = [None] * len(weights)
    grad_b = [None] * len(biases)
    for layer in range(len(weights) - 1, -1, -1):
        grad_w[layer] = activations[layer].T @ delta
        grad_b[layer] = delta.sum(axis=0)
        if layer > 0:
            a = activations[layer]
            delta = (delta @ weights[layer].T) * a * (1.0 - a)
    return loss, grad_w, grad_b


def mlp_loss(model: MlpModel, positions: np.ndarray, labels: np.ndarray) -> float:
    """Mean cross-entropy of raw positions against flat pair labels."""
    probs = mlp_forward(model, positions)
    probs = np.atleast_2d(probs)
    picked = probs[np.arange(len(labels)), labels]
    return float(-np.log(np.maximum(picked, 1e-300)).mean())


def _train_generic(x_std, labels, perms, weights, biases, hyper: MlpHyperparams):
    """Reference training loop for arbitrary depth (also the numpy check
    path for the jitted fixed-depth kernel)."""
    params = weights + biases
    state = AdamState.for_params(params, hyper)
    n = x_std.shape[0]
    losses = np.zeros(perms.shape[0])
    for ep in range(perms.shape[0]):
        perm = perms[ep]
        total = 0.0
        for start in range(0, n, hyper.batch_size):
            batch = perm[start:start + hyper.batch_size]
            loss, grad_w, grad_b = mlp_loss_and_grads(weights, biases,
                                                      x_std[batch], labels[batch])
            total += loss * len(batch)
            adam_step(params, grad_w + grad_b, state)
        losses[ep] = total / n
    return losses


def mlp_train(train: BeamDataset, hyper: MlpHyperparams) -> tuple[MlpModel, np.ndarray]:
    """Train on (position -> flattened optimal pair); returns the model and
    the per-epoch mean training loss."""
    x = train.positions.astype(np.float64)
    labels = train.flat_labels().astype(np.int64)
    mean = x.mean(axis=0)
    std = x.std(axis=0)
    scale = np.where(std > 1e-12, std, 1.0)
    x_std = (x - mean) / scale

    n_classes = train.i_f * train.i_w
    layer_sizes = (x.shape[1],) + tuple(hyper.hidden) + (n_classes,)
    rng = np.random.default_rng(hyper.rng_seed)
    weights, biases = _init_params(layer_sizes, rng)
    perms = np.stack([rng.permutation(len(train)) for _ in range(hyper.epochs)]).astype(np.int64)

    if len(hyper.hidden) == 3:
        params = tuple(np.ascontiguousarray(a) for pair in zip(weights, biases) for a in pair)
        mom_m = tuple(np.zeros_like(a) for a in params)
        mom_v = tuple(np.zeros_like(a) for a in params)
        losses, _ = kernels.mlp_epochs(
            np.ascontiguousarray(x_std), labels, perms, params, mom_m, mom_v, 0,
            hyper.learning_rate, hyper.beta1, hyper.beta2, hyper.epsilon,
            hyper.batch_size,
        )
        weights = [params[0], params[2], params[4], params[6]]
        biases = [params[1], params[3], params[5], params[7]]
    else:
        losses = _train_generic(x_std, labels, perms, weights, biases, hyper)

    if not all(np.all(np.isfinite(w)) for w in weights + biases) or not np.all(np.isfinite(losses)):
        raise FloatingPointError("MLP training diverged (non-finite loss or weights)")
    model = MlpModel(weights=weights, biases=biases, input_mean=mean,
                     input_scale=scale, i_f=train.i_f, i_w=train.i_w)
    return model, losses


def mlp_top_n(model: MlpModel, position: np.ndarray, n_b: int) -> CandidateList:
    """The n_b most probable pairs, ties toward smaller flat indices."""
    if not 1 <= n_b <= model.n_classes:
        raise ValueError(f"n_b must lie in [1, {model.n_classes}]")
    probs = mlp_forward(model, position)
    order = np.argsort(-probs, kind="stable")[:n_b]
    return CandidateList(
        pairs=tuple(BeamPair.from_flat(int(k), model.i_w) for k in order),
        scores=probs[order],
    )


def save_mlp(model: MlpModel, path, meta: dict | None = None) -> None:
    arrays = {"input_mean": model.input_mean, "input_scale": model.input_scale}
    for k, (w, b) in enumerate(zip(model.weights, model.biases)):
        arrays[f"w{k}"] = w
        arrays[f"b{k}"] = b
    full_meta = {"n_layers": len(model.weights), "i_f": model.i_f, "i_w": model.i_w}
    full_meta.update(meta or {})
    save_container(path, MLP_KIND, arrays, full_meta)


def load_mlp(path) -> tuple[MlpModel, dict]:
    kind, arrays, meta = load_container(path)
    if kind != MLP_KIND:
        raise ValueError(f"{path} holds a {kind!r} model, expected {MLP_KIND!r}")
    n_layers = int(meta["n_layers"])
    model = MlpModel(
        weights=[arrays[f"w{k}"] for k in range(n_layers)],
        biases=[arrays[f"b{k}"] for k in range(n_layers)],
        input_mean=arrays["input_mean"], input_scale=arrays["input_scale"],
        i_f=int(meta["i_f"]), i_w=int(meta["i_w"]),
    )
    return model, meta
