"""Low-rank joint PMF of (x-bin, y-bin, precoder index, combiner index).

The four-way probability tensor is stored as a sum of R rank-one terms:
a loading vector (the prior over a latent state) and one column-stochastic
factor matrix per variable (the conditionals given that state). Queries
never materialize the full tensor except for the explicitly size-guarded
test helper.
"""

from dataclasses import dataclass

import numpy as np

from .container import load_container, save_container

_SIMPLEX_TOL = 1e-10
_MATERIALIZE_LIMIT = 10 ** 6

CONTAINER_KIND = "cpd-pmf"


class ZeroEvidenceError(ValueError):
    """The queried position bin has zero probability under the model."""


@dataclass(frozen=True)
class CpdPmfModel:
    """Loading vector plus four column-stochastic factor matrices.

    Construction validates the probability-simplex constraints (sums within
    1e-10) but performs no arithmetic on the inputs, so serialization
    round-trips are bit-exact. Producers (the variational fit, the random
    constructor) normalize before constructing. Rank-one components may be
    permuted freely without changing the represented tensor.
    """

    loading: np.ndarray    # (R,)
    factor_x: np.ndarray   # (I_x, R)
    factor_y: np.ndarray   # (I_y, R)
    factor_f: np.ndarray   # (I_f, R)
    factor_w: np.ndarray   # (I_w, R)

    def __post_init__(self):
        lam = np.asarray(self.loading, dtype=np.float64)
        if lam.ndim != 1 or lam.size < 1:
            raise ValueError("loading must be a nonempty vector")
        if not np.all(np.isfinite(lam)) or np.any(lam <= 0):
            raise ValueError("loading entries must be finite and positive")
        if abs(lam.sum() - 1.0) > _SIMPLEX_TOL:
            raise ValueError("loading must sum to 1 within 1e-10")
        object.__setattr__(self, "loading", lam)
        r = lam.size
        for name in ("factor_x", "factor_y", "factor_f", "factor_w"):
            a = np.asarray(getattr(self, name), dtype=np.float64)
            if a.ndim != 2 or a.shape[1] != r:
                raise ValueError(f"{name} must have shape (I, {r})")
            if not np.all(np.isfinite(a)) or np.any(a < 0):
                raise ValueError(f"{name} entries must be finite and nonnegative")
            if np.any(np.abs(a.sum(axis=0) - 1.0) > _SIMPLEX_TOL):
                raise ValueError(f"{name} columns must sum to 1 within 1e-10")
            object.__setattr__(self, name, a)

    @property
    def rank(self) -> int:
        return self.loading.size

    @property
    def dims(self) -> tuple[int, int, int, int]:
        return (self.factor_x.shape[0], self.factor_y.shape[0],
                self.factor_f.shape[0], self.factor_w.shape[0])

    @property
    def n_free_parameters(self) -> int:
        """(R-1) + sum_n R*(I_n - 1): linear in the number of variables."""
        r = self.rank
        return (r - 1) + sum(r * (i - 1) for i in self.dims)

    @classmethod
    def random(cls, dims, rank: int, rng: np.random.Generator,
               concentration: float = 1.0) -> "CpdPmfModel":
        """Random valid model with Dirichlet-distributed columns."""
        i_x, i_y, i_f, i_w = dims
        lam = rng.dirichlet(np.full(rank, concentration))
        # keep the loading strictly positive
        lam = (lam + 1e-12) / (lam + 1e-12).sum()
        factors = [rng.dirichlet(np.full(i, concentration), size=rank).T
                   for i in (i_x, i_y, i_f, i_w)]
        factors = [(a + 1e-15) / (a + 1e-15).sum(axis=0) for a in factors]
        return cls(lam, *factors)


def evaluate_joint(model: CpdPmfModel, i_x: int, i_y: int, i_f: int, i_w: int) -> float:
    """Joint probability of one cell (0-based indices)."""
    dims = model.dims
    for idx, size in zip((i_x, i_y, i_f, i_w), dims):
        if not 0 <= idx < size:
            raise IndexError(f"index {idx} out of range for dimension of size {size}")
    prods = (model.factor_x[i_x] * model.factor_y[i_y]
             * model.factor_f[i_f] * model.factor_w[i_w])
    return float(model.loading @ prods)


def posterior_over_beams(model: CpdPmfModel, i_x: int, i_y: int) -> np.ndarray:
    """Conditional PMF over all beam pairs given a position bin.

    Shape (I_f, I_w), entries sum to 1. Normalization does not change the
    ranking, so MAP decisions may equally use the unnormalized scores.
    """
    if not 0 <= i_x < model.dims[0]:
        raise IndexError(f"x-bin {i_x} out of range")
    if not 0 <= i_y < model.dims[1]:
        raise IndexError(f"y-bin {i_y} out of range")
    weights = model.loading * model.factor_x[i_x] * model.factor_y[i_y]
    scores = (model.factor_f * weights) @ model.factor_w.T
    total = scores.sum()
    if total <= 0.0:
        raise ZeroEvidenceError(
            f"position bin ({i_x}, {i_y}) has zero probability under the model"
        )
    return scores / total


def beam_pair_marginal(model: CpdPmfModel) -> np.ndarray:
    """Marginal PMF over beam pairs, shape (I_f, I_w)."""
    return (model.factor_f * model.loading) @ model.factor_w.T


def materialize_full_tensor(model: CpdPmfModel) -> np.ndarray:
    """Dense four-way tensor; guarded to at most 10^6 cells (test use)."""
    if int(np.prod(model.dims)) > _MATERIALIZE_LIMIT:
        raise ValueError(f"refusing to materialize {model.dims}: exceeds "
                         f"{_MATERIALIZE_LIMIT} cells")
    return np.einsum("r,ar,br,cr,dr->abcd", model.loading, model.factor_x,
                     model.factor_y, model.factor_f, model.factor_w)


def sample_indices(model: CpdPmfModel, size: int,
                   rng: np.random.Generator) -> np.ndarray:
    """Draw (size, 4) index samples from the latent-state generative model."""
    z = rng.choice(model.rank, size=size, p=model.loading)
    out = np.empty((size, 4), dtype=np.int64)
    factors = (model.factor_x, model.factor_y, model.factor_f, model.factor_w)
    for n, a in enumerate(factors):
        cdf = np.cumsum(a, axis=0)
        u = rng.random(size)
        for t in range(size):
            out[t, n] = int(np.searchsorted(cdf[:, z[t]], u[t], side="right"))
    np.clip(out, 0, np.array(model.dims, dtype=np.int64) - 1, out=out)
    return out


def save_model(model: CpdPmfModel, path, meta: dict | None = None) -> None:
    """Serialize to the shared container format (kind 'cpd-pmf')."""
    arrays = {
        "loading": model.loading,
        "factor_x": model.factor_x,
        "factor_y": model.factor_y,
        "factor_f": model.factor_f,
        "factor_w": model.factor_w,
    }
    save_container(path, CONTAINER_KIND, arrays, meta)


def load_model(path) -> tuple[CpdPmfModel, dict]:
    kind, arrays, meta = load_container(path)
    if kind != CONTAINER_KIND:
        raise ValueError(f"{path} holds a {kind!r} model, expected {CONTAINER_KIND!r}")
    model = CpdPmfModel(arrays["loading"], arrays["factor_x"], arrays["factor_y"],
                        arrays["factor_f"], arrays["factor_w"])
    return model, meta
