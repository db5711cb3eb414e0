"""Variational Bayesian estimation of the low-rank joint PMF.

The model is a Dirichlet-categorical mixture: a latent state per sample
drawn from the loading vector, and the four observed indices drawn
independently from that state's factor columns. The mean-field posterior
q(Z) q(lambda) prod_{n,r} q(A_n(:,r)) is fully conjugate, so every
coordinate update is exact and the evidence lower bound is nondecreasing
across full update cycles.

A sparsity-promoting loading prior (concentration well below 1) drives
surplus components toward zero posterior-mean loading; pruning them after
convergence detects the rank. Pruning changes the model structure, so the
traces before and after it are reported separately and monotonicity holds
within each.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, xlogy

from . import _kernels as kernels
from .pmf import CpdPmfModel
from .special import digamma


class VbNumericalError(RuntimeError):
    """The ELBO became non-finite; the fit state is unusable."""


@dataclass(frozen=True)
class VbHyperparams:
    """Priors, initialization, and stopping rules for the fit.

    ``prune_threshold=None`` resolves to 1/(10 T): a component expected to
    explain less than a tenth of one sample is discarded.
    """

    alpha_lambda: float = 1e-6
    alpha_factor: float = 1.0
    r_init: int = 30
    max_iters: int = 500
    elbo_rel_tol: float = 1e-6
    prune_threshold: float | None = None
    prune_every_iter: bool = False
    refine_iters: int = 10
    rng_seed: int = 0

    def __post_init__(self):
        if self.alpha_lambda <= 0 or self.alpha_factor <= 0:
            raise ValueError("Dirichlet concentrations must be positive")
        if self.r_init < 1:
            raise ValueError("r_init must be >= 1")
        if self.max_iters < 1 or self.refine_iters < 0:
            raise ValueError("iteration counts must be positive")
        if self.elbo_rel_tol <= 0:
            raise ValueError("elbo_rel_tol must be positive")
        if self.prune_threshold is not None and self.prune_threshold <= 0:
            raise ValueError("prune_threshold must be positive")


@dataclass
class VbPosterior:
    """Variational state: Dirichlet concentrations plus responsibilities."""

    dirichlet_lambda: np.ndarray          # (R,)
    dirichlet_factors: list[np.ndarray]   # four (I_n, R) arrays
    responsibilities: np.ndarray          # (T, R), row-stochastic

    @property
    def n_components(self) -> int:
        return self.dirichlet_lambda.size


@dataclass(frozen=True)
class FitResult:
    model: CpdPmfModel
    elbo_trace: list[float]
    r_hat: int
    refine_trace: list[float]
    active_trace: list[int]
    posterior: VbPosterior


def _expectations(posterior: VbPosterior):
    dl = posterior.dirichlet_lambda
    elnlam = digamma(dl) - digamma(dl.sum())
    elns = [digamma(a) - digamma(a.sum(axis=0))[np.newaxis, :]
            for a in posterior.dirichlet_factors]
    return elnlam, elns


def update_responsibilities(indices: np.ndarray, posterior: VbPosterior) -> np.ndarray:
    """Row-normalized q(z_t); log domain with per-row max subtraction."""
    elnlam, elns = _expectations(posterior)
    return kernels.resp_update(
        np.ascontiguousarray(indices[:, 0]), np.ascontiguousarray(indices[:, 1]),
        np.ascontiguousarray(indices[:, 2]), np.ascontiguousarray(indices[:, 3]),
        elnlam, elns[0], elns[1], elns[2], elns[3],
    )


def update_dirichlets(indices: np.ndarray, dims, responsibilities: np.ndarray,
                      hyper: VbHyperparams):
    """Conjugate updates: prior concentration plus expected counts."""
    dirichlet_lambda = hyper.alpha_lambda + responsibilities.sum(axis=0)
    dirichlet_factors = [
        hyper.alpha_factor + kernels.count_update(
            np.ascontiguousarray(indices[:, n]), responsibilities, dims[n])
        for n in range(4)
    ]
    return dirichlet_lambda, dirichlet_factors


def elbo(indices: np.ndarray, posterior: VbPosterior, hyper: VbHyperparams) -> float:
    """E_q[log p(data, parameters)] - E_q[log q(parameters)].

    Prior and posterior Dirichlet contributions are combined per term so
    that near-dead components (huge negative log expectations with near
    zero coefficients) do not cancel catastrophically.
    """
    resp = posterior.responsibilities
    elnlam, elns = _expectations(posterior)

    scores = (elnlam[np.newaxis, :] + elns[0][indices[:, 0]]
              + elns[1][indices[:, 1]] + elns[2][indices[:, 2]]
              + elns[3][indices[:, 3]])
    data_term = float(np.sum(resp * scores))
    entropy_term = float(np.sum(xlogy(resp, resp)))

    r = posterior.n_components
    a0 = hyper.alpha_lambda
    dl = posterior.dirichlet_lambda
    lam_term = (gammaln(r * a0) - r * gammaln(a0)
                - gammaln(dl.sum()) + gammaln(dl).sum()
                + float(((a0 - dl) * elnlam).sum()))

    af = hyper.alpha_factor
    fac_term = 0.0
    for conc, eln in zip(posterior.dirichlet_factors, elns):
        i_n = conc.shape[0]
        fac_term += (r * (gammaln(i_n * af) - i_n * gammaln(af))
                     - gammaln(conc.sum(axis=0)).sum() + gammaln(conc).sum()
                     + float(((af - conc) * eln).sum()))
    return data_term - entropy_term + lam_term + fac_term


def posterior_means(posterior: VbPosterior):
    """Point estimates: normalized concentration vectors."""
    lam = posterior.dirichlet_lambda / posterior.dirichlet_lambda.sum()
    factors = [a / a.sum(axis=0) for a in posterior.dirichlet_factors]
    return lam, factors


def _pruned(posterior: VbPosterior, threshold: float):
    """Drop components with posterior-mean loading below the threshold."""
    lam_hat = posterior.dirichlet_lambda / posterior.dirichlet_lambda.sum()
    keep = lam_hat >= threshold
    if keep.all():
        return posterior, False
    if not keep.any():
        keep[int(np.argmax(lam_hat))] = True
    resp = posterior.responsibilities[:, keep]
    row_sums = resp.sum(axis=1, keepdims=True)
    resp = np.where(row_sums > 0.0, resp / np.where(row_sums > 0.0, row_sums, 1.0),
                    1.0 / keep.sum())
    return VbPosterior(
        dirichlet_lambda=posterior.dirichlet_lambda[keep],
        dirichlet_factors=[a[:, keep] for a in posterior.dirichlet_factors],
        responsibilities=resp,
    ), True


def fit_indices(indices: np.ndarray, dims, hyper: VbHyperparams) -> FitResult:
    """Coordinate-ascent fit on raw index data of shape (T, 4)."""
    indices = np.ascontiguousarray(np.asarray(indices, dtype=np.int64))
    if indices.ndim != 2 or indices.shape[1] != 4:
        raise ValueError(f"indices must have shape (T, 4), got {indices.shape}")
    t = indices.shape[0]
    if t == 0:
        raise ValueError("dataset is empty")
    dims = tuple(int(d) for d in dims)
    for n in range(4):
        if indices[:, n].min() < 0 or indices[:, n].max() >= dims[n]:
            raise ValueError(f"variable {n} has indices outside [0, {dims[n]})")
    threshold = hyper.prune_threshold if hyper.prune_threshold is not None else 1.0 / (10.0 * t)

    rng = np.random.default_rng(hyper.rng_seed)
    resp = rng.dirichlet(np.ones(hyper.r_init), size=t)
    dirichlet_lambda, dirichlet_factors = update_dirichlets(indices, dims, resp, hyper)
    posterior = VbPosterior(dirichlet_lambda, dirichlet_factors, resp)

    elbo_trace: list[float] = []
    active_trace: list[int] = []
    previous = None
    for iteration in range(hyper.max_iters):
        resp = update_responsibilities(indices, posterior)
        dirichlet_lambda, dirichlet_factors = update_dirichlets(indices, dims, resp, hyper)
        posterior = VbPosterior(dirichlet_lambda, dirichlet_factors, resp)
        value = elbo(indices, posterior, hyper)
        if not np.isfinite(value):
            raise VbNumericalError(
                f"ELBO became non-finite ({value}) at iteration {iteration} "
                f"with {posterior.n_components} active components"
            )
        if hyper.prune_every_iter:
            posterior, _ = _pruned(posterior, threshold)
        elbo_trace.append(value)
        active_trace.append(posterior.n_components)
        if previous is not None and abs(value - previous) <= hyper.elbo_rel_tol * abs(previous):
            break
        previous = value

    refine_trace: list[float] = []
    if not hyper.prune_every_iter:
        posterior, pruned_any = _pruned(posterior, threshold)
        if pruned_any:
            for _ in range(hyper.refine_iters):
                resp = update_responsibilities(indices, posterior)
                dirichlet_lambda, dirichlet_factors = update_dirichlets(indices, dims, resp, hyper)
                posterior = VbPosterior(dirichlet_lambda, dirichlet_factors, resp)
                value = elbo(indices, posterior, hyper)
                if not np.isfinite(value):
                    raise VbNumericalError("ELBO became non-finite during refinement")
                refine_trace.append(value)

    lam, factors = posterior_means(posterior)
    model = CpdPmfModel(lam, *factors)
    return FitResult(model=model, elbo_trace=elbo_trace, r_hat=model.rank,
                     refine_trace=refine_trace, active_trace=active_trace,
                     posterior=posterior)


def fit(dataset, hyper: VbHyperparams) -> FitResult:
    """Fit from a labeled dataset's (x-bin, y-bin, f, w) index columns."""
    indices = np.column_stack([dataset.bins[:, 0], dataset.bins[:, 1],
                               dataset.pairs_f, dataset.pairs_w])
    dims = (dataset.grid.n_x, dataset.grid.n_y, dataset.i_f, dataset.i_w)
    return fit_indices(indices, dims, hyper)


def save_elbo_trace_csv(result: FitResult, path) -> None:
    """CSV of (iteration, elbo, active_components), refinement included."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("iteration,elbo,active_components\n")
        iteration = 0
        for value, active in zip(result.elbo_trace, result.active_trace):
            fh.write(f"{iteration},{value!r},{active}\n")
            iteration += 1
        for value in result.refine_trace:
            fh.write(f"{iteration},{value!r},{result.r_hat}\n")
            iteration += 1
