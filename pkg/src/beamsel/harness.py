"""Multi-trial benchmark protocol and its CSV/plot outputs.

Each trial shuffles the dataset with its own seed (base seed + trial
index), trains every method on a train prefix, ranks candidates for the
held-out tail, refines each prefix of the ranking by true RSS, and scores
power loss and rate metrics. Trials are independent; with ``workers > 1``
they run in a process pool, and results are always ordered by trial index
so output files are byte-identical across runs with the same spec.
"""

import dataclasses
import functools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import vb
from .baselines import MlpHyperparams, fingerprint_ranking, fingerprint_train, mlp_forward, mlp_train
from .channel import ArrayGeometry
from .codebook import RadioConfig, build_dft_codebook, rss_tables
from .dataset import BeamDataset, build_dataset, dataset_channels
from .pmf import ZeroEvidenceError, beam_pair_marginal, posterior_over_beams
from .scene import SceneSpec

KNOWN_METHODS = ("pmf", "fingerprint", "mlp", "oracle")


@dataclass(frozen=True)
class TrialResult:
    """Metrics of one (method, train size, candidate-list length) cell."""

    method: str
    trial: int
    seed: int
    train_size: int
    n_b: int
    power_loss_0db: float
    power_loss_3db: float
    mean_rate: float
    normalized_rate: float

    def __post_init__(self):
        for name in ("power_loss_0db", "power_loss_3db"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be a probability, got {v}")
        if not -1e-9 <= self.normalized_rate <= 1.0 + 1e-9:
            raise ValueError(f"normalized_rate out of range: {self.normalized_rate}")


@dataclass(frozen=True)
class ExperimentSpec:
    """Scene, methods, sweeps, and seeds for one experiment run."""

    scene: SceneSpec = SceneSpec()
    geometry_tx: ArrayGeometry = ArrayGeometry(8, 8)
    geometry_rx: ArrayGeometry = ArrayGeometry(2, 2)
    radio: RadioConfig = RadioConfig.from_dbm()
    num_samples: int = 2000
    bin_size: float = 5.0
    sample_seed: int = 0
    methods: tuple[str, ...] = ("pmf", "fingerprint", "mlp")
    n_b_list: tuple[int, ...] = (1, 2, 4, 6, 8, 12, 16, 24, 32)
    train_sizes: tuple[int, ...] = (80, 160, 320, 640, 1600)
    test_size: int | None = None
    trials: int = 50
    base_seed: int = 42
    vb_hyper: vb.VbHyperparams = vb.VbHyperparams()
    mlp_hyper: MlpHyperparams = MlpHyperparams()
    workers: int = 1

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trial count must be >= 1")
        if not self.methods or not self.n_b_list or not self.train_sizes:
            raise ValueError("methods, n_b_list, and train_sizes must be nonempty")
        unknown = [m for m in self.methods if m not in KNOWN_METHODS]
        if unknown:
            raise ValueError(f"unknown methods {unknown}; known: {KNOWN_METHODS}")
        if min(self.n_b_list) < 1:
            raise ValueError("n_b values must be >= 1")
        if min(self.train_sizes) < 1:
            raise ValueError("train sizes must be >= 1")

    def resolved_test_size(self) -> int:
        if self.test_size is not None:
            return self.test_size
        return self.num_samples - max(self.train_sizes)


def _candidate_ranks(method: str, train: BeamDataset, test_bins, test_positions,
                     test_tables, n_max: int, spec: ExperimentSpec,
                     trial_seed: int) -> np.ndarray:
    """(n_test, n_max) matrix of flat candidate ids, best first."""
    n_test = len(test_bins)
    if method == "pmf":
        result = vb.fit(train, dataclasses.replace(spec.vb_hyper, rng_seed=trial_seed))
        model = result.model
        marginal = None
        out = np.empty((n_test, n_max), dtype=np.int64)
        for i in range(n_test):
            try:
                scores = posterior_over_beams(model, int(test_bins[i, 0]),
                                              int(test_bins[i, 1]))
            except ZeroEvidenceError:
                if marginal is None:
                    marginal = beam_pair_marginal(model)
                scores = marginal
            out[i] = np.argsort(-scores.ravel(), kind="stable")[:n_max]
        return out
    if method == "fingerprint":
        db = fingerprint_train(train)
        out = np.empty((n_test, n_max), dtype=np.int64)
        for i in range(n_test):
            out[i] = fingerprint_ranking(db, (int(test_bins[i, 0]), int(test_bins[i, 1])), n_max)
        return out
    if method == "mlp":
        model, _ = mlp_train(train, dataclasses.replace(spec.mlp_hyper, rng_seed=trial_seed))
        probs = mlp_forward(model, test_positions)
        return np.argsort(-probs, axis=1, kind="stable")[:, :n_max].astype(np.int64)
    if method == "oracle":
        flat = test_tables.reshape(n_test, -1)
        return np.argsort(-flat, axis=1, kind="stable")[:, :n_max].astype(np.int64)
    raise ValueError(f"unknown method {method!r}")


def _run_trial(trial: int, dataset: BeamDataset, tables: np.ndarray,
               spec: ExperimentSpec) -> list[TrialResult]:
    seed = spec.base_seed + trial
    try:
        return _run_trial_inner(trial, seed, dataset, tables, spec)
    except Exception as exc:
        raise RuntimeError(f"trial {trial} (seed {seed}) failed: {exc}") from exc


def _run_trial_inner(trial: int, seed: int, dataset: BeamDataset,
                     tables: np.ndarray, spec: ExperimentSpec) -> list[TrialResult]:
    test_size = spec.resolved_test_size()
    perm = np.random.default_rng(seed).permutation(len(dataset))
    test_idx = perm[-test_size:]
    test_tables = tables[test_idx]
    test_bins = dataset.bins[test_idx]
    test_positions = dataset.positions[test_idx]
    n_test = len(test_idx)
    flat_tables = test_tables.reshape(n_test, -1)
    best_rss = flat_tables.max(axis=1)
    noise = spec.radio.noise_variance
    perfect_mean_rate = float(np.log2(1.0 + best_rss / noise).mean())
    n_max = max(spec.n_b_list)

    results = []
    rows = np.arange(n_test)
    for train_size in spec.train_sizes:
        train = dataset.subset(perm[:train_size])
        for method in spec.methods:
            ranks = _candidate_ranks(method, train, test_bins, test_positions,
                                     test_tables, n_max, spec, seed)
            vals = np.take_along_axis(flat_tables, ranks, axis=1)
            for n_b in spec.n_b_list:
                pick = np.argmax(vals[:, :n_b], axis=1)
                sel_rss = vals[rows, pick]
                mean_rate = float(np.log2(1.0 + sel_rss / noise).mean())
                results.append(TrialResult(
                    method=method, trial=trial, seed=seed, train_size=train_size,
                    n_b=n_b,
                    power_loss_0db=float(np.mean(best_rss > sel_rss)),
                    power_loss_3db=float(np.mean(best_rss > 2.0 * sel_rss)),
                    mean_rate=mean_rate,
                    normalized_rate=mean_rate / perfect_mean_rate,
                ))
    return results


def prepare_dataset(spec: ExperimentSpec) -> tuple[BeamDataset, np.ndarray]:
    """Build the labeled dataset once and cache every sample's RSS table."""
    cb_tx = build_dft_codebook(spec.geometry_tx)
    cb_rx = build_dft_codebook(spec.geometry_rx)
    dataset = build_dataset(spec.scene, spec.num_samples, spec.bin_size,
                            (cb_tx, cb_rx), spec.radio, spec.sample_seed)
    channels = dataset_channels(dataset)
    tables = rss_tables(channels, cb_tx, cb_rx, spec.radio)
    return dataset, tables


def run_experiment(spec: ExperimentSpec, out_dir=None) -> list[TrialResult]:
    """Run all trials; optionally write trials.csv and aggregate.csv."""
    n_pairs = spec.geometry_tx.size * spec.geometry_rx.size
    if max(spec.n_b_list) > n_pairs:
        raise ValueError(f"n_b exceeds the {n_pairs} available pairs")
    test_size = spec.resolved_test_size()
    if test_size < 1 or max(spec.train_sizes) + test_size > spec.num_samples:
        raise ValueError("train sizes and test size exceed the dataset")

    dataset, tables = prepare_dataset(spec)
    worker = functools.partial(_run_trial, dataset=dataset, tables=tables, spec=spec)
    if spec.workers > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            per_trial = list(pool.map(worker, range(spec.trials)))
    else:
        per_trial = [worker(trial) for trial in range(spec.trials)]
    results = [row for rows in per_trial for row in rows]

    if out_dir is not None:
        import os

        os.makedirs(out_dir, exist_ok=True)
        save_trials_csv(results, os.path.join(out_dir, "trials.csv"))
        save_aggregate_csv(results, os.path.join(out_dir, "aggregate.csv"))
    return results


_COLUMNS = ("method", "trial", "seed", "train_size", "n_b", "power_loss_0db",
            "power_loss_3db", "mean_rate", "normalized_rate")


def save_trials_csv(results: list[TrialResult], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(_COLUMNS) + "\n")
        for r in results:
            fh.write(",".join([
                r.method, str(r.trial), str(r.seed), str(r.train_size), str(r.n_b),
                repr(r.power_loss_0db), repr(r.power_loss_3db),
                repr(r.mean_rate), repr(r.normalized_rate),
            ]) + "\n")


def aggregate_results(results: list[TrialResult]) -> list[dict]:
    """Mean/std across trials per (method, train_size, n_b), in first-seen order."""
    groups: dict[tuple, list[TrialResult]] = {}
    for r in results:
        groups.setdefault((r.method, r.train_size, r.n_b), []).append(r)
    rows = []
    for (method, train_size, n_b), rs in groups.items():
        row = {"method": method, "train_size": train_size, "n_b": n_b,
               "trials": len(rs)}
        for metric in ("power_loss_0db", "power_loss_3db", "mean_rate",
                       "normalized_rate"):
            values = np.array([getattr(r, metric) for r in rs])
            row[f"mean_{metric}"] = float(values.mean())
            row[f"std_{metric}"] = float(values.std(ddof=1)) if len(values) > 1 else 0.0
        rows.append(row)
    return rows


def save_aggregate_csv(results: list[TrialResult], path) -> None:
    rows = aggregate_results(results)
    metrics = ("power_loss_0db", "power_loss_3db", "mean_rate", "normalized_rate")
    header = ["method", "train_size", "n_b", "trials"]
    for m in metrics:
        header += [f"mean_{m}", f"std_{m}"]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            cells = [row["method"], str(row["train_size"]), str(row["n_b"]),
                     str(row["trials"])]
            for m in metrics:
                cells += [repr(row[f"mean_{m}"]), repr(row[f"std_{m}"])]
            fh.write(",".join(cells) + "\n")


def save_plots(results: list[TrialResult], out_dir, n_b_fixed: int = 16) -> list[str]:
    """Render the three benchmark panels to SVG; returns written paths."""
    import os

    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    os.makedirs(out_dir, exist_ok=True)
    rows = aggregate_results(results)
    methods = list(dict.fromkeys(r["method"] for r in rows))
    top_train = max(r["train_size"] for r in rows)
    written = []

    fig, ax = plt.subplots(figsize=(5, 4))
    for method in methods:
        pts = sorted((r["n_b"], r["mean_power_loss_0db"], r["mean_power_loss_3db"])
                     for r in rows if r["method"] == method and r["train_size"] == top_train)
        ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=f"{method} (0 dB)")
        ax.plot([p[0] for p in pts], [p[2] for p in pts], marker="x", linestyle="--",
                label=f"{method} (3 dB)")
    ax.set_xlabel("candidate list size")
    ax.set_ylabel("power loss probability")
    ax.set_yscale("log")
    ax.legend(fontsize=7)
    path = os.path.join(out_dir, "power_loss_vs_nb.svg")
    fig.savefig(path, format="svg")
    plt.close(fig)
    written.append(path)

    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 4))
    for method in methods:
        pts = sorted((r["n_b"], r["mean_mean_rate"], r["mean_normalized_rate"])
                     for r in rows if r["method"] == method and r["train_size"] == top_train)
        ax1.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=method)
        ax2.plot([p[0] for p in pts], [p[2] for p in pts], marker="o", label=method)
    ax1.set_xlabel("candidate list size")
    ax1.set_ylabel("mean achievable rate (bits/s/Hz)")
    ax2.set_xlabel("candidate list size")
    ax2.set_ylabel("normalized mean rate")
    ax1.legend(fontsize=7)
    path = os.path.join(out_dir, "rate_vs_nb.svg")
    fig.savefig(path, format="svg")
    plt.close(fig)
    written.append(path)

    fig, ax = plt.subplots(figsize=(5, 4))
    plotted = False
    for method in methods:
        pts = sorted((r["train_size"], r["mean_power_loss_0db"])
                     for r in rows if r["method"] == method and r["n_b"] == n_b_fixed)
        if len(pts) > 1:
            ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=method)
            plotted = True
    ax.set_xlabel("training samples")
    ax.set_ylabel(f"0 dB power loss probability (n_b = {n_b_fixed})")
    if plotted:
        ax.legend(fontsize=7)
    path = os.path.join(out_dir, "power_loss_vs_train.svg")
    fig.savefig(path, format="svg")
    plt.close(fig)
    written.append(path)
    return written
