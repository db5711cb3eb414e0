"""Command-line interface.

Subcommands: generate (scene + labeled dataset), train (one method on a
dataset), predict (ranked candidates for query positions), evaluate
(metrics of saved models on a dataset), sweep (the full multi-trial
benchmark protocol). Every subcommand takes --seed (default 42) and an
optional --config key-value file; flags override config values.
"""

import argparse
import dataclasses
import sys

import numpy as np

from . import config as cfgmod
from . import harness, pmf, vb
from .baselines import (FINGERPRINT_KIND, MLP_KIND, fingerprint_top_n,
                        fingerprint_train, load_fingerprint, load_mlp,
                        mlp_forward, mlp_train, save_fingerprint, save_mlp)
from .codebook import build_dft_codebook, rss_tables
from .container import load_container
from .dataset import (Grid, build_dataset, dataset_channels, load_channels,
                      load_dataset_csv, save_channels, save_dataset_csv)
from .select import bin_for_position


def _merged_config(args) -> dict[str, str]:
    cfg = cfgmod.load_config(args.config) if getattr(args, "config", None) else {}
    for item in getattr(args, "set", None) or []:
        if "=" not in item:
            raise ValueError(f"--set expects key=value, got {item!r}")
        key, _, value = item.partition("=")
        cfg[key.strip()] = value.strip()
    return cfg


def _cmd_generate(args) -> int:
    cfg = _merged_config(args)
    scene = cfgmod.scene_from_mapping(cfg)
    radio = cfgmod.radio_from_mapping(cfg)
    if args.scene_seed is not None:
        scene = dataclasses.replace(scene, rng_seed=args.scene_seed)
    if args.blockage_seed is not None:
        scene = dataclasses.replace(scene, blockage_seed=args.blockage_seed)
    geometry_tx = cfgmod.geometry_from(cfg.get("tx_array", "8 8"))
    geometry_rx = cfgmod.geometry_from(cfg.get("rx_array", "2 2"))
    num_samples = args.samples or int(cfg.get("num_samples", "2000"))
    bin_size = args.bin_size or float(cfg.get("bin_size", "5"))
    codebooks = (build_dft_codebook(geometry_tx), build_dft_codebook(geometry_rx))
    dataset = build_dataset(scene, num_samples, bin_size, codebooks, radio,
                            sample_seed=args.seed)
    save_dataset_csv(dataset, args.out)
    print(f"wrote {num_samples} samples to {args.out} "
          f"(grid {dataset.grid.n_x} x {dataset.grid.n_y})")
    if args.channels:
        save_channels(dataset_channels(dataset), args.channels)
        print(f"wrote channel sidecar to {args.channels}")
    return 0


def _cmd_train(args) -> int:
    cfg = _merged_config(args)
    dataset = load_dataset_csv(args.dataset)
    grid_meta = [dataset.grid.x_min, dataset.grid.y_min, dataset.grid.bin_size,
                 dataset.grid.n_x, dataset.grid.n_y]
    if args.method == "pmf":
        hyper = dataclasses.replace(cfgmod.vb_from_mapping(cfg), rng_seed=args.seed)
        result = vb.fit(dataset, hyper)
        pmf.save_model(result.model, args.out,
                       meta={"grid": grid_meta, "i_f": dataset.i_f, "i_w": dataset.i_w})
        print(f"fitted rank {result.r_hat} model in {len(result.elbo_trace)} "
              f"iterations; saved to {args.out}")
        if args.elbo_trace:
            vb.save_elbo_trace_csv(result, args.elbo_trace)
            print(f"wrote ELBO trace to {args.elbo_trace}")
    elif args.method == "fingerprint":
        db = fingerprint_train(dataset)
        save_fingerprint(db, args.out)
        print(f"built fingerprint database over {len(db.bin_rankings)} bins; "
              f"saved to {args.out}")
    elif args.method == "mlp":
        hyper = dataclasses.replace(cfgmod.mlp_from_mapping(cfg), rng_seed=args.seed)
        model, losses = mlp_train(dataset, hyper)
        save_mlp(model, args.out)
        print(f"trained MLP for {hyper.epochs} epochs "
              f"(final loss {losses[-1]:.4f}); saved to {args.out}")
    else:
        raise ValueError(f"unknown method {args.method!r}")
    return 0


def _read_positions_csv(path) -> np.ndarray:
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#") or line[0].isalpha():
                continue
            parts = [float(v) for v in line.split(",")]
            if len(parts) == 2:
                parts.append(0.0)
            rows.append(parts[:3])
    if not rows:
        raise ValueError(f"no positions found in {path}")
    return np.array(rows)


def _check_n_b(n_b: int, n_pairs: int, path_model) -> None:
    if not 1 <= n_b <= n_pairs:
        raise ValueError(f"model {path_model} ranks {n_pairs} pairs; "
                         f"cannot produce a top-{n_b} list")


def _rank_positions(path_model, positions, n_b) -> tuple[np.ndarray, np.ndarray, int]:
    """(ranks, scores, i_w) for each query position, using a saved model."""
    kind, _, _ = load_container(path_model)
    n = len(positions)
    if kind == pmf.CONTAINER_KIND:
        model, meta = pmf.load_model(path_model)
        _check_n_b(n_b, model.dims[2] * model.dims[3], path_model)
        g = meta["grid"]
        grid = Grid(x_min=float(g[0]), y_min=float(g[1]), bin_size=float(g[2]),
                    n_x=int(g[3]), n_y=int(g[4]))
        ranks = np.empty((n, n_b), dtype=np.int64)
        scores = np.empty((n, n_b))
        for i, pos in enumerate(positions):
            i_x, i_y = bin_for_position(grid, pos[0], pos[1])
            try:
                s = pmf.posterior_over_beams(model, i_x, i_y)
            except pmf.ZeroEvidenceError:
                s = pmf.beam_pair_marginal(model)
            flat = s.ravel()
            order = np.argsort(-flat, kind="stable")[:n_b]
            ranks[i] = order
            scores[i] = flat[order]
        return ranks, scores, model.dims[3]
    if kind == FINGERPRINT_KIND:
        db, _ = load_fingerprint(path_model)
        _check_n_b(n_b, db.n_pairs, path_model)
        ranks = np.empty((n, n_b), dtype=np.int64)
        scores = np.zeros((n, n_b))
        for i, pos in enumerate(positions):
            key = bin_for_position(db.grid, pos[0], pos[1])
            top = fingerprint_top_n(db, key, n_b)
            ranks[i] = [p.flat(db.i_w) for p in top.pairs]
            scores[i] = top.scores
        return ranks, scores, db.i_w
    if kind == MLP_KIND:
        model, _ = load_mlp(path_model)
        _check_n_b(n_b, model.n_classes, path_model)
        probs = np.atleast_2d(mlp_forward(model, positions))
        order = np.argsort(-probs, axis=1, kind="stable")[:, :n_b]
        scores = np.take_along_axis(probs, order, axis=1)
        return order.astype(np.int64), scores, model.i_w
    raise ValueError(f"cannot predict with container kind {kind!r}")


def _cmd_predict(args) -> int:
    positions = _read_positions_csv(args.positions)
    ranks, scores, i_w = _rank_positions(args.model, positions, args.top_n)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write("position_index,rank,f_index,w_index,score\n")
        for i in range(len(positions)):
            for k in range(args.top_n):
                flat = int(ranks[i, k])
                fh.write(f"{i + 1},{k + 1},{flat // i_w + 1},{flat % i_w + 1},"
                         f"{float(scores[i, k])!r}\n")
    print(f"wrote top-{args.top_n} candidates for {len(positions)} positions to {args.out}")
    return 0


def _cmd_evaluate(args) -> int:
    dataset = load_dataset_csv(args.dataset)
    cb_tx = build_dft_codebook(dataset.geometry_tx)
    cb_rx = build_dft_codebook(dataset.geometry_rx)
    cfg = _merged_config(args)
    radio = cfgmod.radio_from_mapping(cfg)
    if args.channels:
        channels = load_channels(args.channels)
        if channels.shape[0] != len(dataset):
            raise ValueError("channel sidecar does not match the dataset length")
    else:
        channels = dataset_channels(dataset)
    tables = rss_tables(channels, cb_tx, cb_rx, radio)
    n = len(dataset)
    flat_tables = tables.reshape(n, -1)
    best = flat_tables.max(axis=1)
    perfect_rate = float(np.log2(1.0 + best / radio.noise_variance).mean())
    n_b_list = cfgmod.parse_int_list(args.n_b)

    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write("model,kind,n_b,power_loss_0db,power_loss_3db,mean_rate,"
                 "normalized_rate\n")
        for path_model in args.model:
            kind, _, _ = load_container(path_model)
            n_max = max(n_b_list)
            ranks, _, _ = _rank_positions(path_model, dataset.positions, n_max)
            vals = np.take_along_axis(flat_tables, ranks, axis=1)
            rows = np.arange(n)
            for n_b in n_b_list:
                pick = np.argmax(vals[:, :n_b], axis=1)
                sel = vals[rows, pick]
                mean_rate = float(np.log2(1.0 + sel / radio.noise_variance).mean())
                fh.write(",".join([
                    str(path_model), kind, str(n_b),
                    repr(float(np.mean(best > sel))),
                    repr(float(np.mean(best > 2.0 * sel))),
                    repr(mean_rate), repr(mean_rate / perfect_rate),
                ]) + "\n")
    print(f"wrote metrics for {len(args.model)} model(s) to {args.out}")
    return 0


def _cmd_sweep(args) -> int:
    cfg = _merged_config(args)
    spec = cfgmod.spec_from_mapping(cfg)
    overrides = {}
    if args.seed is not None:
        overrides["base_seed"] = args.seed
    if args.trials is not None:
        overrides["trials"] = args.trials
    if args.workers is not None:
        overrides["workers"] = args.workers
    if overrides:
        spec = dataclasses.replace(spec, **overrides)
    results = harness.run_experiment(spec, out_dir=args.out)
    print(f"ran {spec.trials} trials x {len(spec.methods)} methods; "
          f"results in {args.out}")
    if args.plot:
        paths = harness.save_plots(results, args.out)
        print("wrote plots: " + ", ".join(paths))
    return 0


def _add_config_flags(p) -> None:
    p.add_argument("--config", help="key-value config file")
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override one config value; repeatable")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="beamsel",
        description="Position-aided beam selection benchmark harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="synthesize a scene and labeled dataset")
    p.add_argument("--out", required=True, help="output dataset CSV")
    p.add_argument("--channels", help="optional binary channel sidecar")
    _add_config_flags(p)
    p.add_argument("--samples", type=int, help="number of samples")
    p.add_argument("--bin-size", type=float, help="position bin size in meters")
    p.add_argument("--seed", type=int, default=42, help="sample seed (default 42)")
    p.add_argument("--scene-seed", type=int, help="scene layout seed")
    p.add_argument("--blockage-seed", type=int, help="blockage layout seed")
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("train", help="train one method on a dataset")
    p.add_argument("--method", required=True, choices=("pmf", "fingerprint", "mlp"))
    p.add_argument("--dataset", required=True, help="dataset CSV from 'generate'")
    p.add_argument("--out", required=True, help="output model file")
    _add_config_flags(p)
    p.add_argument("--seed", type=int, default=42, help="training seed (default 42)")
    p.add_argument("--elbo-trace", help="write the fit's ELBO trace CSV here")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("predict", help="rank candidate pairs for query positions")
    p.add_argument("--model", required=True, help="model file from 'train'")
    p.add_argument("--positions", required=True, help="CSV of x,y[,z] positions")
    p.add_argument("--out", required=True, help="output candidates CSV")
    p.add_argument("--top-n", type=int, default=6, help="candidates per position")
    p.add_argument("--seed", type=int, default=42, help="unused; kept for uniformity")
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("evaluate", help="score saved models on a dataset")
    p.add_argument("--model", required=True, action="append",
                   help="model file; repeat for several models")
    p.add_argument("--dataset", required=True, help="dataset CSV (used as test set)")
    p.add_argument("--out", required=True, help="output metrics CSV")
    p.add_argument("--n-b", default="1,2,4,6,8,12,16,24,32",
                   help="comma-separated candidate list sizes")
    p.add_argument("--channels", help="channel sidecar (skips regeneration)")
    _add_config_flags(p)
    p.add_argument("--seed", type=int, default=42, help="unused; kept for uniformity")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("sweep", help="run the multi-trial benchmark protocol")
    _add_config_flags(p)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=None, help="base seed override")
    p.add_argument("--trials", type=int, help="trial count override")
    p.add_argument("--workers", type=int, help="worker pool size override")
    p.add_argument("--plot", action="store_true", help="also render SVG panels")
    p.set_defaults(func=_cmd_sweep)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
