"""Plain-text key-value configuration files.

One ``key = value`` pair per line; blank lines and ``#`` comments are
ignored; later duplicates win. Values stay strings until coerced. The full
key schema is documented in the README; every key can also be overridden
by a CLI flag.
"""

from .baselines import MlpHyperparams
from .channel import ArrayGeometry
from .codebook import RadioConfig
from .harness import ExperimentSpec
from .scene import SceneSpec
from .vb import VbHyperparams


def load_config(path) -> dict[str, str]:
    cfg: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
            key, _, value = line.partition("=")
            cfg[key.strip()] = value.strip()
    return cfg


def parse_bool(value: str) -> bool:
    lowered = value.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"cannot interpret {value!r} as a boolean")


def parse_int_list(value: str) -> tuple[int, ...]:
    return tuple(int(v) for v in value.replace(",", " ").split())


def parse_float_list(value: str) -> tuple[float, ...]:
    return tuple(float(v) for v in value.replace(",", " ").split())


def scene_from_mapping(cfg: dict[str, str]) -> SceneSpec:
    base = SceneSpec()
    kwargs = {}
    if "area" in cfg:
        kwargs["area"] = parse_float_list(cfg["area"])
    if "bs_position" in cfg:
        kwargs["bs_position"] = parse_float_list(cfg["bs_position"])
    if "ue_height" in cfg:
        kwargs["ue_height"] = float(cfg["ue_height"])
    if "num_paths" in cfg:
        kwargs["num_paths"] = int(cfg["num_paths"])
    if "num_blockers" in cfg:
        kwargs["num_blockers"] = int(cfg["num_blockers"])
    if "scene_seed" in cfg:
        kwargs["rng_seed"] = int(cfg["scene_seed"])
    if "blockage_seed" in cfg:
        kwargs["blockage_seed"] = int(cfg["blockage_seed"])
    if "carrier_wavelength" in cfg:
        kwargs["carrier_wavelength"] = float(cfg["carrier_wavelength"])
    import dataclasses
    return dataclasses.replace(base, **kwargs)


def geometry_from(value: str) -> ArrayGeometry:
    parts = value.replace(",", " ").split()
    if len(parts) == 2:
        return ArrayGeometry(int(parts[0]), int(parts[1]))
    if len(parts) == 4:
        return ArrayGeometry(int(parts[0]), int(parts[1]), float(parts[2]), float(parts[3]))
    raise ValueError(f"array geometry needs 2 or 4 values, got {value!r}")


def vb_from_mapping(cfg: dict[str, str]) -> VbHyperparams:
    kwargs = {}
    mapping = {
        "vb_alpha_lambda": ("alpha_lambda", float),
        "vb_alpha_factor": ("alpha_factor", float),
        "vb_r_init": ("r_init", int),
        "vb_max_iters": ("max_iters", int),
        "vb_elbo_rel_tol": ("elbo_rel_tol", float),
        "vb_prune_threshold": ("prune_threshold", float),
        "vb_prune_every_iter": ("prune_every_iter", parse_bool),
        "vb_refine_iters": ("refine_iters", int),
        "vb_seed": ("rng_seed", int),
    }
    for key, (attr, coerce) in mapping.items():
        if key in cfg:
            kwargs[attr] = coerce(cfg[key])
    return VbHyperparams(**kwargs)


def mlp_from_mapping(cfg: dict[str, str]) -> MlpHyperparams:
    kwargs = {}
    mapping = {
        "mlp_hidden": ("hidden", parse_int_list),
        "mlp_learning_rate": ("learning_rate", float),
        "mlp_beta1": ("beta1", float),
        "mlp_beta2": ("beta2", float),
        "mlp_epsilon": ("epsilon", float),
        "mlp_batch_size": ("batch_size", int),
        "mlp_epochs": ("epochs", int),
        "mlp_seed": ("rng_seed", int),
    }
    for key, (attr, coerce) in mapping.items():
        if key in cfg:
            kwargs[attr] = coerce(cfg[key])
    return MlpHyperparams(**kwargs)


def radio_from_mapping(cfg: dict[str, str]) -> RadioConfig:
    return RadioConfig.from_dbm(
        transmit_power_dbm=float(cfg.get("tx_power_dbm", "30")),
        bandwidth_hz=float(cfg.get("bandwidth_hz", "200e6")),
    )


def spec_from_mapping(cfg: dict[str, str]) -> ExperimentSpec:
    """Build a full experiment spec from parsed key-value pairs."""
    kwargs = {
        "scene": scene_from_mapping(cfg),
        "radio": radio_from_mapping(cfg),
        "vb_hyper": vb_from_mapping(cfg),
        "mlp_hyper": mlp_from_mapping(cfg),
    }
    if "tx_array" in cfg:
        kwargs["geometry_tx"] = geometry_from(cfg["tx_array"])
    if "rx_array" in cfg:
        kwargs["geometry_rx"] = geometry_from(cfg["rx_array"])
    simple = {
        "num_samples": ("num_samples", int),
        "bin_size": ("bin_size", float),
        "sample_seed": ("sample_seed", int),
        "trials": ("trials", int),
        "base_seed": ("base_seed", int),
        "test_size": ("test_size", int),
        "workers": ("workers", int),
    }
    for key, (attr, coerce) in simple.items():
        if key in cfg:
            kwargs[attr] = coerce(cfg[key])
    if "methods" in cfg:
        kwargs["methods"] = tuple(cfg["methods"].replace(",", " ").split())
    if "n_b_list" in cfg:
        kwargs["n_b_list"] = parse_int_list(cfg["n_b_list"])
    if "train_sizes" in cfg:
        kwargs["train_sizes"] = parse_int_list(cfg["train_sizes"])
    return ExperimentSpec(**kwargs)
