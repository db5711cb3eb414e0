"""Labeled beam datasets: construction, binning, splitting, persistence.

A dataset row pairs one UE position with the exhaustive-search optimal
beam pair for the channel synthesized at that position. Positions are
discretized on a uniform grid anchored at the area's min corner. Pair and
bin indices are 0-based in memory and 1-based in persisted CSV files.
"""

import struct
from dataclasses import dataclass

import numpy as np

from .channel import ArrayGeometry, assemble_channel
from .codebook import BeamPair, Codebook, RadioConfig, exhaustive_search
from .scene import SceneSpec, synthesize_paths

_CHANNEL_MAGIC = b"BSELCHAN"
_CHANNEL_VERSION = 1


@dataclass(frozen=True)
class Grid:
    """Uniform 2-D binning of the scene area."""

    x_min: float
    y_min: float
    bin_size: float
    n_x: int
    n_y: int

    def __post_init__(self):
        if self.bin_size <= 0:
            raise ValueError("bin size must be positive")
        if self.n_x < 1 or self.n_y < 1:
            raise ValueError("grid dimensions must be >= 1")

    @classmethod
    def for_area(cls, area, bin_size: float) -> "Grid":
        x_min, x_max, y_min, y_max = area
        n_x = int(np.ceil((x_max - x_min) / bin_size))
        n_y = int(np.ceil((y_max - y_min) / bin_size))
        return cls(x_min=x_min, y_min=y_min, bin_size=bin_size, n_x=n_x, n_y=n_y)

    def bin_of(self, x: float, y: float) -> tuple[int, int]:
        """0-based bin indices, clamped to the grid edges."""
        i_x = int(np.floor((x - self.x_min) / self.bin_size))
        i_y = int(np.floor((y - self.y_min) / self.bin_size))
        return (min(max(i_x, 0), self.n_x - 1), min(max(i_y, 0), self.n_y - 1))

    def contains(self, x: float, y: float) -> bool:
        i_x = np.floor((x - self.x_min) / self.bin_size)
        i_y = np.floor((y - self.y_min) / self.bin_size)
        return 0 <= i_x < self.n_x and 0 <= i_y < self.n_y


@dataclass(frozen=True)
class LabeledSample:
    """One dataset row; ``bin`` is 0-based, the pair is 1-based."""

    position: tuple[float, float, float]
    bin: tuple[int, int]
    optimal_pair: BeamPair


@dataclass
class BeamDataset:
    """Column-array view of T labeled samples plus scene/grid metadata.

    ``pairs_f``/``pairs_w`` hold 0-based beam indices; use :attr:`samples`
    for the 1-based :class:`BeamPair` view.
    """

    positions: np.ndarray          # (T, 3) float64
    bins: np.ndarray               # (T, 2) int64
    pairs_f: np.ndarray            # (T,) int64, 0-based
    pairs_w: np.ndarray            # (T,) int64, 0-based
    grid: Grid
    geometry_tx: ArrayGeometry
    geometry_rx: ArrayGeometry
    scene: SceneSpec | None = None
    sample_seed: int | None = None

    def __post_init__(self):
        t = len(self.positions)
        if t < 1:
            raise ValueError("dataset must contain at least one sample")
        if not (len(self.bins) == len(self.pairs_f) == len(self.pairs_w) == t):
            raise ValueError("column lengths disagree")
        if self.bins[:, 0].max() >= self.grid.n_x or self.bins[:, 1].max() >= self.grid.n_y:
            raise ValueError("bin indices exceed the grid")
        if self.bins.min() < 0:
            raise ValueError("bin indices must be nonnegative")
        if self.pairs_f.max() >= self.i_f or self.pairs_w.max() >= self.i_w:
            raise ValueError("pair indices exceed the codebook sizes")

    def __len__(self) -> int:
        return len(self.positions)

    @property
    def i_f(self) -> int:
        return self.geometry_tx.size

    @property
    def i_w(self) -> int:
        return self.geometry_rx.size

    @property
    def samples(self) -> list[LabeledSample]:
        return [
            LabeledSample(
                position=tuple(self.positions[t]),
                bin=(int(self.bins[t, 0]), int(self.bins[t, 1])),
                optimal_pair=BeamPair(int(self.pairs_f[t]) + 1, int(self.pairs_w[t]) + 1),
            )
            for t in range(len(self))
        ]

    def flat_labels(self) -> np.ndarray:
        """0-based flattened pair index per sample (precoder-major)."""
        return self.pairs_f * self.i_w + self.pairs_w

    def subset(self, indices) -> "BeamDataset":
        idx = np.asarray(indices)
        return BeamDataset(
            positions=self.positions[idx],
            bins=self.bins[idx],
            pairs_f=self.pairs_f[idx],
            pairs_w=self.pairs_w[idx],
            grid=self.grid,
            geometry_tx=self.geometry_tx,
            geometry_rx=self.geometry_rx,
            scene=self.scene,
            sample_seed=self.sample_seed,
        )


def build_dataset(scene: SceneSpec, num_samples: int, bin_size: float,
                  codebooks: tuple[Codebook, Codebook], config: RadioConfig,
                  sample_seed: int = 0) -> BeamDataset:
    """Sample positions uniformly, synthesize channels, label by exhaustive search."""
    if num_samples < 1:
        raise ValueError("num_samples must be >= 1")
    cb_tx, cb_rx = codebooks
    x_min, x_max, y_min, y_max = scene.area
    grid = Grid.for_area(scene.area, bin_size)
    rng = np.random.default_rng(sample_seed)
    xs = rng.uniform(x_min, x_max, num_samples)
    ys = rng.uniform(y_min, y_max, num_samples)

    positions = np.column_stack([xs, ys, np.full(num_samples, scene.ue_height)])
    bins = np.empty((num_samples, 2), dtype=np.int64)
    pairs_f = np.empty(num_samples, dtype=np.int64)
    pairs_w = np.empty(num_samples, dtype=np.int64)
    for t in range(num_samples):
        paths = synthesize_paths(scene, positions[t])
        h = assemble_channel(cb_tx.geometry, cb_rx.geometry, paths)
        best, _ = exhaustive_search(h, cb_tx, cb_rx, config)
        bins[t] = grid.bin_of(positions[t, 0], positions[t, 1])
        pairs_f[t] = best.f_index - 1
        pairs_w[t] = best.w_index - 1
    return BeamDataset(
        positions=positions, bins=bins, pairs_f=pairs_f, pairs_w=pairs_w,
        grid=grid, geometry_tx=cb_tx.geometry, geometry_rx=cb_rx.geometry,
        scene=scene, sample_seed=sample_seed,
    )


def dataset_channels(dataset: BeamDataset) -> np.ndarray:
    """Regenerate all channel matrices, shape (T, m_r, m_t)."""
    if dataset.scene is None:
        raise ValueError("dataset carries no scene; load a channel sidecar instead")
    out = np.empty((len(dataset), dataset.geometry_rx.size, dataset.geometry_tx.size),
                   dtype=np.complex128)
    for t in range(len(dataset)):
        paths = synthesize_paths(dataset.scene, dataset.positions[t])
        out[t] = assemble_channel(dataset.geometry_tx, dataset.geometry_rx, paths)
    return out


def split_shuffle(dataset: BeamDataset, train_fraction: float,
                  rng_seed: int) -> tuple[BeamDataset, BeamDataset]:
    """Seeded permutation followed by a train/test split."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must lie strictly between 0 and 1")
    t = len(dataset)
    n_train = int(round(train_fraction * t))
    n_train = min(max(n_train, 1), t - 1)
    perm = np.random.default_rng(rng_seed).permutation(t)
    return dataset.subset(perm[:n_train]), dataset.subset(perm[n_train:])


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------

def _meta_lines(dataset: BeamDataset) -> list[str]:
    scene = dataset.scene
    if scene is None:
        raise ValueError("cannot persist a dataset without scene metadata")
    g = dataset.grid
    gt, gr = dataset.geometry_tx, dataset.geometry_rx
    return [
        "# beamsel-dataset v1",
        f"# area = {' '.join(repr(float(v)) for v in scene.area)}",
        f"# bs_position = {' '.join(repr(float(v)) for v in scene.bs_position)}",
        f"# ue_height = {float(scene.ue_height)!r}",
        f"# num_paths = {scene.num_paths}",
        f"# num_blockers = {scene.num_blockers}",
        f"# scene_seed = {scene.rng_seed}",
        f"# blockage_seed = {scene.blockage_seed}",
        f"# carrier_wavelength = {float(scene.carrier_wavelength)!r}",
        f"# sample_seed = {dataset.sample_seed if dataset.sample_seed is not None else 0}",
        f"# bin_size = {float(g.bin_size)!r}",
        f"# grid = {g.n_x} {g.n_y}",
        f"# tx_array = {gt.m_x} {gt.m_y} {float(gt.delta_x)!r} {float(gt.delta_y)!r}",
        f"# rx_array = {gr.m_x} {gr.m_y} {float(gr.delta_x)!r} {float(gr.delta_y)!r}",
    ]


def save_dataset_csv(dataset: BeamDataset, path) -> None:
    """One CSV row per sample (x,y,z,i_x,i_y,i_f,i_w; indices 1-based)."""
    with open(path, "w", encoding="utf-8") as fh:
        for line in _meta_lines(dataset):
            fh.write(line + "\n")
        fh.write("x,y,z,i_x,i_y,i_f,i_w\n")
        for t in range(len(dataset)):
            x, y, z = dataset.positions[t]
            fh.write(
                f"{float(x)!r},{float(y)!r},{float(z)!r},"
                f"{dataset.bins[t, 0] + 1},{dataset.bins[t, 1] + 1},"
                f"{dataset.pairs_f[t] + 1},{dataset.pairs_w[t] + 1}\n"
            )


def load_dataset_csv(path) -> BeamDataset:
    meta: dict[str, str] = {}
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                if "=" in line:
                    key, _, value = line[1:].partition("=")
                    meta[key.strip()] = value.strip()
                continue
            if line.startswith("x,"):
                continue
            rows.append(line.split(","))
    required = ("area", "bs_position", "ue_height", "num_paths", "num_blockers",
                "scene_seed", "blockage_seed", "carrier_wavelength",
                "sample_seed", "bin_size", "grid", "tx_array", "rx_array")
    missing = [k for k in required if k not in meta]
    if missing:
        raise ValueError(f"dataset file {path} is missing metadata keys: {missing}")

    scene = SceneSpec(
        area=tuple(float(v) for v in meta["area"].split()),
        bs_position=tuple(float(v) for v in meta["bs_position"].split()),
        ue_height=float(meta["ue_height"]),
        num_paths=int(meta["num_paths"]),
        num_blockers=int(meta["num_blockers"]),
        rng_seed=int(meta["scene_seed"]),
        blockage_seed=int(meta["blockage_seed"]),
        carrier_wavelength=float(meta["carrier_wavelength"]),
    )
    tx = meta["tx_array"].split()
    rx = meta["rx_array"].split()
    geometry_tx = ArrayGeometry(int(tx[0]), int(tx[1]), float(tx[2]), float(tx[3]))
    geometry_rx = ArrayGeometry(int(rx[0]), int(rx[1]), float(rx[2]), float(rx[3]))
    n_x, n_y = (int(v) for v in meta["grid"].split())
    grid = Grid(x_min=scene.area[0], y_min=scene.area[2],
                bin_size=float(meta["bin_size"]), n_x=n_x, n_y=n_y)

    data = np.array([[float(v) for v in row] for row in rows])
    return BeamDataset(
        positions=data[:, 0:3],
        bins=data[:, 3:5].astype(np.int64) - 1,
        pairs_f=data[:, 5].astype(np.int64) - 1,
        pairs_w=data[:, 6].astype(np.int64) - 1,
        grid=grid, geometry_tx=geometry_tx, geometry_rx=geometry_rx,
        scene=scene, sample_seed=int(meta["sample_seed"]),
    )


def save_channels(channels: np.ndarray, path) -> None:
    """Binary channel sidecar: magic, dims, interleaved re/im LE doubles."""
    if channels.ndim != 3:
        raise ValueError("expected channels of shape (n, m_r, m_t)")
    n, m_r, m_t = channels.shape
    interleaved = np.empty((n, m_r, m_t, 2), dtype="<f8")
    interleaved[..., 0] = channels.real
    interleaved[..., 1] = channels.imag
    with open(path, "wb") as fh:
        fh.write(_CHANNEL_MAGIC)
        fh.write(struct.pack("<IQII", _CHANNEL_VERSION, n, m_r, m_t))
        fh.write(interleaved.tobytes())


def load_channels(path) -> np.ndarray:
    with open(path, "rb") as fh:
        magic = fh.read(8)
        if magic != _CHANNEL_MAGIC:
            raise ValueError(f"{path} is not a channel sidecar file")
        version, n, m_r, m_t = struct.unpack("<IQII", fh.read(20))
        if version != _CHANNEL_VERSION:
            raise ValueError(f"unsupported channel sidecar version {version}")
        raw = np.frombuffer(fh.read(), dtype="<f8")
    expected = n * m_r * m_t * 2
    if raw.size != expected:
        raise ValueError(f"channel sidecar truncated: {raw.size} values, expected {expected}")
    interleaved = raw.reshape(n, m_r, m_t, 2)
    return (interleaved[..., 0] + 1j * interleaved[..., 1]).astype(np.complex128)
