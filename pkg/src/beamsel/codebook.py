"""DFT beamforming codebooks, received signal strength, exhaustive search.

Beam and beam-pair indices are 1-based in persisted artifacts and in
:class:`BeamPair`; array positions are 0-based internally. The flattened
pair index orders the precoder first: flat = (f_index-1)*i_w + (w_index-1).
"""

from dataclasses import dataclass

import numpy as np

from .channel import ArrayGeometry, ChannelMatrix


@dataclass(frozen=True)
class BeamPair:
    """A precoding/combining index pair, 1-based."""

    f_index: int
    w_index: int

    def __post_init__(self):
        if self.f_index < 1 or self.w_index < 1:
            raise ValueError("beam indices are 1-based and must be >= 1")

    def flat(self, i_w: int) -> int:
        """0-based flattened pair index (precoder-major)."""
        return (self.f_index - 1) * i_w + (self.w_index - 1)

    @classmethod
    def from_flat(cls, flat: int, i_w: int) -> "BeamPair":
        return cls(flat // i_w + 1, flat % i_w + 1)


@dataclass(frozen=True)
class RadioConfig:
    """Link parameters in linear units (mW)."""

    transmit_power: float
    noise_variance: float
    pilot: complex = 1.0 + 0.0j

    def __post_init__(self):
        if self.transmit_power <= 0 or self.noise_variance <= 0:
            raise ValueError("transmit power and noise variance must be positive")
        if abs(abs(self.pilot) - 1.0) > 1e-12:
            raise ValueError("the pilot symbol must have unit power")

    @classmethod
    def from_dbm(cls, transmit_power_dbm: float = 30.0,
                 bandwidth_hz: float = 200e6) -> "RadioConfig":
        """Convert from dBm at the config boundary.

        The noise variance follows thermal noise at -174 dBm/Hz over the
        given bandwidth (-90.99 dBm at 200 MHz).
        """
        p_mw = 10.0 ** (transmit_power_dbm / 10.0)
        noise_dbm = -174.0 + 10.0 * np.log10(bandwidth_hz)
        return cls(transmit_power=p_mw, noise_variance=10.0 ** (noise_dbm / 10.0))


@dataclass(frozen=True)
class Codebook:
    """Ordered set of unit-norm beams; ``beams`` has shape (count, elements)."""

    beams: np.ndarray
    geometry: ArrayGeometry

    def __len__(self) -> int:
        return self.beams.shape[0]

    def beam(self, index: int) -> np.ndarray:
        """Beam by 1-based index."""
        return self.beams[index - 1]


def build_dft_codebook(geometry: ArrayGeometry) -> Codebook:
    """DFT codebook with one beam per array element.

    Beam (q_x, q_y) is the Kronecker product of the m_x-point DFT column
    with phase step 2*pi*q_x/m_x and the m_y-point DFT column with phase
    step 2*pi*q_y/m_y, normalized to unit norm; beams are ordered
    q_x-major. The resulting set is an orthonormal basis.
    """
    m_x, m_y = geometry.m_x, geometry.m_y
    dft_x = np.exp(2j * np.pi * np.outer(np.arange(m_x), np.arange(m_x)) / m_x)
    dft_y = np.exp(2j * np.pi * np.outer(np.arange(m_y), np.arange(m_y)) / m_y)
    beams = np.empty((m_x * m_y, m_x * m_y), dtype=np.complex128)
    for q_x in range(m_x):
        for q_y in range(m_y):
            beams[q_x * m_y + q_y] = np.kron(dft_x[q_x], dft_y[q_y])
    beams /= np.sqrt(geometry.size)
    return Codebook(beams=beams, geometry=geometry)


def compute_rss(channel: ChannelMatrix, f: np.ndarray, w: np.ndarray,
                config: RadioConfig, noise: np.ndarray | None = None) -> float:
    """Received signal strength (mW) for one precoder/combiner pair.

    With ``noise`` set to a length-m_r complex vector the combined noise
    term enters the measurement; with ``noise=None`` the deterministic
    noiseless value is returned (used for labeling and rate evaluation).
    """
    m_r, m_t = channel.shape
    if f.shape != (m_t,) or w.shape != (m_r,):
        raise ValueError(
            f"beam dimensions {f.shape}/{w.shape} do not match channel {channel.shape}"
        )
    y = np.sqrt(config.transmit_power) * (w.conj() @ channel @ f) * config.pilot
    if noise is not None:
        y = y + w.conj() @ noise
    return float(np.abs(y) ** 2)


def draw_noise(rng: np.random.Generator, m_r: int, noise_variance: float) -> np.ndarray:
    """Circularly symmetric complex Gaussian noise vector."""
    scale = np.sqrt(noise_variance / 2.0)
    return scale * (rng.standard_normal(m_r) + 1j * rng.standard_normal(m_r))


def rss_table(channel: ChannelMatrix, cb_tx: Codebook, cb_rx: Codebook,
              config: RadioConfig) -> np.ndarray:
    """Noiseless RSS (mW) for every pair; shape (i_f, i_w)."""
    m_r, m_t = channel.shape
    if cb_tx.beams.shape[1] != m_t or cb_rx.beams.shape[1] != m_r:
        raise ValueError("codebook dimensions do not match channel")
    # table[f, w] = P * |conj(w) H f|^2
    coupling = cb_rx.beams.conj() @ channel @ cb_tx.beams.T
    return config.transmit_power * np.abs(coupling.T) ** 2


def rss_tables(channels: np.ndarray, cb_tx: Codebook, cb_rx: Codebook,
               config: RadioConfig) -> np.ndarray:
    """Batched :func:`rss_table` over channels of shape (n, m_r, m_t)."""
    coupling = np.einsum("wm,smn,fn->sfw", cb_rx.beams.conj(), channels,
                         cb_tx.beams, optimize=True)
    return config.transmit_power * np.abs(coupling) ** 2


def exhaustive_search(channel: ChannelMatrix, cb_tx: Codebook, cb_rx: Codebook,
                      config: RadioConfig) -> tuple[BeamPair, np.ndarray]:
    """Best pair over all combinations by noiseless RSS, plus the table.

    Ties break toward the smallest flattened pair index.
    """
    table = rss_table(channel, cb_tx, cb_rx, config)
    flat = int(np.argmax(table))
    return BeamPair.from_flat(flat, len(cb_rx)), table


def save_rss_table_csv(table: np.ndarray, path) -> None:
    """Dump an RSS table as CSV: row = f_index, column = w_index, cell = mW."""
    i_f, i_w = table.shape
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("f_index," + ",".join(f"w_{j + 1}" for j in range(i_w)) + "\n")
        for i in range(i_f):
            fh.write(str(i + 1) + "," + ",".join(repr(float(v)) for v in table[i]) + "\n")
