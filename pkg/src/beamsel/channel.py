"""Uniform planar array steering vectors and narrowband channel assembly.

Arrays live in the x-y plane. Directions are given by the polar angle
(``elevation``, measured from the z-axis, in [0, pi]) and the azimuth
(measured from the x-axis, in [-pi, pi)). All angles are in radians;
degrees are converted at the CLI/config boundary only.
"""

from dataclasses import dataclass

import numpy as np

# A channel is a plain complex ndarray of shape (m_r, m_t); zero matrices
# are valid (fully blocked positions).
ChannelMatrix = np.ndarray


@dataclass(frozen=True)
class ArrayGeometry:
    """Element counts and spacings of a uniform planar array.

    Spacings are in carrier wavelengths; half-wavelength spacing on both
    axes is the default configuration.
    """

    m_x: int
    m_y: int
    delta_x: float = 0.5
    delta_y: float = 0.5

    def __post_init__(self):
        if self.m_x < 1 or self.m_y < 1:
            raise ValueError("element counts must be >= 1")
        if self.delta_x <= 0 or self.delta_y <= 0:
            raise ValueError("element spacings must be positive")

    @property
    def size(self) -> int:
        """Total element count m_x * m_y."""
        return self.m_x * self.m_y


@dataclass(frozen=True)
class PathComponent:
    """One propagation path of the narrowband geometric channel model.

    ``delay`` (seconds) is carried for format compatibility with ray-traced
    path lists but is ignored by the narrowband model; do not expect it to
    influence the assembled channel.
    """

    gain: complex
    aoa_elevation: float
    aoa_azimuth: float
    aod_elevation: float
    aod_azimuth: float
    delay: float = 0.0

    def __post_init__(self):
        for name in ("aoa_elevation", "aod_elevation"):
            v = getattr(self, name)
            if not 0.0 <= v <= np.pi:
                raise ValueError(f"{name} must lie in [0, pi], got {v}")
        for name in ("aoa_azimuth", "aod_azimuth"):
            v = getattr(self, name)
            if not -np.pi <= v < np.pi:
                raise ValueError(f"{name} must lie in [-pi, pi), got {v}")


def spatial_frequencies(geometry: ArrayGeometry, elevation: float,
                        azimuth: float) -> tuple[float, float]:
    """Per-axis phase increments (radians per element) for a direction.

    mu_x = 2*pi*delta_x*sin(elevation)*cos(azimuth) and
    mu_y = 2*pi*delta_y*sin(elevation)*sin(azimuth), with the spacings
    expressed in wavelengths.
    """
    s = np.sin(elevation)
    mu_x = 2.0 * np.pi * geometry.delta_x * s * np.cos(azimuth)
    mu_y = 2.0 * np.pi * geometry.delta_y * s * np.sin(azimuth)
    return float(mu_x), float(mu_y)


def steering_vector(geometry: ArrayGeometry, elevation: float,
                    azimuth: float) -> np.ndarray:
    """Unit-norm array response for the given direction.

    Kronecker product of the x-axis and y-axis phase ramps, scaled by
    1/sqrt(m_x*m_y). Length equals ``geometry.size``.
    """
    mu_x, mu_y = spatial_frequencies(geometry, elevation, azimuth)
    ramp_x = np.exp(1j * mu_x * np.arange(geometry.m_x))
    ramp_y = np.exp(1j * mu_y * np.arange(geometry.m_y))
    return np.kron(ramp_x, ramp_y) / np.sqrt(geometry.size)


def assemble_channel(geometry_tx: ArrayGeometry, geometry_rx: ArrayGeometry,
                     paths: list[PathComponent]) -> ChannelMatrix:
    """Sum of per-path rank-one terms gain * a_rx * a_tx^H.

    An empty path list yields the (m_r, m_t) zero matrix.
    """
    h = np.zeros((geometry_rx.size, geometry_tx.size), dtype=np.complex128)
    for p in paths:
        a_rx = steering_vector(geometry_rx, p.aoa_elevation, p.aoa_azimuth)
        a_tx = steering_vector(geometry_tx, p.aod_elevation, p.aod_azimuth)
        h += p.gain * np.outer(a_rx, a_tx.conj())
    return h
