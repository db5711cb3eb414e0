"""Synthetic propagation scenes with a fixed virtual-scatterer layout.

A scene fixes, from its seeds, a set of virtual scatterers (reflected-path
sources) and a set of circular blockers that shadow the line of sight.
Path synthesis is a pure function of (scene, position): the same position
always yields the same path list, and nearby positions see the same
scatterers from slightly different geometry, so the position-to-beam
mapping is spatially coherent and learnable.
"""

import functools
from dataclasses import dataclass

import numpy as np

from .channel import PathComponent

SPEED_OF_LIGHT = 299792458.0

# Scatterer heights and reflection amplitudes are drawn from these ranges;
# reflection loss keeps reflected paths weaker than an unblocked LOS.
_SCATTERER_HEIGHT_RANGE = (2.0, 25.0)
_REFLECTION_AMP_RANGE = (0.1, 0.5)
_BLOCKER_RADIUS_RANGE = (10.0, 40.0)


class SceneError(ValueError):
    """Raised for positions outside the scene area."""


@dataclass(frozen=True)
class SceneSpec:
    """Geometry and seeds defining one synthetic scene.

    ``area`` is (x_min, x_max, y_min, y_max) in meters. UE positions share
    a constant height ``ue_height``. ``num_paths`` bounds the path count:
    one LOS path (when unblocked) plus num_paths-1 scatterer paths.
    """

    area: tuple[float, float, float, float] = (0.0, 400.0, 0.0, 300.0)
    bs_position: tuple[float, float, float] = (0.0, 150.0, 30.0)
    ue_height: float = 1.5
    num_paths: int = 25
    num_blockers: int = 10
    rng_seed: int = 0
    blockage_seed: int = 0
    carrier_wavelength: float = SPEED_OF_LIGHT / 26e9

    def __post_init__(self):
        x_min, x_max, y_min, y_max = self.area
        if not (x_max > x_min and y_max > y_min):
            raise ValueError("scene area must be a nonempty rectangle")
        if self.num_paths < 1:
            raise ValueError("num_paths must be >= 1")
        if self.num_blockers < 0:
            raise ValueError("num_blockers must be >= 0")

    def contains(self, x: float, y: float) -> bool:
        x_min, x_max, y_min, y_max = self.area
        return x_min <= x <= x_max and y_min <= y <= y_max


@functools.lru_cache(maxsize=32)
def _scene_layout(scene: SceneSpec):
    """Scatterer and blocker geometry, fixed per scene by its seeds."""
    x_min, x_max, y_min, y_max = scene.area
    rng = np.random.default_rng(scene.rng_seed)
    n_scat = scene.num_paths - 1
    scatterers = np.column_stack([
        rng.uniform(x_min, x_max, n_scat),
        rng.uniform(y_min, y_max, n_scat),
        rng.uniform(*_SCATTERER_HEIGHT_RANGE, n_scat),
    ])
    amps = rng.uniform(*_REFLECTION_AMP_RANGE, n_scat)
    phases = rng.uniform(0.0, 2.0 * np.pi, n_scat)

    brng = np.random.default_rng(scene.blockage_seed)
    centers = np.column_stack([
        brng.uniform(x_min, x_max, scene.num_blockers),
        brng.uniform(y_min, y_max, scene.num_blockers),
    ])
    radii = brng.uniform(*_BLOCKER_RADIUS_RANGE, scene.num_blockers)
    return scatterers, amps, phases, centers, radii


def is_los(scene: SceneSpec, position) -> bool:
    """True when the 2-D segment from the BS to the position clears all blockers."""
    _, _, _, centers, radii = _scene_layout(scene)
    if centers.shape[0] == 0:
        return True
    a = np.asarray(scene.bs_position[:2])
    b = np.asarray(position[:2], dtype=np.float64)
    ab = b - a
    denom = float(ab @ ab)
    for c, r in zip(centers, radii):
        if denom == 0.0:
            d = np.hypot(*(c - a))
        else:
            t = np.clip(float((c - a) @ ab) / denom, 0.0, 1.0)
            d = float(np.hypot(*(c - (a + t * ab))))
        if d < r:
            return False
    return True


def _direction_angles(origin: np.ndarray, target: np.ndarray) -> tuple[float, float]:
    """(elevation, azimuth) of the unit vector from origin to target."""
    d = target - origin
    r = float(np.linalg.norm(d))
    elevation = float(np.arccos(np.clip(d[2] / r, -1.0, 1.0)))
    azimuth = float(np.arctan2(d[1], d[0]))
    if azimuth >= np.pi:  # arctan2 returns (-pi, pi]; wrap the top endpoint
        azimuth = -np.pi
    return elevation, azimuth


def synthesize_paths(scene: SceneSpec, position) -> list[PathComponent]:
    """Deterministic path list for one UE position.

    The LOS path (present when unblocked) has free-space-like amplitude
    1/distance and geometrically exact angles. Each scatterer contributes
    one reflected path with amplitude loss/(total path length) and a fixed
    per-scatterer phase offset. Positions outside the area raise
    :class:`SceneError`.
    """
    pos = np.asarray(position, dtype=np.float64)
    if pos.shape != (3,):
        raise SceneError(f"position must be a 3-vector, got shape {pos.shape}")
    if not scene.contains(pos[0], pos[1]):
        raise SceneError(f"position {tuple(pos)} outside scene area {scene.area}")
    bs = np.asarray(scene.bs_position, dtype=np.float64)
    wavelength = scene.carrier_wavelength
    scatterers, amps, phases, _, _ = _scene_layout(scene)

    paths = []
    if is_los(scene, pos):
        dist = float(np.linalg.norm(pos - bs))
        aod = _direction_angles(bs, pos)
        aoa = _direction_angles(pos, bs)
        gain = (1.0 / dist) * np.exp(-2j * np.pi * dist / wavelength)
        paths.append(PathComponent(
            gain=complex(gain),
            aoa_elevation=aoa[0], aoa_azimuth=aoa[1],
            aod_elevation=aod[0], aod_azimuth=aod[1],
            delay=dist / SPEED_OF_LIGHT,
        ))
    for k in range(scatterers.shape[0]):
        s = scatterers[k]
        d1 = float(np.linalg.norm(s - bs))
        d2 = float(np.linalg.norm(s - pos))
        total = d1 + d2
        aod = _direction_angles(bs, s)
        aoa = _direction_angles(pos, s)
        gain = (amps[k] / total) * np.exp(-1j * (2.0 * np.pi * total / wavelength + phases[k]))
        paths.append(PathComponent(
            gain=complex(gain),
            aoa_elevation=aoa[0], aoa_azimuth=aoa[1],
            aod_elevation=aod[0], aod_azimuth=aod[1],
            delay=total / SPEED_OF_LIGHT,
        ))
    return paths
