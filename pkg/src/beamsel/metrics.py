"""Evaluation metrics: power loss probability and achievable rate.

All metrics are evaluated noiselessly against full per-sample RSS tables;
the normalization baseline is the per-sample exhaustive optimum.
"""

import numpy as np

from .channel import ChannelMatrix
from .codebook import BeamPair, Codebook, RadioConfig, compute_rss


def _selected_rss(selections, tables: np.ndarray) -> np.ndarray:
    n, i_f, i_w = tables.shape
    if len(selections) != n:
        raise ValueError(f"{len(selections)} selections for {n} RSS tables")
    flat = tables.reshape(n, i_f * i_w)
    idx = np.array([s.flat(i_w) if isinstance(s, BeamPair) else int(s)
                    for s in selections])
    return flat[np.arange(n), idx]


def power_loss_probability(selections, rss_tables: np.ndarray, c: float) -> float:
    """Fraction of samples whose best pair beats the selected pair's RSS by
    more than the factor c (c=1 is the 0 dB case, c=2 the 3 dB case)."""
    if c < 1.0:
        raise ValueError("the power loss factor c must be >= 1")
    selected = _selected_rss(selections, rss_tables)
    best = rss_tables.reshape(rss_tables.shape[0], -1).max(axis=1)
    return float(np.mean(best > c * selected))


def rate_from_rss(rss, noise_variance: float):
    """Spectral efficiency log2(1 + RSS/noise) in bits/s/Hz."""
    return np.log2(1.0 + np.asarray(rss) / noise_variance)


def achievable_rate(channel: ChannelMatrix, selected: BeamPair, cb_tx: Codebook,
                    cb_rx: Codebook, config: RadioConfig) -> float:
    """Rate of one selected pair on one channel."""
    rss = compute_rss(channel, cb_tx.beam(selected.f_index),
                      cb_rx.beam(selected.w_index), config)
    return float(rate_from_rss(rss, config.noise_variance))
