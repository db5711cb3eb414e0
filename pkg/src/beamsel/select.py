"""MAP beam-pair prediction and top-N candidate lists from a fitted model.

All orderings break ties toward the smallest flattened pair index
(precoder-major), which makes every selection deterministic.
"""

import logging
from dataclasses import dataclass

import numpy as np

from .channel import ChannelMatrix
from .codebook import BeamPair, Codebook, RadioConfig, compute_rss
from .dataset import Grid
from .pmf import CpdPmfModel, ZeroEvidenceError, beam_pair_marginal, posterior_over_beams

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CandidateList:
    """Distinct beam pairs with nonincreasing scores."""

    pairs: tuple[BeamPair, ...]
    scores: np.ndarray

    def __post_init__(self):
        if len(self.pairs) < 1 or len(self.pairs) != len(self.scores):
            raise ValueError("pairs and scores must be nonempty and aligned")
        if len(set(self.pairs)) != len(self.pairs):
            raise ValueError("candidate pairs must be distinct")
        if np.any(np.diff(self.scores) > 0):
            raise ValueError("scores must be nonincreasing")

    def __len__(self) -> int:
        return len(self.pairs)


def _scores_for_bin(model: CpdPmfModel, i_x: int, i_y: int,
                    fallback_to_marginal: bool) -> np.ndarray:
    try:
        return posterior_over_beams(model, i_x, i_y)
    except ZeroEvidenceError:
        if not fallback_to_marginal:
            raise
        logger.warning("bin (%d, %d) has zero evidence; falling back to the "
                       "beam-pair marginal", i_x, i_y)
        return beam_pair_marginal(model)


def select_map(model: CpdPmfModel, i_x: int, i_y: int,
               fallback_to_marginal: bool = False) -> BeamPair:
    """Highest-posterior pair for a position bin (0-based bin indices)."""
    scores = _scores_for_bin(model, i_x, i_y, fallback_to_marginal)
    flat = int(np.argmax(scores))
    return BeamPair.from_flat(flat, model.dims[3])


def top_n(model: CpdPmfModel, i_x: int, i_y: int, n_b: int,
          fallback_to_marginal: bool = False) -> CandidateList:
    """The n_b highest-posterior pairs in nonincreasing score order."""
    i_w = model.dims[3]
    n_pairs = model.dims[2] * i_w
    if not 1 <= n_b <= n_pairs:
        raise ValueError(f"n_b must lie in [1, {n_pairs}], got {n_b}")
    flat_scores = _scores_for_bin(model, i_x, i_y, fallback_to_marginal).ravel()
    order = np.argsort(-flat_scores, kind="stable")[:n_b]
    return CandidateList(
        pairs=tuple(BeamPair.from_flat(int(k), i_w) for k in order),
        scores=flat_scores[order],
    )


def refine_by_rss(candidates: CandidateList, channel: ChannelMatrix,
                  cb_tx: Codebook, cb_rx: Codebook, config: RadioConfig) -> BeamPair:
    """Best candidate by noiseless RSS; earlier candidates win ties."""
    values = [compute_rss(channel, cb_tx.beam(p.f_index), cb_rx.beam(p.w_index), config)
              for p in candidates.pairs]
    return candidates.pairs[int(np.argmax(values))]


def refine_from_table(candidate_flats: np.ndarray, rss_table: np.ndarray) -> int:
    """Table-indexed equivalent of :func:`refine_by_rss`; returns a flat id."""
    values = rss_table.ravel()[candidate_flats]
    return int(candidate_flats[int(np.argmax(values))])


def bin_for_position(grid: Grid, x: float, y: float) -> tuple[int, int]:
    """Discretize a query position; out-of-grid queries clamp with a warning."""
    if not grid.contains(x, y):
        logger.warning("position (%.3f, %.3f) is outside the trained grid; "
                       "clamping to the nearest edge bin", x, y)
    return grid.bin_of(x, y)
