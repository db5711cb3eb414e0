"""Position-aided beam selection for mmWave MIMO.

Synthesizes position-dependent multipath channels, labels optimal beam
pairs by exhaustive search over DFT codebooks, fits a low-rank joint PMF
of positions and beam indices by variational Bayes, and benchmarks MAP
top-N selection against fingerprinting and neural-network baselines.
"""

from ._kernels import kernel_backend
from .baselines import (AdamState, FingerprintDatabase, MlpHyperparams, MlpModel,
                        fingerprint_top_n, fingerprint_train, mlp_forward,
                        mlp_top_n, mlp_train)
from .channel import (ArrayGeometry, ChannelMatrix, PathComponent,
                      assemble_channel, spatial_frequencies, steering_vector)
from .codebook import (BeamPair, Codebook, RadioConfig, build_dft_codebook,
                       compute_rss, exhaustive_search, rss_table, rss_tables)
from .dataset import (BeamDataset, Grid, LabeledSample, build_dataset,
                      dataset_channels, load_dataset_csv, save_dataset_csv,
                      split_shuffle)
from .harness import ExperimentSpec, TrialResult, run_experiment
from .metrics import achievable_rate, power_loss_probability
from .pmf import (CpdPmfModel, ZeroEvidenceError, evaluate_joint,
                  materialize_full_tensor, posterior_over_beams)
from .scene import SceneSpec, synthesize_paths
from .select import CandidateList, refine_by_rss, select_map, top_n
from .vb import FitResult, VbHyperparams, VbPosterior, fit

__version__ = "0.1.0"

__all__ = [
    "AdamState", "ArrayGeometry", "BeamDataset", "BeamPair", "CandidateList",
    "ChannelMatrix", "Codebook", "CpdPmfModel", "ExperimentSpec",
    "FingerprintDatabase", "FitResult", "Grid", "LabeledSample",
    "MlpHyperparams", "MlpModel", "PathComponent", "RadioConfig", "SceneSpec",
    "TrialResult", "VbHyperparams", "VbPosterior", "ZeroEvidenceError",
    "achievable_rate", "assemble_channel", "build_dataset",
    "build_dft_codebook", "compute_rss", "dataset_channels", "evaluate_joint",
    "exhaustive_search", "fingerprint_top_n", "fingerprint_train", "fit",
    "kernel_backend", "load_dataset_csv", "materialize_full_tensor",
    "mlp_forward", "mlp_top_n", "mlp_train", "posterior_over_beams",
    "power_loss_probability", "refine_by_rss", "rss_table", "rss_tables",
    "run_experiment", "save_dataset_csv", "select_map", "spatial_frequencies",
    "split_shuffle", "steering_vector", "synthesize_paths", "top_n",
]
