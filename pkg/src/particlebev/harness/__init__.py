"""Scene corpus plumbing, the oracle denoiser, the training-prep and
inference paths, sweeps, and renderers behind the CLI."""

from .inference import (Denoiser, InferenceResult, TrainingPrep,
                        make_oracle_denoiser, run_inference, run_training_prep)
from .oracle import OracleDenoiserConfig, exact_oracle_config, oracle_denoise
from .render import write_pgm, write_svg_heatmap, write_svg_lines
from .scenes import (CLASS_SPECS, SceneRecord, SeparationError, WorldParams,
                     generate_scenes, read_scenes, write_scenes)
from .sweep import SweepSpec, predict_corpus, run_sweep, write_sweep_csv

__all__ = [
    "SceneRecord", "WorldParams", "SeparationError", "CLASS_SPECS",
    "generate_scenes", "read_scenes", "write_scenes",
    "OracleDenoiserConfig", "oracle_denoise", "exact_oracle_config",
    "Denoiser", "InferenceResult", "TrainingPrep", "make_oracle_denoiser",
    "run_inference", "run_training_prep",
    "SweepSpec", "predict_corpus", "run_sweep", "write_sweep_csv",
    "write_pgm", "write_svg_heatmap", "write_svg_lines",
]
