"""Multi-pose guided virtual try-on, trained on procedurally rendered figures.

Stages: conditional parsing synthesis, TPS geometric matching, a warping GAN
for the coarse result, and a composition-mask refinement. See ``mgvton.cli``
for the command-line entry point.
"""
from .kernels import BACKEND as KERNEL_BACKEND
from .synthetic import Triplet, make_dataset, make_triplet
from .training import Pipeline, TrainConfig, run_pipeline, train_all, train_stage

__version__ = "0.1.0"

__all__ = ["KERNEL_BACKEND", "Pipeline", "TrainConfig", "Triplet", "make_dataset", "make_triplet",
           "run_pipeline", "train_all", "train_stage", "__version__"]
