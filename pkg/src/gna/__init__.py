"""Generative neural annealer: a temperature-conditioned autoregressive
model that learns Boltzmann distributions of black-box combinatorial
objectives, with classical simulated annealing as the reference baseline."""

from .model import GNAModel, ModelConfig, WeightedSampleBatch

__version__ = "0.1.0"

__all__ = ["GNAModel", "ModelConfig", "WeightedSampleBatch", "__version__"]
