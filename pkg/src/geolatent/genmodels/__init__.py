"""Six generative-model kinds over flattened constrained clouds, all
exposing fit / encode / decode / sample with the constraint projection as
the decoder's final layer."""

from __future__ import annotations

import numpy as np

from .base import (KINDS, GenModelConfig, GenerativeModel, Standardizer,
                   TrainingDiverged, load_genmodel, preset_config,
                   project_rows, project_rows_np)
from .vae import VaeModel
from .aae import AaeModel
from .began import BeganModel
from .flows import RealNvpFlow
from .priors import (AePriorModel, DdpmPrior, EbmPrior, LatentPrior, NfPrior,
                     fit_latent_prior)

_MODEL_CLASSES = {"vae": VaeModel, "aae": AaeModel, "began": BeganModel,
                  "nf": AePriorModel, "ebm": AePriorModel, "ddpm": AePriorModel}


def fit_genmodel(data, config: GenModelConfig, constraint=None,
                 reference=None, constraint_kind: str = "none"):
    """Train a generative model of config.kind on (m, n) data rows.

    With a ConstraintSpec (plus its reference mesh), every decode output is
    projected onto the constraint set.
    """
    data = np.atleast_2d(np.asarray(data, float))
    if data.shape[1] != config.data_dim:
        raise ValueError(f"data dim {data.shape[1]} != config.data_dim {config.data_dim}")
    std = Standardizer.fit(data)
    model = _MODEL_CLASSES[config.kind](config, std, constraint, reference,
                                        constraint_kind)
    return model.fit(data)


__all__ = [
    "KINDS", "GenModelConfig", "GenerativeModel", "Standardizer",
    "TrainingDiverged", "preset_config", "project_rows", "project_rows_np",
    "VaeModel", "AaeModel", "BeganModel", "RealNvpFlow",
    "AePriorModel", "LatentPrior", "NfPrior", "EbmPrior", "DdpmPrior",
    "fit_latent_prior", "fit_genmodel", "load_genmodel",
]
