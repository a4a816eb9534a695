"""
Synthetic low-multilinear-rank tensors with Gaussian cores and orthogonal factors.
"""

from typing import Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, PositiveFloat, model_validator

from core.errors import TensorArgumentError
from core.tensors import tucker_reconstruct
from solvers.lrfmtc import TuckerModel
from utils.logger import get_component_logger, log_experiment_function

logger = get_component_logger('experiments', 'synthetic')

DEFAULT_ENTRY_RMS = 3.0


def check_feasible(dims, rank):
    """Raise ValueError unless 1 <= R_k <= I_k and R_k <= prod of the other ranks."""
    if min(dims) < 1 or min(rank) < 1:
        raise ValueError(f"dims and rank must be positive, got {dims} and {rank}")
    for k in range(3):
        if rank[k] > dims[k]:
            raise ValueError(f"rank R{k + 1}={rank[k]} exceeds extent I{k + 1}={dims[k]}")
        if rank[k] > rank[(k + 1) % 3] * rank[(k + 2) % 3]:
            raise ValueError(
                f"rank {rank} infeasible: R{k + 1} must not exceed the product of the others"
            )


class SyntheticSpec(BaseModel):
    """
    Shape and multilinear rank of a synthetic Tucker tensor.

    With ``orthogonalize`` the factor columns are orthonormalized. The
    tensor is then rescaled so its root-mean-square entry equals
    ``entry_rms``, which keeps the data on the scale the default
    regularization weight is tuned for whatever the rank. ``None`` leaves
    the raw draw untouched.
    """

    model_config = ConfigDict(frozen=True, extra='forbid')

    dims: Tuple[int, int, int]
    rank: Tuple[int, int, int]
    seed: int = 0
    orthogonalize: bool = True
    entry_rms: Optional[PositiveFloat] = DEFAULT_ENTRY_RMS

    @model_validator(mode='after')
    def _feasible_rank(self):
        check_feasible(self.dims, self.rank)
        return self


def _orthonormal_columns(a):
    q, r = np.linalg.qr(a)
    # fix the sign so the factorization is unique
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return q * signs


@log_experiment_function
def generate_tucker(spec: SyntheticSpec):
    """
    Draw a Tucker tensor with i.i.d. standard-normal core and factors.

    Returns:
        tuple: (dense tensor, ground-truth TuckerModel). Any rescaling to
        ``entry_rms`` is absorbed into the model's core.
    """
    if not isinstance(spec, SyntheticSpec):
        raise TensorArgumentError("generate_tucker expects a SyntheticSpec")
    rng = np.random.default_rng(spec.seed)
    core = rng.standard_normal(spec.rank)
    factors = [rng.standard_normal((d, r)) for d, r in zip(spec.dims, spec.rank)]
    if spec.orthogonalize:
        factors = [_orthonormal_columns(a) for a in factors]

    tensor = tucker_reconstruct(core, *factors)
    if spec.entry_rms is not None:
        scale = spec.entry_rms * np.sqrt(tensor.size) / np.linalg.norm(tensor)
        core = core * scale
        tensor = tensor * scale

    model = TuckerModel(np.asfortranarray(core), *factors)
    logger.info(f"Generated {spec.dims} tensor of multilinear rank {spec.rank} (seed {spec.seed})")
    return np.asfortranarray(tensor), model
