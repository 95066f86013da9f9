from wlexit.wl_core.chain import run_chain, wl_step
from wlexit.wl_core.state import ChainState, LogWeightVector, SamplerHooks, StrataIndexer, WeightVector
from wlexit.wl_core.weights import (
    acceptance_ratio,
    log_acceptance_ratio,
    normalize,
    update_linearized,
    update_linearized_log,
    update_nonlinear,
    update_unnormalized,
)

__all__ = [
    "ChainState",
    "LogWeightVector",
    "SamplerHooks",
    "StrataIndexer",
    "WeightVector",
    "acceptance_ratio",
    "log_acceptance_ratio",
    "normalize",
    "run_chain",
    "update_linearized",
    "update_linearized_log",
    "update_nonlinear",
    "update_unnormalized",
    "wl_step",
]
