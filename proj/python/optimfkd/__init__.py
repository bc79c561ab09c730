"""Forward-kinodynamic optimal control stack."""

from ._optimfkd import (
    FkdModel,
    IkdModel,
    SimParams,
    builtin_path,
    builtin_path_names,
    generate_dataset,
    hausdorff_distance,
    run_follow,
    sim_rollout,
    sim_step,
    train_fkd,
)

__all__ = [
    "FkdModel",
    "IkdModel",
    "SimParams",
    "builtin_path",
    "builtin_path_names",
    "generate_dataset",
    "hausdorff_distance",
    "run_follow",
    "sim_rollout",
    "sim_step",
    "train_fkd",
]
