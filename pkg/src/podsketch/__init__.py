"""podsketch: dominant POD modes of large dense matrices via iterative
column/row sampling and merge-and-truncate updates.

The public surface re-exported here covers the dense kernels, the sampling
toolbox, the single-round baselines, the rank-r merge, the iterative
driver, accuracy metrics, and the out-of-core one-pass path.  The on-disk
formats live in :mod:`podsketch.podio`; the CLI in :mod:`podsketch.cli`.
"""

from .baselines import ctsvd, ltsvd
from .errors import (
    DegenerateDistributionError,
    FormatError,
    ParameterError,
    PodsketchError,
)
from .isma import (
    IsmaConfig,
    IterationTrace,
    convergence_cosines,
    get_update,
    isma_run,
)
from .matcore import (
    TruncatedFactor,
    as_dense,
    dense_svd,
    mean_center_rows,
    orthonormalize,
    pod_via_gram,
    thin_qr,
)
from .merge import (
    MergeBoundInput,
    block_merge,
    mat_error_bound,
    mat_flops_estimate,
    merge_chain,
)
from .ooc import BlockReader, incremental_pod, pass_count
from .podio import (
    read_csv_matrix,
    read_factor,
    read_matrix,
    write_factor,
    write_matrix,
)
from .quality import WedinReport, mode_angles, principal_angles, wedin_measure
from .sampling import (
    Distribution,
    SampleDraw,
    column_norm_distribution,
    ctsvd_sample_count,
    leverage_distribution,
    ltsvd_sample_count,
    residual_distribution,
    row_norm_distribution,
    sample_with_replacement,
    scale_sampled_columns,
    scale_sampled_rows,
    uniform_distribution,
)

__version__ = "0.1.0"

__all__ = [
    "BlockReader",
    "DegenerateDistributionError",
    "Distribution",
    "FormatError",
    "IsmaConfig",
    "IterationTrace",
    "MergeBoundInput",
    "ParameterError",
    "PodsketchError",
    "SampleDraw",
    "TruncatedFactor",
    "WedinReport",
    "as_dense",
    "block_merge",
    "column_norm_distribution",
    "convergence_cosines",
    "ctsvd",
    "ctsvd_sample_count",
    "dense_svd",
    "get_update",
    "incremental_pod",
    "isma_run",
    "leverage_distribution",
    "ltsvd",
    "ltsvd_sample_count",
    "mat_error_bound",
    "mat_flops_estimate",
    "mean_center_rows",
    "merge_chain",
    "mode_angles",
    "orthonormalize",
    "pass_count",
    "pod_via_gram",
    "principal_angles",
    "read_csv_matrix",
    "read_factor",
    "read_matrix",
    "residual_distribution",
    "row_norm_distribution",
    "sample_with_replacement",
    "scale_sampled_columns",
    "scale_sampled_rows",
    "thin_qr",
    "uniform_distribution",
    "wedin_measure",
    "write_factor",
    "write_matrix",
]
