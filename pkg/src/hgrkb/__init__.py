"""Kernel-based HGR maximal correlation: estimators, subgradients and a constrained-training demo."""

__version__ = "0.1.0"

from hgrkb.errors import (
    DimensionMismatch,
    EmptyDataset,
    HgrError,
    InvalidDegree,
    InvalidSpec,
    LengthMismatch,
    MissingColumn,
    NoOracle,
    NonNumericValue,
    RankDeficient,
    ZeroVariance,
)
from hgrkb.kernelspace import KernelMatrix, SampleVector, expand, project
from hgrkb.correlation import (
    DegreeConfig,
    HgrResult,
    SolverConfig,
    degree_scan,
    hgr_kb,
    hgr_sk,
    pearson,
    pearson_lstsq,
)
from hgrkb.gradients import GradientResult, finite_diff_check, hgr_kb_subgradient, hgr_sk_gradient
from hgrkb.baselines import RdcConfig, rdc
from hgrkb.datagen import SyntheticSpec, generate, oracle_correlation

__all__ = [
    "__version__",
    "DegreeConfig",
    "DimensionMismatch",
    "EmptyDataset",
    "GradientResult",
    "HgrError",
    "HgrResult",
    "InvalidDegree",
    "InvalidSpec",
    "KernelMatrix",
    "LengthMismatch",
    "MissingColumn",
    "NoOracle",
    "NonNumericValue",
    "RankDeficient",
    "RdcConfig",
    "SampleVector",
    "SolverConfig",
    "SyntheticSpec",
    "ZeroVariance",
    "degree_scan",
    "expand",
    "finite_diff_check",
    "generate",
    "hgr_kb",
    "hgr_kb_subgradient",
    "hgr_sk",
    "hgr_sk_gradient",
    "oracle_correlation",
    "pearson",
    "pearson_lstsq",
    "project",
    "rdc",
]
