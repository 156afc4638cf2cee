"""Topology-only zero-cost NAS scoring (SED) and its supporting tools."""

from .arch import (
    Architecture,
    Block,
    KernelSpec,
    OpKind,
    PoolSpec,
    SearchSpaceDescriptor,
    Stage,
    StrideSpec,
    ValidationError,
    dominates,
    effective_kernel,
    validate,
)
from .parse import ParseError, SchemaError, load_space, parse, parse_darts, parse_generic, parse_tss, serialize
from .sed import SedBreakdown, batch_score, conv_sed, pool_sed, sed, sig, skip_sed

__version__ = "0.1.0"
