from relu_death.bounds import (
    BoundPair,
    bound_pair,
    conv_bounds,
    lower_bound,
    min_width,
    parameter_count,
    tightness_ratio_bound,
    upper_bound,
)
from relu_death.core import (
    BiasMode,
    ConvLayerParams,
    DataBatch,
    DataSpec,
    DeathEvent,
    ForwardTrace,
    LayerParams,
    ReluNetwork,
    alive_counts,
    classify_event,
    conv_forward_trace,
    forward_trace,
    network_alive,
)

__version__ = "1.0.0"

__all__ = [
    "BiasMode",
    "BoundPair",
    "ConvLayerParams",
    "DataBatch",
    "DataSpec",
    "DeathEvent",
    "ForwardTrace",
    "LayerParams",
    "ReluNetwork",
    "alive_counts",
    "bound_pair",
    "classify_event",
    "conv_bounds",
    "conv_forward_trace",
    "forward_trace",
    "lower_bound",
    "min_width",
    "network_alive",
    "parameter_count",
    "tightness_ratio_bound",
    "upper_bound",
]
