from relu_death.core.conv import ConvLayerParams, conv_forward_trace, induced_matrix
from relu_death.core.network import (
    DTYPE,
    BiasMode,
    DataBatch,
    DataSpec,
    DeathEvent,
    ForwardTrace,
    LayerParams,
    ReluNetwork,
    alive_counts,
    classify_event,
    final_alive_mask,
    forward_trace,
    killed_by,
    network_alive,
)
