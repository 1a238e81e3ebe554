from relu_death.init.living import SignFlipResult, batch_center_init, sign_flip_init
from relu_death.init.schemes import (
    Distribution,
    InitKind,
    InitScheme,
    iter_conv_layers,
    iter_layers,
    sample_conv_network,
    sample_network,
)
from relu_death.init.seeding import SeedSpec
