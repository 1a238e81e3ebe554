from relu_death.montecarlo.confidence import Estimate, wilson_interval
from relu_death.montecarlo.estimators import (
    EventFrequencies,
    LivingFractionStats,
    LivingScheme,
    estimate_alive_prob,
    estimate_conv_alive_prob,
    estimate_neuron_death_prob,
    estimate_point_alive_prob,
    event_frequencies,
    living_fraction_comparison,
    living_fraction_stats,
    network_alive_outcomes,
    neuron_killed,
    point_alive_outcomes,
)
from relu_death.montecarlo.parallel import ThreadCap, map_trials, thread_capped
from relu_death.montecarlo.variance import (
    LayerVariance,
    NetworkSurvey,
    VarianceIdentity,
    VarianceReport,
    conditional_moments,
    network_survey,
    neuron_variance_identity,
    variance_report,
)
