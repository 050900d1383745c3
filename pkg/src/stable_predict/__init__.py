"""Uniformly stable and privately predicting PAC learners over finite classes.

Every learner has an exact mode that returns ``Pr[label 1]`` at each domain
point, so stability and privacy can be certified by exhaustive enumeration of
neighboring samples rather than estimated.
"""

from .classes import (
    Dichotomy,
    HypothesisClass,
    LabeledSample,
    compute_vc_dim,
    empirical_weights,
    erm,
    growth_count,
    growth_function,
    is_eps_net,
    net_radius,
    restrict,
    sauer_bound,
    sauer_bound_exp,
)
from .data import SourceDistribution, flip_set, sample_dataset
from .errors import BadDistribution, EmptyClass, EmptyRestriction, InsufficientSample, StablePredictError, TooLarge
from .mechanisms import (
    ExpMechWeights,
    SoftMajorityPredictor,
    eps_from_temperature,
    exp_mech_distribution,
    exp_mech_expected_loss,
    exp_mech_sample,
    soft_majority_probability,
    soft_majority_single_vote_ratio,
    soft_majority_value,
    vote_change_log_ratio,
    vote_change_ratio,
)
from .private import (
    FlipConfig,
    MainConfig,
    RealizableConfig,
    feasible_main_config,
    flip_converted_stable,
    flip_wrap,
    main_private_predict_exact,
    main_private_predict_sampled,
    precondition_report,
    privacy_certificate,
    realizable_learn,
)
from .sample_size import SampleSizeConstants, n_exp, n_gen, n_net, n_realizable
from .stable import (
    MixturePredictor,
    StableConfig,
    h_ST,
    stability_certificate,
    stable_predict_exact,
    stable_predict_monte_carlo,
    stable_predict_sampled,
    subset_support_distribution,
)
from .verify import (
    DominanceClaim,
    NeighborGrid,
    check_dominance,
    empirical_prediction_law,
    min_privacy_eps,
    net_probability_check,
    privacy_eps,
    privacy_frontier,
    stability_gap,
    sup_stability_gap,
    uniform_convergence_check,
)

__version__ = "0.1.0"
