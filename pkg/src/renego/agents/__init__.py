from .base import DistributionPolicy, PolicyProvider, derive_rng, sample_distribution
from .bon import (
    BoNAgent,
    BoNConfig,
    Candidate,
    CandidateSet,
    ConfigError,
    STRATEGY_FAMILIES,
    SimulationBudgetExceeded,
    bon_act,
    generate_candidates,
    sharpen,
    simulate_rollout,
)
from .opponent_model import (
    BucketingConfig,
    OpponentModel,
    bucket_key,
    fit_opponent_model,
    optimistic_action,
)
from .personas import (
    FAMILIES,
    Persona,
    PersonaParams,
    cooperative_payloads,
    default_personas,
    max_cooperative_reward,
    own_deal_reward,
    payload_at_share,
)

__all__ = [
    "BoNAgent", "BoNConfig", "BucketingConfig", "Candidate", "CandidateSet",
    "ConfigError", "DistributionPolicy", "FAMILIES", "OpponentModel",
    "Persona", "PersonaParams", "PolicyProvider", "STRATEGY_FAMILIES",
    "SimulationBudgetExceeded", "bon_act", "bucket_key", "cooperative_payloads",
    "default_personas", "derive_rng", "fit_opponent_model", "generate_candidates",
    "max_cooperative_reward", "optimistic_action", "own_deal_reward",
    "payload_at_share", "sample_distribution", "sharpen", "simulate_rollout",
]
