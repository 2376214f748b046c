"""Repeated negotiation games toolkit.

Subpackages
-----------
env
    Alternating-offers protocol, legality, rewards, episode context.
normal_form
    Smooth fictitious play / FTPL learner with regret accounting.
agents
    Scripted personas, empirical opponent model, best-of-N rollout search.
oracle
    Exact enumeration: values, best responses, adversarial constructions,
    total-variation error bounds. Compiled kernel with pure fallback.
metrics
    Tournament and diagnostics statistics.
harness
    Experiment configuration, match runner, command-line interface.
bridge
    Wire protocol for external (e.g. LLM-backed) policies.
"""

__version__ = "0.1.0"
