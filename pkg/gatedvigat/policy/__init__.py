from gatedvigat.policy.baselines import PolicyKind, PolicyVariant, baseline_select
from gatedvigat.policy.selection import PolicyState, initial_state, select_for_gate, select_next

__all__ = [
    "PolicyKind",
    "PolicyState",
    "PolicyVariant",
    "baseline_select",
    "initial_state",
    "select_for_gate",
    "select_next",
]
