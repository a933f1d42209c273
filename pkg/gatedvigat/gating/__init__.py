from gatedvigat.gating.gates import GateInput, GateParams, GateSchedule, epsilon, gate_forward, gate_loss, pseudolabel

__all__ = ["GateInput", "GateParams", "GateSchedule", "epsilon", "gate_forward", "gate_loss", "pseudolabel"]
