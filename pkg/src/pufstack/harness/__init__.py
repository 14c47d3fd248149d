"""Adversarial channel, attack scenarios, and modeling attacks."""

from .attack import (AttackConfig, ModelingAttackResult, fit_logistic,
                     harvest_crps, modeling_attack)
from .channel import AdversaryPolicy, Channel, ChannelMessage
from .scenarios import ScenarioConfig, ScenarioReport, run_scenario

__all__ = [
    "AdversaryPolicy", "AttackConfig", "Channel", "ChannelMessage",
    "ModelingAttackResult", "ScenarioConfig", "ScenarioReport",
    "fit_logistic", "harvest_crps", "modeling_attack", "run_scenario",
]
