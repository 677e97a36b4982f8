"""Solver for the one-dimensional moderate-deviation queueing game."""
from .model import (CostBreakdown, DomainError, GameParams, HoldingCost, NotInQError,
                    StatePath, assemble_dynamics, hitting_cost, hitting_time,
                    rate_penalty, reference_params, running_cost)
from .paths import MonotonePath, Path

__all__ = [
    "CostBreakdown", "DomainError", "GameParams", "HoldingCost", "MonotonePath",
    "NotInQError", "Path", "StatePath", "assemble_dynamics", "hitting_cost",
    "hitting_time", "rate_penalty", "reference_params", "running_cost",
]
