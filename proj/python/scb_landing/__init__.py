"""Python access to the small-body landing simulator."""

from ._core import (
    ApexGuardTripped,
    FilterInfeasible,
    GravityDomainError,
    Scenario,
    ScenarioError,
    composite,
    filter,
    load_scenario,
    relaxed_constraint_b,
    run,
    scenario_from_json,
    softmin,
)

__all__ = [
    "ApexGuardTripped",
    "FilterInfeasible",
    "GravityDomainError",
    "Scenario",
    "ScenarioError",
    "composite",
    "filter",
    "load_scenario",
    "relaxed_constraint_b",
    "run",
    "scenario_from_json",
    "softmin",
]
