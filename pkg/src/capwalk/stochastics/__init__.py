"""Brownian motion hitting estimates on Euclidean space and the Eguchi-Hanson product."""

from .._rng import derive_trial_seed
from .api import (
    StepPolicy,
    TrialReport,
    compile_flat_target,
    eh_bolt_hitting,
    exit_time_tail,
    first_hitting,
    hitting_probability_mc,
    occupancy_time_mc,
    sausage_intersection,
    simulate_step,
)

__all__ = [
    "StepPolicy",
    "TrialReport",
    "compile_flat_target",
    "derive_trial_seed",
    "eh_bolt_hitting",
    "exit_time_tail",
    "first_hitting",
    "hitting_probability_mc",
    "occupancy_time_mc",
    "sausage_intersection",
    "simulate_step",
]
