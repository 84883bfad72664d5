"""Belief-space EST planning for compliant planar assembly.

Artifacts cross the extension boundary as JSON text and are returned as plain dicts.
"""

import json

from ._core import (
    ArtifactMismatch,
    Task,
    TaskError,
    builtin_names,
    derive_seed,
    fisher_exact,
    resolve_task,
    welch_t,
)
from . import _core

__all__ = [
    "ArtifactMismatch",
    "Task",
    "TaskError",
    "builtin_names",
    "derive_seed",
    "evaluate",
    "fisher_exact",
    "load_task",
    "plan",
    "replay",
    "sweep",
    "welch_t",
]


def load_task(name_or_path):
    return resolve_task(str(name_or_path))


def _task(task):
    return task if isinstance(task, Task) else load_task(task)


def _text(trajectory):
    return trajectory if isinstance(trajectory, str) else json.dumps(trajectory)


def plan(task, seed=0, particles=10, budget=None, algorithm="ao-b-est", wall_clock=None):
    """Plan on a task (name, path or Task). Returns the trajectory artifact."""
    return json.loads(_core.plan_json(_task(task), seed, particles, budget, algorithm, wall_clock))


def replay(task, trajectory):
    return json.loads(_core.replay_json(_task(task), _text(trajectory)))


def evaluate(task, trajectory, rollouts=100, seed=0):
    return json.loads(_core.evaluate_json(_task(task), _text(trajectory), rollouts, seed))


def sweep(task, particles, budgets, repetitions=1, seed=0, rollouts=100, algorithm="ao-b-est"):
    """Returns the sweep table as CSV text."""
    return _core.sweep_csv(_task(task), list(particles), list(budgets), repetitions, seed, rollouts, algorithm)
