import json

import pytest

import aobest


def easy_task():
    doc = json.loads(aobest.load_task("peg2d").to_json())
    doc["name"] = "easy"
    doc["scene"] = []
    doc["uncertainty"] = {"sigma_trans": 5e-4, "sigma_rot": 0.005}
    doc["goal"]["pose"] = {"x": 0.01, "y": 0.035, "theta": 0.0}
    doc["goal"]["radius"] = 3e-3
    return aobest.Task.from_json(json.dumps(doc))


def test_builtins():
    assert aobest.builtin_names() == ["peg2d", "rail2d", "puzzle2d"]
    peg = aobest.load_task("peg2d")
    assert peg.name == "peg2d"
    assert len(peg.hash) == 16
    assert aobest.Task.from_json(peg.to_json()) == peg


def test_task_errors():
    with pytest.raises(aobest.TaskError):
        aobest.load_task("/no/such/task.json")
    doc = json.loads(aobest.load_task("peg2d").to_json())
    del doc["gains"]
    with pytest.raises(ValueError, match="gains"):
        aobest.Task.from_json(json.dumps(doc))


def test_plan_replay_evaluate():
    task = easy_task()
    traj = aobest.plan(task, seed=3, particles=4, budget=1500)
    assert traj["schema_version"] == 1
    assert traj["success"]
    again = aobest.plan(task, seed=3, particles=4, budget=1500)
    assert again["content_hash"] == traj["content_hash"]

    report = aobest.replay(task, traj)
    assert report["exact"]

    ev = aobest.evaluate(task, traj, rollouts=10, seed=1)
    assert len(ev["rollouts"]) == 10
    assert 0.0 <= ev["success_rate"] <= 1.0
    assert ev == aobest.evaluate(task, traj, rollouts=10, seed=1)


def test_wrong_task_is_refused():
    task = easy_task()
    traj = aobest.plan(task, seed=3, particles=4, budget=1500)
    with pytest.raises(aobest.ArtifactMismatch):
        aobest.replay("rail2d", traj)


def test_sweep_csv():
    empty = aobest.sweep(easy_task(), [], [])
    assert empty.splitlines() == [
        "particles,budget,repetition,seed,solved,first_solution_iteration,first_cost,final_cost,"
        "eval_success_rate,eval_rollouts"
    ]
    csv = aobest.sweep(easy_task(), [1], [200], repetitions=2, seed=4, rollouts=3)
    assert len(csv.splitlines()) == 3


def test_stats():
    assert aobest.fisher_exact(67, 70, 47, 70) == pytest.approx(1.6308e-5, rel=1e-3)
    assert aobest.fisher_exact(5, 10, 5, 10) == pytest.approx(1.0)
    t, df, p = aobest.welch_t([0.1, 0.2, 0.3], [0.1, 0.2, 0.3])
    assert t == 0.0 and p == pytest.approx(1.0)
    with pytest.raises(ValueError):
        aobest.welch_t([1.0], [1.0, 2.0])
