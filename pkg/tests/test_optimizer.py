import dataclasses
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from _util import random_lowered, system, worker
from dismap.benchmarks import generate_benchmark
from dismap.circuit import Circuit, Gate, GateKind, lower
from dismap.cutter import InsufficientQubitsError
from dismap.hardware import bundled_config, enumerate_epr_candidates
from dismap.optimizer import (InfeasibleError, OptimizerOptions, baseline_plan,
                              first_fit_assignment, optimize, plan_candidate)
from dismap.verifier import check_constraints

K = GateKind


def noisy_pair(k=3, seed=0, cap=6):
    rng = random.Random(seed)
    ws = [worker(i, cap, e2=rng.uniform(0.005, 0.03), ro=rng.uniform(0.005, 0.05),
                 err_readout=[rng.uniform(0.005, 0.05) for _ in range(cap)]) for i in range(2)]
    return system(*ws, k=k, max_links=1)


def test_single_candidate_is_selected():
    cfg = system(worker(0, 4), worker(1, 4), k=1)
    c = random_lowered(6, 30, random.Random(1))
    plan = optimize(c, cfg)
    assert len(plan.evaluations) == 1
    assert plan.candidate.candidate_index == 0
    assert plan.so == plan.evaluations[0].so == plan.routing.total_so


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 100_000))
def test_choice_is_minimum_of_independent_evaluations(seed):
    rng = random.Random(seed)
    cfg = noisy_pair(seed=seed)
    c = random_lowered(rng.randint(7, 11), rng.randint(20, 60), rng)
    cands = enumerate_epr_candidates(cfg, c.n_qubits)
    assert len(cands) == 9
    opts = OptimizerOptions()
    plan = optimize(c, cfg, seed=seed % 7, options=opts)
    # every candidate re-evaluated from scratch, no shared cache
    fresh = [plan_candidate(c, cfg, cand, seed % 7, opts)[2].total_so for cand in cands]
    assert [e.so for e in plan.evaluations] == fresh
    assert plan.so == min(fresh)
    assert plan.candidate.candidate_index == fresh.index(min(fresh))
    log = plan.best_so_far()
    assert all(b <= a for a, b in zip(log, log[1:]))
    assert log[-1] == plan.so
    assert check_constraints(plan) == []


def test_threads_do_not_change_the_result():
    cfg = bundled_config("3workers")
    c = lower(generate_benchmark("qaoa", 18, 0))
    one = optimize(c, cfg, options=OptimizerOptions(threads=1))
    many = optimize(c, cfg, options=OptimizerOptions(threads=8))
    assert one == many


def test_more_candidates_never_hurt():
    c = random_lowered(10, 60, random.Random(3))
    small = optimize(c, noisy_pair(k=1, seed=3))
    large = optimize(c, noisy_pair(k=3, seed=3))
    # k=1's only candidate is the first of k=3's list
    assert large.evaluations[0].so == small.so
    assert large.so <= small.so


def test_fidelity_selection_picks_highest_estimate():
    c = random_lowered(9, 40, random.Random(5))
    plan = optimize(c, noisy_pair(seed=5), options=OptimizerOptions(select="fidelity"))
    fids = [e.fidelity for e in plan.evaluations]
    assert plan.fidelity == pytest.approx(max(fids))
    assert plan.candidate.candidate_index == fids.index(max(fids))


def test_unlowered_input_rejected():
    with pytest.raises(ValueError):
        optimize(Circuit(2, [Gate(K.SWAP, (0, 1))]), noisy_pair())


def test_too_many_qubits():
    with pytest.raises(InsufficientQubitsError):
        optimize(random_lowered(13, 5, random.Random(0)), noisy_pair())


def test_infeasible_when_no_linked_group_is_big_enough():
    # three workers of 4, one link: any linked pair holds 8 < 9
    cfg = system(worker(0, 4), worker(1, 4), worker(2, 4), k=1, max_links=1)
    with pytest.raises(InfeasibleError):
        optimize(random_lowered(9, 10, random.Random(0)), cfg)


# ---------------------------------------------------------------- baseline

def test_first_fit_fills_in_index_order():
    cfg = system(worker(0, 3), worker(1, 4), k=1)
    from dismap.hardware import con_vst
    vst = con_vst(cfg, enumerate_epr_candidates(cfg)[0])
    assert first_fit_assignment(random_lowered(5, 3, random.Random(0)), vst) == (0, 0, 0, 1, 1)


def test_baseline_uses_identity_layout_and_first_candidate():
    cfg = noisy_pair()
    c = random_lowered(8, 30, random.Random(2))
    plan = baseline_plan(c, cfg)
    assert plan.label == "baseline"
    assert plan.candidate.candidate_index == 0
    assert plan.routing.initial_layout.l2p == tuple(range(6)) + (6, 7)
    assert check_constraints(plan) == []


def test_baseline_equals_dismap_on_a_trivial_chain():
    cfg = system(worker(0, 4), worker(1, 4), k=1)
    c = Circuit(4, [Gate(K.CX, (q, q + 1)) for q in range(3)])
    assert baseline_plan(c, cfg).so == optimize(c, cfg).so == 0


def test_plans_are_frozen():
    cfg = system(worker(0, 4), worker(1, 4), k=1)
    plan = optimize(Circuit(2, [Gate(K.CX, (0, 1))]), cfg)
    with pytest.raises(dataclasses.FrozenInstanceError):
        plan.so = 3
