import itertools
import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from _util import system, worker
from dismap.hardware import (BUNDLED_DIR, ConfigError, EprCandidate, EprLink, bundled_config,
                             con_vst, config_from_dict, config_to_dict, enumerate_epr_candidates,
                             load_system_config, qubit_quality)


def test_three_worker_bundle_capacity():
    cfg = bundled_config("3workers")
    assert [w.n_qubits for w in cfg.workers] == [20, 27, 27]
    assert cfg.total_capacity == 74


@pytest.mark.parametrize("name", ["3workers", "4x20", "2x7"])
def test_bundled_configs_round_trip(name, tmp_path):
    cfg = bundled_config(name)
    path = tmp_path / "c.json"
    path.write_text(json.dumps(config_to_dict(cfg)))
    again = load_system_config(path)
    assert config_to_dict(again) == config_to_dict(cfg)


def _raw(**worker_changes):
    w = {"id": 0, "qubits": 3, "edges": [[0, 1], [1, 2]], "err_1q": [0.001] * 3,
         "err_2q": {"0-1": 0.01, "1-2": 0.01}, "err_readout": [0.02] * 3}
    w.update(worker_changes)
    return {"default_sr": 0.95, "max_links": 1, "workers": [w]}


def test_err_2q_out_of_range_rejected():
    with pytest.raises(ConfigError, match="err_2q"):
        config_from_dict(_raw(err_2q={"0-1": 1.2, "1-2": 0.01}))


def test_disconnected_worker_rejected():
    with pytest.raises(ConfigError, match="disconnected"):
        config_from_dict(_raw(qubits=4, edges=[[0, 1], [2, 3]], err_1q=[0] * 4,
                              err_readout=[0] * 4, err_2q={"0-1": 0.01, "2-3": 0.01}))


def test_every_problem_reported():
    data = _raw(err_1q=[0.0, 0.0, 1.5], err_2q={"0-1": 0.01})
    data["default_sr"] = 0.0
    with pytest.raises(ConfigError) as info:
        config_from_dict(data)
    text = "\n".join(info.value.problems)
    assert "err_1q[2]" in text and "1-2 has no err_2q" in text and "default_sr" in text


def test_missing_fields_and_file():
    with pytest.raises(ConfigError, match="missing"):
        config_from_dict({"workers": [{"id": 0}]})
    with pytest.raises(ConfigError, match="not found"):
        load_system_config(BUNDLED_DIR / "absent.json")


# ---------------------------------------------------------------- quality

def test_quality_zero_noise():
    assert qubit_quality(worker(0, 3), 1) == 0.0


def test_quality_arithmetic():
    w = worker(0, 3, err_2q={(0, 1): 0.01, (1, 2): 0.03},
               err_readout=[0.0, 0.02, 0.0], err_1q=[0.0, 0.001, 0.0])
    assert qubit_quality(w, 1) == pytest.approx(0.041)


def test_quality_uniform_line_symmetric():
    w = worker(0, 3, e1=0.001, e2=0.01, ro=0.02)
    assert qubit_quality(w, 0) == pytest.approx(qubit_quality(w, 1))
    assert w.ranked_qubits == (0, 1, 2)


# ---------------------------------------------------------------- candidates

def test_one_candidate_for_k1():
    cfg = system(worker(0, 4), worker(1, 4), k=1, max_links=1)
    cands = enumerate_epr_candidates(cfg)
    assert len(cands) == 1
    (link,) = cands[0].links
    assert (link.qubit_a, link.qubit_b) == (0, 0)


def test_nine_candidates_for_k3():
    cfg = system(worker(0, 5), worker(1, 5), k=3, max_links=1)
    cands = enumerate_epr_candidates(cfg)
    assert len(cands) == 9
    assert [c.candidate_index for c in cands] == list(range(9))


def _brute_force_count(k, n_workers, max_links):
    links = [(wa, qa, wb, qb)
             for wa, wb in itertools.combinations(range(n_workers), 2)
             for qa in range(k) for qb in range(k)]
    count = 0
    for size in range(1, max_links + 1):
        for combo in itertools.combinations(links, size):
            ends = [(l[0], l[1]) for l in combo] + [(l[2], l[3]) for l in combo]
            count += len(ends) == len(set(ends))
    return count


def test_three_workers_k2_two_links_matches_brute_force():
    # uniform noise so the top-2 qubits are 0 and 1 on every worker
    cfg = system(worker(0, 4), worker(1, 4), worker(2, 4), k=2, max_links=2)
    cands = enumerate_epr_candidates(cfg)
    assert len(cands) == _brute_force_count(2, 3, 2)
    labels = [c.label() for c in cands]
    assert len(set(labels)) == len(labels)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 3), st.integers(1, 2))
def test_candidate_endpoints_among_top_k(seed, k, max_links):
    import random
    rng = random.Random(seed)
    ws = [worker(i, 5, err_readout=[rng.uniform(0, 0.05) for _ in range(5)]) for i in range(3)]
    cfg = system(*ws, k=k, max_links=max_links)
    cands = enumerate_epr_candidates(cfg)
    scores = []
    for c in cands:
        assert 1 <= len(c.links) <= max_links
        ends = [ep for link in c.links for ep in link.endpoints]
        assert len(ends) == len(set(ends))
        for w, q in ends:
            assert q in ws[w].ranked_qubits[:k]
        scores.append(sum(ws[w].quality[q] for w, q in ends))
    assert all(a <= b + 1e-12 for a, b in zip(scores, scores[1:]))
    assert enumerate_epr_candidates(cfg) == cands


def test_capacity_filter_drops_small_groups():
    cfg = system(worker(0, 4), worker(1, 4), worker(2, 4), k=1, max_links=1)
    assert len(enumerate_epr_candidates(cfg)) == 3
    assert enumerate_epr_candidates(cfg, n_qubits=9) == []
    assert len(enumerate_epr_candidates(cfg, n_qubits=8)) == 3


def test_single_worker_has_no_candidates():
    with pytest.raises(ValueError):
        enumerate_epr_candidates(system(worker(0, 4)))


def test_link_normalizes_worker_order():
    link = EprLink(1, 3, 0, 4)
    assert (link.worker_a, link.qubit_a, link.worker_b, link.qubit_b) == (0, 4, 1, 3)
    with pytest.raises(ValueError):
        EprLink(0, 1, 0, 2)


# ---------------------------------------------------------------- VST

def test_vst_single_link_between_two_chips():
    cfg = system(worker(0, 5), worker(1, 5))
    vst = con_vst(cfg, EprCandidate((EprLink(0, 4, 1, 3),)))
    cross = [(a, b) for a, b in vst.edges if vst.worker_of(a) != vst.worker_of(b)]
    assert cross == [(vst.node(0, 4), vst.node(1, 3))]
    assert vst.is_epr_edge(*cross[0])
    assert vst.edge_error(*cross[0]) == pytest.approx(0.05)


def test_vst_counts_for_20_and_27():
    cfg = bundled_config("3workers")
    w0, w1 = cfg.workers[0], cfg.workers[1]
    cand = EprCandidate((EprLink(0, w0.ranked_qubits[0], 1, w1.ranked_qubits[0]),))
    vst = con_vst(cfg, cand)
    assert vst.n_nodes == 74
    assert len(vst.edges) == sum(len(w.coupling_edges) for w in cfg.workers) + 1
    sub = [w for w in vst.components if 0 in w][0]
    assert sum(cfg.workers[w].n_qubits for w in sub) == 47


def test_vst_two_links_same_pair():
    cfg = system(worker(0, 4), worker(1, 4), max_links=2)
    vst = con_vst(cfg, EprCandidate((EprLink(0, 0, 1, 0), EprLink(0, 3, 1, 3))))
    assert len(vst.edges) == 3 + 3 + 2
    assert len(set(vst.edges)) == len(vst.edges)


def test_vst_rejects_out_of_range_endpoint():
    cfg = system(worker(0, 4), worker(1, 4))
    with pytest.raises(ValueError):
        con_vst(cfg, EprCandidate((EprLink(0, 9, 1, 0),)))


def test_vst_is_pure():
    cfg = bundled_config("3workers")
    cand = enumerate_epr_candidates(cfg)[5]
    a, b = con_vst(cfg, cand), con_vst(cfg, cand)
    assert a.edges == b.edges and a.node_tags == b.node_tags
    for x, y in a.edges:
        if a.is_epr_edge(x, y):
            assert any({(l.worker_a, l.qubit_a), (l.worker_b, l.qubit_b)}
                       == {a.node_tags[x], a.node_tags[y]} for l in cand.links)
        else:
            w, qx = a.node_tags[x]
            assert (qx, a.node_tags[y][1]) in cfg.workers[w].coupling_edges


def test_distances_weight_epr_edges():
    cfg = system(worker(0, 2), worker(1, 2))
    vst = con_vst(cfg, EprCandidate((EprLink(0, 1, 1, 0),)))
    d = vst.distances(3.0)
    assert d[vst.node(0, 0), vst.node(1, 1)] == pytest.approx(5.0)
