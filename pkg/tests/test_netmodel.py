import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gldf.netmodel import (
    SLACK,
    Bus,
    Line,
    Network,
    NetworkError,
    NotRadialError,
    build_index_maps,
    common_path,
    injection_vector,
    is_radial,
    path_to_slack,
    phase_set,
)
from gldf.verify import random_radial_network
from oracles import chain_network, parent_map, path_edges, three_bus_example


def test_phase_set_normalises_order():
    assert phase_set("ca") == "ac"
    assert phase_set(["c", "b", "a"]) == "abc"


@pytest.mark.parametrize("bad", ["", "aa", "abd"])
def test_phase_set_rejects(bad):
    with pytest.raises(NetworkError):
        phase_set(bad)


def test_index_maps_three_bus_example():
    idx = build_index_maps(three_bus_example())
    assert (idx.n, idx.m) == (5, 5)
    assert idx.nodes == (("1", "a"), ("1", "b"), ("1", "c"), ("2", "a"), ("2", "c"))
    assert idx.slack_nodes == (("0", "a"), ("0", "b"), ("0", "c"))


def test_index_maps_two_bus():
    idx = build_index_maps(chain_network([0.01]))
    assert (idx.n, idx.m) == (1, 1)


def test_index_maps_ieee13_matches_declared_phases(ieee13):
    declared = sum(len(b.phases) for b in ieee13.net.buses if b.kind != SLACK)
    assert ieee13.idx.n == declared == 29


def test_index_maps_bijection(ieee123):
    idx = ieee123.idx
    for i, key in enumerate(idx.nodes):
        assert idx.node_of[key] == i
        assert i in idx.bus_nodes[key[0]]
    for j, key in enumerate(idx.branches):
        assert idx.branch_of[key] == j


def test_vector_roundtrip(ieee13):
    x = np.arange(ieee13.idx.n) + 1j
    np.testing.assert_array_equal(ieee13.idx.vector(ieee13.idx.unflatten(x)), x)


def test_injection_vector_uses_bus_loads():
    net = chain_network([0.01, 0.02]).with_loads({"2": {"a": -0.1 - 0.05j}})
    np.testing.assert_array_equal(injection_vector(net), [0, -0.1 - 0.05j])


def test_duplicate_bus_ids_rejected():
    with pytest.raises(NetworkError, match="duplicate bus"):
        Network([Bus("0", "a", SLACK), Bus("1", "a"), Bus("1", "a")],
                [Line("L", "0", "1", "a", [[0.01]])])


def test_line_phase_mismatch_rejected():
    with pytest.raises(NetworkError, match="not available"):
        Network([Bus("0", "abc", SLACK), Bus("1", "a")],
                [Line("L", "0", "1", "ab", np.eye(2) * 0.01)])


def test_parallel_lines_rejected():
    with pytest.raises(NetworkError, match="parallel"):
        Network([Bus("0", "a", SLACK), Bus("1", "a")],
                [Line("L1", "0", "1", "a", [[0.01]]), Line("L2", "1", "0", "a", [[0.02]])])


def test_disconnected_rejected():
    with pytest.raises(NetworkError, match="connected"):
        Network([Bus("0", "a", SLACK), Bus("1", "a"), Bus("2", "a")],
                [Line("L", "0", "1", "a", [[0.01]])])


def test_slack_count_enforced():
    with pytest.raises(NetworkError, match="one slack"):
        Network([Bus("0", "a"), Bus("1", "a")], [Line("L", "0", "1", "a", [[0.01]])])


@pytest.mark.parametrize("z", [[[0.01, 0.001], [0.002, 0.01]], [[-0.01]], [[1, 1], [1, 1]]])
def test_bad_impedance_rejected(z):
    phases = "a" if len(z) == 1 else "ab"
    with pytest.raises(NetworkError):
        Line("L", "0", "1", phases, np.array(z, dtype=complex))


def test_default_slack_voltage_is_balanced():
    net = three_bus_example()
    np.testing.assert_allclose(
        net.slack_voltage, np.exp(-2j * np.pi / 3 * np.arange(3)), atol=1e-15)


def test_is_radial():
    net = chain_network([0.01, 0.02])
    assert is_radial(net)
    closed = Network(net.buses, (*net.lines, Line("L3", "0", "2", "a", [[0.03]])))
    assert not is_radial(closed)


def test_bundled_radial(bundled):
    assert is_radial(bundled.net)


def test_path_to_slack_chain():
    net = chain_network([0.01, 0.02])
    assert [ln.id for ln in path_to_slack(net, "2")] == ["L1", "L2"]
    assert [ln.id for ln in path_to_slack(net, "1")] == ["L1"]


def test_path_to_slack_meshed_raises():
    net = chain_network([0.01, 0.02])
    closed = Network(net.buses, (*net.lines, Line("L3", "0", "2", "a", [[0.03]])))
    with pytest.raises(NotRadialError):
        path_to_slack(closed, "2")


def test_common_path_chain():
    net = chain_network([0.01, 0.02])
    assert common_path(net, "1", "2") == {"L1"}
    assert common_path(net, "2", "2") == {"L1", "L2"}


def test_random_tree_paths_match_parent_walk():
    rng = np.random.default_rng(3)
    net = random_radial_network(rng, 20)
    for b in net.pq_buses:
        path = path_to_slack(net, b.id)
        assert net.slack.id in (path[0].from_bus, path[0].to_bus)
        assert len({ln.id for ln in path}) == len(path)
        assert {frozenset((ln.from_bus, ln.to_bus)) for ln in path} == path_edges(net, b.id)
    for bi, bj in itertools.combinations(net.pq_buses, 2):
        expected = {ln.id for ln in path_to_slack(net, bi.id)} & {
            ln.id for ln in path_to_slack(net, bj.id)}
        assert common_path(net, bi.id, bj.id) == expected


def _count_simple_paths(net, src, dst):
    adj = {b.id: set() for b in net.buses}
    for ln in net.lines:
        adj[ln.from_bus].add(ln.to_bus)
        adj[ln.to_bus].add(ln.from_bus)
    count = 0

    def walk(b, seen):
        nonlocal count
        if b == dst:
            count += 1
            return
        for o in adj[b] - seen:
            walk(o, seen | {o})

    walk(src, {src})
    return count


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 10), chord=st.booleans())
def test_radial_iff_unique_paths(seed, n, chord):
    from gldf.verify import add_chord

    rng = np.random.default_rng(seed)
    net = random_radial_network(rng, n)
    if chord and n > 2:
        try:
            net = add_chord(net, rng)
        except NetworkError:
            pass
    unique = all(_count_simple_paths(net, net.slack.id, b.id) == 1 for b in net.pq_buses)
    assert is_radial(net) == unique


def test_relabeling_permutes_results():
    from gldf.nlpf import fixed_point_solve
    from gldf.ybus import build_system

    rng = np.random.default_rng(5)
    net = random_radial_network(rng, 8, max_load=0.05)
    perm = list(net.buses)
    rng.shuffle(perm)
    shuffled = Network(perm, net.lines)
    out = []
    for nw in (net, shuffled):
        idx = build_index_maps(nw)
        V = fixed_point_solve(build_system(nw, idx), injection_vector(nw, idx)).V
        out.append(dict(zip(idx.nodes, V)))
    for key, v in out[0].items():
        assert out[1][key] == pytest.approx(v, abs=1e-12)


def test_parent_map_oracle_agrees():
    net = three_bus_example()
    assert parent_map(net) == {"1": "0", "2": "1"}
