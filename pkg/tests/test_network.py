import math
from random import Random

import pytest

from gasnomval import (
    Arc,
    ArcKind,
    DataError,
    Network,
    Node,
    NodeKind,
    PipeGeometry,
    classify_zero_length,
    compute_heat_power_bounds,
    global_calorific_bounds,
    node_balance_residual,
)

H_RANGE = (36e6, 47e6)


def make_node(nid, kind, **extra):
    base = dict(id=nid, kind=kind, p_lo=1e5, p_hi=81e5, H_lo=H_RANGE[0], H_hi=H_RANGE[1])
    if kind is NodeKind.ENTRY and "H_sup" not in extra:
        extra["H_sup"] = 38e6
    base.update(extra)
    return Node(**base)


def make_pipe(aid, u, v, **extra):
    geom = extra.pop("geom", PipeGeometry(1000.0, 0.5, math.pi * 0.25 / 4, 1e-5))
    base = dict(
        id=aid, from_node=u, to_node=v, kind=ArcKind.PIPE,
        q_lo=-100.0, q_hi=100.0, H_lo=H_RANGE[0], H_hi=H_RANGE[1], pipe_geom=geom,
    )
    base.update(extra)
    return Arc(**base)


def path_network():
    nodes = [
        make_node("a", NodeKind.ENTRY, q_nom=2.0),
        make_node("b", NodeKind.INNER),
        make_node("c", NodeKind.EXIT, q_nom=-2.0, q_lo=-3.0, q_hi=0.0),
    ]
    arcs = [make_pipe("ab", "a", "b"), make_pipe("bc", "b", "c")]
    return Network.from_components(nodes, arcs)


@pytest.mark.parametrize(
    "raw,expected",
    [
        ("valve", ArcKind.ZERO_LENGTH_PIPE),
        ("pipe", ArcKind.PIPE),
        ("resistor", ArcKind.ZERO_LENGTH_PIPE),
        ("compressorStation", ArcKind.COMPRESSOR),
        ("controlValve", ArcKind.CONTROL_VALVE),
        ("shortPipe", ArcKind.ZERO_LENGTH_PIPE),
        ("somethingNew", ArcKind.ZERO_LENGTH_PIPE),
    ],
)
def test_classify_zero_length(raw, expected):
    assert classify_zero_length(raw) is expected


def test_balance_single_arc():
    nodes = [
        make_node("u", NodeKind.ENTRY, q_nom=3.0),
        make_node("v", NodeKind.EXIT, q_nom=-3.0, q_lo=-5.0, q_hi=0.0),
    ]
    net = Network.from_components(nodes, [make_pipe("uv", "u", "v")])
    assert node_balance_residual(net, {"uv": 3.0}, "u") == 0.0


def test_balance_isolated_inner_node():
    net = Network.from_components([make_node("x", NodeKind.INNER)], [])
    assert node_balance_residual(net, {}, "x") == 0.0


def test_balance_path_residual():
    net = path_network()
    flows = {"ab": 2.0, "bc": 5.0}
    assert node_balance_residual(net, flows, "b") == pytest.approx(-3.0, abs=1e-15)


def test_balance_unknown_node():
    with pytest.raises(DataError):
        node_balance_residual(path_network(), {"ab": 0.0, "bc": 0.0}, "zz")


def test_balance_telescopes_to_total_nomination():
    rng = Random(3)
    net = path_network()
    for _ in range(50):
        flows = {aid: rng.uniform(-10, 10) for aid in net.arcs}
        total = math.fsum(
            node_balance_residual(net, flows, nid) for nid in net.nodes
        )
        expected = math.fsum(n.q_nom for n in net.nodes.values())
        assert total == pytest.approx(expected, abs=1e-12)


def test_partition_exhaustive():
    net = path_network()
    assert len(net.entries) + len(net.exits) + len(net.inner) == len(net.nodes)


def test_area_consistency_checked():
    bad = PipeGeometry(1000.0, 0.5, 0.3, 1e-5)  # area != pi D^2/4
    with pytest.raises(DataError):
        bad.validate("p")


def test_relative_roughness_precondition():
    with pytest.raises(DataError):
        PipeGeometry(1000.0, 0.5, math.pi * 0.25 / 4, 0.6).validate("p")


def test_node_kind_conditional_fields():
    with pytest.raises(DataError):
        make_node("e", NodeKind.ENTRY, q_nom=-1.0).validate()
    with pytest.raises(DataError):
        make_node("x", NodeKind.EXIT, H_sup=38e6).validate()
    with pytest.raises(DataError):
        make_node("i", NodeKind.INNER, q_nom=1.0).validate()


def test_dangling_arc_endpoint():
    with pytest.raises(DataError):
        Network.from_components(
            [make_node("a", NodeKind.INNER)], [make_pipe("ab", "a", "b")]
        )


def test_heat_power_bounds_example():
    node = make_node("x", NodeKind.EXIT, q_lo=-2.0, q_hi=-1.0)
    p_lo, p_hi = compute_heat_power_bounds(node, 38e6)
    assert p_lo == pytest.approx(0.9 * 1.0 * 38e6)
    assert p_hi == pytest.approx(1.1 * 2.0 * 38e6)


def test_heat_power_bounds_degenerate():
    zero_demand = make_node("x", NodeKind.EXIT, q_lo=0.0, q_hi=0.0)
    assert compute_heat_power_bounds(zero_demand, 38e6) == (0.0, 0.0)
    node = make_node("y", NodeKind.EXIT, q_lo=-2.0, q_hi=-1.0)
    assert compute_heat_power_bounds(node, 0.0) == (0.0, 0.0)


def test_heat_power_bounds_ordered():
    rng = Random(11)
    for _ in range(100):
        hi = -rng.uniform(0.0, 5.0)
        lo = hi - rng.uniform(0.0, 5.0)
        node = make_node("x", NodeKind.EXIT, q_lo=lo, q_hi=hi)
        p_lo, p_hi = compute_heat_power_bounds(node, rng.uniform(0, 47e6))
        assert 0.0 <= p_lo <= p_hi


def test_global_calorific_bounds():
    net = path_network()
    assert global_calorific_bounds(net) == H_RANGE

    nodes = [
        make_node("a", NodeKind.INNER, H_lo=36e6, H_hi=47e6),
        make_node("b", NodeKind.INNER, H_lo=30e6, H_hi=40e6),
    ]
    net2 = Network.from_components(nodes, [])
    assert global_calorific_bounds(net2) == (30e6, 47e6)

    single = Network.from_components([make_node("s", NodeKind.INNER)], [])
    assert global_calorific_bounds(single) == H_RANGE


def test_is_tree():
    assert path_network().is_tree()
    nodes = [
        make_node("a", NodeKind.ENTRY, q_nom=0.0),
        make_node("b", NodeKind.INNER),
    ]
    cyclic = Network.from_components(
        nodes, [make_pipe("x", "a", "b"), make_pipe("y", "b", "a")]
    )
    assert not cyclic.is_tree()
