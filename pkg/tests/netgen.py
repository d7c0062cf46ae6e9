"""Synthetic GasLib-schema fixtures and random tree networks for tests.

The large fixture mirrors the published GasLib-582 structure (582 nodes:
31 sources / 129 sinks / 422 inner; 609 connections: 278 pipes, 269 short
pipes, 5 compressor stations, 23 control valves, 26 valves, 8 resistors)
with realistic parameter ranges, including one 0.5 m / 1e-5 m reference
pipe.  Everything is seeded, so the generated bytes are stable across runs.
"""

from __future__ import annotations

import math
from pathlib import Path
from random import Random

from gasnomval import (
    Arc,
    ArcKind,
    GasQuality,
    Network,
    Node,
    NodeKind,
    PipeGeometry,
)

GAS_NS = "http://gaslib.zib.de/Gas"
FRAME_NS = "http://gaslib.zib.de/Framework"


def _fmt(x: float) -> str:
    return "%.10g" % x


def _prop(name: str, unit: str, value: float) -> str:
    return f'      <{name} unit="{unit}" value="{_fmt(value)}"/>'


def _source_xml(nid: str, rng: Random) -> str:
    lines = [f'    <source id="{nid}">']
    lines.append(_prop("height", "meter", 0.0))
    lines.append(_prop("pressureMin", "bar", 1.01325))
    lines.append(_prop("pressureMax", "bar", rng.choice([61.01325, 71.01325, 81.01325])))
    lines.append(_prop("flowMin", "1000m_cube_per_hour", 0.0))
    lines.append(_prop("flowMax", "1000m_cube_per_hour", 1200.0))
    lines.append(_prop("gasTemperature", "Celsius", round(rng.uniform(5.0, 15.0), 4)))
    lines.append(
        _prop("calorificValue", "MJ_per_m_cube", round(rng.uniform(36.0, 41.0), 6))
    )
    lines.append(_prop("normDensity", "kg_per_m_cube", 0.785))
    lines.append(_prop("molarMass", "kg_per_kmol", round(rng.uniform(17.5, 19.0), 6)))
    lines.append(
        _prop("pseudocriticalPressure", "bar", round(rng.uniform(45.0, 47.0), 6))
    )
    lines.append(
        _prop("pseudocriticalTemperature", "K", round(rng.uniform(188.0, 202.0), 6))
    )
    lines.append("    </source>")
    return "\n".join(lines)


def _sink_xml(nid: str, rng: Random) -> str:
    lines = [f'    <sink id="{nid}">']
    lines.append(_prop("height", "meter", 0.0))
    lines.append(_prop("pressureMin", "bar", 1.01325))
    lines.append(_prop("pressureMax", "bar", rng.choice([61.01325, 71.01325, 81.01325])))
    lines.append(_prop("flowMin", "1000m_cube_per_hour", 0.0))
    lines.append(_prop("flowMax", "1000m_cube_per_hour", round(rng.uniform(10.0, 300.0), 4)))
    lines.append("    </sink>")
    return "\n".join(lines)


def _innode_xml(nid: str, rng: Random) -> str:
    lines = [f'    <innode id="{nid}">']
    lines.append(_prop("height", "meter", 0.0))
    lines.append(_prop("pressureMin", "bar", 1.01325))
    lines.append(_prop("pressureMax", "bar", rng.choice([61.01325, 71.01325, 81.01325])))
    lines.append("    </innode>")
    return "\n".join(lines)


def _connection_xml(kind: str, aid: str, u: str, v: str, rng: Random, pipe_no: int) -> str:
    lines = [f'    <{kind} id="{aid}" from="{u}" to="{v}">']
    lines.append(_prop("flowMin", "1000m_cube_per_hour", -1000.0))
    lines.append(_prop("flowMax", "1000m_cube_per_hour", 1000.0))
    if kind == "pipe":
        if pipe_no == 0:
            diameter, roughness = 500.0, 0.01  # mm; reference pipe
        else:
            diameter = rng.choice([400.0, 500.0, 600.0, 800.0, 1000.0])
            roughness = rng.choice([0.01, 0.012, 0.05, 0.1])
        lines.append(_prop("length", "km", round(rng.uniform(0.5, 40.0), 6)))
        lines.append(_prop("diameter", "mm", diameter))
        lines.append(_prop("roughness", "mm", roughness))
        lines.append(_prop("heatTransferCoefficient", "W_per_m_square_per_K", 2.0))
    elif kind == "compressorStation":
        lines.append(_prop("dragFactorIn", "", 0.0))
        lines.append(_prop("diameterIn", "mm", 900.0))
    elif kind == "controlValve":
        lines.append(_prop("pressureDifferentialMin", "bar", 0.0))
        lines.append(_prop("pressureDifferentialMax", "bar", 30.0))
    elif kind == "resistor":
        lines.append(_prop("dragFactor", "", rng.uniform(1.0, 10.0)))
        lines.append(_prop("diameter", "mm", 500.0))
    elif kind == "valve":
        lines.append(_prop("pressureDifferentialMax", "bar", 10.0))
    lines.append(f"    </{kind}>")
    return "\n".join(lines)


def gaslib582_like_net() -> str:
    """Deterministic network document in the GasLib schema, 582 nodes / 609 arcs.

    Inner nodes form a backbone with entries/exits attached as leaves, so no
    inner node is a dead end (flow-direction reasoning would be vacuous
    there, and real transmission networks terminate in entries or exits).
    """
    rng = Random(582)
    sources = [f"entry_{i:02d}" for i in range(1, 32)]
    sinks = [f"exit_{i:03d}" for i in range(1, 130)]
    inner = [f"innode_{i:03d}" for i in range(1, 423)]

    backbone = list(inner)
    rng.shuffle(backbone)
    edges: list[tuple[str, str]] = []
    for a, b in zip(backbone, backbone[1:]):
        edges.append((a, b) if rng.random() < 0.5 else (b, a))
    # pin one entry and one exit to the backbone ends, spread the rest
    terminals = list(sources[1:] + sinks[1:])
    rng.shuffle(terminals)
    placements = [(sources[0], backbone[0]), (sinks[0], backbone[-1])]
    placements += [(t, backbone[rng.randrange(len(backbone))]) for t in terminals]
    for terminal, anchor in placements:
        edges.append((terminal, anchor) if rng.random() < 0.5 else (anchor, terminal))
    all_nodes = sources + sinks + inner
    while len(edges) < 609:
        u, v = rng.sample(all_nodes, 2)
        edges.append((u, v))

    kinds = (
        ["pipe"] * 278
        + ["shortPipe"] * 269
        + ["compressorStation"] * 5
        + ["controlValve"] * 23
        + ["valve"] * 26
        + ["resistor"] * 8
    )
    rng.shuffle(kinds)
    # keep the reference pipe first among pipes
    first_pipe = kinds.index("pipe")

    node_xml = []
    for nid in sorted(sources):
        node_xml.append(_source_xml(nid, rng))
    for nid in sorted(sinks):
        node_xml.append(_sink_xml(nid, rng))
    for nid in sorted(inner):
        node_xml.append(_innode_xml(nid, rng))

    conn_xml = []
    pipe_no = 0
    for i, ((u, v), kind) in enumerate(zip(edges, kinds)):
        aid = f"conn_{i:04d}"
        if kind == "pipe":
            conn_xml.append(
                _connection_xml(kind, aid, u, v, rng, 0 if i == first_pipe else pipe_no + 1)
            )
            pipe_no += 1
        else:
            conn_xml.append(_connection_xml(kind, aid, u, v, rng, -1))

    return (
        '<?xml version="1.0" encoding="UTF-8"?>\n'
        f'<network xmlns="{GAS_NS}" xmlns:framework="{FRAME_NS}">\n'
        "  <framework:information>\n"
        "    <framework:title>synthetic-582</framework:title>\n"
        "  </framework:information>\n"
        "  <framework:nodes>\n" + "\n".join(node_xml) + "\n  </framework:nodes>\n"
        "  <framework:connections>\n" + "\n".join(conn_xml) + "\n  </framework:connections>\n"
        "</network>\n"
    )


def nomination_scn(seed: int, scenario_id: str) -> str:
    """One balanced-ish nomination over the 582-like fixture (builder rebalances)."""
    rng = Random(seed)
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<boundaryValue xmlns="{GAS_NS}" xmlns:framework="{FRAME_NS}">',
        f'  <scenario id="{scenario_id}">',
    ]
    demand_total = 0.0
    for i in range(1, 130):
        if rng.random() < 0.6:
            value = round(rng.uniform(5.0, 200.0), 4)
        else:
            value = 0.0
        demand_total += value
        lines.append(f'    <node type="exit" id="exit_{i:03d}">')
        lines.append(
            f'      <flow bound="both" unit="1000m_cube_per_hour" value="{_fmt(value)}"/>'
        )
        lines.append("    </node>")
    weights = [0.05 + rng.random() for _ in range(31)]
    total_w = sum(weights)
    for i, w in enumerate(weights, start=1):
        value = round(demand_total * w / total_w, 6)
        lines.append(f'    <node type="entry" id="entry_{i:02d}">')
        lines.append(
            f'      <flow bound="both" unit="1000m_cube_per_hour" value="{_fmt(value)}"/>'
        )
        lines.append("    </node>")
    lines.append("  </scenario>")
    lines.append("</boundaryValue>")
    return "\n".join(lines) + "\n"


def small11_net() -> str:
    """11-node fixture in the GasLib schema: 3 sources, 3 sinks, 5 inner."""
    rng = Random(11)
    sources = [f"entry_{i}" for i in range(1, 4)]
    sinks = [f"exit_{i}" for i in range(1, 4)]
    inner = [f"innode_{i}" for i in range(1, 6)]
    nodes = [_source_xml(n, rng) for n in sources]
    nodes += [_sink_xml(n, rng) for n in sinks]
    nodes += [_innode_xml(n, rng) for n in inner]
    topo = [
        ("pipe", "entry_1", "innode_1"),
        ("pipe", "entry_2", "innode_1"),
        ("compressorStation", "innode_1", "innode_2"),
        ("pipe", "innode_2", "innode_3"),
        ("pipe", "innode_3", "exit_1"),
        ("pipe", "innode_2", "innode_4"),
        ("controlValve", "innode_4", "innode_5"),
        ("pipe", "innode_5", "exit_2"),
        ("pipe", "entry_3", "innode_4"),
        ("valve", "innode_5", "exit_3"),
        ("pipe", "innode_3", "innode_4"),
    ]
    conns = [
        _connection_xml(kind, f"a{i}", u, v, rng, i) for i, (kind, u, v) in enumerate(topo)
    ]
    return (
        '<?xml version="1.0" encoding="UTF-8"?>\n'
        f'<network xmlns="{GAS_NS}" xmlns:framework="{FRAME_NS}">\n'
        "  <framework:nodes>\n" + "\n".join(nodes) + "\n  </framework:nodes>\n"
        "  <framework:connections>\n" + "\n".join(conns) + "\n  </framework:connections>\n"
        "</network>\n"
    )


def small11_scn() -> str:
    records = [
        ("entry", "entry_1", 40.0),
        ("entry", "entry_2", 30.0),
        ("entry", "entry_3", 20.0),
        ("exit", "exit_1", 35.0),
        ("exit", "exit_2", 35.0),
        ("exit", "exit_3", 20.0),
    ]
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<boundaryValue xmlns="{GAS_NS}">',
        '  <scenario id="small-base">',
    ]
    for kind, nid, value in records:
        lines.append(f'    <node type="{kind}" id="{nid}">')
        lines.append(
            f'      <flow bound="both" unit="1000m_cube_per_hour" value="{_fmt(value)}"/>'
        )
        lines.append("    </node>")
    lines.append("  </scenario>")
    lines.append("</boundaryValue>")
    return "\n".join(lines) + "\n"


def two_node_net() -> str:
    rng = Random(2)
    return (
        '<?xml version="1.0" encoding="UTF-8"?>\n'
        f'<network xmlns="{GAS_NS}" xmlns:framework="{FRAME_NS}">\n'
        "  <framework:nodes>\n"
        + _source_xml("entry_1", rng)
        + "\n"
        + _sink_xml("exit_1", rng)
        + "\n  </framework:nodes>\n"
        "  <framework:connections>\n"
        + _connection_xml("pipe", "p1", "entry_1", "exit_1", rng, 0)
        + "\n  </framework:connections>\n"
        "</network>\n"
    )


def two_node_scn(flow_thousand_m3h: float = 180.0) -> str:
    return (
        '<?xml version="1.0" encoding="UTF-8"?>\n'
        f'<boundaryValue xmlns="{GAS_NS}">\n'
        '  <scenario id="two-node">\n'
        '    <node type="entry" id="entry_1">\n'
        f'      <flow bound="both" unit="1000m_cube_per_hour" value="{_fmt(flow_thousand_m3h)}"/>\n'
        "    </node>\n"
        '    <node type="exit" id="exit_1">\n'
        f'      <flow bound="both" unit="1000m_cube_per_hour" value="{_fmt(flow_thousand_m3h)}"/>\n'
        "    </node>\n"
        "  </scenario>\n"
        "</boundaryValue>\n"
    )


def write_fixture_directory(root: Path, nominations: int = 12) -> dict[str, Path]:
    """Write all XML fixtures below ``root``; returns the path map."""
    root.mkdir(parents=True, exist_ok=True)
    paths = {
        "net582": root / "synthetic582.net",
        "scn582": root / "synthetic582.scn",
        "nomdir": root / "nominations",
        "net11": root / "small11.net",
        "scn11": root / "small11.scn",
        "net2": root / "two_node.net",
        "scn2": root / "two_node.scn",
    }
    paths["net582"].write_text(gaslib582_like_net(), encoding="utf-8")
    paths["scn582"].write_text(nomination_scn(9090, "base-scenario"), encoding="utf-8")
    paths["nomdir"].mkdir(exist_ok=True)
    for i in range(nominations):
        (paths["nomdir"] / f"nomination_{i:02d}.scn").write_text(
            nomination_scn(1000 + i, f"nomination_{i:02d}"), encoding="utf-8"
        )
    paths["net11"].write_text(small11_net(), encoding="utf-8")
    paths["scn11"].write_text(small11_scn(), encoding="utf-8")
    paths["net2"].write_text(two_node_net(), encoding="utf-8")
    paths["scn2"].write_text(two_node_scn(), encoding="utf-8")
    return paths


# ---------------------------------------------------------------------------
# random tree networks (built directly as model objects)
# ---------------------------------------------------------------------------


def random_tree_network(rng: Random, n_nodes: int | None = None) -> Network:
    """Small random tree with mixed arc kinds and generous bounds.

    Leaves are always entries or exits; inner nodes sit on internal
    positions only (a dead-end inner node would pin its stub arc to zero
    flow and make directional reasoning vacuous).
    """
    n = n_nodes if n_nodes is not None else rng.randint(4, 15)
    parents = [None] + [rng.randrange(i) for i in range(1, n)]
    degree = [0] * n
    for i in range(1, n):
        degree[i] += 1
        degree[parents[i]] += 1

    kinds: list[NodeKind] = [NodeKind.INNER] * n
    leaves = [i for i in range(n) if degree[i] == 1]
    rng.shuffle(leaves)
    kinds[leaves[0]] = NodeKind.ENTRY
    kinds[leaves[1] if len(leaves) > 1 else 0] = NodeKind.EXIT
    for i in leaves[2:]:
        kinds[i] = NodeKind.ENTRY if rng.random() < 0.3 else NodeKind.EXIT
    for i in range(n):
        if degree[i] > 1 and rng.random() < 0.3:
            kinds[i] = NodeKind.ENTRY if rng.random() < 0.4 else NodeKind.EXIT
    if NodeKind.ENTRY not in kinds:
        kinds[leaves[0]] = NodeKind.ENTRY
    if NodeKind.EXIT not in kinds:
        kinds[leaves[-1]] = NodeKind.EXIT

    supplies = {
        i: 38e6 * (1.0 + rng.uniform(-0.06, 0.06))
        for i, k in enumerate(kinds)
        if k is NodeKind.ENTRY
    }
    h_lo, h_hi = min(supplies.values()), max(supplies.values())

    nodes: list[Node] = []
    for i, kind in enumerate(kinds):
        common = dict(
            id=f"n{i:02d}",
            kind=kind,
            p_lo=1.01325e5,
            p_hi=81.01325e5,
            H_lo=h_lo,
            H_hi=h_hi,
        )
        if kind is NodeKind.ENTRY:
            nodes.append(
                Node(
                    H_sup=supplies[i],
                    gas=GasQuality(
                        molar_mass=0.0185 * (1.0 + rng.uniform(-0.02, 0.02)),
                        temperature=283.15 + rng.uniform(-5.0, 5.0),
                        pseudocritical_pressure=46.0e5,
                        pseudocritical_temperature=195.0 + rng.uniform(-5.0, 5.0),
                    ),
                    **common,
                )
            )
        elif kind is NodeKind.EXIT:
            nodes.append(
                Node(q_lo=-rng.uniform(5.0, 15.0), q_hi=-0.2, **common)
            )
        else:
            nodes.append(Node(**common))

    arcs: list[Arc] = []
    for i in range(1, n):
        parent = parents[i]
        u, v = (f"n{parent:02d}", f"n{i:02d}")
        if rng.random() < 0.5:
            u, v = v, u
        r = rng.random()
        if r < 0.65:
            kind = ArcKind.PIPE
        elif r < 0.80:
            kind = ArcKind.ZERO_LENGTH_PIPE
        elif r < 0.90:
            kind = ArcKind.COMPRESSOR
        else:
            kind = ArcKind.CONTROL_VALVE
        geom = None
        delta_hi = None
        if kind is ArcKind.PIPE:
            diameter = rng.uniform(0.3, 0.9)
            geom = PipeGeometry(
                length=rng.uniform(500.0, 20000.0),
                diameter=diameter,
                area=math.pi * diameter * diameter / 4.0,
                roughness=rng.uniform(1e-5, 1e-4),
            )
        elif kind is not ArcKind.ZERO_LENGTH_PIPE:
            delta_hi = 60.0e5
        arcs.append(
            Arc(
                id=f"a{i:02d}",
                from_node=u,
                to_node=v,
                kind=kind,
                q_lo=-500.0,
                q_hi=500.0,
                H_lo=h_lo,
                H_hi=h_hi,
                delta_hi=delta_hi,
                pipe_geom=geom,
            )
        )
    return Network.from_components(nodes, arcs)
