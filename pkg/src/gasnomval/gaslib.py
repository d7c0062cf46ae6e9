"""GasLib file ingestion.

Reads GasLib ``.net`` network files and ``.scn`` scenario (nomination)
files, normalizes all quantities to SI once, and derives the flow-weighted
network constants.  Parsing is namespace-agnostic and does not depend on
element order.

Two-stage design: ``parse_network``/``parse_scenario`` capture the XML
verbatim (values still carry their unit strings), ``build_network``/
``build_scenario`` turn the raw records into the validated SI data model.
"""

from __future__ import annotations

import math
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field

from .errors import GasLibParseError, ScenarioError, DataError
from .network import (
    Arc,
    ArcKind,
    DerivedConstants,
    GasQuality,
    Network,
    Node,
    NodeKind,
    PipeGeometry,
    P_NORM,
    R_UNIVERSAL,
    Scenario,
    T_NORM,
    classify_zero_length,
)
from .units import normalize_units

_NODE_ELEMENTS = {"source": NodeKind.ENTRY, "sink": NodeKind.EXIT, "innode": NodeKind.INNER}


@dataclass(frozen=True)
class RawValue:
    value: float
    unit: str

    @property
    def si(self) -> float:
        return normalize_units(self.value, self.unit)


@dataclass
class RawRecord:
    """One XML element: attributes plus unit-tagged child properties."""

    element: str
    id: str
    attrs: dict[str, str]
    props: dict[str, RawValue]

    def get(self, name: str) -> RawValue | None:
        return self.props.get(name)

    def require(self, name: str) -> RawValue:
        try:
            return self.props[name]
        except KeyError:
            raise GasLibParseError(
                f"{self.element} {self.id!r}: missing <{name}> element"
            ) from None


@dataclass
class RawGasLibNetwork:
    nodes: dict[str, RawRecord] = field(default_factory=dict)
    connections: dict[str, RawRecord] = field(default_factory=dict)
    info: dict[str, str] = field(default_factory=dict)


@dataclass
class RawScenario:
    id: str
    # node id -> list of (record kind, bound, RawValue); kind in {flow, pressure, power}
    records: dict[str, list[tuple[str, str, RawValue]]] = field(default_factory=dict)
    node_types: dict[str, str] = field(default_factory=dict)


def _local(tag: str) -> str:
    """Strip any XML namespace from a tag name."""
    return tag.rsplit("}", 1)[-1]


def _parse_xml(data: bytes | str) -> ET.Element:
    try:
        return ET.fromstring(data)
    except ET.ParseError as exc:
        raise GasLibParseError(f"malformed XML: {exc}") from exc


def _read_props(elem: ET.Element) -> dict[str, RawValue]:
    props: dict[str, RawValue] = {}
    for child in elem:
        name = _local(child.tag)
        value = child.get("value")
        if value is None:
            continue
        try:
            num = float(value)
        except ValueError:
            raise GasLibParseError(
                f"element <{name}>: non-numeric value {value!r}"
            ) from None
        props[name] = RawValue(num, child.get("unit", ""))
    return props


def parse_network(data: bytes | str) -> RawGasLibNetwork:
    """Parse a GasLib ``.net`` document into verbatim records."""
    root = _parse_xml(data)
    raw = RawGasLibNetwork()
    for section in root:
        section_name = _local(section.tag)
        if section_name == "information":
            for child in section:
                raw.info[_local(child.tag)] = (child.text or "").strip()
            continue
        if section_name not in ("nodes", "connections"):
            continue
        for elem in section:
            name = _local(elem.tag)
            ident = elem.get("id")
            if ident is None:
                raise GasLibParseError(f"<{name}> element without id")
            record = RawRecord(
                element=name,
                id=ident,
                attrs={k: v for k, v in elem.attrib.items()},
                props=_read_props(elem),
            )
            if section_name == "nodes":
                if name not in _NODE_ELEMENTS:
                    raise GasLibParseError(f"unknown node element <{name}>")
                if ident in raw.nodes:
                    raise GasLibParseError(f"duplicate node id {ident!r}")
                raw.nodes[ident] = record
            else:
                if ident in raw.connections:
                    raise GasLibParseError(f"duplicate connection id {ident!r}")
                if "from" not in elem.attrib or "to" not in elem.attrib:
                    raise GasLibParseError(f"connection {ident!r}: missing endpoints")
                raw.connections[ident] = record
    for record in raw.connections.values():
        for endpoint in (record.attrs["from"], record.attrs["to"]):
            if endpoint not in raw.nodes:
                raise GasLibParseError(
                    f"connection {record.id!r}: dangling endpoint {endpoint!r}"
                )
    return raw


def parse_network_file(path: str) -> RawGasLibNetwork:
    with open(path, "rb") as handle:
        data = handle.read()
    try:
        return parse_network(data)
    except GasLibParseError as exc:
        raise GasLibParseError(f"{path}: {exc}") from exc


def parse_scenario(data: bytes | str) -> RawScenario:
    """Parse the first scenario of a GasLib ``.scn`` document."""
    root = _parse_xml(data)
    scenario_elem = None
    if _local(root.tag) == "scenario":
        scenario_elem = root
    else:
        for elem in root.iter():
            if _local(elem.tag) == "scenario":
                scenario_elem = elem
                break
    if scenario_elem is None:
        raise GasLibParseError("no <scenario> element found")
    raw = RawScenario(id=scenario_elem.get("id", "scenario"))
    for node_elem in scenario_elem:
        if _local(node_elem.tag) != "node":
            continue
        ident = node_elem.get("id")
        if ident is None:
            raise GasLibParseError("scenario <node> without id")
        raw.node_types[ident] = node_elem.get("type", "")
        entries = raw.records.setdefault(ident, [])
        for rec in node_elem:
            kind = _local(rec.tag)
            if kind not in ("flow", "pressure", "power"):
                continue
            value = rec.get("value")
            if value is None:
                raise GasLibParseError(f"scenario node {ident!r}: <{kind}> without value")
            bound = rec.get("bound", "both")
            if bound not in ("lower", "upper", "both"):
                raise GasLibParseError(
                    f"scenario node {ident!r}: unsupported bound {bound!r}"
                )
            entries.append((kind, bound, RawValue(float(value), rec.get("unit", ""))))
    return raw


def parse_scenario_file(path: str) -> RawScenario:
    with open(path, "rb") as handle:
        data = handle.read()
    try:
        return parse_scenario(data)
    except GasLibParseError as exc:
        raise GasLibParseError(f"{path}: {exc}") from exc


def _bound_pair(
    records: list[tuple[str, str, RawValue]], kind: str
) -> tuple[float, float] | None:
    lo = hi = None
    for rec_kind, bound, raw in records:
        if rec_kind != kind:
            continue
        si = raw.si
        if bound in ("lower", "both"):
            lo = si
        if bound in ("upper", "both"):
            hi = si
    if lo is None and hi is None:
        return None
    if lo is None:
        lo = hi
    if hi is None:
        hi = lo
    return (lo, hi)


def build_network(raw: RawGasLibNetwork) -> Network:
    """Turn verbatim GasLib records into the SI network model.

    Sources contribute their supply calorific values; the min/max over them
    becomes the global calorific range applied to every node and arc that
    has no bounds of its own.  Transition elements other than pipes,
    compressor stations and control valves become zero-length pipes.
    """
    supply_h = [
        rec.require("calorificValue").si
        for rec in raw.nodes.values()
        if rec.element == "source"
    ]
    if supply_h:
        h_lo, h_hi = min(supply_h), max(supply_h)
    else:
        h_lo = h_hi = 0.0

    nodes: list[Node] = []
    for rec in raw.nodes.values():
        kind = _NODE_ELEMENTS[rec.element]
        p_lo = rec.require("pressureMin").si
        p_hi = rec.require("pressureMax").si
        common = dict(id=rec.id, kind=kind, p_lo=p_lo, p_hi=p_hi, H_lo=h_lo, H_hi=h_hi)
        if kind is NodeKind.ENTRY:
            gas = GasQuality(
                molar_mass=rec.require("molarMass").si,
                temperature=rec.require("gasTemperature").si,
                pseudocritical_pressure=rec.require("pseudocriticalPressure").si,
                pseudocritical_temperature=rec.require("pseudocriticalTemperature").si,
                norm_density=(rec.get("normDensity").si if rec.get("normDensity") else None),
            )
            nodes.append(Node(H_sup=rec.require("calorificValue").si, gas=gas, **common))
        elif kind is NodeKind.EXIT:
            # Sink flow bounds are consumption magnitudes; demand is <= 0.
            flow_lo = rec.get("flowMin")
            flow_hi = rec.get("flowMax")
            q_lo = -(flow_hi.si) if flow_hi is not None else 0.0
            q_hi = -(flow_lo.si) if flow_lo is not None else 0.0
            nodes.append(Node(q_lo=q_lo, q_hi=q_hi, **common))
        else:
            nodes.append(Node(**common))

    node_bounds = {n.id: (n.p_lo, n.p_hi) for n in nodes}
    arcs: list[Arc] = []
    for rec in raw.connections.values():
        kind = classify_zero_length(rec.element)
        q_lo = rec.require("flowMin").si
        q_hi = rec.require("flowMax").si
        delta_hi = None
        geom = None
        if kind is ArcKind.PIPE:
            diameter = rec.require("diameter").si
            geom = PipeGeometry(
                length=rec.require("length").si,
                diameter=diameter,
                area=math.pi * diameter**2 / 4.0,
                roughness=rec.require("roughness").si,
            )
        elif kind is ArcKind.COMPRESSOR:
            lo_from = node_bounds[rec.attrs["from"]][0]
            hi_to = node_bounds[rec.attrs["to"]][1]
            delta_hi = max(0.0, hi_to - lo_from)
        elif kind is ArcKind.CONTROL_VALVE:
            hi_from = node_bounds[rec.attrs["from"]][1]
            lo_to = node_bounds[rec.attrs["to"]][0]
            delta_hi = max(0.0, hi_from - lo_to)
        arcs.append(
            Arc(
                id=rec.id,
                from_node=rec.attrs["from"],
                to_node=rec.attrs["to"],
                kind=kind,
                q_lo=q_lo,
                q_hi=q_hi,
                H_lo=h_lo,
                H_hi=h_hi,
                delta_hi=delta_hi,
                pipe_geom=geom,
            )
        )
    return Network.from_components(nodes, arcs)


def build_scenario(network: Network, raw: RawScenario) -> Scenario:
    """Resolve a raw scenario against its network.

    Flow records become nominations (entry supply positive, exit demand
    negative); slack bound pairs resolve to their midpoint.  The nomination
    vector is then rebalanced proportionally on the entry side so that
    supplies and demands cancel.
    """
    q_nom: dict[str, float] = {}
    flow_bounds: dict[str, tuple[float, float]] = {}
    pressure: dict[str, tuple[float, float]] = {}
    power: dict[str, tuple[float, float]] = {}

    for node_id, records in raw.records.items():
        node = network.nodes.get(node_id)
        if node is None:
            raise GasLibParseError(f"scenario references unknown node {node_id!r}")
        pair = _bound_pair(records, "flow")
        if pair is not None:
            lo, hi = pair
            mid = lo if lo == hi else 0.5 * (lo + hi)
            if node.kind is NodeKind.ENTRY:
                q_nom[node_id] = mid
            elif node.kind is NodeKind.EXIT:
                q_nom[node_id] = -mid
                flow_bounds[node_id] = (-hi, -lo)
            else:
                raise ScenarioError(f"flow record on inner node {node_id!r}")
        p_pair = _bound_pair(records, "pressure")
        if p_pair is not None:
            pressure[node_id] = (
                max(node.p_lo, p_pair[0]),
                min(node.p_hi, p_pair[1]),
            )
        w_pair = _bound_pair(records, "power")
        if w_pair is not None:
            power[node_id] = w_pair

    # Proportional rebalance on the entry side, then absorb the floating
    # point residue into the largest supply so the total is exactly zero.
    supply = math.fsum(v for v in q_nom.values() if v > 0)
    demand = -math.fsum(v for v in q_nom.values() if v < 0)
    shift = supply - demand
    if supply > 0 and abs(shift) > 0:
        factor = demand / supply
        for node_id, value in q_nom.items():
            if value > 0:
                q_nom[node_id] = value * factor
    elif supply == 0 and demand > 0:
        raise ScenarioError("demand without any entry supply")
    for _ in range(3):
        residue = math.fsum(q_nom.values())
        if residue == 0.0:
            break
        entries = [nid for nid, v in q_nom.items() if v > 0]
        if not entries:
            break
        target = max(entries, key=lambda nid: q_nom[nid])
        q_nom[target] -= residue

    return Scenario(
        id=raw.id,
        q_nom=dict(sorted(q_nom.items())),
        flow_bounds=dict(sorted(flow_bounds.items())),
        pressure=dict(sorted(pressure.items())),
        power=dict(sorted(power.items())),
        balance_shift=shift,
    )


def papay_z(p_reduced: float, T_reduced: float) -> float:
    """Compressibility factor from reduced pressure and temperature."""
    return (
        1.0
        - 3.52 * p_reduced * math.exp(-2.26 * T_reduced)
        + 0.247 * p_reduced**2 * math.exp(-1.878 * T_reduced)
    )


def derive_constants(network: Network, scenario: Scenario) -> DerivedConstants:
    """Flow-weighted mean constants for one nomination.

    Weights are the nominated entry flows; entries that supply nothing drop
    out.  The mean pressure defaults to the flow-weighted midpoint of the
    entry pressure bounds (scenario overrides included).
    """
    weights: list[tuple[Node, float]] = []
    for node in network.entries:
        w = scenario.q_nom.get(node.id, 0.0)
        if w > 0:
            weights.append((node, w))
    total = math.fsum(w for _, w in weights)
    if total <= 0:
        raise ScenarioError("zero total entry flow; cannot derive constants")

    def mean(values: list[float]) -> float:
        return math.fsum(v * w for v, (_, w) in zip(values, weights)) / total

    for node, _ in weights:
        if node.gas is None:
            raise DataError(f"entry {node.id}: missing supply gas data")

    molar_mass = mean([n.gas.molar_mass for n, _ in weights])
    T_m = mean([n.gas.temperature for n, _ in weights])
    p_cm = mean([n.gas.pseudocritical_pressure for n, _ in weights])
    T_cm = mean([n.gas.pseudocritical_temperature for n, _ in weights])
    H_m = mean([n.H_sup for n, _ in weights])

    def midpoint(node: Node) -> float:
        lo, hi = scenario.pressure.get(node.id, (node.p_lo, node.p_hi))
        return 0.5 * (lo + hi)

    p_m = mean([midpoint(n) for n, _ in weights])
    z_m = papay_z(p_m / p_cm, T_m / T_cm)
    rho_norm = P_NORM * molar_mass / (R_UNIVERSAL * T_NORM)
    consts = DerivedConstants(
        R_sm=R_UNIVERSAL / molar_mass,
        T_m=T_m,
        z_m=z_m,
        H_m=H_m,
        p_m=p_m,
        p_cm=p_cm,
        T_cm=T_cm,
        rho_norm=rho_norm,
        molar_mass_m=molar_mass,
    )
    consts.validate()
    return consts


def load_instance(
    net_path: str, scn_path: str
) -> tuple[Network, Scenario, DerivedConstants]:
    """Parse, normalize and derive in one call (the common CLI path)."""
    network = build_network(parse_network_file(net_path))
    scenario = build_scenario(network, parse_scenario_file(scn_path))
    consts = derive_constants(network, scenario)
    return network, scenario, consts
