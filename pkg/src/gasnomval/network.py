"""In-memory gas network data model.

Everything in this module is stored in SI base units (Pa, m3/s, K, J/m3, m);
unit conversion happens once, at ingestion.  ``Network``, ``Scenario`` and
``DerivedConstants`` are immutable after construction and safe to share
between workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum

from .errors import DataError, ScenarioError

R_UNIVERSAL = 8.3144621  # J/(mol K)
VISCOSITY = 1e-6  # kg/(m s), fixed model-wide
P_NORM = 1.01325e5  # Pa, normal conditions
T_NORM = 273.15  # K


class NodeKind(Enum):
    ENTRY = "entry"
    EXIT = "exit"
    INNER = "inner"


class ArcKind(Enum):
    PIPE = "pipe"
    COMPRESSOR = "compressor"
    CONTROL_VALVE = "control_valve"
    ZERO_LENGTH_PIPE = "zero_length_pipe"


#: GasLib connection element names that keep their own physics.  Everything
#: else (valves, resistors, short pipes, ...) behaves as a zero-length pipe.
_KIND_MAP = {
    "pipe": ArcKind.PIPE,
    "compressorStation": ArcKind.COMPRESSOR,
    "controlValve": ArcKind.CONTROL_VALVE,
}


def classify_zero_length(raw_arc_kind: str) -> ArcKind:
    """Map a GasLib connection element name to an arc kind (total mapping)."""
    return _KIND_MAP.get(raw_arc_kind, ArcKind.ZERO_LENGTH_PIPE)


@dataclass(frozen=True)
class GasQuality:
    """Supply-gas properties attached to entry nodes."""

    molar_mass: float  # kg/mol
    temperature: float  # K
    pseudocritical_pressure: float  # Pa
    pseudocritical_temperature: float  # K
    norm_density: float | None = None  # kg/m3, informational


@dataclass(frozen=True)
class PipeGeometry:
    length: float  # m
    diameter: float  # m
    area: float  # m2
    roughness: float  # m

    def validate(self, arc_id: str) -> None:
        if min(self.length, self.diameter, self.area, self.roughness) <= 0.0:
            raise DataError(f"pipe {arc_id}: non-positive geometry")
        ref = math.pi * self.diameter**2 / 4.0
        if abs(self.area - ref) > 1e-9 * ref:
            raise DataError(
                f"pipe {arc_id}: area {self.area} inconsistent with diameter"
            )
        if self.roughness / self.diameter >= 1.0:
            raise DataError(f"pipe {arc_id}: relative roughness k/D >= 1")


@dataclass(frozen=True)
class Node:
    id: str
    kind: NodeKind
    p_lo: float  # Pa
    p_hi: float  # Pa
    H_lo: float  # J/m3
    H_hi: float  # J/m3
    q_nom: float = 0.0  # m3/s, >=0 entry, <=0 exit, =0 inner
    H_sup: float | None = None  # J/m3, entry only
    gas: GasQuality | None = None  # entry only
    P_lo: float | None = None  # W, exit only
    P_hi: float | None = None  # W, exit only
    q_lo: float | None = None  # m3/s, exit only
    q_hi: float | None = None  # m3/s, exit only

    def validate(self) -> None:
        if self.p_lo > self.p_hi:
            raise DataError(f"node {self.id}: pressure bounds crossed")
        if self.H_lo > self.H_hi:
            raise DataError(f"node {self.id}: calorific bounds crossed")
        entry_only = (self.H_sup, self.gas)
        exit_only = (self.P_lo, self.P_hi, self.q_lo, self.q_hi)
        if self.kind is NodeKind.ENTRY:
            if self.q_nom < 0:
                raise DataError(f"entry {self.id}: negative nomination")
            if self.H_sup is None:
                raise DataError(f"entry {self.id}: missing supply calorific value")
            if any(v is not None for v in exit_only):
                raise DataError(f"entry {self.id}: exit-only fields set")
        elif self.kind is NodeKind.EXIT:
            if self.q_nom > 0:
                raise DataError(f"exit {self.id}: positive nomination")
            if any(v is not None for v in entry_only):
                raise DataError(f"exit {self.id}: entry-only fields set")
            if (self.q_lo is None) != (self.q_hi is None):
                raise DataError(f"exit {self.id}: partial flow bounds")
            if self.q_lo is not None and self.q_hi is not None:
                if self.q_lo > self.q_hi:
                    raise DataError(f"exit {self.id}: flow bounds crossed")
                if self.q_hi > 0 or self.q_lo > 0:
                    raise DataError(f"exit {self.id}: flow bounds must be <= 0")
        else:
            if self.q_nom != 0:
                raise DataError(f"inner node {self.id}: nonzero nomination")
            if any(v is not None for v in entry_only + exit_only):
                raise DataError(f"inner node {self.id}: kind-conditional fields set")


@dataclass(frozen=True)
class Arc:
    id: str
    from_node: str
    to_node: str
    kind: ArcKind
    q_lo: float  # m3/s
    q_hi: float  # m3/s
    H_lo: float  # J/m3
    H_hi: float  # J/m3
    delta_hi: float | None = None  # Pa, compressor / control valve only
    pipe_geom: PipeGeometry | None = None  # pipe only

    def validate(self) -> None:
        if self.q_lo > self.q_hi:
            raise DataError(f"arc {self.id}: flow bounds crossed")
        if self.H_lo > self.H_hi:
            raise DataError(f"arc {self.id}: calorific bounds crossed")
        if self.kind is ArcKind.PIPE:
            if self.pipe_geom is None:
                raise DataError(f"pipe {self.id}: missing geometry")
            self.pipe_geom.validate(self.id)
        elif self.pipe_geom is not None:
            raise DataError(f"arc {self.id}: geometry on non-pipe")
        if self.kind in (ArcKind.COMPRESSOR, ArcKind.CONTROL_VALVE):
            if self.delta_hi is None or self.delta_hi < 0:
                raise DataError(f"arc {self.id}: missing pressure-change bound")
        elif self.delta_hi is not None:
            raise DataError(f"arc {self.id}: pressure-change bound on {self.kind}")


@dataclass(frozen=True)
class Network:
    """Directed multigraph of nodes and arcs with adjacency indices.

    ``nodes`` and ``arcs`` are insertion-ordered by sorted id, so any
    iteration over them is deterministic.
    """

    nodes: dict[str, Node]
    arcs: dict[str, Arc]
    out_arcs: dict[str, tuple[str, ...]] = field(repr=False, default_factory=dict)
    in_arcs: dict[str, tuple[str, ...]] = field(repr=False, default_factory=dict)

    @staticmethod
    def from_components(nodes: list[Node], arcs: list[Arc]) -> "Network":
        node_map = {n.id: n for n in sorted(nodes, key=lambda n: n.id)}
        if len(node_map) != len(nodes):
            raise DataError("duplicate node ids")
        arc_map = {a.id: a for a in sorted(arcs, key=lambda a: a.id)}
        if len(arc_map) != len(arcs):
            raise DataError("duplicate arc ids")
        out_idx: dict[str, list[str]] = {nid: [] for nid in node_map}
        in_idx: dict[str, list[str]] = {nid: [] for nid in node_map}
        for arc in arc_map.values():
            arc.validate()
            if arc.from_node not in node_map or arc.to_node not in node_map:
                raise DataError(f"arc {arc.id}: endpoint not in node set")
            out_idx[arc.from_node].append(arc.id)
            in_idx[arc.to_node].append(arc.id)
        for node in node_map.values():
            node.validate()
        return Network(
            nodes=node_map,
            arcs=arc_map,
            out_arcs={k: tuple(v) for k, v in out_idx.items()},
            in_arcs={k: tuple(v) for k, v in in_idx.items()},
        )

    def nodes_of_kind(self, kind: NodeKind) -> list[Node]:
        return [n for n in self.nodes.values() if n.kind is kind]

    def arcs_of_kind(self, kind: ArcKind) -> list[Arc]:
        return [a for a in self.arcs.values() if a.kind is kind]

    @property
    def entries(self) -> list[Node]:
        return self.nodes_of_kind(NodeKind.ENTRY)

    @property
    def exits(self) -> list[Node]:
        return self.nodes_of_kind(NodeKind.EXIT)

    @property
    def inner(self) -> list[Node]:
        return self.nodes_of_kind(NodeKind.INNER)

    def is_tree(self) -> bool:
        """True if the underlying undirected graph is connected and acyclic."""
        if len(self.arcs) != len(self.nodes) - 1:
            return False
        seen: set[str] = set()
        start = next(iter(self.nodes))
        stack = [start]
        while stack:
            nid = stack.pop()
            if nid in seen:
                continue
            seen.add(nid)
            for aid in self.out_arcs[nid]:
                stack.append(self.arcs[aid].to_node)
            for aid in self.in_arcs[nid]:
                stack.append(self.arcs[aid].from_node)
        return len(seen) == len(self.nodes)


def node_balance_residual(
    network: Network, flows: dict[str, float], node: str
) -> float:
    """Mass-balance residual ``q_nom(u) - (outflow - inflow)`` at one node.

    Zero exactly when the balance constraint holds at ``node``.
    """
    if node not in network.nodes:
        raise DataError(f"unknown node id: {node}")
    out_sum = math.fsum(flows[aid] for aid in network.out_arcs[node])
    in_sum = math.fsum(flows[aid] for aid in network.in_arcs[node])
    return network.nodes[node].q_nom - (out_sum - in_sum)


@dataclass(frozen=True)
class Scenario:
    """One nomination after unit normalization and rebalancing.

    ``q_nom`` covers every node (zero for inactive ones).  ``flow_bounds``
    holds the per-exit bound pair used for heat-power bounds; ``pressure``
    holds scenario pressure-bound overrides (already intersected with the
    network bounds by the loader).
    """

    id: str
    q_nom: dict[str, float]  # m3/s per node id
    flow_bounds: dict[str, tuple[float, float]] = field(default_factory=dict)
    pressure: dict[str, tuple[float, float]] = field(default_factory=dict)
    power: dict[str, tuple[float, float]] = field(default_factory=dict)
    balance_shift: float = 0.0  # m3/s absorbed by rebalancing, for metadata

    def total_supply(self) -> float:
        return math.fsum(v for v in self.q_nom.values() if v > 0)

    def imbalance(self) -> float:
        return math.fsum(self.q_nom.values())


@dataclass(frozen=True)
class DerivedConstants:
    """Flow-weighted network means feeding pressure loss and heat power."""

    R_sm: float  # J/(kg K)
    T_m: float  # K
    z_m: float  # unitless
    H_m: float  # J/m3
    p_m: float  # Pa
    p_cm: float  # Pa
    T_cm: float  # K
    rho_norm: float  # kg/m3
    molar_mass_m: float  # kg/mol
    eta: float = VISCOSITY
    R_universal: float = R_UNIVERSAL

    def validate(self) -> None:
        if not (0.0 < self.z_m <= 1.2):
            raise DataError(f"compressibility z_m out of range: {self.z_m}")
        if self.rho_norm <= 0:
            raise DataError("non-positive normal density")


def apply_scenario(
    network: Network, scenario: Scenario, consts: "DerivedConstants | None" = None
) -> Network:
    """Return a new network with per-node scenario data merged in.

    Nominations, exit flow bounds and pressure overrides are written onto
    the nodes; heat-power bounds are resolved from the scenario (explicit
    values win, otherwise they are derived from the exit flow bounds and the
    mean calorific value in ``consts``).
    """
    nodes = []
    for node in network.nodes.values():
        q_nom = scenario.q_nom.get(node.id, 0.0)
        if node.kind is NodeKind.INNER and q_nom != 0.0:
            raise ScenarioError(f"nomination on inner node {node.id}")
        patch: dict = {"q_nom": q_nom}
        if node.id in scenario.pressure:
            p_lo, p_hi = scenario.pressure[node.id]
            if p_lo > p_hi:
                raise ScenarioError(f"node {node.id}: empty scenario pressure range")
            patch["p_lo"], patch["p_hi"] = p_lo, p_hi
        if node.kind is NodeKind.EXIT:
            q_lo, q_hi = scenario.flow_bounds.get(
                node.id, (node.q_lo or 0.0, node.q_hi or 0.0)
            )
            patch["q_lo"], patch["q_hi"] = q_lo, q_hi
            if node.id in scenario.power:
                patch["P_lo"], patch["P_hi"] = scenario.power[node.id]
            elif consts is not None:
                patch["P_lo"], patch["P_hi"] = compute_heat_power_bounds_raw(
                    q_lo, q_hi, consts.H_m
                )
        nodes.append(replace(node, **patch))
    return Network.from_components(nodes, list(network.arcs.values()))


def compute_heat_power_bounds_raw(
    q_lo: float, q_hi: float, H_m: float
) -> tuple[float, float]:
    """Heat-power bounds from nonpositive exit flow bounds and mean calorific.

    The exit flow bounds are nonpositive, so the magnitude of the *upper*
    flow bound feeds the lower power bound and vice versa.
    """
    if q_lo > q_hi:
        raise DataError("exit flow bounds crossed")
    if q_hi > 0:
        raise DataError("exit flow bounds must be nonpositive")
    if H_m < 0:
        raise DataError("negative mean calorific value")
    p_lo = 0.9 * abs(q_hi) * H_m
    p_hi = 1.1 * abs(q_lo) * H_m
    return (min(p_lo, p_hi), max(p_lo, p_hi))


def compute_heat_power_bounds(exit_node: Node, H_m: float) -> tuple[float, float]:
    """Heat-power bounds for one exit node (see :func:`compute_heat_power_bounds_raw`)."""
    if exit_node.kind is not NodeKind.EXIT:
        raise DataError(f"node {exit_node.id} is not an exit")
    if exit_node.q_lo is None or exit_node.q_hi is None:
        raise DataError(f"exit {exit_node.id}: missing flow bounds")
    return compute_heat_power_bounds_raw(exit_node.q_lo, exit_node.q_hi, H_m)


def global_calorific_bounds(network: Network) -> tuple[float, float]:
    """Network-wide calorific range: (min node lower bound, max node upper bound)."""
    if not network.nodes:
        raise DataError("empty network")
    lo = min(n.H_lo for n in network.nodes.values())
    hi = max(n.H_hi for n in network.nodes.values())
    return lo, hi
