"""Independent feasibility oracle for tree-shaped networks.

On a tree the flows are uniquely determined by the nominations, calorific
values propagate along flow directions with flow-weighted mixing, and the
pressure assignment reduces to a one-dimensional choice of the root
pressure.  The oracle evaluates pressure losses through the scalar loss
functions directly (not through model expression trees), so it provides
ground truth that is independent of the model builder.

Feasible subtree pressure ranges are computed exactly bottom-up; the root
pressure is then chosen by a grid scan over its feasible range, refined by a
golden-section search on the compression objective, with minimal feasible
boosts assigned on the way down.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from random import Random

from .errors import DataError, ScenarioError
from .gaslib import derive_constants
from .network import (
    Arc,
    ArcKind,
    DerivedConstants,
    Network,
    NodeKind,
    Scenario,
    apply_scenario,
)
from .model import PA_PER_BAR, J_PER_MJ, W_PER_MW, ModelInstance, vname
from .export import Solution
from .pressure_loss import PipeLossParams, derive_pipe_params, phi_bar2

_SCAN_POINTS = 1024
_REFINE_REL = 1e-8


@dataclass
class TreeOracleResult:
    feasible: bool
    flows: dict[str, float]  # m3/s per arc
    node_calorific: dict[str, float]  # J/m3
    arc_calorific: dict[str, float]  # J/m3
    pressures: dict[str, float]  # bar per node
    deltas: dict[str, float]  # bar per compressor / control-valve arc
    directions: dict[str, int]  # 1 forward, 0 backward
    objective: float  # bar, compressors only
    witnesses: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "feasible": self.feasible,
            "objective": self.objective,
            "flows_m3_per_s": dict(sorted(self.flows.items())),
            "node_calorific_J_per_m3": dict(sorted(self.node_calorific.items())),
            "arc_calorific_J_per_m3": dict(sorted(self.arc_calorific.items())),
            "pressures_bar": dict(sorted(self.pressures.items())),
            "deltas_bar": dict(sorted(self.deltas.items())),
            "directions": dict(sorted(self.directions.items())),
            "witnesses": self.witnesses,
        }


def _solve_tree_flows(net: Network) -> dict[str, float]:
    """Leaf elimination: the unique flow vector satisfying all balances."""
    residual = {nid: net.nodes[nid].q_nom for nid in net.nodes}
    incident: dict[str, list[str]] = {nid: [] for nid in net.nodes}
    for arc in net.arcs.values():
        incident[arc.from_node].append(arc.id)
        incident[arc.to_node].append(arc.id)
    degree = {nid: len(a) for nid, a in incident.items()}
    solved: dict[str, float] = {}
    leaves = [nid for nid, deg in degree.items() if deg <= 1]
    removed: set[str] = set()
    while leaves:
        nid = leaves.pop()
        if nid in removed:
            continue
        open_arcs = [a for a in incident[nid] if a not in solved]
        if not open_arcs:
            removed.add(nid)
            continue
        aid = open_arcs[0]
        arc = net.arcs[aid]
        if arc.from_node == nid:
            solved[aid] = residual[nid]
            other = arc.to_node
            residual[other] += residual[nid]
        else:
            solved[aid] = -residual[nid]
            other = arc.from_node
            residual[other] += residual[nid]
        removed.add(nid)
        degree[other] -= 1
        if degree[other] <= 1:
            leaves.append(other)
    return solved


def _propagate_calorific(
    net: Network, flows: dict[str, float], fallback: float
) -> tuple[dict[str, float], dict[str, float]]:
    """Flow-weighted mixing at nodes, source values carried along arcs.

    Nodes with no physical inflow at all take the clipped fallback value
    (their mixing balance is vacuous).  Zero-flow arcs carry the calorific
    value of their tail node, matching the forward-direction convention.
    """
    inflow_arcs: dict[str, list[str]] = {nid: [] for nid in net.nodes}
    indegree = {nid: 0 for nid in net.nodes}
    for aid, q in flows.items():
        arc = net.arcs[aid]
        if q > 0:
            inflow_arcs[arc.to_node].append(aid)
            indegree[arc.to_node] += 1
        elif q < 0:
            inflow_arcs[arc.from_node].append(aid)
            indegree[arc.from_node] += 1

    node_h: dict[str, float] = {}
    arc_h: dict[str, float] = {}
    ready = [nid for nid, deg in indegree.items() if deg == 0]
    while ready:
        nid = ready.pop()
        node = net.nodes[nid]
        weights: list[float] = []
        contributions: list[float] = []
        for aid in inflow_arcs[nid]:
            w = abs(flows[aid])
            weights.append(w)
            contributions.append(w * arc_h[aid])
        if node.kind is NodeKind.ENTRY and node.q_nom > 0:
            weights.append(node.q_nom)
            contributions.append(node.q_nom * node.H_sup)
        total = math.fsum(weights)
        if total > 0.0:
            node_h[nid] = math.fsum(contributions) / total
        else:
            node_h[nid] = min(max(fallback, node.H_lo), node.H_hi)
        for aid in net.out_arcs[nid]:
            if flows[aid] > 0:
                arc_h[aid] = node_h[nid]
                indegree[net.arcs[aid].to_node] -= 1
                if indegree[net.arcs[aid].to_node] == 0:
                    ready.append(net.arcs[aid].to_node)
        for aid in net.in_arcs[nid]:
            if flows[aid] < 0:
                arc_h[aid] = node_h[nid]
                indegree[net.arcs[aid].from_node] -= 1
                if indegree[net.arcs[aid].from_node] == 0:
                    ready.append(net.arcs[aid].from_node)
    if len(node_h) != len(net.nodes):
        raise DataError("cyclic calorific dependency on a tree network")
    for aid, q in flows.items():
        if q == 0.0:
            arc_h[aid] = node_h[net.arcs[aid].from_node]
    return node_h, arc_h


@dataclass
class _TreeEdge:
    arc: Arc
    child: str
    child_is_head: bool  # child == arc.to_node
    phi: float = 0.0  # bar^2, fixed once flows are known (pipes only)


def _rooted_edges(net: Network, root: str) -> dict[str, list[_TreeEdge]]:
    """Children lists of the tree rooted at ``root``."""
    children: dict[str, list[_TreeEdge]] = {nid: [] for nid in net.nodes}
    seen = {root}
    frontier = [root]
    while frontier:
        nid = frontier.pop()
        for aid in sorted(net.out_arcs[nid] + net.in_arcs[nid]):
            arc = net.arcs[aid]
            other = arc.to_node if arc.from_node == nid else arc.from_node
            if other in seen:
                continue
            seen.add(other)
            children[nid].append(
                _TreeEdge(arc=arc, child=other, child_is_head=(other == arc.to_node))
            )
            frontier.append(other)
    return children


def _interval_to_parent(edge: _TreeEdge, lo: float, hi: float) -> tuple[float, float]:
    """Parent pressures (bar) for which some child pressure in [lo, hi] works."""
    arc = edge.arc
    if arc.kind is ArcKind.PIPE:
        sign = 1.0 if edge.child_is_head else -1.0
        a = lo * lo + sign * edge.phi
        b = hi * hi + sign * edge.phi
        a, b = min(a, b), max(a, b)
        if b < 0.0:
            return (1.0, 0.0)  # empty
        return (math.sqrt(max(a, 0.0)), math.sqrt(b))
    if arc.kind is ArcKind.ZERO_LENGTH_PIPE:
        return (lo, hi)
    span = arc.delta_hi / PA_PER_BAR
    if arc.kind is ArcKind.COMPRESSOR:
        # parent = tail: p_child = p_parent + delta; parent = head: reversed
        return (lo - span, hi) if edge.child_is_head else (lo, hi + span)
    # control valve: pressure drops tail -> head
    return (lo, hi + span) if edge.child_is_head else (lo - span, hi)


def _down_assign(
    edge: _TreeEdge, p_parent: float, child_interval: tuple[float, float]
) -> tuple[float, float]:
    """Child pressure and (nonnegative) boost/drop for a fixed parent pressure."""
    arc = edge.arc
    lo, hi = child_interval
    if arc.kind is ArcKind.PIPE:
        sign = -1.0 if edge.child_is_head else 1.0
        return (math.sqrt(max(p_parent * p_parent + sign * edge.phi, 0.0)), 0.0)
    if arc.kind is ArcKind.ZERO_LENGTH_PIPE:
        return (p_parent, 0.0)
    if arc.kind is ArcKind.COMPRESSOR:
        if edge.child_is_head:
            delta = max(0.0, lo - p_parent)
            return (p_parent + delta, delta)
        delta = max(0.0, p_parent - hi)
        return (p_parent - delta, delta)
    if edge.child_is_head:
        delta = max(0.0, p_parent - hi)
        return (p_parent - delta, delta)
    delta = max(0.0, lo - p_parent)
    return (p_parent + delta, delta)


def tree_oracle(
    network: Network,
    scenario: Scenario,
    consts: DerivedConstants,
    variant: str = "fs",
    tol: float = 1e-9,
) -> TreeOracleResult:
    """Ground-truth feasibility check on a tree network.

    Raises:
        DataError: if the network is not a tree.
        ScenarioError: if the nomination is materially unbalanced.
    """
    net = apply_scenario(network, scenario, consts)
    if not net.is_tree():
        raise DataError("oracle requires a connected tree network")
    scale = max(1.0, math.fsum(abs(v) for v in scenario.q_nom.values()))
    if abs(scenario.imbalance()) > 1e-9 * scale:
        raise ScenarioError("unbalanced nomination")

    flows = _solve_tree_flows(net)
    witnesses: list[str] = []
    for aid, q in sorted(flows.items()):
        arc = net.arcs[aid]
        if q < arc.q_lo - tol * scale or q > arc.q_hi + tol * scale:
            witnesses.append(f"flow bound violated on arc {aid}: {q}")

    node_h, arc_h = _propagate_calorific(net, flows, consts.H_m)
    h_slack = 1e-9 * max(1.0, consts.H_m)
    for nid, h in sorted(node_h.items()):
        node = net.nodes[nid]
        if h < node.H_lo - h_slack or h > node.H_hi + h_slack:
            witnesses.append(f"calorific bound violated at node {nid}: {h}")
    for aid, h in sorted(arc_h.items()):
        arc = net.arcs[aid]
        if h < arc.H_lo - h_slack or h > arc.H_hi + h_slack:
            witnesses.append(f"calorific bound violated on arc {aid}: {h}")
    for node in net.exits:
        drawn = node_h[node.id] * abs(node.q_nom)
        if node.P_lo is not None and (
            drawn < node.P_lo - 1e-9 * W_PER_MW or drawn > node.P_hi + 1e-9 * W_PER_MW
        ):
            witnesses.append(f"heat power out of bounds at exit {node.id}: {drawn}")

    directions = {aid: (1 if q >= 0 else 0) for aid, q in flows.items()}

    root = min(net.nodes)
    children = _rooted_edges(net, root)
    pipe_params: dict[str, PipeLossParams] = {}
    for nid in net.nodes:
        for edge in children[nid]:
            if edge.arc.kind is ArcKind.PIPE:
                params = pipe_params.setdefault(
                    edge.arc.id, derive_pipe_params(edge.arc.pipe_geom, consts)
                )
                edge.phi = phi_bar2(
                    params, variant, flows[edge.arc.id], consts.rho_norm
                )

    # Bottom-up feasible pressure windows per subtree (bar).
    order: list[str] = []
    stack = [root]
    while stack:
        nid = stack.pop()
        order.append(nid)
        stack.extend(e.child for e in children[nid])
    window: dict[str, tuple[float, float]] = {}
    pressure_feasible = True
    for nid in reversed(order):
        node = net.nodes[nid]
        lo, hi = node.p_lo / PA_PER_BAR, node.p_hi / PA_PER_BAR
        for edge in children[nid]:
            c_lo, c_hi = window[edge.child]
            e_lo, e_hi = _interval_to_parent(edge, c_lo, c_hi)
            lo, hi = max(lo, e_lo), min(hi, e_hi)
        if lo > hi:
            witnesses.append(f"no feasible pressure window at node {nid}")
            pressure_feasible = False
            lo, hi = node.p_lo / PA_PER_BAR, node.p_hi / PA_PER_BAR
        window[nid] = (lo, hi)

    pressures: dict[str, float] = {}
    deltas: dict[str, float] = {}
    objective = 0.0
    if pressure_feasible and not witnesses:
        has_compressor = any(
            a.kind is ArcKind.COMPRESSOR for a in net.arcs.values()
        )

        def assign(p_root: float) -> tuple[float, dict[str, float], dict[str, float]]:
            p_assign = {root: p_root}
            d_assign: dict[str, float] = {}
            total = 0.0
            for nid in order:
                for edge in children[nid]:
                    p_child, delta = _down_assign(
                        edge, p_assign[nid], window[edge.child]
                    )
                    p_assign[edge.child] = p_child
                    if edge.arc.kind in (ArcKind.COMPRESSOR, ArcKind.CONTROL_VALVE):
                        d_assign[edge.arc.id] = delta
                        if edge.arc.kind is ArcKind.COMPRESSOR:
                            total += delta
            return total, p_assign, d_assign

        r_lo, r_hi = window[root]
        if r_hi <= r_lo or not has_compressor:
            candidates = [r_lo if has_compressor else 0.5 * (r_lo + r_hi)]
        else:
            step = (r_hi - r_lo) / (_SCAN_POINTS - 1)
            candidates = [r_lo + i * step for i in range(_SCAN_POINTS)]
        best = None
        best_idx = 0
        for i, cand in enumerate(candidates):
            obj, _, _ = assign(cand)
            if best is None or obj < best[0] - 1e-15:
                best = (obj, cand)
                best_idx = i
        if has_compressor and len(candidates) > 1:
            # golden-section refinement around the best grid point
            a = candidates[max(best_idx - 1, 0)]
            b = candidates[min(best_idx + 1, len(candidates) - 1)]
            gr = (math.sqrt(5.0) - 1.0) / 2.0
            x1 = b - gr * (b - a)
            x2 = a + gr * (b - a)
            f1, _, _ = assign(x1)
            f2, _, _ = assign(x2)
            while (b - a) > _REFINE_REL * max(1.0, abs(b)):
                if f1 <= f2:
                    b, x2, f2 = x2, x1, f1
                    x1 = b - gr * (b - a)
                    f1, _, _ = assign(x1)
                else:
                    a, x1, f1 = x1, x2, f2
                    x2 = a + gr * (b - a)
                    f2, _, _ = assign(x2)
            if f1 <= min(f2, best[0]):
                best = (f1, x1)
            elif f2 <= best[0]:
                best = (f2, x2)
        objective, pressures, deltas = assign(best[1])

    return TreeOracleResult(
        feasible=not witnesses,
        flows=flows,
        node_calorific=node_h,
        arc_calorific=arc_h,
        pressures=pressures,
        deltas=deltas,
        directions=directions,
        objective=objective,
        witnesses=witnesses,
    )


def solution_from_oracle(model: ModelInstance, result: TreeOracleResult) -> Solution:
    """Lift an oracle result to a full assignment of the model's variables."""
    if not result.feasible:
        raise DataError("cannot lift an infeasible oracle result")
    values: dict[str, float] = {}
    formulation = model.metadata.get("formulation")
    epsilon = model.metadata.get("epsilon") or 0.0
    for nid, p in result.pressures.items():
        values[vname("p", nid)] = p
    for nid, h in result.node_calorific.items():
        values[vname("Hn", nid)] = h / J_PER_MJ
    for aid, q in result.flows.items():
        values[vname("q", aid)] = q
        beta, gamma = max(q, 0.0), max(-q, 0.0)
        if formulation == "minlp":
            values[vname("beta", aid)] = beta
            values[vname("gamma", aid)] = gamma
            values[vname("d", aid)] = float(result.directions[aid])
        else:
            values[vname("beta", aid)] = beta
            if beta > 0.0:
                values[vname("mu1", aid)] = 0.0
                values[vname("mu2", aid)] = beta + epsilon
            else:
                values[vname("mu1", aid)] = epsilon
                values[vname("mu2", aid)] = 0.0
    for aid, h in result.arc_calorific.items():
        values[vname("Ha", aid)] = h / J_PER_MJ
    for aid, delta in result.deltas.items():
        values[vname("dp", aid)] = delta
    return Solution(values=values, objective=result.objective)


def make_random_scenario(
    network: Network, rng: Random, scenario_id: str
) -> Scenario:
    """Balanced random nomination within the network's exit flow bounds."""
    entries = network.entries
    exits = network.exits
    if not entries or not exits:
        raise ScenarioError("network needs at least one entry and one exit")
    q_nom: dict[str, float] = {}
    flow_bounds: dict[str, tuple[float, float]] = {}
    for node in exits:
        lo = node.q_lo if node.q_lo is not None else -10.0
        hi = node.q_hi if node.q_hi is not None else 0.0
        q_nom[node.id] = lo + rng.random() * (hi - lo)
        flow_bounds[node.id] = (lo, hi)
    demand = -math.fsum(q_nom.values())
    weights = [0.2 + rng.random() for _ in entries]
    total_w = math.fsum(weights)
    for node, w in zip(entries, weights):
        q_nom[node.id] = demand * w / total_w
    for _ in range(3):
        residue = math.fsum(q_nom.values())
        if residue == 0.0:
            break
        top = max(entries, key=lambda n: q_nom[n.id])
        q_nom[top.id] -= residue
    return Scenario(
        id=scenario_id,
        q_nom=dict(sorted(q_nom.items())),
        flow_bounds=dict(sorted(flow_bounds.items())),
    )


def random_feasible_sampler(
    network: Network,
    count: int,
    variant: str = "fs",
    seed: int = 0,
    max_attempts_factor: int = 20,
) -> list[tuple[Scenario, DerivedConstants, TreeOracleResult]]:
    """Sample balanced nominations on a tree and keep the oracle-feasible ones.

    May return fewer than ``count`` samples if the network rejects too many
    random nominations.
    """
    if not network.is_tree():
        raise DataError("sampler requires a tree network")
    rng = Random(seed)
    samples = []
    attempts = 0
    while len(samples) < count and attempts < max(1, count) * max_attempts_factor:
        attempts += 1
        scenario = make_random_scenario(network, rng, f"sample-{attempts:05d}")
        try:
            consts = derive_constants(network, scenario)
        except ScenarioError:
            continue
        result = tree_oracle(network, scenario, consts, variant)
        if result.feasible:
            samples.append((scenario, consts, result))
    return samples
