"""Assembly of nomination-validation optimization instances.

A model is built in stages on top of a common template (mass balance,
pressure-change definitions, pressure-loss coupling, heat-power and variable
bounds): a flow-splitting family (binary direction flags for the MINLP,
complementarity for the NLP), the matching mixing/propagation family, one of
three pressure-loss formulations, and optional cut families.

Model units differ from the SI data model and are recorded in the instance
metadata: pressures in bar, squared-pressure losses in bar^2, calorific
values in MJ/m3, heat power in MW, flows in m3/s.  Constraints are emitted
structurally as written, without algebraic simplification.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from . import expr as ex
from .errors import BuildError, ScenarioError
from .expr import Expr
from .network import (
    Arc,
    ArcKind,
    DerivedConstants,
    Network,
    NodeKind,
    Scenario,
    apply_scenario,
)
from .pressure_loss import PA2_PER_BAR2, PipeLossParams, derive_pipe_params

PA_PER_BAR = 1e5
J_PER_MJ = 1e6
W_PER_MW = 1e6
DEFAULT_EPSILON = 1e-6

FORMULATIONS = ("minlp", "nlp")
PLOSS_VARIANTS = ("sqrt", "fs", "pkr")
CUT_FAMILIES = ("mccormick", "flowdir", "bilinear_d")

CONSTRAINT_TAGS = (
    "massbalance",
    "flowsplit",
    "mixing",
    "propagation",
    "deltadef",
    "pressureloss",
    "zerolen",
    "heatpower",
    "mccormick",
    "flowdir",
    "bilinear_d",
)

_ROLE_ORDER = {
    role: i
    for i, role in enumerate(
        ("p", "Hn", "q", "Ha", "dp", "beta", "gamma", "d", "mu1", "mu2")
    )
}

_ROLE_UNITS = {
    "p": "bar",
    "Hn": "MJ_per_m_cube",
    "q": "m_cube_per_sec",
    "Ha": "MJ_per_m_cube",
    "dp": "bar",
    "beta": "m_cube_per_sec",
    "gamma": "m_cube_per_sec",
    "d": "binary",
    "mu1": "m_cube_per_sec",
    "mu2": "m_cube_per_sec",
}


@dataclass(frozen=True)
class Variable:
    name: str
    role: str
    ref: str
    domain: str  # "continuous" | "binary"
    lb: float
    ub: float
    unit: str


@dataclass(frozen=True)
class Constraint:
    name: str
    tag: str
    lhs: Expr
    relation: str  # "<=" | "=" | ">="
    rhs: Expr


@dataclass
class ModelInstance:
    variables: dict[str, Variable]
    constraints: list[Constraint]
    objective: Expr
    metadata: dict

    def binaries(self) -> list[Variable]:
        return [v for v in self.variables.values() if v.domain == "binary"]

    def constraints_by_tag(self, tag: str) -> list[Constraint]:
        return [c for c in self.constraints if c.tag == tag]


def vname(role: str, ref: str) -> str:
    return f"{role}[{ref}]"


def instance_stats(model: ModelInstance) -> dict:
    """Counts by variable role and constraint tag, for structural checks."""
    roles: dict[str, int] = {}
    for v in model.variables.values():
        roles[v.role] = roles.get(v.role, 0) + 1
    tags: dict[str, int] = {}
    for c in model.constraints:
        tags[c.tag] = tags.get(c.tag, 0) + 1
    return {
        "variables_by_role": dict(sorted(roles.items())),
        "variable_count": len(model.variables),
        "binary_count": len(model.binaries()),
        "constraints_by_tag": dict(sorted(tags.items())),
        "constraint_count": len(model.constraints),
    }


class ModelBuilder:
    """Stepwise instance assembly over one network + nomination."""

    def __init__(
        self, network: Network, scenario: Scenario, consts: DerivedConstants
    ):
        imbalance = scenario.imbalance()
        scale = max(1.0, math.fsum(abs(v) for v in scenario.q_nom.values()))
        if abs(imbalance) > 1e-9 * scale:
            raise ScenarioError(
                f"scenario {scenario.id!r} is unbalanced by {imbalance} m3/s"
            )
        self.network = apply_scenario(network, scenario, consts)
        self.scenario = scenario
        self.consts = consts
        self.formulation: str | None = None
        self.epsilon = DEFAULT_EPSILON
        self.ploss_variant: str | None = None
        self.cut_families: list[str] = []
        self.pipe_params: dict[str, PipeLossParams] = {}
        self._variables: dict[str, Variable] = {}
        self._constraints: list[Constraint] = []
        self._objective: Expr = ex.num(0.0)
        self._template_built = False
        self._mixing_built = False

    # -- declarations ------------------------------------------------------

    def _declare(
        self, role: str, ref: str, lb: float, ub: float, domain: str = "continuous"
    ) -> Expr:
        name = vname(role, ref)
        if name in self._variables:
            raise BuildError(f"variable {name} declared twice")
        self._variables[name] = Variable(
            name=name,
            role=role,
            ref=ref,
            domain=domain,
            lb=lb,
            ub=ub,
            unit=_ROLE_UNITS[role],
        )
        return ex.var(name)

    def _emit(self, tag: str, key: str, lhs: Expr, relation: str, rhs: Expr) -> None:
        assert tag in CONSTRAINT_TAGS
        self._constraints.append(
            Constraint(name=f"{tag}[{key}]", tag=tag, lhs=lhs, relation=relation, rhs=rhs)
        )

    # -- template ----------------------------------------------------------

    def build_template(self) -> "ModelBuilder":
        """Objective, mass balance, pressure-change and bound structure."""
        if self._template_built:
            raise BuildError("template already built")
        net = self.network
        for node in net.nodes.values():
            self._declare("p", node.id, node.p_lo / PA_PER_BAR, node.p_hi / PA_PER_BAR)
        for node in net.nodes.values():
            self._declare("Hn", node.id, node.H_lo / J_PER_MJ, node.H_hi / J_PER_MJ)
        for arc in net.arcs.values():
            self._declare("q", arc.id, arc.q_lo, arc.q_hi)
        for arc in net.arcs.values():
            self._declare("Ha", arc.id, arc.H_lo / J_PER_MJ, arc.H_hi / J_PER_MJ)
        for arc in net.arcs.values():
            if arc.kind in (ArcKind.COMPRESSOR, ArcKind.CONTROL_VALVE):
                self._declare("dp", arc.id, 0.0, arc.delta_hi / PA_PER_BAR)

        for node in net.nodes.values():
            out_terms = [ex.var(vname("q", a)) for a in net.out_arcs[node.id]]
            in_terms = [ex.var(vname("q", a)) for a in net.in_arcs[node.id]]
            lhs = ex.sub(ex.add(*out_terms), ex.add(*in_terms))
            self._emit("massbalance", node.id, lhs, "=", ex.num(node.q_nom))

        for arc in net.arcs.values():
            p_from = ex.var(vname("p", arc.from_node))
            p_to = ex.var(vname("p", arc.to_node))
            if arc.kind is ArcKind.COMPRESSOR:
                self._emit(
                    "deltadef", arc.id, ex.var(vname("dp", arc.id)), "=",
                    ex.sub(p_to, p_from),
                )
            elif arc.kind is ArcKind.CONTROL_VALVE:
                self._emit(
                    "deltadef", arc.id, ex.var(vname("dp", arc.id)), "=",
                    ex.sub(p_from, p_to),
                )
            elif arc.kind is ArcKind.PIPE:
                # Squared-pressure coupling with the loss term left as a
                # placeholder until a loss formulation is chosen.
                self._emit(
                    "pressureloss", arc.id, ex.square(p_to), "=",
                    ex.sub(ex.square(p_from), ex.var(f"__phi[{arc.id}]")),
                )
            else:
                self._emit("zerolen", arc.id, p_from, "=", p_to)

        for node in net.exits:
            if node.P_lo is None or node.P_hi is None:
                raise BuildError(f"exit {node.id}: heat-power bounds unresolved")
            drawn = ex.mul(ex.var(vname("Hn", node.id)), ex.num(abs(node.q_nom)))
            self._emit(
                "heatpower", f"{node.id}:lo", drawn, ">=", ex.num(node.P_lo / W_PER_MW)
            )
            self._emit(
                "heatpower", f"{node.id}:hi", drawn, "<=", ex.num(node.P_hi / W_PER_MW)
            )

        compressors = [
            ex.var(vname("dp", a.id))
            for a in net.arcs.values()
            if a.kind is ArcKind.COMPRESSOR
        ]
        self._objective = ex.add(*compressors) if compressors else ex.num(0.0)
        self._template_built = True
        return self

    # -- flow splitting ------------------------------------------------------

    def add_flow_splitting(self, formulation: str) -> "ModelBuilder":
        if not self._template_built:
            raise BuildError("template must be built first")
        if self.formulation is not None:
            raise BuildError("flow splitting already added")
        if formulation not in FORMULATIONS:
            raise BuildError(f"unknown formulation {formulation!r}")
        self.formulation = formulation
        net = self.network
        if formulation == "minlp":
            for arc in net.arcs.values():
                beta = self._declare("beta", arc.id, 0.0, max(arc.q_hi, 0.0))
                gamma = self._declare("gamma", arc.id, 0.0, max(-arc.q_lo, 0.0))
                d = self._declare("d", arc.id, 0.0, 1.0, domain="binary")
                q = ex.var(vname("q", arc.id))
                self._emit("flowsplit", f"{arc.id}:link", q, "=", ex.sub(beta, gamma))
                self._emit(
                    "flowsplit", f"{arc.id}:beta", beta, "<=",
                    ex.mul(d, ex.num(arc.q_hi)),
                )
                self._emit(
                    "flowsplit", f"{arc.id}:gamma", gamma, "<=",
                    ex.mul(ex.sub(d, ex.num(1.0)), ex.num(arc.q_lo)),
                )
        else:
            eps = self.epsilon
            for arc in net.arcs.values():
                beta_ub = max(arc.q_hi, 0.0)
                beta = self._declare("beta", arc.id, 0.0, beta_ub)
                mu1 = self._declare("mu1", arc.id, 0.0, beta_ub + eps)
                mu2 = self._declare("mu2", arc.id, 0.0, beta_ub + eps)
                q = ex.var(vname("q", arc.id))
                self._emit(
                    "flowsplit", f"{arc.id}:slack",
                    ex.sub(ex.add(beta, ex.num(eps)), ex.add(mu1, mu2)), "=",
                    ex.num(0.0),
                )
                self._emit("flowsplit", f"{arc.id}:bq", ex.sub(beta, q), ">=", ex.num(0.0))
                self._emit("flowsplit", f"{arc.id}:c1", ex.mul(mu1, beta), "<=", ex.num(0.0))
                self._emit(
                    "flowsplit", f"{arc.id}:c2",
                    ex.mul(mu2, ex.sub(beta, q)), "<=", ex.num(0.0),
                )
        return self

    # -- mixing and propagation ---------------------------------------------

    def _backward_part(self, arc_id: str) -> Expr:
        """Backward flow on an arc: gamma in the MINLP, beta - q in the NLP."""
        if self.formulation == "minlp":
            return ex.var(vname("gamma", arc_id))
        return ex.sub(ex.var(vname("beta", arc_id)), ex.var(vname("q", arc_id)))

    def add_mixing_propagation(self) -> "ModelBuilder":
        if self.formulation is None:
            raise BuildError("flow splitting must be added before mixing")
        if self._mixing_built:
            raise BuildError("mixing already added")
        net = self.network
        for node in net.nodes.values():
            h_node = ex.var(vname("Hn", node.id))
            lhs_terms: list[Expr] = []
            rhs_terms: list[Expr] = []
            for aid in net.in_arcs[node.id]:
                beta = ex.var(vname("beta", aid))
                lhs_terms.append(ex.mul(beta, h_node))
                rhs_terms.append(ex.mul(beta, ex.var(vname("Ha", aid))))
            for aid in net.out_arcs[node.id]:
                back = self._backward_part(aid)
                lhs_terms.append(ex.mul(back, h_node))
                rhs_terms.append(ex.mul(back, ex.var(vname("Ha", aid))))
            if node.kind is NodeKind.ENTRY:
                lhs_terms.append(ex.mul(ex.num(node.q_nom), h_node))
                rhs_terms.append(ex.num((node.H_sup / J_PER_MJ) * node.q_nom))
            self._emit(
                "mixing", node.id, ex.add(*lhs_terms), "=", ex.add(*rhs_terms)
            )

        if self.formulation == "minlp":
            for arc in net.arcs.values():
                self._propagation_bigm(arc)
        else:
            for arc in net.arcs.values():
                h_tail = ex.var(vname("Hn", arc.from_node))
                h_head = ex.var(vname("Hn", arc.to_node))
                h_arc = ex.var(vname("Ha", arc.id))
                beta = ex.var(vname("beta", arc.id))
                self._emit(
                    "propagation", f"{arc.id}:tail",
                    ex.mul(ex.sub(h_tail, h_arc), beta), "=", ex.num(0.0),
                )
                self._emit(
                    "propagation", f"{arc.id}:head",
                    ex.mul(ex.sub(h_head, h_arc), self._backward_part(arc.id)),
                    "=", ex.num(0.0),
                )
        self._mixing_built = True
        return self

    def _propagation_bigm(self, arc: Arc) -> None:
        """Direction-gated equality of node and arc calorific values.

        The tail side is gated by ``1 - d`` (tight for forward flow), the
        head side by ``d`` (tight for backward flow).  Big-M constants come
        from the calorific bounds of the gated node/arc pair.
        """
        net = self.network
        d = ex.var(vname("d", arc.id))
        h_arc = ex.var(vname("Ha", arc.id))
        ha_lo, ha_hi = arc.H_lo / J_PER_MJ, arc.H_hi / J_PER_MJ

        tail = net.nodes[arc.from_node]
        diff = ex.sub(ex.var(vname("Hn", tail.id)), h_arc)
        m1 = ha_hi - tail.H_lo / J_PER_MJ
        m2 = tail.H_hi / J_PER_MJ - ha_lo
        gate = ex.sub(ex.num(1.0), d)
        self._emit(
            "propagation", f"{arc.id}:tail:lo", diff, ">=", ex.mul(ex.num(-m1), gate)
        )
        self._emit(
            "propagation", f"{arc.id}:tail:hi", diff, "<=", ex.mul(ex.num(m2), gate)
        )

        head = net.nodes[arc.to_node]
        diff = ex.sub(ex.var(vname("Hn", head.id)), h_arc)
        m1p = ha_hi - head.H_lo / J_PER_MJ
        m2p = head.H_hi / J_PER_MJ - ha_lo
        self._emit(
            "propagation", f"{arc.id}:head:lo", diff, ">=", ex.mul(ex.num(-m1p), d)
        )
        self._emit(
            "propagation", f"{arc.id}:head:hi", diff, "<=", ex.mul(ex.num(m2p), d)
        )

    # -- pressure loss --------------------------------------------------------

    def add_pressure_loss(self, variant: str) -> "ModelBuilder":
        if self.formulation is None:
            raise BuildError("flow splitting must be added before pressure loss")
        if self.ploss_variant is not None:
            raise BuildError("pressure loss already added")
        if variant not in PLOSS_VARIANTS:
            raise BuildError(f"unknown pressure-loss variant {variant!r}")
        self.ploss_variant = variant
        mapping: dict[str, Expr] = {}
        for arc in self.network.arcs.values():
            if arc.kind is not ArcKind.PIPE:
                continue
            params = derive_pipe_params(arc.pipe_geom, self.consts)
            if variant == "fs" and params.d_dd <= 0.0:
                raise BuildError(
                    f"pipe {arc.id}: flow-splitting loss ill-posed "
                    f"(denominator constant {params.d_dd})"
                )
            self.pipe_params[arc.id] = params
            mapping[f"__phi[{arc.id}]"] = self._phi_expr(arc.id, params, variant)
        self._constraints = [
            Constraint(c.name, c.tag, ex.substitute(c.lhs, mapping), c.relation,
                       ex.substitute(c.rhs, mapping))
            if c.tag == "pressureloss"
            else c
            for c in self._constraints
        ]
        return self

    def _phi_expr(self, arc_id: str, params: PipeLossParams, variant: str) -> Expr:
        """Loss expression in bar^2 over model variables (flows in m3/s)."""
        lam = ex.num(params.Lambda / PA2_PER_BAR2)
        scale = ex.num(self.consts.rho_norm)  # m3/s -> kg/s
        q_m = ex.mul(scale, ex.var(vname("q", arc_id)))
        if variant == "sqrt":
            root_e = ex.sqrt_(ex.add(ex.square(q_m), ex.num(params.e_hat**2)))
            root_d = ex.sqrt_(ex.add(ex.square(q_m), ex.num(params.d_hat**2)))
            body = ex.add(
                root_e, ex.num(params.a_hat), ex.div(ex.num(params.b_hat), root_d)
            )
            return ex.mul(lam, body, q_m)
        if self.formulation == "minlp":
            b_m = ex.mul(scale, ex.var(vname("beta", arc_id)))
            g_m = ex.mul(scale, ex.var(vname("gamma", arc_id)))
            square_diff = ex.sub(ex.square(b_m), ex.square(g_m))
            if variant == "pkr":
                return ex.mul(lam, square_diff)
            flow_diff = ex.sub(b_m, g_m)
            return ex.mul(
                lam,
                ex.add(
                    square_diff,
                    ex.mul(ex.num(params.a_dd), flow_diff),
                    ex.div(
                        ex.mul(ex.num(params.b_dd), flow_diff),
                        ex.add(b_m, g_m, ex.num(params.d_dd)),
                    ),
                ),
            )
        b_m = ex.mul(scale, ex.var(vname("beta", arc_id)))
        two_beta = ex.mul(ex.num(2.0), b_m)
        if variant == "pkr":
            return ex.mul(
                lam, ex.sub(ex.mul(two_beta, q_m), ex.square(q_m))
            )
        return ex.mul(
            lam,
            ex.add(
                ex.sub(
                    ex.mul(ex.add(two_beta, ex.num(params.a_dd)), q_m),
                    ex.square(q_m),
                ),
                ex.div(
                    ex.mul(ex.num(params.b_dd), q_m),
                    ex.add(ex.sub(two_beta, q_m), ex.num(params.d_dd)),
                ),
            ),
        )

    # -- cuts -----------------------------------------------------------------

    def add_cuts(self, families) -> "ModelBuilder":
        if self.formulation is None:
            raise BuildError("flow splitting must be added before cuts")
        families = sorted(set(families))
        for fam in families:
            if fam not in CUT_FAMILIES:
                raise BuildError(f"unknown cut family {fam!r}")
            if fam in ("flowdir", "bilinear_d") and self.formulation != "minlp":
                raise BuildError(f"cut family {fam!r} needs binary direction flags")
            if fam in self.cut_families:
                raise BuildError(f"cut family {fam!r} already added")
        for fam in families:
            if fam == "mccormick":
                self._add_mccormick()
            elif fam == "flowdir":
                self._add_flowdir()
            else:
                self._add_bilinear_d()
            self.cut_families.append(fam)
        return self

    def _mccormick_upper_box(
        self, key: str, x: Expr, x_hi: float, y: Expr, y_lo: float, y_hi: float
    ) -> None:
        """Hull inequalities for ``x*y`` with ``x`` in [0, x_hi].

        The two inequalities tied to the zero lower bound of ``x`` are
        implied by the bounds on ``x`` and ``y`` and are not emitted.
        """
        prod = ex.mul(x, y)
        self._emit(
            "mccormick", f"{key}:ge", prod, ">=",
            ex.sub(
                ex.add(ex.mul(ex.num(x_hi), y), ex.mul(x, ex.num(y_hi))),
                ex.num(x_hi * y_hi),
            ),
        )
        self._emit(
            "mccormick", f"{key}:le", prod, "<=",
            ex.sub(
                ex.add(ex.mul(ex.num(x_hi), y), ex.mul(x, ex.num(y_lo))),
                ex.num(x_hi * y_lo),
            ),
        )

    def _mccormick_full_box(
        self,
        key: str,
        x: Expr,
        x_lo: float,
        x_hi: float,
        y: Expr,
        y_lo: float,
        y_hi: float,
    ) -> None:
        """All four hull inequalities for ``x*y`` over a general box.

        Matched corners give the lower envelope, mixed corners the upper.
        """
        prod = ex.mul(x, y)
        self._emit(
            "mccormick", f"{key}:ge1", prod, ">=",
            ex.sub(
                ex.add(ex.mul(ex.num(x_lo), y), ex.mul(x, ex.num(y_lo))),
                ex.num(x_lo * y_lo),
            ),
        )
        self._emit(
            "mccormick", f"{key}:ge2", prod, ">=",
            ex.sub(
                ex.add(ex.mul(ex.num(x_hi), y), ex.mul(x, ex.num(y_hi))),
                ex.num(x_hi * y_hi),
            ),
        )
        self._emit(
            "mccormick", f"{key}:le1", prod, "<=",
            ex.sub(
                ex.add(ex.mul(ex.num(x_hi), y), ex.mul(x, ex.num(y_lo))),
                ex.num(x_hi * y_lo),
            ),
        )
        self._emit(
            "mccormick", f"{key}:le2", prod, "<=",
            ex.sub(
                ex.add(ex.mul(ex.num(x_lo), y), ex.mul(x, ex.num(y_hi))),
                ex.num(x_lo * y_hi),
            ),
        )

    def _add_mccormick(self) -> None:
        """Hull cuts on the bilinear mixing products.

        MINLP: two inequalities per product on the forward and backward
        parts.  NLP: the backward-part products are replaced by products
        with the signed flow, which need the full four-inequality hull.
        """
        net = self.network
        for arc in net.arcs.values():
            head = net.nodes[arc.to_node]
            tail = net.nodes[arc.from_node]
            beta = ex.var(vname("beta", arc.id))
            h_arc = ex.var(vname("Ha", arc.id))
            ha_lo, ha_hi = arc.H_lo / J_PER_MJ, arc.H_hi / J_PER_MJ
            if arc.q_hi >= 0.0:
                self._mccormick_upper_box(
                    f"{arc.id}:bHn", beta, arc.q_hi,
                    ex.var(vname("Hn", head.id)),
                    head.H_lo / J_PER_MJ, head.H_hi / J_PER_MJ,
                )
                self._mccormick_upper_box(
                    f"{arc.id}:bHa", beta, arc.q_hi, h_arc, ha_lo, ha_hi
                )
            if self.formulation == "minlp":
                if arc.q_lo <= 0.0:
                    gamma = ex.var(vname("gamma", arc.id))
                    self._mccormick_upper_box(
                        f"{arc.id}:gHn", gamma, abs(arc.q_lo),
                        ex.var(vname("Hn", tail.id)),
                        tail.H_lo / J_PER_MJ, tail.H_hi / J_PER_MJ,
                    )
                    self._mccormick_upper_box(
                        f"{arc.id}:gHa", gamma, abs(arc.q_lo), h_arc, ha_lo, ha_hi
                    )
            else:
                q = ex.var(vname("q", arc.id))
                self._mccormick_full_box(
                    f"{arc.id}:qHn", q, arc.q_lo, arc.q_hi,
                    ex.var(vname("Hn", tail.id)),
                    tail.H_lo / J_PER_MJ, tail.H_hi / J_PER_MJ,
                )
                self._mccormick_full_box(
                    f"{arc.id}:qHa", q, arc.q_lo, arc.q_hi, h_arc, ha_lo, ha_hi
                )

    def _add_flowdir(self) -> None:
        """At least one arc must point out of (into) every supply (demand) node."""
        net = self.network
        for node in net.nodes.values():
            out_d = [ex.var(vname("d", a)) for a in net.out_arcs[node.id]]
            in_d = [
                ex.sub(ex.num(1.0), ex.var(vname("d", a)))
                for a in net.in_arcs[node.id]
            ]
            if node.kind in (NodeKind.ENTRY, NodeKind.INNER):
                self._emit(
                    "flowdir", f"{node.id}:out", ex.add(*(out_d + in_d)), ">=",
                    ex.num(1.0),
                )
            if node.kind in (NodeKind.EXIT, NodeKind.INNER):
                rev = [ex.var(vname("d", a)) for a in net.in_arcs[node.id]] + [
                    ex.sub(ex.num(1.0), ex.var(vname("d", a)))
                    for a in net.out_arcs[node.id]
                ]
                self._emit(
                    "flowdir", f"{node.id}:in", ex.add(*rev), ">=", ex.num(1.0)
                )

    def _add_bilinear_d(self) -> None:
        """Direction-flag upper bounds on the bilinear mixing products."""
        net = self.network
        for arc in net.arcs.values():
            d = ex.var(vname("d", arc.id))
            head = net.nodes[arc.to_node]
            tail = net.nodes[arc.from_node]
            ha_hi = arc.H_hi / J_PER_MJ
            if arc.q_hi >= 0.0:
                beta = ex.var(vname("beta", arc.id))
                self._emit(
                    "bilinear_d", f"{arc.id}:bHn",
                    ex.mul(beta, ex.var(vname("Hn", head.id))), "<=",
                    ex.mul(d, ex.num(arc.q_hi * head.H_hi / J_PER_MJ)),
                )
                self._emit(
                    "bilinear_d", f"{arc.id}:bHa",
                    ex.mul(beta, ex.var(vname("Ha", arc.id))), "<=",
                    ex.mul(d, ex.num(arc.q_hi * ha_hi)),
                )
            if arc.q_lo <= 0.0:
                gamma = ex.var(vname("gamma", arc.id))
                gate = ex.sub(ex.num(1.0), d)
                self._emit(
                    "bilinear_d", f"{arc.id}:gHn",
                    ex.mul(gamma, ex.var(vname("Hn", tail.id))), "<=",
                    ex.mul(gate, ex.num(abs(arc.q_lo) * tail.H_hi / J_PER_MJ)),
                )
                self._emit(
                    "bilinear_d", f"{arc.id}:gHa",
                    ex.mul(gamma, ex.var(vname("Ha", arc.id))), "<=",
                    ex.mul(gate, ex.num(abs(arc.q_lo) * ha_hi)),
                )

    # -- finalize -------------------------------------------------------------

    def finalize(self) -> ModelInstance:
        if self.formulation is None or not self._mixing_built:
            raise BuildError("model incomplete: flow splitting / mixing missing")
        if self.ploss_variant is None and any(
            a.kind is ArcKind.PIPE for a in self.network.arcs.values()
        ):
            raise BuildError("model incomplete: pressure-loss variant not chosen")
        declared = set(self._variables)
        for c in self._constraints:
            missing = (ex.variables_in(c.lhs) | ex.variables_in(c.rhs)) - declared
            if missing:
                raise BuildError(
                    f"constraint {c.name} references undeclared {sorted(missing)}"
                )
        metadata = {
            "formulation": self.formulation,
            "ploss": self.ploss_variant,
            "cuts": sorted(self.cut_families),
            "epsilon": self.epsilon if self.formulation == "nlp" else None,
            "scenario": self.scenario.id,
            "balance_shift_m3_per_s": self.scenario.balance_shift,
            "units": {
                "pressure": "bar",
                "pressure_loss": "bar^2",
                "flow": "m_cube_per_sec",
                "calorific": "MJ_per_m_cube",
                "heat_power": "MW",
            },
            "mass_flow_scale_kg_per_m3": self.consts.rho_norm,
            "derived_constants": {
                "R_sm": self.consts.R_sm,
                "T_m": self.consts.T_m,
                "z_m": self.consts.z_m,
                "H_m": self.consts.H_m,
                "p_m": self.consts.p_m,
                "p_cm": self.consts.p_cm,
                "T_cm": self.consts.T_cm,
                "rho_norm": self.consts.rho_norm,
                "molar_mass_m": self.consts.molar_mass_m,
                "eta": self.consts.eta,
            },
            "pipe_loss_params": {
                aid: asdict(p) for aid, p in sorted(self.pipe_params.items())
            },
            "conventions": {
                "propagation_head_bigm": "bounds of the head-node/arc pair",
                "mccormick_pruning": (
                    "per nonnegative-part product only the two hull inequalities "
                    "anchored at the upper flow bound are emitted; the two anchored "
                    "at the zero lower bound are implied by variable bounds"
                ),
                "nlp_mccormick": "qH",
                "mean_pressure": "flow-weighted midpoint of entry pressure bounds",
            },
        }
        return ModelInstance(
            variables=dict(
                sorted(
                    self._variables.items(),
                    key=lambda kv: (_ROLE_ORDER[kv[1].role], kv[1].ref),
                )
            ),
            constraints=sorted(self._constraints, key=lambda c: (c.tag, c.name)),
            objective=self._objective,
            metadata=metadata,
        )


def build_instance(
    network: Network,
    scenario: Scenario,
    consts: DerivedConstants,
    formulation: str,
    ploss: str,
    cuts=(),
    epsilon: float = DEFAULT_EPSILON,
) -> ModelInstance:
    """One-call assembly of a complete instance."""
    builder = ModelBuilder(network, scenario, consts)
    builder.epsilon = epsilon
    builder.build_template()
    builder.add_flow_splitting(formulation)
    builder.add_mixing_propagation()
    builder.add_pressure_loss(ploss)
    if cuts:
        builder.add_cuts(cuts)
    return builder.finalize()
