"""Exact checking of candidate solutions against a model instance.

Every constraint is evaluated by interpreting its expression trees; the
violation of a constraint is the amount by which its relation fails (zero
when satisfied).  Variable bounds and binary integrality are checked
alongside.  Non-finite evaluations (division blow-ups) are reported as
structural violations rather than silently compared.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import SolutionError
from .expr import evaluate
from .model import Constraint, ModelInstance


@dataclass(frozen=True)
class Violation:
    name: str  # constraint or variable name
    kind: str  # "constraint" | "bound" | "integrality" | "structural"
    tag: str  # constraint tag, or "bound"/"integrality"
    amount: float


@dataclass
class ValidationReport:
    feasible: bool
    tol: float
    objective: float
    max_violation: float
    violations: list[Violation] = field(default_factory=list)  # sorted, worst first
    max_by_tag: dict[str, float] = field(default_factory=dict)
    complementarity: list[str] = field(default_factory=list)
    structural: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "feasible": self.feasible,
            "tol": self.tol,
            "objective": self.objective,
            "max_violation": self.max_violation,
            "max_by_tag": dict(sorted(self.max_by_tag.items())),
            "violations": [
                {"name": v.name, "kind": v.kind, "tag": v.tag, "amount": v.amount}
                for v in self.violations[:50]
            ],
            "complementarity_violations": self.complementarity,
            "structural_violations": self.structural,
        }


def constraint_violation(c: Constraint, values: dict[str, float]) -> float:
    """Violation magnitude of one constraint; ``inf`` on non-finite evaluation."""
    lhs = evaluate(c.lhs, values)
    rhs = evaluate(c.rhs, values)
    if not (math.isfinite(lhs) and math.isfinite(rhs)):
        return math.inf
    if c.relation == "=":
        return abs(lhs - rhs)
    if c.relation == "<=":
        return max(0.0, lhs - rhs)
    if c.relation == ">=":
        return max(0.0, rhs - lhs)
    raise SolutionError(f"unknown relation {c.relation!r}")


def validate(
    model: ModelInstance, values: dict[str, float], tol: float = 1e-6
) -> ValidationReport:
    """Check a full assignment against every constraint, bound and domain."""
    missing = [name for name in model.variables if name not in values]
    if missing:
        raise SolutionError(f"assignment misses variables: {missing[:5]}")

    violations: list[Violation] = []
    max_by_tag: dict[str, float] = {}
    structural: list[str] = []
    complementarity: list[str] = []

    for v in model.variables.values():
        x = values[v.name]
        if not math.isfinite(x):
            structural.append(v.name)
            violations.append(Violation(v.name, "structural", "bound", math.inf))
            continue
        over = max(0.0, v.lb - x, x - v.ub)
        if over > 0.0:
            violations.append(Violation(v.name, "bound", "bound", over))
        if v.domain == "binary":
            away = min(abs(x), abs(x - 1.0))
            if away > 0.0:
                violations.append(Violation(v.name, "integrality", "integrality", away))

    for c in model.constraints:
        amount = constraint_violation(c, values)
        max_by_tag[c.tag] = max(max_by_tag.get(c.tag, 0.0), amount)
        if amount == 0.0:
            continue
        if math.isinf(amount):
            structural.append(c.name)
            violations.append(Violation(c.name, "structural", c.tag, math.inf))
            continue
        violations.append(Violation(c.name, "constraint", c.tag, amount))
        if c.tag == "flowsplit" and (":c1]" in c.name or ":c2]" in c.name):
            if amount > tol:
                complementarity.append(c.name)

    violations.sort(key=lambda v: (-v.amount, v.name))
    max_violation = violations[0].amount if violations else 0.0
    objective = evaluate(model.objective, values)
    return ValidationReport(
        feasible=(max_violation <= tol and not structural),
        tol=tol,
        objective=objective,
        max_violation=max_violation,
        violations=violations,
        max_by_tag=max_by_tag,
        complementarity=sorted(complementarity),
        structural=sorted(structural),
    )
