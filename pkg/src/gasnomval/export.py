"""Lossless model and solution serialization.

``model.json`` is the machine-readable form (prefix expression trees, all
floats written with 17 significant digits so they round-trip exactly);
``model.txt`` is a line-per-constraint algebraic listing of the same
instance.  Serialization is deterministic: object keys are sorted, list
orders are fixed by the model, and no environment state leaks in.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

from .errors import ExportError, SolutionError
from .expr import fmt17, from_prefix, to_prefix, to_text
from .model import Constraint, ModelInstance, Variable

MODEL_FORMAT = "gasnomval-model"
SOLUTION_FORMAT = "gasnomval-solution"
FORMAT_VERSION = 1


def _write_json(obj) -> str:
    """Canonical JSON: sorted keys, 17-significant-digit floats."""
    if obj is None or obj is True or obj is False:
        return json.dumps(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, bool):  # unreachable, kept for clarity
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        if not math.isfinite(obj):
            raise ExportError(f"non-finite number in export: {obj!r}")
        return fmt17(obj)
    if isinstance(obj, (list, tuple)):
        return "[" + ",".join(_write_json(v) for v in obj) + "]"
    if isinstance(obj, dict):
        items = []
        for key in sorted(obj):
            if not isinstance(key, str):
                raise ExportError(f"non-string key in export: {key!r}")
            items.append(json.dumps(key) + ":" + _write_json(obj[key]))
        return "{" + ",".join(items) + "}"
    raise ExportError(f"unserializable object: {type(obj).__name__}")


def _variable_record(v: Variable) -> dict:
    return {
        "name": v.name,
        "role": v.role,
        "ref": v.ref,
        "domain": v.domain,
        "lb": v.lb,
        "ub": v.ub,
        "unit": v.unit,
    }


def _constraint_record(c: Constraint) -> dict:
    return {
        "name": c.name,
        "tag": c.tag,
        "lhs": to_prefix(c.lhs),
        "relation": c.relation,
        "rhs": to_prefix(c.rhs),
    }


def _reject_abs(e, where: str) -> None:
    if e.op == "abs":
        raise ExportError(f"abs node in exported model ({where}); evaluation-only")
    for child in e.children:
        _reject_abs(child, where)


def serialize_model(model: ModelInstance) -> bytes:
    """Deterministic ``model.json`` bytes (UTF-8, LF, trailing newline)."""
    _reject_abs(model.objective, "objective")
    for c in model.constraints:
        _reject_abs(c.lhs, c.name)
        _reject_abs(c.rhs, c.name)
    doc = {
        "format": MODEL_FORMAT,
        "version": FORMAT_VERSION,
        "metadata": model.metadata,
        "variables": [_variable_record(v) for v in model.variables.values()],
        "objective": to_prefix(model.objective),
        "constraints": [
            _constraint_record(c)
            for c in sorted(model.constraints, key=lambda c: (c.tag, c.name))
        ],
    }
    return (_write_json(doc) + "\n").encode("utf-8")


def parse_model(data: bytes | str) -> ModelInstance:
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise ExportError(f"malformed model document: {exc}") from exc
    if doc.get("format") != MODEL_FORMAT:
        raise ExportError(f"not a model document: format={doc.get('format')!r}")
    if doc.get("version") != FORMAT_VERSION:
        raise ExportError(f"unsupported model format version {doc.get('version')!r}")
    variables = {}
    for rec in doc["variables"]:
        v = Variable(
            name=rec["name"],
            role=rec["role"],
            ref=rec["ref"],
            domain=rec["domain"],
            lb=float(rec["lb"]),
            ub=float(rec["ub"]),
            unit=rec["unit"],
        )
        variables[v.name] = v
    constraints = [
        Constraint(
            name=rec["name"],
            tag=rec["tag"],
            lhs=from_prefix(rec["lhs"]),
            relation=rec["relation"],
            rhs=from_prefix(rec["rhs"]),
        )
        for rec in doc["constraints"]
    ]
    return ModelInstance(
        variables=variables,
        constraints=constraints,
        objective=from_prefix(doc["objective"]),
        metadata=doc["metadata"],
    )


def model_to_text(model: ModelInstance) -> str:
    """Algebraic listing: variables, objective, one constraint per line."""
    meta = model.metadata
    lines = [
        f"# {MODEL_FORMAT} v{FORMAT_VERSION}",
        "# formulation={} ploss={} cuts={}".format(
            meta.get("formulation"),
            meta.get("ploss"),
            ",".join(meta.get("cuts", [])) or "none",
        ),
        "minimize: " + to_text(model.objective),
    ]
    for v in model.variables.values():
        lines.append(
            f"var {v.name}: {v.domain} in [{fmt17(v.lb)}, {fmt17(v.ub)}] ({v.unit})"
        )
    for c in sorted(model.constraints, key=lambda c: (c.tag, c.name)):
        lines.append(f"{c.name}: {to_text(c.lhs)} {c.relation} {to_text(c.rhs)}")
    return "\n".join(lines) + "\n"


def fingerprint(model_bytes: bytes) -> str:
    return hashlib.sha256(model_bytes).hexdigest()


def model_fingerprint(model: ModelInstance) -> str:
    return fingerprint(serialize_model(model))


@dataclass
class Solution:
    """Full variable assignment for one instance."""

    values: dict[str, float]
    objective: float | None = None
    completed: list[str] = field(default_factory=list)  # names filled by sign split


def serialize_solution(solution: Solution, model_fp: str) -> bytes:
    doc = {
        "format": SOLUTION_FORMAT,
        "version": FORMAT_VERSION,
        "fingerprint": model_fp,
        "objective": solution.objective,
        "values": dict(sorted(solution.values.items())),
    }
    return (_write_json(doc) + "\n").encode("utf-8")


def parse_solution(
    data: bytes | str, model: ModelInstance, model_fp: str
) -> Solution:
    """Read a solution file against its instance.

    The instance fingerprint must match.  Missing directional flow parts are
    completed from the signed flow (``beta = max(q, 0)``); any other missing
    variable is an error.
    """
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise SolutionError(f"malformed solution document: {exc}") from exc
    if doc.get("format") != SOLUTION_FORMAT:
        raise SolutionError(f"not a solution document: {doc.get('format')!r}")
    if doc.get("fingerprint") != model_fp:
        raise SolutionError(
            "solution fingerprint does not match the model "
            f"({doc.get('fingerprint')!r} != {model_fp!r})"
        )
    values = {}
    for name, value in doc.get("values", {}).items():
        if name not in model.variables:
            raise SolutionError(f"solution assigns unknown variable {name!r}")
        values[name] = float(value)

    completed: list[str] = []
    for v in model.variables.values():
        if v.name in values or v.role not in ("beta", "gamma"):
            continue
        q = values.get(f"q[{v.ref}]")
        if q is None:
            continue
        values[v.name] = max(q, 0.0) if v.role == "beta" else max(-q, 0.0)
        completed.append(v.name)
    missing = [name for name in model.variables if name not in values]
    if missing:
        raise SolutionError(f"solution misses variables: {missing[:5]}...")
    objective = doc.get("objective")
    return Solution(
        values=values,
        objective=None if objective is None else float(objective),
        completed=sorted(completed),
    )
