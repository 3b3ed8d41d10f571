"""JSON documents for network specs and results, plus the CSV profile table.

Slice numbers in documents and tables start at 1 (slice 1 is next to the
sink); the library itself indexes from 0.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .evaluator import Configuration, OptimalityReport, check_tabletop_optimality, evaluate_strategy
from .model import DEFAULT_TOL, FlowState, InvalidSpecError, NetworkSpec, Strategy, is_energy_balanced

SPEC_SCHEMA = "sinkflow.spec/1"
RESULT_SCHEMA = "sinkflow.result/1"
CSV_COLUMNS = ("slice", "b", "d", "g", "F", "J", "E", "e", "p")


class DocumentError(ValueError):
    """A document could not be parsed or does not match its schema."""


def _load_json(text: str, what: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError(f"{what}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None


def _numbers(doc: dict, key: str, where: str) -> list[float]:
    if key not in doc:
        raise DocumentError(f"{where}: missing field '{key}'")
    vals = doc[key]
    if not isinstance(vals, list) or not all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in vals
    ):
        raise DocumentError(f"{where}: field '{key}' must be a list of numbers")
    return [float(v) for v in vals]


def spec_from_dict(doc, where: str = "spec") -> NetworkSpec:
    if not isinstance(doc, dict):
        raise DocumentError(f"{where}: expected a JSON object")
    b, d, g = (_numbers(doc, k, where) for k in ("b", "d", "g"))
    if "n" in doc and doc["n"] != len(b):
        raise DocumentError(f"{where}: field 'n' is {doc['n']!r} but b has {len(b)} entries")
    try:
        return NetworkSpec(b, d, g)
    except InvalidSpecError as exc:
        raise DocumentError(f"{where}: {exc}") from None


def parse_spec(text: str) -> tuple[NetworkSpec, str | None]:
    doc = _load_json(text, "spec")
    if not isinstance(doc, dict):
        raise DocumentError("spec: expected a JSON object")
    schema = doc.get("schema", SPEC_SCHEMA)
    if schema != SPEC_SCHEMA:
        raise DocumentError(f"spec: field 'schema' is {schema!r}, expected {SPEC_SCHEMA!r}")
    return spec_from_dict(doc), doc.get("label")


def read_spec(path) -> tuple[NetworkSpec, str | None]:
    return parse_spec(Path(path).read_text(encoding="utf-8"))


def spec_to_dict(spec: NetworkSpec, label: str | None = None) -> dict:
    out = {"schema": SPEC_SCHEMA, "n": spec.n}
    if label is not None:
        out["label"] = label
    out.update(b=spec.b.tolist(), d=spec.d.tolist(), g=spec.g.tolist())
    return out


def spec_hash(spec: NetworkSpec) -> str:
    canon = json.dumps({"b": spec.b.tolist(), "d": spec.d.tolist(), "g": spec.g.tolist()}, sort_keys=True)
    return hashlib.sha256(canon.encode()).hexdigest()


def _lifespan_out(x: float):
    return "inf" if math.isinf(x) else x


def _report_dict(rep: OptimalityReport) -> dict:
    def one_based(i):
        return None if i is None else i + 1

    return {
        "optimal": rep.optimal,
        "max_value": rep.max_value,
        "k": rep.k + 1,
        "l": one_based(rep.l),
        "left_condition": rep.left_condition,
        "right_condition": rep.right_condition,
        "plateaus": [
            {
                "first": pl.first + 1,
                "last": pl.last + 1,
                "far_condition": pl.far_condition,
                "near_condition": pl.near_condition,
            }
            for pl in rep.plateaus
        ],
    }


def result_document(
    spec: NetworkSpec,
    strategy: Strategy,
    flow: FlowState,
    label: str | None = None,
    tol: float = DEFAULT_TOL,
    source: str = "optimize",
) -> dict:
    """Self-contained result: the input network, the strategy, flows, energies and the optimality report."""
    E = flow.F + flow.J * spec.d**2
    e = E / spec.b
    report = check_tabletop_optimality(Configuration(spec, strategy), tol)
    peak = float(e.max())
    return {
        "schema": RESULT_SCHEMA,
        "tool": {"name": "sinkflow", "version": __version__},
        "source": source,
        "tolerance": tol,
        "input": {"sha256": spec_hash(spec), "label": label, "spec": spec_to_dict(spec)},
        "strategy": {"p": strategy.p.tolist()},
        "flows": {"F": flow.F.tolist(), "J": flow.J.tolist()},
        "profile": {
            "E": E.tolist(),
            "e": e.tolist(),
            "lifespan": _lifespan_out(math.inf if peak <= 0 else 1.0 / peak),
        },
        "balanced": is_energy_balanced(report.profile, tol),
        "optimality": _report_dict(report),
    }


def dump(doc: dict) -> str:
    # json writes floats with repr, the shortest string that round-trips
    return json.dumps(doc, indent=2) + "\n"


@dataclass
class ResultDocument:
    raw: dict
    spec: NetworkSpec
    strategy: Strategy
    flow: FlowState
    e: np.ndarray

    @property
    def label(self) -> str | None:
        return self.raw["input"].get("label")

    @property
    def tolerance(self) -> float:
        return float(self.raw.get("tolerance", DEFAULT_TOL))


def parse_result(text: str) -> ResultDocument:
    doc = _load_json(text, "result")
    if not isinstance(doc, dict):
        raise DocumentError("result: expected a JSON object")
    if doc.get("schema") != RESULT_SCHEMA:
        raise DocumentError(f"result: field 'schema' must be {RESULT_SCHEMA!r}")
    for key in ("input", "strategy", "flows", "profile"):
        if not isinstance(doc.get(key), dict):
            raise DocumentError(f"result: missing object '{key}'")
    spec = spec_from_dict(doc["input"].get("spec"), "result.input.spec")
    p = _numbers(doc["strategy"], "p", "result.strategy")
    F = _numbers(doc["flows"], "F", "result.flows")
    J = _numbers(doc["flows"], "J", "result.flows")
    e = _numbers(doc["profile"], "e", "result.profile")
    for name, seq in (("p", p), ("F", F), ("J", J), ("e", e)):
        if len(seq) != spec.n:
            raise DocumentError(f"result: '{name}' has {len(seq)} entries for {spec.n} slices")
    try:
        strategy = Strategy(p)
    except ValueError as exc:
        raise DocumentError(f"result.strategy: field 'p': {exc}") from None
    flow = FlowState(np.array(F), np.array(J), np.zeros(spec.n))
    return ResultDocument(doc, spec, strategy, flow, np.array(e))


def read_result(path) -> ResultDocument:
    return parse_result(Path(path).read_text(encoding="utf-8"))


def verify_result(doc: ResultDocument, tol: float = DEFAULT_TOL) -> tuple[list[str], OptimalityReport]:
    """Re-check a result document; returns the names of violated checks and the optimality report."""
    spec, strategy, flow = doc.spec, doc.strategy, doc.flow
    problems = []
    if doc.raw["input"].get("sha256") != spec_hash(spec):
        problems.append("input_hash")
    config = Configuration(spec, strategy)
    again, profile = evaluate_strategy(config)
    scale = spec.message_tol(tol)
    if np.abs(again.F - flow.F).max() > scale or np.abs(again.J - flow.J).max() > scale:
        problems.append("flows")
    if np.abs(profile.e - doc.e).max() > tol * float(np.abs(profile.e).max()):
        problems.append("profile")
    report = check_tabletop_optimality(config, tol)
    problems = report.violated + problems
    if not report.optimal and not report.violated:
        problems.insert(0, "tabletop")
    return problems, report


def profile_rows(doc: ResultDocument) -> list[list]:
    spec, flow, p = doc.spec, doc.flow, doc.strategy.p
    E = flow.F + flow.J * spec.d**2
    e = E / spec.b
    return [
        [i + 1, spec.b[i], spec.d[i], spec.g[i], flow.F[i], flow.J[i], E[i], e[i], p[i]]
        for i in range(spec.n)
    ]


def profile_csv(doc: ResultDocument) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for row in profile_rows(doc):
        w.writerow([row[0]] + [repr(float(x)) for x in row[1:]])
    return buf.getvalue()


def read_profile_csv(text: str) -> list[dict]:
    rows = list(csv.DictReader(io.StringIO(text)))
    return [{k: (int(v) if k == "slice" else float(v)) for k, v in r.items()} for r in rows]
