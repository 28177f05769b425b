"""Scenario files, CSV output and the SVG allocation chart."""

import csv
import io as _io
import json
from dataclasses import dataclass, field

import jsonschema

from .distributions import BuyerDistribution
from .dual_pricing import DualScenario, QuasiDualFamily, QuasiDualScenario, QuasiDualUtility
from .exceptions import ConfigurationError
from .static_pricing import CostAccuracyCurve, Scenario, SolverSettings
from .utility import (
    ACCURACY_FORMS,
    PRICE_FORMS,
    UtilityFamily,
    UtilityFunction,
    check_accuracy_compatibility,
    check_axioms,
)

MODES = ("static", "quasi-dual", "dual", "dynamic", "ultra-dual")

_UTILITY = {
    "type": "object",
    "properties": {
        "accuracy_form": {"enum": list(ACCURACY_FORMS)},
        "theta": {"type": "number", "exclusiveMinimum": 0},
        "q": {"type": "number", "exclusiveMinimum": 0},
        "price_form": {"enum": list(PRICE_FORMS)},
        "phi": {"type": "number", "exclusiveMinimum": 0},
        "offset": {"type": "number"},
        "buyer_terms": {
            "type": "array",
            "items": {
                "type": "array",
                "prefixItems": [
                    {"enum": ["linear", "quadratic", "power", "log"]},
                    {"type": "number"},
                    {"type": "number"},
                ],
                "minItems": 2,
                "maxItems": 3,
            },
        },
    },
    "additionalProperties": False,
}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["models", "distribution"],
    "properties": {
        "name": {"type": "string"},
        "mode": {"enum": list(MODES)},
        "seed": {"type": "integer"},
        "price_cap": {"type": "number", "minimum": 0},
        "accuracy_bounds": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
        "buyer_bounds": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
        "decision_cap": {"type": "number", "minimum": 0},
        "accuracy_curve": {
            "type": "object",
            "required": ["type"],
            "properties": {
                "type": {"enum": ["table", "saturating"]},
                "points": {
                    "type": "array",
                    "items": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
                    "minItems": 1,
                },
                "a_max": {"type": "number", "exclusiveMinimum": 0},
                "rate": {"type": "number", "exclusiveMinimum": 0},
            },
            "additionalProperties": False,
        },
        "models": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["utility"],
                "properties": {
                    "cost": {"type": "number", "minimum": 0},
                    "menu_price": {"type": "number"},
                    "utility": _UTILITY,
                },
                "additionalProperties": False,
            },
        },
        "distribution": {
            "type": "object",
            "required": ["type"],
            "properties": {
                "type": {"enum": ["uniform", "piecewise-linear", "truncated-normal"]},
                "lo": {"type": "number"},
                "hi": {"type": "number"},
                "mass": {"type": "number", "minimum": 0},
                "knots": {"type": "array", "items": {"type": "array", "items": {"type": "number"}}},
                "mean": {"type": "number"},
                "sd": {"type": "number", "exclusiveMinimum": 0},
            },
            "additionalProperties": False,
        },
        "solver": {
            "type": "object",
            "properties": {
                "case_grid": {"type": "integer", "minimum": 3},
                "price_tol": {"type": "number", "exclusiveMinimum": 0},
                "root_tol": {"type": "number", "exclusiveMinimum": 0},
                "oracle_grid": {"type": "integer", "minimum": 100},
                "separable_candidates": {"type": "boolean"},
                "stationary_scan": {"type": "integer", "minimum": 2},
                "price_grid": {"type": "integer", "minimum": 3},
            },
            "additionalProperties": False,
        },
        "dynamic": {
            "type": "object",
            "properties": {
                "init": {"type": "array", "items": {"type": "number"}},
                "max_iter": {"type": "integer", "minimum": 1},
                "tol": {"type": "number", "exclusiveMinimum": 0},
            },
            "additionalProperties": False,
        },
        "robustness": {
            "type": "object",
            "properties": {
                "epsilon": {"oneOf": [{"type": "number"}, {"type": "array", "items": {"type": "number"}}]},
                "trials": {"type": "integer", "minimum": 1},
                "seed": {"type": "integer"},
            },
            "additionalProperties": False,
        },
        "cost_grid": {"type": "array", "items": {"type": "number"}},
    },
    "additionalProperties": False,
}


@dataclass
class ScenarioFile:
    mode: str
    scenario: object
    seed: int = 0
    dynamic: dict = field(default_factory=dict)
    robustness: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)


def _path(err):
    return "/".join(str(p) for p in err.absolute_path) or "<root>"


def validate_document(doc):
    """Raise :class:`ConfigurationError` naming the offending field."""
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        raise ConfigurationError(f"{_path(e)}: {e.message}")


def load_document(path):
    with open(path, encoding="utf-8") as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"{path}: not valid JSON ({exc})") from None


def parse_scenario(path, compatibility_grid=101):
    return build_scenario(load_document(path), compatibility_grid)


def _solver(doc):
    s = dict(doc.get("solver", {}))
    s.pop("price_grid", None)
    return SolverSettings(**s)


def _curve(doc):
    c = doc.get("accuracy_curve")
    if c is None:
        raise ConfigurationError("accuracy_curve: required for this mode")
    if c["type"] == "table":
        if "points" not in c:
            raise ConfigurationError("accuracy_curve/points: required for a table curve")
        pts = c["points"]
        return CostAccuracyCurve("table", tuple(p[0] for p in pts), tuple(p[1] for p in pts))
    return CostAccuracyCurve("saturating", a_max=c.get("a_max", 1.0), rate=c.get("rate", 1.0))


def _costs(doc):
    costs = []
    for i, m in enumerate(doc["models"]):
        if "cost" not in m:
            raise ConfigurationError(f"models/{i}/cost: required")
        costs.append(float(m["cost"]))
    for i in range(1, len(costs)):
        if not costs[i] > costs[i - 1]:
            raise ConfigurationError(f"models/{i}/cost: costs must be strictly increasing")
    return tuple(costs)


def build_scenario(doc, compatibility_grid=101):
    """Validate a parsed document and build the scenario for its mode."""
    validate_document(doc)
    mode = doc.get("mode", "static")
    if mode == "ultra-dual":
        raise ConfigurationError(
            "mode: ultra-dual is not supported; its pricing problem is left undefined by the model"
        )
    dist = BuyerDistribution.from_dict(doc["distribution"])
    name = doc.get("name", "")
    out = ScenarioFile(mode, None, int(doc.get("seed", 0)), dict(doc.get("dynamic", {})),
                       dict(doc.get("robustness", {})), raw=doc)
    costs = _costs(doc)
    if mode == "quasi-dual":
        members = []
        for i, m in enumerate(doc["models"]):
            u = m["utility"]
            if "buyer_terms" not in u:
                raise ConfigurationError(f"models/{i}/utility/buyer_terms: required in quasi-dual mode")
            members.append(QuasiDualUtility.from_dict(u))
        bounds = tuple(doc.get("buyer_bounds", dist.support))
        fam = QuasiDualFamily(tuple(members), bounds, float(doc.get("price_cap", 1.0)))
        grid = int(doc.get("solver", {}).get("price_grid", 200))
        curve = _curve(doc) if "accuracy_curve" in doc else None
        out.scenario = QuasiDualScenario(costs, fam, dist, curve, _solver(doc), grid, name)
        from .dual_pricing import check_qd_axioms, check_second_type_compatibility

        out.checks = {
            "axioms": check_qd_axioms(fam, compatibility_grid),
            "compatibility": check_second_type_compatibility(fam, compatibility_grid),
        }
        return out
    members = []
    for i, m in enumerate(doc["models"]):
        u = m["utility"]
        if "buyer_terms" in u:
            raise ConfigurationError(f"models/{i}/utility/buyer_terms: only valid in quasi-dual mode")
        members.append(UtilityFunction.from_dict(u))
    if mode == "dual":
        menu = []
        for i, m in enumerate(doc["models"]):
            if "menu_price" not in m:
                raise ConfigurationError(f"models/{i}/menu_price: required in dual mode")
            menu.append(float(m["menu_price"]))
        out.scenario = DualScenario(
            costs, tuple(menu), tuple(members), dist, float(doc.get("decision_cap", 1.0)),
            tuple(doc.get("buyer_bounds", dist.support)), _solver(doc), name,
        )
        return out
    bounds = tuple(doc.get("accuracy_bounds", (0.0, 1.0)))
    fam = UtilityFamily(tuple(members), bounds, float(doc.get("price_cap", 1.0)))
    grid = tuple(doc["cost_grid"]) if "cost_grid" in doc else None
    scn = Scenario(costs, fam, dist, _curve(doc), _solver(doc), grid, name)
    out.scenario = scn
    out.checks = {
        "axioms": check_axioms(fam, compatibility_grid, scn.accuracies),
        "compatibility": check_accuracy_compatibility(fam, compatibility_grid, scn.accuracies),
    }
    if not out.checks["compatibility"].passed:
        i, j, p, p2, a, why = out.checks["compatibility"].violations[0]
        raise ConfigurationError(
            f"models {i + 1},{j + 1} are not accuracy-compatible: {why} at p={p:.6g}, p'={p2:.6g}, a={a:.6g}"
        )
    return out


def scenario_to_dict(scn):
    """Serialize a primal scenario to the file format (for replay)."""
    return {
        "name": scn.name,
        "mode": "static",
        "price_cap": scn.price_cap,
        "accuracy_bounds": list(scn.family.accuracy_bounds),
        "accuracy_curve": scn.curve.to_dict(),
        "models": [{"cost": c, "utility": f.to_dict()} for c, f in zip(scn.costs, scn.family.members)],
        "distribution": scn.dist.to_dict(),
    }


# --- CSV ---------------------------------------------------------------------------

SOLUTION_COLUMNS = ("model", "cost", "accuracy", "price", "alloc_lo", "alloc_hi", "revenue", "profit", "case_kind")


def _fmt(x):
    if x is None:
        return ""
    return "%.6g" % x


def solution_rows(costs, accuracies, prices, intervals, revenues, profits, labels):
    rows = []
    for i in range(len(costs)):
        iv = intervals[i]
        rows.append([
            str(i + 1),
            _fmt(costs[i]),
            _fmt(None if accuracies is None else accuracies[i]),
            _fmt(prices[i]),
            _fmt(None if iv is None else iv[0]),
            _fmt(None if iv is None else iv[1]),
            _fmt(revenues[i]),
            _fmt(profits[i]),
            labels[i],
        ])
    return rows


def rows_for(solution):
    """CSV rows for any solved chain (primal, dual or quasi-dual)."""
    from .dual_pricing import DualSolution, QuasiDualSolution

    if isinstance(solution, DualSolution):
        s = solution.scenario
        return solution_rows(s.costs, s.menu, solution.decisions, solution.buyer_intervals,
                             solution.revenues, solution.profits, solution.cases)
    if isinstance(solution, QuasiDualSolution):
        s = solution.scenario
        return solution_rows(s.costs, s.accuracies, solution.prices, solution.allocation.intervals,
                             solution.revenues, solution.profits, solution.case_labels)
    s = solution.scenario
    return solution_rows(s.costs, s.accuracies, solution.prices, solution.allocation.intervals,
                         solution.revenues, solution.profits, solution.case_labels)


def write_csv(columns, rows, stream=None):
    """Write rows with ``\\n`` line endings; returns the text when ``stream`` is None."""
    buf = _io.StringIO() if stream is None else stream
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    w.writerows(rows)
    return buf.getvalue() if stream is None else None


def solution_csv(solution):
    return write_csv(SOLUTION_COLUMNS, rows_for(solution))


# --- SVG -----------------------------------------------------------------------------

_PALETTE = ("#d62728", "#1f77b4", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf")


def svg_from_csv(text, lo=None, hi=None, width=640, height=120):
    """Number-line chart of the allocation intervals in a solution CSV."""
    rows = list(csv.DictReader(_io.StringIO(text)))
    spans = [
        (int(r["model"]), float(r["alloc_lo"]), float(r["alloc_hi"]))
        for r in rows
        if r["alloc_lo"] and r["alloc_hi"]
    ]
    if lo is None:
        lo = min((s[1] for s in spans), default=0.0)
    if hi is None:
        hi = max((s[2] for s in spans), default=1.0)
    if hi <= lo:
        hi = lo + 1.0
    pad = 30
    span = width - 2 * pad

    def x(v):
        return pad + span * (v - lo) / (hi - lo)

    y = height / 2
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<line x1="{pad}" y1="{y:.1f}" x2="{width - pad}" y2="{y:.1f}" stroke="#333" stroke-width="1"/>',
    ]
    for model, a, b in spans:
        color = _PALETTE[(model - 1) % len(_PALETTE)]
        parts.append(
            f'<rect x="{x(a):.2f}" y="{y - 10:.1f}" width="{max(x(b) - x(a), 0.5):.2f}" height="20" '
            f'fill="{color}" fill-opacity="0.8"><title>model {model}: ({a:g}, {b:g}]</title></rect>'
        )
        parts.append(
            f'<text x="{(x(a) + x(b)) / 2:.2f}" y="{y - 16:.1f}" font-size="11" text-anchor="middle">T{model}</text>'
        )
    for v in (lo, hi):
        parts.append(f'<text x="{x(v):.2f}" y="{y + 28:.1f}" font-size="10" text-anchor="middle">{v:g}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
