"""Gallery configurations: parsing, expansion into work items, and report assembly.

A configuration is a JSON object ``{"cases": [...]}``. Each case has a unique
``name``, a ``source`` of ``"chart"``, ``"hypersurface"`` or ``"algebraic"``, and
optionally ``checks`` (audit names, default ``"all"``), ``tol_overrides`` (audit
name to tolerance, ``"default"`` for the case-wide value) and ``assert`` (named
conditions claimed to hold, used for negative controls).

Chart and algebraic cases expand into one work item per sample point or per
random package. Work items are pure and may run in any order; the report lists
them in configuration order.
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .audits import ASSERTABLE, AUDITS, CaseContext, run_all
from .chart_lab import CHART_KINDS, DomainError, build_chart, curvature_at
from .curvature_ops import CurvaturePackage, random_algebraic_curvature, random_metric, weyl_decompose
from .fitting import DEFAULT_TOL
from .hypersurface import HypersurfaceData, gauss_package
from .tensor_core import MetricPoint

SOURCES = ("chart", "hypersurface", "algebraic")
PASS, FAIL, ERRORED = "pass", "fail", "errored"


class ConfigError(ValueError):
    """The configuration does not parse or names something unknown."""


@dataclass(frozen=True)
class GalleryCase:
    name: str
    source: str
    spec: dict
    checks: tuple = ()
    tol_overrides: dict = field(default_factory=dict)
    asserted: tuple = ()


@dataclass(frozen=True)
class WorkItem:
    """One curvature package to audit: a case plus an index into its expansion."""

    case: GalleryCase
    index: int
    label: str
    tol: float
    seed: int


# ---------------------------------------------------------------------------
# parsing


def _parse_case(raw, seen: set) -> GalleryCase:
    if not isinstance(raw, dict):
        raise ConfigError(f"case must be an object, got {type(raw).__name__}")
    name = raw.get("name")
    if not isinstance(name, str) or not name:
        raise ConfigError("every case needs a non-empty string name")
    if name in seen:
        raise ConfigError(f"duplicate case name {name!r}")
    seen.add(name)
    source = raw.get("source")
    if source not in SOURCES:
        raise ConfigError(f"{name}: source must be one of {SOURCES}, got {source!r}")

    checks = raw.get("checks", "all")
    if checks == "all":
        checks = tuple(AUDITS)
    elif isinstance(checks, list) and all(isinstance(c, str) for c in checks):
        unknown = [c for c in checks if c not in AUDITS]
        if unknown:
            raise ConfigError(f"{name}: unknown check(s) {unknown}")
        checks = tuple(checks)
    else:
        raise ConfigError(f"{name}: checks must be \"all\" or a list of audit names")

    overrides = raw.get("tol_overrides", {})
    if not isinstance(overrides, dict):
        raise ConfigError(f"{name}: tol_overrides must be an object")
    for key, value in overrides.items():
        if key != "default" and key not in AUDITS:
            raise ConfigError(f"{name}: tol_overrides names unknown check {key!r}")
        if not isinstance(value, (int, float)) or isinstance(value, bool) or not value > 0:
            raise ConfigError(f"{name}: tolerance for {key!r} must be a positive number")

    asserted = raw.get("assert", [])
    if not isinstance(asserted, list) or any(a not in ASSERTABLE for a in asserted):
        raise ConfigError(f"{name}: assert must list conditions from {ASSERTABLE}")
    if asserted and "asserted" not in checks:
        checks = checks + ("asserted",)

    spec = {k: v for k, v in raw.items()
            if k not in ("name", "source", "checks", "tol_overrides", "assert")}
    if source == "chart":
        kind = spec.get("kind")
        if kind not in CHART_KINDS:
            raise ConfigError(f"{name}: unknown chart kind {kind!r}; known: {sorted(CHART_KINDS)}")
        if not isinstance(spec.get("params", {}), dict):
            raise ConfigError(f"{name}: params must be an object")
        points = spec.get("points")
        if points is not None and not (isinstance(points, list) and points
                                       and all(isinstance(p, list) for p in points)):
            raise ConfigError(f"{name}: points must be a non-empty list of coordinate lists")
    elif source == "hypersurface":
        if "H" not in spec:
            raise ConfigError(f"{name}: hypersurface case needs H")
        if spec.get("epsilon", 1) not in (1, -1):
            raise ConfigError(f"{name}: epsilon must be +1 or -1")
    else:
        for key, default in (("n", 4), ("count", 1), ("terms", 3), ("seed", 0), ("negatives", 0)):
            value = spec.get(key, default)
            if not isinstance(value, int) or isinstance(value, bool) or value < 0:
                raise ConfigError(f"{name}: {key} must be a non-negative integer")
        if spec.get("n", 4) < 3 or spec.get("count", 1) < 1 or spec.get("terms", 3) < 1:
            raise ConfigError(f"{name}: algebraic case needs n >= 3, count >= 1, terms >= 1")
    return GalleryCase(name, source, spec, checks, dict(overrides), tuple(asserted))


def parse_config(data) -> list[GalleryCase]:
    if not isinstance(data, dict) or not isinstance(data.get("cases"), list):
        raise ConfigError("configuration must be an object with a \"cases\" list")
    seen: set = set()
    return [_parse_case(raw, seen) for raw in data["cases"]]


def load_config(path=None) -> list[GalleryCase]:
    """Parse a configuration file; ``None`` loads the built-in default gallery."""
    try:
        if path is None:
            text = resources.files("curvlab").joinpath("data/default_gallery.json").read_text()
        else:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        data = json.loads(text)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read configuration: {exc}") from exc
    return parse_config(data)


# ---------------------------------------------------------------------------
# expansion and package construction


def _default_points(case: GalleryCase) -> tuple:
    try:
        return build_chart(case.spec["kind"], case.spec.get("params")).default_points
    except ValueError:
        # invalid params: one work item that reports the error when it is built
        return ((),)


def expand(cases: list[GalleryCase], tol: float = DEFAULT_TOL, seed: int = 0) -> list[WorkItem]:
    """One work item per chart point or algebraic package; labels are ``name`` or ``name[i]``."""
    items = []
    for case in cases:
        if case.source == "chart":
            count = len(case.spec.get("points") or _default_points(case))
        elif case.source == "algebraic":
            count = case.spec.get("count", 1)
        else:
            count = 1
        case_tol = case.tol_overrides.get("default", tol)
        for i in range(count):
            label = case.name if count == 1 else f"{case.name}[{i}]"
            items.append(WorkItem(case, i, label, case_tol, seed))
    return items


def _metric_from_spec(spec, n: int | None) -> MetricPoint:
    if spec is None or spec == "identity":
        if n is None:
            raise ConfigError("g = \"identity\" needs H to fix the dimension")
        return MetricPoint.diagonal(n)
    if spec == "minkowski":
        if n is None:
            raise ConfigError("g = \"minkowski\" needs H to fix the dimension")
        return MetricPoint.diagonal(n, 1)
    if isinstance(spec, dict) and "negatives" in spec:
        return MetricPoint.diagonal(int(spec.get("n", n)), int(spec["negatives"]))
    return MetricPoint.from_matrix(np.asarray(spec, dtype=float))


def _principal_list(spec) -> list[float] | None:
    """Eigenvalue list from ``[l1, l2, ...]`` or ``{"eigenvalues": [...], "multiplicities": [...]}``."""
    if isinstance(spec, dict):
        values = spec.get("eigenvalues")
        mult = spec.get("multiplicities", [1] * len(values or []))
        if values is None or len(mult) != len(values):
            raise ConfigError("H object needs eigenvalues and matching multiplicities")
        return [float(v) for v, k in zip(values, mult) for _ in range(int(k))]
    if isinstance(spec, list) and spec and all(isinstance(v, (int, float)) for v in spec):
        return [float(v) for v in spec]
    return None


def hypersurface_from_spec(spec: dict) -> HypersurfaceData:
    principal = _principal_list(spec["H"])
    n = len(principal) if principal is not None else len(spec["H"])
    m = _metric_from_spec(spec.get("g"), n)
    eps = int(spec.get("epsilon", 1))
    kt = float(spec.get("kappa_tilde", 0.0))
    if principal is not None:
        if not np.allclose(m.g, np.diag(np.diag(m.g))):
            raise ConfigError("principal curvatures need a diagonal metric; give H as a matrix")
        return HypersurfaceData.from_principal(m, principal, eps, kt)
    return HypersurfaceData(m, np.asarray(spec["H"], dtype=float), eps, kt)


def algebraic_package(spec: dict, index: int, seed: int = 0) -> CurvaturePackage:
    n = spec.get("n", 4)
    rng = np.random.default_rng([seed, spec.get("seed", 0), index])
    # signatures cycle through 0..negatives so one block spans several of them
    negatives = index % (spec.get("negatives", 0) + 1)
    m = random_metric(rng, n, negatives)
    r = random_algebraic_curvature(rng, n, m, spec.get("terms", 3))
    return weyl_decompose(r, m)


def build_context(item: WorkItem) -> CaseContext:
    case = item.case
    kw = {"tol": item.tol, "asserted": case.asserted}
    if case.source == "hypersurface":
        h = hypersurface_from_spec(case.spec)
        return CaseContext(gauss_package(h), hyper=h, **kw)
    if case.source == "algebraic":
        return CaseContext(algebraic_package(case.spec, item.index, item.seed), **kw)
    chart = build_chart(case.spec["kind"], case.spec.get("params"))
    points = case.spec.get("points") or chart.default_points
    x = tuple(float(v) for v in points[item.index])
    return CaseContext(curvature_at(chart, x), chart_kind=chart.kind,
                       chart_params=dict(chart.params), point=x, **kw)


# ---------------------------------------------------------------------------
# running


def clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, complex):
        return {"re": clean(obj.real), "im": clean(obj.imag)}
    if obj is None or isinstance(obj, str):
        return obj
    if isinstance(obj, np.ndarray):
        return clean(obj.tolist())
    return str(obj)


def run_item(item: WorkItem) -> dict:
    """Report fragment for one work item; errors are captured, never raised."""
    start = time.perf_counter()
    out: dict = {"name": item.label, "case": item.case.name, "source": item.case.source}
    try:
        ctx = build_context(item)
        if ctx.point is not None:
            out["point"] = list(ctx.point)
        out["classification"] = ctx.report.as_dict()
        results = run_all(ctx, item.case.checks, item.case.tol_overrides)
        out["audits"] = [{"name": r.name, "premise": r.premise, "residuals": r.residuals,
                          "constants": r.constants, "branches": r.branches,
                          "failing": r.failing} for r in results]
        out["status"] = PASS if all(r.passed for r in results) else FAIL
    except (DomainError, ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
        out["status"] = ERRORED
        out["error"] = f"{type(exc).__name__}: {exc}"
    out["wall_time"] = time.perf_counter() - start
    return clean(out)


def run_items(items: list[WorkItem], workers: int = 1) -> list[dict]:
    if workers <= 1 or len(items) <= 1:
        return [run_item(it) for it in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        # map preserves submission order, so the report order is canonical
        return list(pool.map(run_item, items, chunksize=max(1, len(items) // (4 * workers))))


SPREAD_KEYS = (("roter", "phi"), ("roter", "mu"), ("roter", "eta"), ("pseudosymmetric", "L_R"))


def constant_spread(fragments: list[dict]) -> dict:
    """``max - min`` of fitted constants across the points of each multi-point case.

    Pointwise audits cannot show that a function is constant; this is the
    cross-point statistic reported instead.
    """
    groups: dict = {}
    for f in fragments:
        if f["status"] != ERRORED:
            groups.setdefault(f["case"], []).append(f["classification"])
    out = {}
    for case, reps in groups.items():
        if len(reps) < 2:
            continue
        spread = {}
        for section, key in SPREAD_KEYS:
            values = [r[section][key] for r in reps if isinstance(r[section].get(key), float)]
            if len(values) == len(reps):
                spread[f"{section}.{key}"] = max(values) - min(values)
        out[case] = spread
    return out


def summarize(fragments: list[dict]) -> dict:
    failing = [f"{f['name']}:{a['name']}:{k}" for f in fragments if f["status"] == FAIL
               for a in f["audits"] for k in a["failing"]]
    counts = {s: sum(f["status"] == s for f in fragments) for s in (PASS, FAIL, ERRORED)}
    return {"total": len(fragments), "passed": counts[PASS], "failed": counts[FAIL],
            "errored": counts[ERRORED], "failing": failing,
            "errors": [f["name"] for f in fragments if f["status"] == ERRORED],
            "constant_spread": constant_spread(fragments),
            "status": FAIL if counts[FAIL] else PASS}


def run_gallery(cases: list[GalleryCase], tol: float = DEFAULT_TOL, seed: int = 0,
                workers: int = 1, meta: bool = True) -> dict:
    start = time.perf_counter()
    fragments = run_items(expand(cases, tol, seed), workers)
    if not meta:
        for f in fragments:
            f.pop("wall_time", None)
    report = {"cases": fragments, "summary": summarize(fragments)}
    if meta:
        report["meta"] = {"wall_time": time.perf_counter() - start, "workers": workers,
                          "seed": seed, "tol": tol}
    return report


def exit_code(report: dict, strict: bool = False) -> int:
    summary = report["summary"]
    if summary["failed"] or (strict and summary["errored"]):
        return 1
    return 0


def report_json(report: dict) -> str:
    # repr-based float output is the shortest string that round-trips exactly
    return json.dumps(report, indent=2, allow_nan=False) + "\n"


def report_rows(report: dict) -> list[list]:
    """Flat ``case, audit, premise, kind, key, value`` table of residuals and constants."""
    rows = []
    for f in report["cases"]:
        if f["status"] == ERRORED:
            rows.append([f["name"], "", ERRORED, "error", "", f["error"]])
            continue
        for a in f["audits"]:
            for kind in ("residuals", "constants"):
                for key, value in a[kind].items():
                    rows.append([f["name"], a["name"], a["premise"], kind[:-1], key, value])
    return rows
