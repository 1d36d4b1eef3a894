"""Seeded experiment runner: configuration, dispatch and report emission.

A configuration is a JSON document::

    {"version": 1, "task": "mazur-verify", "seed": 0,
     "space": {"n": 8},
     "norms": {"X": {"variant": "WeightedLp", "p": 1}},
     "params": {"norm": "X", "p": 2, "pairs": 10000}}

Unknown keys are rejected at every level.  Each task yields a JSON payload
and a table that :func:`emit_plot_data` writes as CSV.
"""
from __future__ import annotations

import csv
import hashlib
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from . import _sampling
from .convexity import estimate_concavity, estimate_convexity, estimate_smoothness_modulus
from .convexity import estimate_ucx_modulus
from .duality import supporting_functional
from .entropy import ENTROPY_MAX_ITER, ENTROPY_TOL, entropy_max, midpoint_check
from .errors import ConfigurationError, UnsupportedReportError
from .homeo import build_X_to_Y, build_direct_smooth, build_l1_to_X
from .homeo import linf_degeneracy_probe, profile_modulus
from .lattice import Convexified, FiniteProbabilitySpace, norm_from_dict
from .mazur import mazur_lower_bound, mazur_upper_bound, sandwich_margins
from .mazur import verify_mazur_sandwich

CONFIG_VERSION = 1
TASKS = ("mazur-verify", "entropy-solve", "midpoint", "constants", "modulus",
         "homeo", "probe", "dual-support")
TOP_KEYS = {"version", "task", "seed", "space", "norms", "params", "output", "tol"}

# allowed parameters per task with their defaults (None marks required)
TASK_PARAMS = {
    "mazur-verify": {"norm": "X", "p": None, "pairs": 10_000},
    "entropy-solve": {"norm": "X", "h": None, "method": "auto",
                      "max_iter": ENTROPY_MAX_ITER},
    "midpoint": {"norm": "X", "pairs": 1000},
    "constants": {"norm": "X", "kind": "concavity", "exponent": None,
                  "tuples": 1000, "tuple_size": 4, "refine": True},
    "modulus": {"norm": "X", "kind": "ucx", "grid": None, "pairs": 2000,
                "q": 1.0, "refine": True},
    "homeo": {"action": "build", "from": "X", "to": None, "q": 1.0, "q2": 1.0,
              "mode": "via-l1", "points": 100, "pairs": 1000, "bins": None},
    "probe": {"n": 2, "eps": [1e-2, 1e-3, 1e-4]},
    "dual-support": {"norm": "X", "x": None},
}

EXIT_OK, EXIT_VIOLATION, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2, 3


@dataclass
class ExperimentConfig:
    task: str
    space: FiniteProbabilitySpace
    norms: dict
    params: dict
    seed: int = 0
    tol: float = ENTROPY_TOL
    output: str = None
    raw: dict = field(default_factory=dict)

    @property
    def digest(self):
        text = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()

    def norm(self, name):
        if name not in self.norms:
            raise ConfigurationError(f"norm {name!r} is not defined in 'norms'")
        return self.norms[name]


def parse_config(text):
    """Parse a JSON configuration; syntax errors carry line and column."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigurationError(f"invalid configuration: {e.msg}", e.lineno, e.colno)
    return config_from_dict(doc)


def load_config(path):
    return parse_config(Path(path).read_text())


def config_from_dict(doc):
    if not isinstance(doc, dict):
        raise ConfigurationError("configuration must be a JSON object")
    unknown = set(doc) - TOP_KEYS
    if unknown:
        raise ConfigurationError(f"unknown configuration keys: {sorted(unknown)}")
    if doc.get("version") != CONFIG_VERSION:
        raise ConfigurationError(f"configuration 'version' must be {CONFIG_VERSION}")
    task = doc.get("task")
    if task not in TASKS:
        raise ConfigurationError(f"task must be one of {list(TASKS)}, got {task!r}")
    seed = doc.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        raise ConfigurationError("seed must be a nonnegative integer")
    if "space" not in doc:
        raise ConfigurationError("configuration needs a 'space'")
    space = FiniteProbabilitySpace.from_dict(doc["space"])
    norms_doc = doc.get("norms", {})
    if not isinstance(norms_doc, dict):
        raise ConfigurationError("'norms' must map names to norm specifications")
    norms = {name: norm_from_dict(spec, space) for name, spec in norms_doc.items()}
    params = _task_params(task, doc.get("params", {}))
    tol = doc.get("tol", ENTROPY_TOL)
    if isinstance(tol, bool) or not isinstance(tol, (int, float)) or not tol > 0:
        raise ConfigurationError("tol must be a positive number")
    return ExperimentConfig(task, space, norms, params, seed, float(tol),
                            doc.get("output"), doc)


def _task_params(task, given):
    if not isinstance(given, dict):
        raise ConfigurationError("'params' must be an object")
    allowed = TASK_PARAMS[task]
    unknown = set(given) - set(allowed)
    if unknown:
        raise ConfigurationError(f"unknown parameters for {task}: {sorted(unknown)}")
    out = dict(allowed)
    out.update(given)
    missing = [k for k, v in out.items() if v is None and k not in ("to", "bins")]
    if missing:
        raise ConfigurationError(f"{task} needs parameters {missing}")
    return out


# -- reports ----------------------------------------------------------------

@dataclass
class Report:
    config: dict
    task: str
    payload: dict
    summary: dict
    table: dict = None
    seed: int = 0
    wall_time: float = 0.0
    exit_code: int = EXIT_OK
    config_hash: str = ""

    def to_dict(self):
        return {
            "version": __version__,
            "config_hash": self.config_hash,
            "config": self.config,
            "task": self.task,
            "seed": self.seed,
            "payload": self.payload,
            "summary": self.summary,
            "wall_time": self.wall_time,
            "exit_code": self.exit_code,
        }

    def to_json(self):
        return json.dumps(_jsonable(self.to_dict()), indent=2, sort_keys=True)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def emit_plot_data(report, path):
    """Write the report's curve or binned table as CSV with a header row."""
    table = report.table
    if not table or not table.get("columns"):
        raise UnsupportedReportError(f"{report.task} report carries no table")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(table["columns"])
        for row in table["rows"]:
            w.writerow([_fmt(v) for v in row])
    return path


def _table(columns, rows):
    return {"columns": list(columns), "rows": [list(r) for r in rows]}


# -- tasks ------------------------------------------------------------------

def _task_mazur(cfg):
    P = cfg.params
    norm = cfg.norm(P["norm"])
    rep = verify_mazur_sandwich(norm, float(P["p"]), int(P["pairs"]), cfg.seed)
    # a plot-ready subsample of (delta, distance) against both bounds
    rng = _sampling.rng_for(cfg.seed, 7)
    conv = Convexified(norm, float(P["p"]))
    f, g = _sampling.controlled_pairs(rng, conv, min(int(P["pairs"]), 1000))
    keep = conv(f - g) < 1
    delta, dist, _, _ = sandwich_margins(norm, f[keep], g[keep], float(P["p"]))
    order = np.argsort(delta, kind="stable")
    p = float(P["p"])
    rows = [(delta[i], dist[i], mazur_lower_bound(delta[i], p),
             mazur_upper_bound(delta[i], p)) for i in order]
    code = EXIT_OK if rep.ok else EXIT_VIOLATION
    summary = {"violations": rep.violations_lower + rep.violations_upper,
               "worst_margin": rep.worst_margin}
    return rep.to_dict(), summary, _table(("delta", "distance", "H", "F"), rows), code


def _task_entropy(cfg):
    P = cfg.params
    norm = cfg.norm(P["norm"])
    h = np.asarray(P["h"], dtype=float)
    sol = entropy_max(norm, h, cfg.tol, method=P["method"], max_iter=int(P["max_iter"]))
    rows = [(i, h[i], sol.maximizer[i]) for i in range(norm.n)]
    summary = {"lambda": sol.lam, "converged": sol.converged,
               "certificate_residual": sol.certificate_residual}
    code = EXIT_OK if sol.converged else EXIT_SOLVER
    return sol.to_dict(), summary, _table(("atom", "h", "maximizer"), rows), code


def _random_l1_points(rng, space, count):
    h = rng.exponential(size=(count, space.n))
    return h / space.l1(h)[:, None]


def _task_midpoint(cfg):
    P = cfg.params
    norm = cfg.norm(P["norm"])
    space = cfg.space

    def work(rng, start, count):
        h1 = _random_l1_points(rng, space, count)
        # interpolate towards a second point to spread the distances over (0, 1]
        other = _random_l1_points(rng, space, count)
        s = rng.random(count)[:, None]
        h2 = (1 - s) * h1 + s * other
        out = []
        for a, b in zip(h1, h2):
            d = space.l1(a - b)
            if d > 1:
                # pull back along the segment, a convex combination stays on the sphere
                b = a + (b - a) * ((1 - 1e-12) / d)
                b = b / space.l1(b)
            lhs, rhs, ok = midpoint_check(norm, a, b, solve_tol=cfg.tol)
            out.append((float(space.l1(a - b)), lhs, rhs, ok))
        return out

    rows = [r for part in _sampling.map_chunks(work, int(P["pairs"]), cfg.seed)
            for r in part]
    bad = sum(1 for r in rows if not r[3])
    payload = {"pairs": len(rows), "violations": bad,
               "worst_margin": min(r[1] - r[2] for r in rows)}
    code = EXIT_OK if bad == 0 else EXIT_VIOLATION
    table = _table(("l1_distance", "lhs", "rhs"), [r[:3] for r in rows])
    return payload, dict(payload), table, code


def _task_constants(cfg):
    P = cfg.params
    norm = cfg.norm(P["norm"])
    fn = {"concavity": estimate_concavity, "convexity": estimate_convexity}.get(P["kind"])
    if fn is None:
        raise ConfigurationError("constants kind must be 'concavity' or 'convexity'")
    est = fn(norm, float(P["exponent"]), int(P["tuples"]), int(P["tuple_size"]),
             cfg.seed, bool(P["refine"]))
    rows = [(est.kind, est.exponent, est.lower_bound, f"w{cfg.seed}-0")]
    summary = {"lower_bound": est.lower_bound}
    return est.to_dict(), summary, _table(("kind", "parameter", "value", "witness_id"),
                                          rows), EXIT_OK


def _task_modulus(cfg):
    P = cfg.params
    norm = cfg.norm(P["norm"])
    kind = P["kind"]
    if kind == "ucx":
        curve = estimate_ucx_modulus(norm, P["grid"], int(P["pairs"]), cfg.seed,
                                     bool(P["refine"]))
        cols = ("epsilon", "delta_hat")
    elif kind == "smooth":
        curve = estimate_smoothness_modulus(norm, P["grid"], int(P["pairs"]), cfg.seed)
        cols = ("tau", "rho_hat")
    elif kind == "map":
        pipe = build_l1_to_X(norm, float(P["q"]), tol=cfg.tol)
        prof = profile_modulus(pipe, int(P["pairs"]), P["grid"], cfg.seed)
        return (prof.to_dict(), {"bins": len(prof.bins)},
                _table(("t_edge", "max_out", "samples"), prof.bins), EXIT_OK)
    else:
        raise ConfigurationError("modulus kind must be 'ucx', 'smooth' or 'map'")
    rows = [(a, v) for (a, v), ok in zip(curve.grid, curve.feasible) if ok]
    summary = {"points": len(rows)}
    return curve.to_dict(), summary, _table(cols, rows), EXIT_OK


def _build_pipeline(cfg):
    P = cfg.params
    src = cfg.norm(P["from"])
    if P["to"] is None:
        return build_l1_to_X(src, float(P["q"]), tol=cfg.tol)
    dst = cfg.norm(P["to"])
    if P["mode"] == "direct":
        return build_direct_smooth(src, dst, cfg.tol)
    if P["mode"] != "via-l1":
        raise ConfigurationError("homeo mode must be 'via-l1' or 'direct'")
    return build_X_to_Y(src, float(P["q"]), dst, float(P["q2"]), tol=cfg.tol)


def _task_homeo(cfg):
    P = cfg.params
    pipe = _build_pipeline(cfg)
    if P["action"] == "profile":
        bins = P["bins"] or [1e-3, 3e-3, 1e-2, 3e-2, 0.1, 0.3, 1.0]
        prof = profile_modulus(pipe, int(P["pairs"]), bins, cfg.seed)
        payload = dict(prof.to_dict(), pipeline=pipe.describe())
        return (payload, {"bins": len(prof.bins)},
                _table(("t_edge", "max_out", "samples"), prof.bins), EXIT_OK)
    if P["action"] != "build":
        raise ConfigurationError("homeo action must be 'build' or 'profile'")
    inv = pipe.inverse()
    rng = _sampling.rng_for(cfg.seed, 0)
    pts = _sampling.sphere_points(rng, pipe.source_norm, int(P["points"]))
    rows = []
    for i, x in enumerate(pts):
        err = float(pipe.source_norm(inv(pipe(x)) - x))
        rows.append((i, err, pipe.sphere_defect(x)))
    worst = max(r[1] for r in rows)
    payload = {"pipeline": pipe.describe(), "points": len(rows),
               "round_trip_max": worst, "sphere_defect_max": max(r[2] for r in rows)}
    code = EXIT_OK if worst <= 1e-5 else EXIT_VIOLATION
    return payload, dict(round_trip_max=worst), _table(
        ("point", "round_trip_error", "sphere_defect"), rows), code


def _task_probe(cfg):
    P = cfg.params
    rows = []
    for e in P["eps"]:
        (a, b), gap = linf_degeneracy_probe(int(P["n"]), float(e))
        # the probe lives on the uniform space with n atoms
        rows.append((float(e), float(np.abs(a - b).mean()), gap))
    payload = {"n": int(P["n"]), "rows": rows}
    return payload, {"min_gap": min(r[2] for r in rows)}, _table(
        ("eps", "input_l1_distance", "output_gap"), rows), EXIT_OK


def _task_dual(cfg):
    P = cfg.params
    norm = cfg.norm(P["norm"])
    x = np.asarray(P["x"], dtype=float)
    sf = supporting_functional(norm, x, cfg.tol)
    rows = [(i, x[i], sf.g[i]) for i in range(norm.n)]
    return sf.to_dict(), {"pairing": sf.pairing, "dual_norm": sf.dual_norm}, _table(
        ("atom", "x", "g"), rows), EXIT_OK


_DISPATCH = {
    "mazur-verify": _task_mazur,
    "entropy-solve": _task_entropy,
    "midpoint": _task_midpoint,
    "constants": _task_constants,
    "modulus": _task_modulus,
    "homeo": _task_homeo,
    "probe": _task_probe,
    "dual-support": _task_dual,
}


def run(config, out_dir=None):
    """Run one configured task; writes ``report.json`` and a CSV when ``out_dir`` is set."""
    if isinstance(config, dict):
        config = config_from_dict(config)
    start = time.perf_counter()
    payload, summary, table, code = _DISPATCH[config.task](config)
    report = Report(config.raw, config.task, payload, summary, table, config.seed,
                    time.perf_counter() - start, code, config.digest)
    out_dir = out_dir or config.output
    if out_dir:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(report.to_json() + "\n")
        if table:
            emit_plot_data(report, out / f"{config.task}.csv")
    return report


def default_space(n=None, weights=None):
    if weights is not None:
        return {"weights": list(weights)}
    return {"n": int(n or 8)}

