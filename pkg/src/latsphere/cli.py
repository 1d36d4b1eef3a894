"""Command-line entry point.

Every subcommand builds an experiment configuration and hands it to
:func:`latsphere.experiment.run`.  ``--config`` loads a full configuration
instead; flags given on the command line override its values.

Norm specifications are JSON objects (inline or as a file path), or the
short form ``Variant:key=value,...`` for unnested variants, e.g.
``WeightedLp:p=2`` or ``Lorentz:p=1``.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, LatsphereError, SolverError
from .experiment import (CONFIG_VERSION, EXIT_CONFIG, EXIT_SOLVER, config_from_dict,
                         parse_config, run)

log = logging.getLogger("latsphere")

# (group, action) -> task name
COMMANDS = {
    ("mazur", "verify"): "mazur-verify",
    ("entropy", "solve"): "entropy-solve",
    ("entropy", "midpoint"): "midpoint",
    ("constants", "estimate"): "constants",
    ("modulus", "ucx"): "modulus",
    ("modulus", "smooth"): "modulus",
    ("modulus", "map"): "modulus",
    ("homeo", "build"): "homeo",
    ("homeo", "profile"): "homeo",
    ("homeo", "probe-linf"): "probe",
    ("dual", "support"): "dual-support",
}


def parse_norm_spec(text):
    text = text.strip()
    if text.startswith("{"):
        try:
            return json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigurationError(f"invalid norm JSON: {e.msg}", e.lineno, e.colno)
    path = Path(text)
    if path.is_file():
        try:
            return json.loads(path.read_text())
        except json.JSONDecodeError as e:
            raise ConfigurationError(f"invalid norm file {path}: {e.msg}", e.lineno, e.colno)
    variant, _, rest = text.partition(":")
    spec = {"variant": variant}
    for item in filter(None, rest.split(",")):
        key, eq, val = item.partition("=")
        if not eq:
            raise ConfigurationError(f"norm parameter {item!r} needs key=value")
        try:
            spec[key.strip()] = float(val)
        except ValueError:
            raise ConfigurationError(f"norm parameter {key!r} must be a number")
    return spec


def read_vector(path):
    """A vector from a JSON list or a whitespace/comma separated text file."""
    text = Path(path).read_text()
    try:
        vals = json.loads(text)
    except json.JSONDecodeError:
        try:
            vals = [float(t) for t in text.replace(",", " ").split()]
        except ValueError as e:
            raise ConfigurationError(f"cannot read vector from {path}: {e}")
    arr = np.asarray(vals, dtype=float)
    if arr.ndim != 1:
        raise ConfigurationError(f"{path} must hold a flat list of numbers")
    return arr.tolist()


def _floats(text):
    try:
        return [float(t) for t in text.replace(",", " ").split()]
    except ValueError:
        raise ConfigurationError(f"expected a list of numbers, got {text!r}")


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON experiment configuration")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", help="directory for report.json and CSV output")
    common.add_argument("--tol", type=float)
    common.add_argument("--n", type=int, help="uniform space with n atoms")
    common.add_argument("--weights", help="atom weights, comma separated")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(
        prog="latsphere", parents=[common],
        description="Sphere maps between finite Banach lattices and L_1.")
    groups = parser.add_subparsers(dest="group")

    def action(group, name, **kw):
        return group.add_parser(name, parents=[common], **kw)

    g = groups.add_parser("mazur").add_subparsers(dest="action", required=True)
    a = action(g, "verify", help="check the Mazur map bounds on sampled pairs")
    a.add_argument("--norm")
    a.add_argument("--p", type=float)
    a.add_argument("--pairs", type=int)

    g = groups.add_parser("entropy").add_subparsers(dest="action", required=True)
    a = action(g, "solve", help="entropy maximiser for one h")
    a.add_argument("--norm")
    a.add_argument("--h", help="vector file")
    a.add_argument("--method", choices=["auto", "ascent"])
    a.add_argument("--max-iter", type=int, dest="max_iter")
    a = action(g, "midpoint", help="midpoint inequality on random pairs")
    a.add_argument("--norm")
    a.add_argument("--pairs", type=int)

    g = groups.add_parser("constants").add_subparsers(dest="action", required=True)
    a = action(g, "estimate", help="sampled concavity or convexity constant")
    a.add_argument("--norm")
    a.add_argument("--kind", choices=["concavity", "convexity"])
    a.add_argument("--exponent", type=float)
    a.add_argument("--tuples", type=int)
    a.add_argument("--tuple-size", type=int, dest="tuple_size")

    g = groups.add_parser("modulus").add_subparsers(dest="action", required=True)
    for name in ("ucx", "smooth", "map"):
        a = action(g, name)
        a.add_argument("--norm")
        a.add_argument("--grid", help="grid values (bin edges for 'map'), comma separated")
        a.add_argument("--pairs", type=int)
        if name == "map":
            a.add_argument("--q", type=float)

    g = groups.add_parser("homeo").add_subparsers(dest="action", required=True)
    for name in ("build", "profile"):
        a = action(g, name)
        a.add_argument("--from", dest="src")
        a.add_argument("--to", dest="dst")
        a.add_argument("--q", type=float)
        a.add_argument("--q2", type=float)
        a.add_argument("--mode", choices=["via-l1", "direct"])
        if name == "build":
            a.add_argument("--points", type=int)
        else:
            a.add_argument("--pairs", type=int)
            a.add_argument("--bins", help="bin edges, comma separated")
    a = action(g, "probe-linf", help="degeneracy probe for the sup norm")
    a.add_argument("--n-atoms", type=int, dest="atoms")
    a.add_argument("--eps", help="comma separated eps values")

    g = groups.add_parser("dual").add_subparsers(dest="action", required=True)
    a = action(g, "support", help="supporting functional at a sphere point")
    a.add_argument("--norm")
    a.add_argument("--x", help="vector file")
    return parser


def _config_doc(args):
    if args.config:
        doc = parse_config(Path(args.config).read_text()).raw
        doc = json.loads(json.dumps(doc))
    else:
        if not args.group:
            raise ConfigurationError("give a subcommand or --config")
        doc = {"version": CONFIG_VERSION, "norms": {}, "params": {}}
    if args.group:
        task = COMMANDS[(args.group, args.action)]
        if args.config and doc.get("task") != task:
            raise ConfigurationError(
                f"config task {doc.get('task')!r} does not match subcommand {task!r}")
        doc["task"] = task
    doc.setdefault("params", {})
    doc.setdefault("norms", {})
    if args.seed is not None:
        doc["seed"] = args.seed
    if args.tol is not None:
        doc["tol"] = args.tol
    if args.weights is not None:
        doc["space"] = {"weights": _floats(args.weights)}
    elif args.n is not None:
        doc["space"] = {"n": args.n}
    if not args.config:
        doc.setdefault("space", {"n": 8})
    if args.group:
        _apply_flags(doc, args)
    return doc


def _apply_flags(doc, args):
    P, norms = doc["params"], doc["norms"]

    def norm_flag(attr, name, key="norm"):
        val = getattr(args, attr, None)
        if val is not None:
            norms[name] = parse_norm_spec(val)
            P[key] = name

    def copy(*names):
        for name in names:
            val = getattr(args, name, None)
            if val is not None:
                P[name] = val

    group, act = args.group, args.action
    if group == "homeo" and act != "probe-linf":
        norm_flag("src", "X", "from")
        norm_flag("dst", "Y", "to")
        copy("q", "q2", "mode", "points", "pairs")
        P["action"] = act
        if getattr(args, "bins", None):
            P["bins"] = _floats(args.bins)
        return
    if group == "homeo":
        if args.atoms is not None:
            P["n"] = args.atoms
        if args.eps:
            P["eps"] = _floats(args.eps)
        return
    norm_flag("norm", "X")
    copy("p", "pairs", "method", "max_iter", "kind", "exponent", "tuples", "tuple_size", "q")
    if group == "modulus":
        P["kind"] = act
        if args.grid:
            P["grid"] = _floats(args.grid)
    if getattr(args, "h", None):
        P["h"] = read_vector(args.h)
    if getattr(args, "x", None):
        P["x"] = read_vector(args.x)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        doc = _config_doc(args)
        config = config_from_dict(doc)
        report = run(config, args.out)
    except ConfigurationError as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as e:
        print(f"solver failure: {e} (best {e.best})", file=sys.stderr)
        return EXIT_SOLVER
    except (LatsphereError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    if not args.out:
        print(report.to_json())
    else:
        print(json.dumps(report.summary, sort_keys=True, default=str))
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
