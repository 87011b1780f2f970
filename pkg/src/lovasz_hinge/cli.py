"""Command-line front end: ``lovasz-hinge <command> [options]``.

Every command prints one JSON document (and writes it to ``--out`` when
given) carrying the tool version, the seed and a hash of the resolved
configuration.  Option values come from flags, then from ``--config``
(a JSON object keyed by option name), then from defaults; the seed falls
back to the ``LHL_SEED`` environment variable.  The exit code is 0 iff
every check performed by the command passed; usage errors exit with 2.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import re
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from . import analysis as A
from . import links as LK
from . import lovasz as LV
from . import setfn as SF
from . import target as T
from .spaces import as_label, fmt, labels, parse, reports

TOOL = "lovasz-hinge"

DEFAULTS = {
    "setfn": None,
    "dist": None,
    "eps": None,
    "link": "star",
    "n": 1000,
    "seed": None,
    "out": None,
    "resolution": 400,
    "which": "star,diamond",
    "u": None,
    "x": None,
    "y": None,
    "target": "abstain",
    "sampler": "dirichlet",
    "probes": 50,
    "brute": False,
    "strict": True,
}

# ---------------------------------------------------------------------------
# JSON with 17 significant digits

_FLOAT = re.compile(r'"\\u0000f:([^"]*)"')


def _prep(obj):
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return str(x)
        return "\x00f:" + format(x, ".17g")
    if isinstance(obj, dict):
        return {str(k): _prep(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_prep(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _prep(obj.tolist())
    return obj


def dumps(obj, indent: int = 2) -> str:
    """JSON text with every float written using 17 significant digits."""
    text = json.dumps(_prep(obj), indent=indent)
    return _FLOAT.sub(lambda m: _float_token(m.group(1)), text) + "\n"


def _float_token(s: str) -> str:
    # keep a decimal point or exponent so the value reads back as a float
    return s if any(c in s for c in ".eEn") else s + ".0"


# ---------------------------------------------------------------------------
# argument handling


class UsageError(Exception):
    pass


def _vec(text, what: str) -> np.ndarray:
    if text is None:
        raise UsageError(f"--{what} is required for this command")
    if isinstance(text, (list, tuple)):
        return np.asarray(text, dtype=np.float64)
    text = str(text).strip()
    if text and set(text) <= set("+-0−"):
        return parse(text).astype(np.float64)
    try:
        return np.array([float(t) for t in text.split(",")], dtype=np.float64)
    except ValueError:
        raise UsageError(f"--{what} must be comma-separated numbers or a sign string, got {text!r}") from None


def _json_arg(value, what: str):
    """Inline JSON object or path to a JSON file."""
    if isinstance(value, dict):
        return value
    text = str(value).strip()
    if text.startswith("{"):
        try:
            return json.loads(text)
        except json.JSONDecodeError as e:
            raise UsageError(f"--{what}: bad inline JSON ({e})") from None
    path = Path(text)
    if not path.exists():
        raise UsageError(f"--{what}: file not found: {text}")
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as e:
        raise UsageError(f"--{what}: {text} is not valid JSON ({e})") from None


def resolve(args: argparse.Namespace) -> dict:
    """Merge flags over the config file over defaults."""
    cfg = {}
    if getattr(args, "config", None):
        cfg = _json_arg(args.config, "config")
        if not isinstance(cfg, dict):
            raise UsageError("--config must hold a JSON object")
        unknown = set(cfg) - set(DEFAULTS)
        if unknown:
            raise UsageError(f"--config has unknown keys: {sorted(unknown)}")
    out = {"command": args.command}
    for key, default in DEFAULTS.items():
        val = getattr(args, key, None)
        if val is None:
            val = cfg.get(key, default)
        out[key] = val
    if out["seed"] is None:
        env = os.environ.get("LHL_SEED")
        try:
            out["seed"] = int(env) if env not in (None, "") else 0
        except ValueError:
            raise UsageError(f"LHL_SEED must be an integer, got {env!r}") from None
    out["seed"] = int(out["seed"])
    for key in ("setfn", "dist"):
        if out[key] is not None:
            out[key] = _json_arg(out[key], key)
    return out


def config_hash(cfg: dict) -> str:
    canon = json.dumps({k: v for k, v in cfg.items() if k != "out"}, sort_keys=True, default=str)
    return hashlib.sha256(canon.encode()).hexdigest()


def _setfn(cfg, validate_class: bool = True) -> SF.SetFunction:
    if cfg["setfn"] is None:
        raise UsageError("--setfn is required for this command")
    spec = cfg["setfn"]
    f = SF.from_spec(spec, validate_class=validate_class)
    if "name" in spec:
        f = replace(f, name=str(spec["name"]))
    return f


def _dist(cfg, k: int) -> np.ndarray:
    if cfg["dist"] is None:
        raise UsageError("--dist is required for this command")
    return T.from_spec(cfg["dist"], k)


def _eps(cfg, k: int) -> float:
    return float(cfg["eps"]) if cfg["eps"] is not None else 1.0 / (2 * k)


# ---------------------------------------------------------------------------
# commands; each returns (payload, ok)


def cmd_check(cfg):
    f = _setfn(cfg, validate_class=False)
    sub = SF.find_submodularity_violation(f)
    inc = SF.find_increasing_violation(f)
    mod = SF.find_modularity_violation(f)
    fbar = SF.mean_value(f)
    full = float(f.values[f.full])
    res = {
        "k": f.k,
        "values": f.values.tolist(),
        "normalized": SF.is_normalized(f),
        "increasing": inc is None,
        "submodular": sub is None,
        "modular": mod is None,
        "strictly_submodular": SF.is_strictly_submodular(f),
        "mean_value": fbar,
        "f_full": full,
        "mean_slack": 2 * fbar - full,
    }
    if sub is not None:
        res["submodular_witness"] = {"S": sorted(sub.S), "i": sub.i, "j": sub.j}
    if inc is not None:
        res["increasing_witness"] = {"S": sorted(inc[0]), "i": inc[1]}
    ok = res["normalized"] and res["increasing"] and res["submodular"]
    return res, ok


def cmd_eval(cfg):
    f = _setfn(cfg)
    u = _vec(cfg["u"], "u")
    y = as_label(_vec(cfg["y"], "y"))
    res = {
        "u": u,
        "y": fmt(y),
        "hinge": LV.hinge(f, u, y),
        "hinge_subgradient": LV.hinge_subgradient(f, u, y),
        "clip": LV.clip(u),
        "hinge_clipped": LV.hinge(f, LV.clip(u), y),
    }
    if np.all(np.isin(u, (-1.0, 0.0, 1.0))):
        res["abstain_loss"] = T.abstain_loss(f, u.astype(np.int64), y)
    if cfg["dist"] is not None:
        p = _dist(cfg, f.k)
        res["expected_hinge"] = LV.expected_hinge(f, u, p)
    return res, True


def cmd_extension(cfg):
    f = _setfn(cfg)
    x = _vec(cfg["x"], "x")
    strict = bool(cfg["strict"])
    return {
        "x": x,
        "value": LV.lovasz_extension(f, x, strict=strict),
        "subgradient": LV.lovasz_subgradient(f, x, strict=strict),
    }, True


def _prop_dict(prop: T.Property):
    return {
        "minimizers": prop.strings(),
        "minimum": prop.minimum,
        "values": {fmt(r): v for r, v in zip(prop.reports, prop.values)},
    }


def cmd_property(cfg):
    f = _setfn(cfg)
    p = _dist(cfg, f.k)
    return {
        "p": {fmt(y): q for y, q in zip(labels(f.k), p)},
        "abstain": _prop_dict(T.abstain_property(f, p)),
        "structured": _prop_dict(T.structured_property(f, p)),
    }, True


def cmd_faces(cfg):
    f = _setfn(cfg)
    p = _dist(cfg, f.k)
    faces = T.minimizer_faces(f, p)
    V = reports(f.k)
    return {
        "faces": [
            {"perm": [i + 1 for i in F.perm], "y": fmt(F.y), "verts": list(F.verts), "vertices": [fmt(v) for v in F.vertices()]}
            for F in faces
        ],
        "vertex_reports": sorted(fmt(V[r]) for r in T.face_vertex_reports(faces)),
    }, True


def _fmt_set(S):
    return sorted(fmt(np.array(v)) for v in S)


def cmd_envelope(cfg):
    u = _vec(cfg["u"], "u")
    k = u.shape[0]
    eps = _eps(cfg, k)
    env = LK.envelope(u, eps)
    res = {"u": u, "eps": eps, "envelope": _fmt_set(env), "nonempty": bool(env)}
    ok = True
    if cfg["brute"] or k <= LK.MAX_BRUTE_K:
        brute = LK.envelope_bruteforce(u, eps)
        res["bruteforce"] = _fmt_set(brute)
        res["agree"] = brute == env
        ok = res["agree"]
    return res, ok


def cmd_link(cfg):
    u = _vec(cfg["u"], "u")
    k = u.shape[0]
    link = LK.make_link(cfg["link"], cfg["eps"] if cfg["eps"] is not None else None, k)
    return {"u": u, "link": link.name, "eps": link.eps, "report": fmt(link(u))}, True


def cmd_map(cfg):
    eps = float(cfg["eps"]) if cfg["eps"] is not None else 0.25
    res = {"eps": eps, "resolution": int(cfg["resolution"]), "maps": {}}
    for which in [w.strip() for w in str(cfg["which"]).split(",") if w.strip()]:
        rm = LK.region_map(eps, int(cfg["resolution"]), which)
        entry = {"regions": LK.count_regions(rm), "cells": rm.cell_counts()}
        entry["n_regions"] = sum(entry["regions"].values())
        if cfg["out"]:
            csv_path, svg_path = LK.write_region_map(rm, cfg["out"])
            entry["csv"] = csv_path.name
            entry["svg"] = svg_path.name
        res["maps"][which] = entry
    return res, True


def cmd_witness(cfg):
    f = _setfn(cfg)
    y = as_label(_vec(cfg["y"], "y")) if cfg["y"] is not None else np.ones(f.k)
    try:
        w = A.inconsistency_witness(f, y, cfg["eps"])
    except A.NoWitnessError as e:
        return {"witness": None, "reason": str(e)}, True
    return {"witness": w.to_dict()}, w.ok


def cmd_calibrate(cfg):
    f = _setfn(cfg)
    link = LK.make_link(cfg["link"], cfg["eps"], f.k)
    rep = A.calibration_scan(f, link, int(cfg["n"]), cfg["seed"], sampler=cfg["sampler"], target=cfg["target"])
    return {"calibration": rep.to_dict()}, rep.ok


def cmd_embed_check(cfg):
    f = _setfn(cfg)
    emb = A.embedding_check(f, int(cfg["n"]), cfg["seed"])
    res = {"embedding": emb.to_dict()}
    ok = emb.ok
    if f.k <= LK.MAX_BRUTE_K:
        eps = _eps(cfg, f.k)
        cont = A.envelope_containment_check(f, eps, int(cfg["n"]), int(cfg["probes"]), cfg["seed"])
        res["envelope_containment"] = cont.to_dict()
        ok = ok and cont.ok
    return res, ok


COMMANDS = {
    "check": (cmd_check, "class membership verdicts, mean value and slack"),
    "eval": (cmd_eval, "hinge value and subgradient at (u, y)"),
    "extension": (cmd_extension, "Lovász extension and subgradient at x"),
    "property": (cmd_property, "minimizing reports under a distribution"),
    "faces": (cmd_faces, "minimizer faces of the expected hinge on the cube"),
    "envelope": (cmd_envelope, "link envelope at u (closed form and brute force)"),
    "link": (cmd_link, "linked report at u"),
    "map": (cmd_map, "region maps of the links on [-1, 1]^2 (CSV and SVG)"),
    "witness": (cmd_witness, "inconsistency witness for the sign link"),
    "calibrate": (cmd_calibrate, "calibration scan over sampled distributions"),
    "embed-check": (cmd_embed_check, "embedding and envelope-containment checks"),
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog=TOOL, description=__doc__.split("\n\n")[0])
    ap.add_argument("--version", action="version", version=f"{TOOL} {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, metavar="command")
    for name, (_, help_) in COMMANDS.items():
        p = sub.add_parser(name, help=help_, description=help_)
        p.add_argument("--config", help="JSON file (or inline object) with option defaults")
        p.add_argument("--setfn", help="set-function spec: JSON file or inline object")
        p.add_argument("--dist", help="distribution spec: JSON file or inline object")
        p.add_argument("--eps", type=float, help="envelope width (default 1/(2k))")
        p.add_argument("--link", help="star, diamond, threshold:c or sign")
        p.add_argument("--n", type=int, help="number of sampled distributions")
        p.add_argument("--seed", type=int, help="master seed (default $LHL_SEED or 0)")
        p.add_argument("--out", help="output directory")
        p.add_argument("--resolution", type=int, help="grid cells per axis for map")
        p.add_argument("--which", help="comma list of star, diamond, envelope for map")
        p.add_argument("--u", help="surrogate point, e.g. --u=0.5,-0.2")
        p.add_argument("--x", help="point for the extension, e.g. --x=0.5,0.2")
        p.add_argument("--y", help="label, e.g. --y=+- or --y=1,-1")
        p.add_argument("--target", choices=["abstain", "structured"], help="target loss for calibrate")
        p.add_argument("--sampler", choices=["dirichlet", "grid"], help="distribution sampler for calibrate")
        p.add_argument("--probes", type=int, help="probes per distribution for embed-check")
        p.add_argument("--brute", action="store_const", const=True, help="also run the brute-force envelope")
        p.add_argument("--no-strict", dest="strict", action="store_const", const=False, help="allow negative x")
    return ap


def run(argv=None) -> tuple[dict, int]:
    args = build_parser().parse_args(argv)
    cfg = resolve(args)
    fn = COMMANDS[args.command][0]
    payload, ok = fn(cfg)
    doc = {
        "tool": TOOL,
        "version": __version__,
        "command": args.command,
        "seed": cfg["seed"],
        "config_hash": config_hash(cfg),
        "ok": bool(ok),
        **payload,
    }
    if cfg["out"]:
        out = Path(cfg["out"])
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{args.command}.json").write_text(dumps(doc))
    return doc, 0 if ok else 1


def main(argv=None) -> int:
    try:
        doc, code = run(argv)
    except (UsageError, ValueError, IndexError, KeyError) as e:
        msg = e.args[0] if isinstance(e, KeyError) and e.args else e
        print(f"{TOOL}: error: {msg}", file=sys.stderr)
        return 2
    sys.stdout.write(dumps(doc))
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
