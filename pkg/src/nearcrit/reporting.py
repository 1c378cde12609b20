"""Run directories, manifests, and CSV/JSON emission.

Every run of the command line gets a directory runs/<timestamp>-<digest>/
holding a manifest.json (configuration echo, outputs, checks with their
tolerances, wall time) next to the data files.
"""

import hashlib
import json
import math
import time
from pathlib import Path

import numpy as np

TOOL_VERSION = "0.1.0"


def _jsonable(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, float) and math.isinf(obj):
        return None
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def write_json(path, obj):
    Path(path).write_text(json.dumps(_jsonable(obj), indent=2,
                                     allow_nan=True) + "\n")


def config_digest(config):
    blob = json.dumps(_jsonable(config), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:10]


def new_run_dir(base, command, config):
    stamp = time.strftime("%Y%m%dT%H%M%S", time.gmtime())
    d = Path(base) / f"{stamp}-{config_digest(config)}"
    d.mkdir(parents=True, exist_ok=True)
    return d


def write_manifest(run_dir, command, config, outputs, checks, t0, t1,
                   extra=None):
    outputs = [str(Path(o).name) for o in outputs]
    ok = all(c.passed for c in checks) if checks else True
    manifest = {
        "command": command,
        "params": _jsonable(config),
        "tool_version": TOOL_VERSION,
        "started": t0,
        "finished": t1,
        "wall_seconds": round(t1 - t0, 3),
        "config_digest": config_digest(config),
        "outputs": outputs,
        "checks": [c.as_dict() for c in checks],
        "pass": bool(ok),
    }
    if extra:
        manifest.update(_jsonable(extra))
    write_json(Path(run_dir) / "manifest.json", manifest)
    return manifest


def write_rate_csv(path, fit, running):
    """eps,u_max,mu,scaled_value,extrapolated table."""
    rows = []
    for (eps, umax), scaled, extr in zip(fit.entries, fit.scaled_values,
                                         running):
        mu = float("nan")
        rows.append((eps, umax, mu, scaled, extr))
    arr = np.array(rows)
    np.savetxt(path, arr, delimiter=",", comments="",
               header="eps,u_max,mu,scaled_value,extrapolated",
               fmt="%.12e")


def write_branch_csv(path, run):
    rows = [(s.eps, s.u_max, s.mu, s.int_u_q1, s.int_v_p1)
            for s in run.solutions]
    np.savetxt(path, np.array(rows), delimiter=",", comments="",
               header="eps,u_max,mu,int_u_q1,int_v_p1", fmt="%.12e")


def write_field_csv(path, pts, G, Gt=None):
    if Gt is None:
        Gt = np.full(len(G), np.nan)
    data = np.column_stack([pts, G, Gt])
    np.savetxt(path, data, delimiter=",", comments="",
               header="x,y,z,G,Gt", fmt="%.12e")
