"""Batch experiments behind the command line: curves, peak-time sweeps, tables.

Configs are nested mappings (YAML or JSON on disk). Anything not given falls
back to :data:`DEFAULTS`; presets reproduce the reference experiments.

Seeding: with top-level seed ``S``, row ``i`` of a reconstruction table uses
``numpy.random.SeedSequence([S, i]).generate_state(1)[0]`` as its noise seed,
so every row can be re-run on its own and rows are independent of execution
order.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
import copy
import csv
import io
import json
import math
from pathlib import Path

import numpy as np
import yaml

from .errors import FDOTError
from .forward import ForwardModel, GridSpec
from .inversion import Branch, NoiseSpec, invert
from .peaktime import (
    PeakEquationContext,
    approx_peak_large_ell,
    approx_peak_small_ell,
    asymptotic_peak_large_ell,
    asymptotic_peak_small_ell,
)
from .physics import PhysicalParams, SdPair, Target

REFERENCE_PAIRS = [
    {"detector": [14, 10, 0], "source": [6, 10, 0]},
    {"detector": [8, 5, 0], "source": [0, 5, 0]},
    {"detector": [5, 0, 0], "source": [5, 8, 0]},
    {"detector": [16, 15, 0], "source": [8, 15, 0]},
]

DEFAULTS = {
    "params": {"v": 0.219, "D": 1.0 / 3.0, "mu_a": 0.1, "beta": 0.5493, "ell": 100.0, "c_strength": 1.0},
    "pair": {"detector": [14, 10, 0], "source": [6, 10, 0]},
    "target": [10, 10, 20],
    "curve": {"t_max": None, "n_points": 512},
    "sweep": {"axis": "xc3", "start": 20.0, "stop": 60.0, "num": 9, "values": None},
    "reconstruct": {
        "targets": [[8, 7, 20], [8, 7, 30]],
        "pairs": REFERENCE_PAIRS,
        "noise_levels": [0.0],
        "repeats": 1,
        "theta1": 0.0,
        "theta2": math.pi / 2,
    },
    "grid": {"n_panels": 256, "xtol": 0.1},
    "branch": "auto",
    "seed": 0,
    "threads": 1,
}

PRESETS = {
    "table1": {"params": {"ell": 100.0}},
    "table2": {
        "params": {"ell": 100.0},
        "reconstruct": {"targets": [[8, 7, 20]], "pairs": REFERENCE_PAIRS[:1],
                        "noise_levels": [0.001, 0.01, 0.05]},
    },
    "table3": {"params": {"ell": 1000.0}},
    "table4": {
        "params": {"ell": 1000.0},
        "reconstruct": {"targets": [[8, 7, 30]], "pairs": REFERENCE_PAIRS[:1],
                        "noise_levels": [0.001, 0.01, 0.05]},
    },
    # the same noisy run for the (10, 10, 30) target named in the accompanying text
    "table4-alt": {
        "params": {"ell": 1000.0},
        "reconstruct": {"targets": [[10, 10, 30]], "pairs": REFERENCE_PAIRS[:1],
                        "noise_levels": [0.001, 0.01, 0.05]},
    },
    "sweep-ell-small": {"params": {"ell": 100.0}, "sweep": {"axis": "ell", "start": 0.0, "stop": 200.0, "num": 9}},
    "sweep-mua-small": {"params": {"ell": 100.0}, "sweep": {"axis": "mu_a", "start": 0.05, "stop": 0.2, "num": 7}},
    "sweep-xc3-small": {"params": {"ell": 100.0}, "sweep": {"axis": "xc3", "start": 20.0, "stop": 60.0, "num": 9}},
    "sweep-ell-large": {"params": {"ell": 1000.0}, "sweep": {"axis": "ell", "start": 500.0, "stop": 3000.0, "num": 11}},
    "sweep-mua-large": {"params": {"ell": 1000.0}, "sweep": {"axis": "mu_a", "start": 0.05, "stop": 0.2, "num": 7}},
    "sweep-xc3-large": {"params": {"ell": 1000.0}, "sweep": {"axis": "xc3", "start": 20.0, "stop": 60.0, "num": 9}},
}

SWEEP_AXES = ("ell", "mu_a", "xc3")

CURVE_COLUMNS = ["t_ps", "u_m", "U_m", "u_m_asymptotic"]
SWEEP_COLUMNS = [
    "axis", "value", "t_peak", "t_peak_s", "t_peak_p0", "t_peak_l0", "t_peak_l",
    "relerr_s", "relerr_p0", "relerr_l0", "relerr_l", "error",
]
TABLE_COLUMNS = [
    "row", "xc1", "xc2", "xc3", "xd1", "xd2", "xd3", "xs1", "xs2", "xs3",
    "delta_hat", "seed", "inv1", "inv2", "inv3", "rel_err",
    "t_peak0", "t_peak1", "t_peak2", "branch", "error",
]


def deep_merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, val in (override or {}).items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = deep_merge(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


def load_config(path) -> dict:
    text = Path(path).read_text()
    data = yaml.safe_load(text) or {}
    if not isinstance(data, dict):
        raise ValueError(f"config {path} must be a mapping at top level")
    return data


def resolve_config(preset=None, file_config=None, overrides=None) -> dict:
    """Defaults <- preset <- config file <- flag overrides."""
    cfg = copy.deepcopy(DEFAULTS)
    if preset:
        if preset not in PRESETS:
            raise ValueError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
        cfg = deep_merge(cfg, PRESETS[preset])
    cfg = deep_merge(cfg, file_config or {})
    cfg = deep_merge(cfg, overrides or {})
    validate_config(cfg)
    return cfg


def validate_config(cfg: dict):
    params_from(cfg)
    Branch(cfg["branch"])
    sweep = cfg["sweep"]
    if sweep["axis"] not in SWEEP_AXES:
        raise ValueError(f"sweep axis must be one of {SWEEP_AXES}, got {sweep['axis']!r}")
    vals = sweep_values(cfg)
    if len(vals) == 0 or np.any(np.diff(vals) <= 0):
        raise ValueError("sweep values must be strictly increasing")
    if sweep["axis"] != "ell" and np.any(vals <= 0):
        raise ValueError("sweep values must be positive")
    if np.any(vals < 0):
        raise ValueError("sweep values must be non-negative")
    if int(cfg["threads"]) < 1:
        raise ValueError("threads must be >= 1")
    for lvl in cfg["reconstruct"]["noise_levels"]:
        NoiseSpec(float(lvl))


def params_from(cfg) -> PhysicalParams:
    return PhysicalParams(**{k: float(v) for k, v in cfg["params"].items()})


def pair_from(spec) -> SdPair:
    return SdPair(x_s=spec["source"], x_d=spec["detector"])


def grid_from(cfg) -> GridSpec:
    g = cfg.get("grid") or {}
    return GridSpec(n_panels=int(g.get("n_panels", 256)), xtol=float(g.get("xtol", 0.1)))


def sweep_values(cfg) -> np.ndarray:
    s = cfg["sweep"]
    if s.get("values") is not None:
        return np.asarray(s["values"], dtype=float)
    return np.linspace(float(s["start"]), float(s["stop"]), int(s["num"]))


def row_seed(top_seed: int, row: int) -> int:
    return int(np.random.SeedSequence([int(top_seed), int(row)]).generate_state(1)[0])


def _map(fn, items, threads):
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


# -- curve --------------------------------------------------------------------


def run_curve(cfg) -> list[dict]:
    params = params_from(cfg)
    model = ForwardModel(pair_from(cfg["pair"]), Target(cfg["target"]), params)
    t_max = cfg["curve"].get("t_max")
    if t_max is None:
        t_max = 4.0 * model.peak(grid_from(cfg)).t_peak
    times = np.linspace(0.0, float(t_max), int(cfg["curve"]["n_points"]))
    curve = model.curve(times)
    return [
        {"t_ps": t, "u_m": u, "U_m": U, "u_m_asymptotic": a}
        for t, u, U, a in zip(curve.times, curve.u_m, curve.values, curve.u_m_asymptotic)
    ]


# -- peak sweep ---------------------------------------------------------------


def _sweep_point(cfg, axis, value) -> dict:
    params = params_from(cfg)
    target = list(map(float, cfg["target"]))
    if axis == "xc3":
        target[2] = value
    else:
        params = params.replace(**{axis: value})
    pair, tgt = pair_from(cfg["pair"]), Target(target)
    row = {c: None for c in SWEEP_COLUMNS}
    row.update(axis=axis, value=value)
    errors = []
    try:
        t = ForwardModel(pair, tgt, params).peak(grid_from(cfg)).t_peak
    except FDOTError as exc:
        row["error"] = f"numeric: {exc}"
        return row
    row["t_peak"] = t
    ctx = PeakEquationContext.from_geometry(pair, tgt, params)
    solvers = {
        "s": asymptotic_peak_small_ell,
        "p0": approx_peak_small_ell,
        "l0": approx_peak_large_ell,
        "l": asymptotic_peak_large_ell,
    }
    for key, solver in solvers.items():
        try:
            est = solver(ctx).t_peak
        except FDOTError as exc:
            errors.append(f"{key}: {exc}")
            continue
        row[f"t_peak_{key}"] = est
        row[f"relerr_{key}"] = abs(est - t) / t
    row["error"] = "; ".join(errors) or None
    return row


def run_peak_sweep(cfg) -> list[dict]:
    axis = cfg["sweep"]["axis"]
    values = sweep_values(cfg)
    return _map(lambda v: _sweep_point(cfg, axis, float(v)), values, int(cfg["threads"]))


# -- reconstruction table -----------------------------------------------------


def table_jobs(cfg) -> list[dict]:
    rc = cfg["reconstruct"]
    jobs = []
    for xc in rc["targets"]:
        for pair in rc["pairs"]:
            for delta in rc["noise_levels"]:
                repeats = 1 if float(delta) == 0 else int(rc["repeats"])
                for _ in range(repeats):
                    jobs.append({"target": xc, "pair": pair, "delta_hat": float(delta)})
    for i, job in enumerate(jobs):
        job["row"] = i
        job["seed"] = row_seed(cfg["seed"], i)
    return jobs


def _table_row(cfg, job) -> dict:
    params = params_from(cfg)
    rc = cfg["reconstruct"]
    pair = pair_from(job["pair"])
    target = Target(job["target"])
    row = {c: None for c in TABLE_COLUMNS}
    row.update(
        row=job["row"], delta_hat=job["delta_hat"], seed=job["seed"],
        xc1=target.x_c[0], xc2=target.x_c[1], xc3=target.x_c[2],
        xd1=pair.x_d[0], xd2=pair.x_d[1], xd3=pair.x_d[2],
        xs1=pair.x_s[0], xs2=pair.x_s[1], xs3=pair.x_s[2],
    )
    try:
        res = invert(
            pair, params, target=target,
            theta1=float(rc["theta1"]), theta2=float(rc["theta2"]),
            noise=NoiseSpec(job["delta_hat"], job["seed"]),
            branch=cfg["branch"], grid=grid_from(cfg),
        )
    except FDOTError as exc:
        row["error"] = f"{type(exc).__name__}: {exc}"
        return row
    est = res.target_estimate
    row.update(inv1=est[0], inv2=est[1], inv3=est[2], rel_err=res.rel_err,
               branch="/".join(res.diagnostics["branches"]))
    row.update({f"t_peak{i}": t for i, t in enumerate(res.measurements.peak_times)})
    return row


def run_reconstruct(cfg) -> list[dict]:
    jobs = table_jobs(cfg)
    return _map(lambda j: _table_row(cfg, j), jobs, int(cfg["threads"]))


# -- output -------------------------------------------------------------------


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.6g}"
    return str(v)


def format_csv(rows, columns) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(row.get(c)) for c in columns])
    return buf.getvalue()


def write_outputs(rows, columns, cfg, out=None) -> str:
    """Write CSV (and the resolved config as JSON next to it). Returns the CSV text."""
    text = format_csv(rows, columns)
    if out is not None:
        out = Path(out)
        out.write_text(text)
        Path(str(out) + ".config.json").write_text(json.dumps(cfg, indent=2, sort_keys=True) + "\n")
    return text
