"""CSV / JSON serialisation of rate reports and trajectories.

Every floating-point value is written with 17 significant digits so that a
parse of the written file reproduces the in-memory doubles bit-for-bit;
reports get a JSON sidecar (same stem, .json) carrying the fit results, the
seed and a hash of the fully resolved configuration.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .harness import LevelRow, RateReport

__all__ = [
    "fmt17",
    "config_hash",
    "write_rate_report",
    "read_rate_report",
    "write_trajectory",
    "sidecar_path",
]

REPORT_HEADER = "N,K,dt,lambda_N,error,std_err,used_in_fit"
TRAJECTORY_HEADER = "step,t,mass,energy,norm_gamma"


def fmt17(x: float) -> str:
    """17 significant digits: enough to round-trip any IEEE double."""
    return f"{float(x):.17g}"


def config_hash(config: dict) -> str:
    """Hash of the fully resolved configuration, stable under key order."""
    canon = "\n".join(f"{k}={config[k]}" for k in sorted(config))
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def sidecar_path(path) -> Path:
    return Path(path).with_suffix(".json")


def write_rate_report(report: RateReport, path, config: dict | None = None) -> None:
    """CSV of per-level rows plus a JSON sidecar with the fit summary."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [REPORT_HEADER]
    for r in report.rows:
        lines.append(
            ",".join(
                [
                    str(r.N),
                    str(r.K),
                    fmt17(r.dt),
                    fmt17(r.lambda_N),
                    fmt17(r.error),
                    fmt17(r.std_err),
                    "1" if r.used_in_fit else "0",
                ]
            )
        )
    path.write_text("\n".join(lines) + "\n")
    sidecar = {
        "kind": report.kind,
        "slope": None if report.slope is None else float(report.slope),
        "half_width": None if report.half_width is None else float(report.half_width),
        "fitted": report.fitted,
        "insufficient": report.insufficient,
        "seed": report.seed,
        "m": report.m,
        "functional": report.functional,
        "excluded": [int(r.excluded) for r in report.rows],
        "extras": report.extras,
        "config_hash": config_hash(config) if config is not None else None,
    }
    sidecar_path(path).write_text(
        json.dumps(sidecar, indent=2, sort_keys=True, default=float) + "\n"
    )


def read_rate_report(path) -> RateReport:
    """Reconstruct a report from its CSV and sidecar (inverse of write)."""
    path = Path(path)
    lines = path.read_text().strip().splitlines()
    if lines[0] != REPORT_HEADER:
        raise ValueError(f"unexpected report header {lines[0]!r}")
    rows = []
    for line in lines[1:]:
        n, k, dt, lam, err, se, used = line.split(",")
        rows.append(
            LevelRow(
                N=int(n),
                K=int(k),
                dt=float(dt),
                lambda_N=float(lam),
                error=float(err),
                std_err=float(se),
                used_in_fit=used == "1",
            )
        )
    meta = json.loads(sidecar_path(path).read_text())
    for r, exc in zip(rows, meta.get("excluded", [0] * len(rows))):
        r.excluded = int(exc)
    return RateReport(
        kind=meta["kind"],
        rows=rows,
        slope=meta["slope"],
        half_width=meta["half_width"],
        fitted=meta["fitted"],
        insufficient=meta["insufficient"],
        seed=meta["seed"],
        m=meta.get("m"),
        functional=meta.get("functional"),
        extras=meta.get("extras", {}),
    )


def write_trajectory(record, path, dt: float) -> None:
    """CSV of one trajectory: step, time, mass, energy (blank if not
    recorded) and the running gamma-norm if recorded."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    mass = np.asarray(record.mass_series)
    energy = record.energy_series
    norms = getattr(record, "norm_gamma_series", None)
    lines = [TRAJECTORY_HEADER]
    for k in range(mass.size):
        e = fmt17(energy[k]) if energy is not None else ""
        g = fmt17(norms[k]) if norms is not None else ""
        lines.append(f"{k},{fmt17(k * dt)},{fmt17(mass[k])},{e},{g}")
    path.write_text("\n".join(lines) + "\n")
