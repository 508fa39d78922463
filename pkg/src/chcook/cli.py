"""Command-line entry point.

    chcook <subcommand> <config-file> [--seed S] [--samples M]
                                      [--out-dir DIR] [--threads P]

Sub-commands: simulate, strong-time, strong-space, weak-time, weak-space,
moments, kolmogorov, energy.  Outputs are CSV files (plus JSON sidecars for
rate reports) in the output directory; identical (config, seed) pairs yield
byte-identical outputs at any thread count.  Failures print one
machine-readable JSON line on stderr and exit with a code specific to the
failure class.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import config as cfgmod
from . import harness, kolmogorov, reporting
from .errors import EXIT_CODES, ConfigError
from .functionals import make_functional
from .noise import trace_class, white_noise
from .scheme import SchemeConfig, default_x0, run_trajectory
from .noise import RngStream
from .spectral import build_spectrum

SUBCOMMANDS = (
    "simulate",
    "strong-time",
    "strong-space",
    "weak-time",
    "weak-space",
    "moments",
    "kolmogorov",
    "energy",
)

# default Monte Carlo sample counts per experiment family
DEFAULT_SAMPLES_TEMPORAL = 10_000
DEFAULT_SAMPLES_SPATIAL = 4_000

KOLMOGOROV_ALPHAS = (0.5, 1.0, 1.5)


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="chcook", description=__doc__)
    p.add_argument("subcommand", choices=SUBCOMMANDS)
    p.add_argument("config", help="plain key=value configuration file")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--out-dir", default=None)
    p.add_argument("--threads", type=int, default=None)
    return p


def _default_samples(sub: str) -> int:
    return DEFAULT_SAMPLES_SPATIAL if sub.endswith("-space") else DEFAULT_SAMPLES_TEMPORAL


def _make_plan(cfg, sub: str, functionals=()) -> harness.ExperimentPlan:
    need = 3 if sub in ("strong-time", "strong-space", "weak-time", "weak-space") else 1
    levels, ref = cfgmod.build_levels(cfg, need=need)
    return harness.ExperimentPlan(
        d=cfg.d,
        T=cfg.T,
        noise_kind=cfg.noise_kind,
        noise_s=cfg.noise_s,
        q0_zero=cfg.q0_zero,
        levels=levels,
        ref=ref,
        samples=cfg.samples if cfg.samples is not None else _default_samples(sub),
        gamma=cfg.gamma,
        functionals=functionals,
        x0_preset=cfg.x0_preset,
        Mq_factor=cfg.Mq_factor,
        seed=cfg.seed,
        threads=cfg.threads,
    )


def _scheme_config(cfg) -> SchemeConfig:
    spectrum = build_spectrum(cfg.d, cfg.N)
    if cfg.noise_kind == "white":
        noise = white_noise(spectrum, q0_zero=cfg.q0_zero)
    else:
        noise = trace_class(spectrum, cfg.noise_s, q0_zero=cfg.q0_zero)
    return SchemeConfig(
        spectrum=spectrum,
        T=cfg.T,
        K=cfg.K,
        noise=noise,
        gamma=cfg.gamma,
        x0=default_x0(spectrum, cfg.x0_preset),
        M_q=cfg.Mq_factor * (cfg.N + 1),
    )


def _run(sub: str, cfg) -> None:
    out = Path(cfg.out_dir)
    conf = cfg.as_dict()
    if sub == "simulate":
        sc = _scheme_config(cfg)
        rec = run_trajectory(sc, RngStream(cfg.seed), record_energy=True)
        reporting.write_trajectory(rec, out / "trajectory.csv", sc.dt)
    elif sub == "energy":
        sc = _scheme_config(cfg)
        sc.noise = _zero_noise(sc)
        rec = run_trajectory(sc, RngStream(cfg.seed), record_energy=True)
        reporting.write_trajectory(rec, out / "energy.csv", sc.dt)
    elif sub == "strong-time":
        report = harness.strong_error_temporal(_make_plan(cfg, sub))
        reporting.write_rate_report(report, out / "strong_time.csv", conf)
    elif sub == "strong-space":
        report = harness.strong_error_spatial(_make_plan(cfg, sub))
        reporting.write_rate_report(report, out / "strong_space.csv", conf)
    elif sub == "weak-time":
        report = harness.weak_error_temporal(_make_plan(cfg, sub, (cfg.phi,)))
        reporting.write_rate_report(report, out / "weak_time.csv", conf)
    elif sub == "weak-space":
        report = harness.weak_error_spatial(_make_plan(cfg, sub, (cfg.phi,)))
        reporting.write_rate_report(report, out / "weak_space.csv", conf)
    elif sub == "moments":
        report = harness.moment_stability(_make_plan(cfg, sub))
        reporting.write_rate_report(report, out / "moments.csv", conf)
    elif sub == "kolmogorov":
        sc = _scheme_config(cfg)
        phi = make_functional(cfg.phi, sc.spectrum)
        t_grid = [k * sc.dt for k in _dyadic_steps(cfg.K)]
        modes = list(range(1, min(sc.spectrum.N, 12) + 1))
        samples = cfg.samples if cfg.samples is not None else 2000
        for alpha in KOLMOGOROV_ALPHAS:
            report = kolmogorov.check_regularity_scaling(
                sc, phi, alpha, modes, t_grid, samples, seed=cfg.seed
            )
            name = f"kolmogorov_alpha{alpha}".replace(".", "_") + ".csv"
            reporting.write_rate_report(report, out / name, conf)
    else:  # pragma: no cover - argparse restricts choices
        raise ConfigError("bad_value", f"unknown subcommand {sub}")


def _dyadic_steps(K: int) -> list:
    """Dyadic subset {K, K/2, ..., 4} of step indices for scaling grids."""
    ks = []
    k = K
    while k >= 4:
        ks.append(k)
        k //= 2
    return sorted(ks)


def _zero_noise(sc: SchemeConfig):
    from dataclasses import replace
    import numpy as np

    return replace(sc.noise, q=np.zeros_like(sc.noise.q))


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        raw = cfgmod.load_config(args.config)
        overrides = {
            "seed": args.seed,
            "samples": args.samples,
            "out_dir": args.out_dir,
            "threads": args.threads,
        }
        cfg = cfgmod.resolve(raw, overrides)
        _run(args.subcommand, cfg)
    except ConfigError as exc:
        print(json.dumps({"error": exc.code, "message": str(exc)}), file=sys.stderr)
        return EXIT_CODES.get(exc.code, 1)
    except OSError as exc:
        print(json.dumps({"error": "io_error", "message": str(exc)}), file=sys.stderr)
        return EXIT_CODES["io_error"]
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
