"""Plain key=value experiment configuration: parsing, defaults, validation.

One ``key=value`` per line, ``#`` starts a comment, blank lines ignored.
Every constraint that would invalidate a run (unknown key, white noise away
from d=1, gamma outside the admissible band, inconsistent level lists) is
rejected at parse time with a stable error code, never mid-run.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .functionals import FUNCTIONAL_NAMES

__all__ = ["KNOWN_KEYS", "parse_config_text", "load_config", "ResolvedConfig", "resolve"]

KNOWN_KEYS = {
    "d",
    "N",
    "K",
    "T",
    "noise.kind",
    "noise.s",
    "noise.q0_zero",
    "gamma",
    "Mq_factor",
    "x0.preset",
    "samples",
    "levels.N",
    "levels.K",
    "ref.N",
    "ref.K",
    "phi",
    "seed",
    "out_dir",
    "threads",
}

_BOOL = {"true": True, "1": True, "yes": True, "false": False, "0": False, "no": False}


def parse_config_text(text: str) -> dict:
    """Raw key -> string dict; rejects unknown keys and malformed lines."""
    raw = {}
    for ln, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError("bad_value", f"line {ln}: expected key=value, got {line!r}")
        key, value = (part.strip() for part in stripped.split("=", 1))
        if key not in KNOWN_KEYS:
            raise ConfigError("unknown_key", f"line {ln}: unknown key {key!r}")
        if key in raw:
            raise ConfigError("bad_value", f"line {ln}: duplicate key {key!r}")
        raw[key] = value
    return raw


def load_config(path) -> dict:
    return parse_config_text(Path(path).read_text())


def _parse(raw: dict, key: str, conv, default=None):
    if key not in raw:
        return default
    try:
        return conv(raw[key])
    except (ValueError, KeyError) as exc:
        raise ConfigError("bad_value", f"key {key!r}: cannot parse {raw[key]!r}") from exc


def _int_list(text: str) -> list:
    return [int(v) for v in text.split(",") if v.strip() != ""]


@dataclass
class ResolvedConfig:
    """Typed configuration with defaults applied and overrides folded in."""

    d: int = 1
    N: int = 32
    K: int = 256
    T: float = 1.0
    noise_kind: str = "trace-class"
    noise_s: float = 2.0
    q0_zero: bool = True
    gamma: float | None = None
    Mq_factor: int = 4
    x0_preset: str = "cosine"
    samples: int | None = None
    levels_N: list = field(default_factory=list)
    levels_K: list = field(default_factory=list)
    ref_N: int | None = None
    ref_K: int | None = None
    phi: str = "gauss"
    seed: int = 0
    out_dir: str = "out"
    threads: int = 1

    def as_dict(self) -> dict:
        """Canonical flat mapping used for hashing and reproducibility."""
        return {
            "d": self.d,
            "N": self.N,
            "K": self.K,
            "T": self.T,
            "noise.kind": self.noise_kind,
            "noise.s": self.noise_s,
            "noise.q0_zero": self.q0_zero,
            "gamma": self.gamma,
            "Mq_factor": self.Mq_factor,
            "x0.preset": self.x0_preset,
            "samples": self.samples,
            "levels.N": ",".join(map(str, self.levels_N)),
            "levels.K": ",".join(map(str, self.levels_K)),
            "ref.N": self.ref_N,
            "ref.K": self.ref_K,
            "phi": self.phi,
            "seed": self.seed,
        }

    def gamma_bounds(self) -> tuple:
        if self.noise_kind == "white":
            return 1.0, 1.5
        return 1.0 + self.d / 4.0, 2.0


def resolve(raw: dict, overrides: dict | None = None) -> ResolvedConfig:
    """Apply defaults, types and cross-field validation to a raw config."""
    cfg = ResolvedConfig()
    cfg.d = _parse(raw, "d", int, cfg.d)
    cfg.N = _parse(raw, "N", int, cfg.N)
    cfg.K = _parse(raw, "K", int, cfg.K)
    cfg.T = _parse(raw, "T", float, cfg.T)
    cfg.noise_kind = _parse(raw, "noise.kind", str, cfg.noise_kind)
    cfg.noise_s = _parse(raw, "noise.s", float, cfg.noise_s)
    cfg.q0_zero = _parse(raw, "noise.q0_zero", lambda v: _BOOL[v.lower()], cfg.q0_zero)
    cfg.gamma = _parse(raw, "gamma", float, cfg.gamma)
    cfg.Mq_factor = _parse(raw, "Mq_factor", int, cfg.Mq_factor)
    cfg.x0_preset = _parse(raw, "x0.preset", str, cfg.x0_preset)
    cfg.samples = _parse(raw, "samples", int, cfg.samples)
    cfg.levels_N = _parse(raw, "levels.N", _int_list, cfg.levels_N)
    cfg.levels_K = _parse(raw, "levels.K", _int_list, cfg.levels_K)
    cfg.ref_N = _parse(raw, "ref.N", int, cfg.ref_N)
    cfg.ref_K = _parse(raw, "ref.K", int, cfg.ref_K)
    cfg.phi = _parse(raw, "phi", str, cfg.phi)
    cfg.seed = _parse(raw, "seed", int, cfg.seed)
    cfg.out_dir = _parse(raw, "out_dir", str, cfg.out_dir)
    cfg.threads = _parse(raw, "threads", int, cfg.threads)

    for key, value in (overrides or {}).items():
        if value is not None:
            setattr(cfg, key, value)

    if cfg.d not in (1, 2, 3):
        raise ConfigError("bad_value", f"d must be 1, 2 or 3, got {cfg.d}")
    if cfg.noise_kind not in ("white", "trace-class"):
        raise ConfigError("bad_value", f"noise.kind must be white or trace-class")
    if cfg.noise_kind == "white" and cfg.d != 1:
        raise ConfigError("noise_dimension", "white noise requires d = 1")
    if cfg.noise_kind == "trace-class" and cfg.noise_s <= cfg.d / 2.0:
        raise ConfigError("bad_value", f"noise.s must exceed d/2 = {cfg.d / 2}")
    if cfg.phi not in FUNCTIONAL_NAMES:
        raise ConfigError("bad_value", f"phi must be one of {FUNCTIONAL_NAMES}")
    if cfg.Mq_factor < 2:
        raise ConfigError("bad_value", "Mq_factor must be >= 2 (cubic dealiasing)")
    if cfg.threads < 1:
        raise ConfigError("bad_value", "threads must be >= 1")

    lo, hi = cfg.gamma_bounds()
    if cfg.gamma is None:
        cfg.gamma = 0.5 * (lo + hi)
    if not (lo < cfg.gamma < hi):
        raise ConfigError(
            "gamma_range", f"gamma = {cfg.gamma} outside the admissible ({lo}, {hi})"
        )
    return cfg


def build_levels(cfg: ResolvedConfig, need: int = 1) -> tuple:
    """Pair up the level lists and the reference resolution.

    Singleton lists broadcast against the other; equal-length lists zip.
    Rate sub-commands pass ``need=3`` so an under-specified ladder is
    rejected up front.
    """
    levels_N = cfg.levels_N or [cfg.N]
    levels_K = cfg.levels_K or [cfg.K]
    if len(levels_N) == 1 and len(levels_K) > 1:
        levels_N = levels_N * len(levels_K)
    if len(levels_K) == 1 and len(levels_N) > 1:
        levels_K = levels_K * len(levels_N)
    if len(levels_N) != len(levels_K):
        raise ConfigError(
            "level_inconsistency",
            f"levels.N ({len(levels_N)}) and levels.K ({len(levels_K)}) do not pair",
        )
    levels = list(zip(levels_N, levels_K))
    if len(levels) < need:
        raise ConfigError(
            "insufficient_levels", f"need >= {need} levels, got {len(levels)}"
        )
    ref_N = cfg.ref_N if cfg.ref_N is not None else max(n for n, _ in levels)
    ref_K = cfg.ref_K if cfg.ref_K is not None else max(k for _, k in levels)
    for N, K in levels:
        if N > ref_N:
            raise ConfigError("level_inconsistency", f"level N = {N} exceeds ref.N = {ref_N}")
        if ref_K % K != 0:
            raise ConfigError(
                "level_inconsistency", f"level K = {K} does not divide ref.K = {ref_K}"
            )
    return levels, (ref_N, ref_K)
