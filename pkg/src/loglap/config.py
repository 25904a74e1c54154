"""Flat dotted-key run configuration.

One `key = value` pair per line, `#` comments, unknown keys rejected with
line-anchored messages.  `emit_config(parse_config(text))` is the canonical
normal form used for hashing and manifests.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

from .discretization import Domain
from .quadrature import QuadratureSpec


class ConfigError(ValueError):
    """Malformed configuration text."""


def _parse_float_list(text: str):
    vals = [float(p) for p in str(text).split(",") if p.strip()]
    if not vals:
        raise ValueError("empty list")
    return tuple(vals)


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.12g}"
    if isinstance(value, tuple):
        return ",".join(f"{v:.12g}" for v in value)
    return str(value)


def _auto_or_float(text: str):
    if str(text).strip() == "auto":
        return None
    return float(text)


# key -> (parser, default, validator, description)
_SCHEMA = {
    "domain.kind": (str, "interval", lambda v: v in ("interval", "disc"),
                    "interval | disc"),
    "domain.a": (float, -0.5, None, "left endpoint (interval)"),
    "domain.b": (float, 0.5, None, "right endpoint (interval)"),
    "domain.radius": (float, 0.5, lambda v: v > 0, "radius (disc)"),
    "mesh.n": (int, 256, lambda v: v >= 2, "interior degrees of freedom"),
    "quad.gauss_order": (int, 6, lambda v: v >= 1, "Gauss points per cell pair"),
    "quad.singular_subdivisions": (int, 12, lambda v: v >= 1,
                                   "graded levels for singular pairs"),
    "quad.boundary_grading": (float, 3.0, lambda v: v >= 1,
                              "grading exponent at the boundary"),
    "eig.k": (int, 6, lambda v: v >= 1, "number of eigenpairs"),
    "eig.dead_zone": (float, 1e-6, lambda v: v > 0, "sign-classification threshold"),
    "path.m": (int, 41, lambda v: v >= 3, "path resolution"),
    "tol.grad": (float, 1e-6, lambda v: v > 0, "gradient tolerance (times ||A||)"),
    "tol.residual": (float, 1e-8, lambda v: v > 0, "membership residual tolerance"),
    "tol.quad_consistency": (float, 1e-8, lambda v: v > 0,
                             "assembly self-consistency tolerance"),
    "tol.symmetry": (float, 1e-12, lambda v: v > 0, "matrix symmetry tolerance"),
    "curve.r_max": (_auto_or_float, None, lambda v: v is None or v > 0,
                    "grid end; auto = 10 (lam2 - lam1)"),
    "curve.steps": (int, 11, lambda v: v >= 2, "grid points"),
    "curve.strategy": (str, "continuation",
                       lambda v: v in ("continuation", "string"),
                       "curve tracing strategy"),
    "solver.max_sweeps": (int, 20000, lambda v: v >= 1, "string sweep cap"),
    "solver.step_safety": (float, 0.45, lambda v: 0 < v < 1, "step size safety"),
    "seed": (int, 12345, None, "seed for randomized restarts"),
    "fracexp.s_list": (_parse_float_list, (0.1, 0.05, 0.025),
                       lambda v: all(x > 0 for x in v)
                       and all(a > b for a, b in zip(v, v[1:])),
                       "descending fractional orders"),
    "nonres.fraction": (float, 0.5, lambda v: 0 < v < 1,
                        "slope interpolation fraction"),
    "nonres.eps": (float, 0.1, lambda v: v > 0, "perturbation size"),
    "nonres.kappa": (float, 1.0, None, "perturbation forcing"),
    "nonres.r": (_auto_or_float, None, lambda v: v is None or v >= 0,
                 "curve offset; auto = lam2 - lam1"),
    "nonres.margin": (float, 1.0, lambda v: v > 0, "endpoint margin"),
    "output.dir": (str, "out", None, "output directory"),
}


@dataclass(eq=True)
class RunConfig:
    """Validated configuration with defaults filled."""

    values: dict = field(default_factory=dict)

    def __getitem__(self, key: str):
        return self.values[key]

    def domain(self) -> Domain:
        return Domain(kind=self["domain.kind"], a=self["domain.a"],
                      b=self["domain.b"], radius=self["domain.radius"])

    def quadspec(self) -> QuadratureSpec:
        return QuadratureSpec(self["quad.gauss_order"],
                              self["quad.singular_subdivisions"],
                              self["quad.boundary_grading"])


def defaults() -> RunConfig:
    return RunConfig(values={k: spec[1] for k, spec in _SCHEMA.items()})


def parse_config(text: str) -> RunConfig:
    """Parse and validate; unknown keys, bad types and out-of-range values
    raise ConfigError with the offending line number."""
    cfg = defaults()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        if key not in _SCHEMA:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        parser, _, validator, desc = _SCHEMA[key]
        try:
            parsed = parser(val)
        except (TypeError, ValueError) as exc:
            raise ConfigError(
                f"line {lineno}: bad value for {key} ({desc}): {exc}") from None
        if validator is not None and not validator(parsed):
            raise ConfigError(
                f"line {lineno}: value {val!r} out of range for {key} ({desc})")
        cfg.values[key] = parsed
    return cfg


def emit_config(cfg: RunConfig) -> str:
    """Canonical text form: schema order, 12-significant-digit numbers."""
    lines = []
    for key in _SCHEMA:
        value = cfg.values[key]
        lines.append(f"{key} = {'auto' if value is None else _fmt(value)}")
    return "\n".join(lines) + "\n"


def config_hash(cfg: RunConfig) -> str:
    return hashlib.sha256(emit_config(cfg).encode()).hexdigest()[:12]


def apply_overrides(cfg: RunConfig, pairs) -> RunConfig:
    """Apply `key=value` strings (CLI --set) through the same validation."""
    text = "\n".join(pairs)
    merged = parse_config(text)
    out = RunConfig(values=dict(cfg.values))
    for pair in pairs:
        key = pair.partition("=")[0].strip()
        out.values[key] = merged.values[key]
    return out
