"""Run configuration: flat key = value sections, parsed and validated early.

The file format is INI-style with sections [problem], [operator], [solver],
[verify], [mms] and [output]; every key is optional except the problem
geometry.  Validation happens before any computation and reports the line
of the offending key where possible.
"""

from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, replace
from pathlib import Path

from .errors import ConfigurationError
from .grid import BoundaryDensities, GridSpec, build_reference_potential
from .hamiltonians import HamiltonianModel
from .vi_operator import OperatorConfig, default_q


@dataclass(frozen=True)
class RunConfig:
    """Validated run parameters; ``mode`` is supplied by the CLI verb."""

    T: float = 1.0
    Nt: int = 32
    Nx: int = 32
    hamiltonian: str = "quadratic"
    m0: str = "uniform"
    mT: str = "uniform"
    q: float | None = None
    eps_schedule: tuple = (0.5, 0.25, 0.1, 0.05, 0.02, 0.01)
    tol: float = 1e-7
    max_iter: int = 200_000
    seed: int = 0
    minty_samples: int = 20
    monotonicity_samples: int = 100
    sweep_samples: int = 1000
    mms_alpha: float = 0.1
    mms_levels: tuple = (16, 32, 64)
    out_dir: str = "out"
    write_fields: bool = True
    threads: int | None = None
    source_path: str | None = None


def parse_hamiltonian(text: str) -> HamiltonianModel:
    """Parse a Hamiltonian spec: ``quadratic`` or ``power-law(a)``."""
    text = text.strip().lower()
    if text == "quadratic":
        return HamiltonianModel.quadratic()
    m = re.match(r"^power-law\(([^)]+)\)$", text)
    if m:
        try:
            return HamiltonianModel.power_law(float(m.group(1)))
        except ValueError as exc:
            raise ConfigurationError(f"bad power-law exponent: {exc}") from None
    raise ConfigurationError(
        f"unknown hamiltonian {text!r}; expected 'quadratic' or 'power-law(a)'"
    )


def _line_of(text: str, section: str, key: str) -> int | None:
    in_section = False
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if stripped.startswith("[") and stripped.endswith("]"):
            in_section = stripped[1:-1].strip().lower() == section.lower()
        elif in_section and re.match(rf"^{re.escape(key)}\s*[=:]", stripped, re.IGNORECASE):
            return lineno
    return None


class _Located:
    """Reads raw config values and rethrows errors with file line numbers."""

    def __init__(self, parser: configparser.ConfigParser, text: str, path: str):
        self.parser = parser
        self.text = text
        self.path = path

    def get(self, section, key, cast, default):
        if not self.parser.has_option(section, key):
            return default
        raw = self.parser.get(section, key)
        try:
            return cast(raw)
        except (ValueError, ConfigurationError) as exc:
            line = _line_of(self.text, section, key)
            where = f"{self.path}:{line}" if line else self.path
            raise ConfigurationError(f"{where}: bad value for {section}.{key}: {exc}") from None


def _float_tuple(raw: str) -> tuple:
    parts = [p for p in re.split(r"[,\s]+", raw.strip()) if p]
    return tuple(float(p) for p in parts)


def _int_tuple(raw: str) -> tuple:
    parts = [p for p in re.split(r"[,\s]+", raw.strip()) if p]
    return tuple(int(p) for p in parts)


def _bool(raw: str) -> bool:
    lowered = raw.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {raw!r}")


def parse_run_config(path: str | Path) -> RunConfig:
    """Read and validate a run configuration file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from None
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text, source=str(path))
    except configparser.Error as exc:
        lineno = getattr(exc, "lineno", None)
        where = f"{path}:{lineno}" if lineno else str(path)
        raise ConfigurationError(f"{where}: {exc.message if hasattr(exc, 'message') else exc}") from None

    loc = _Located(parser, text, str(path))
    cfg = RunConfig(
        T=loc.get("problem", "t", float, 1.0),
        Nt=loc.get("problem", "nt", int, 32),
        Nx=loc.get("problem", "nx", int, 32),
        hamiltonian=loc.get("problem", "hamiltonian", str, "quadratic").strip(),
        m0=loc.get("problem", "m0", str, "uniform").strip(),
        mT=loc.get("problem", "mt", str, "uniform").strip(),
        q=loc.get("operator", "q", float, None),
        eps_schedule=loc.get("operator", "eps_schedule", _float_tuple,
                             RunConfig.eps_schedule),
        tol=loc.get("solver", "tol", float, 1e-7),
        max_iter=loc.get("solver", "max_iter", int, 200_000),
        seed=loc.get("verify", "seed", int, 0),
        minty_samples=loc.get("verify", "minty_samples", int, 20),
        monotonicity_samples=loc.get("verify", "monotonicity_samples", int, 100),
        sweep_samples=loc.get("verify", "sweep_samples", int, 1000),
        mms_alpha=loc.get("mms", "alpha", float, 0.1),
        mms_levels=loc.get("mms", "levels", _int_tuple, RunConfig.mms_levels),
        out_dir=loc.get("output", "dir", str, "out").strip(),
        write_fields=loc.get("output", "write_fields", _bool, True),
    )
    validate_run_config(cfg, path=str(path), text=text)
    return cfg


def validate_run_config(cfg: RunConfig, path: str = "<config>", text: str = "") -> None:
    """Static validation performed before any numerical work."""
    def fail(section, key, message):
        line = _line_of(text, section, key) if text else None
        where = f"{path}:{line}" if line else path
        raise ConfigurationError(f"{where}: {message}")

    if cfg.T <= 0:
        fail("problem", "t", f"horizon must be positive, got {cfg.T}")
    if cfg.Nt < 2 or cfg.Nx < 2:
        fail("problem", "nt", f"grid must be at least 2x2, got {cfg.Nt}x{cfg.Nx}")
    model = parse_hamiltonian(cfg.hamiltonian)
    if cfg.q is not None and cfg.q < model.l + 1.0:
        fail("operator", "q",
             f"q = {cfg.q} violates q >= l + 1 = {model.l + 1.0} for {cfg.hamiltonian}")
    if not cfg.eps_schedule:
        fail("operator", "eps_schedule", "schedule must be non-empty")
    if any(not (0.0 < e < 1.0) for e in cfg.eps_schedule):
        fail("operator", "eps_schedule", f"entries must lie in (0, 1): {cfg.eps_schedule}")
    if any(b >= a for a, b in zip(cfg.eps_schedule, cfg.eps_schedule[1:])):
        fail("operator", "eps_schedule", f"schedule must be strictly decreasing: {cfg.eps_schedule}")
    if cfg.tol <= 0:
        fail("solver", "tol", "tolerance must be positive")
    if cfg.max_iter < 1:
        fail("solver", "max_iter", "max_iter must be at least 1")
    for name, spec_text in (("m0", cfg.m0), ("mt", cfg.mT)):
        if spec_text.lower().startswith("csv:"):
            csv_path = Path(spec_text[4:].strip())
            if not csv_path.exists():
                fail("problem", name, f"density file not found: {csv_path}")


def build_problem(cfg: RunConfig):
    """Materialize model, grid, densities, reference potential and operator."""
    model = parse_hamiltonian(cfg.hamiltonian)
    spec = GridSpec(T=cfg.T, Nt=cfg.Nt, Nx=cfg.Nx)
    bd = BoundaryDensities.from_specs(spec, cfg.m0, cfg.mT)
    ref = build_reference_potential(spec, bd)
    q = cfg.q if cfg.q is not None else default_q(model)
    op = OperatorConfig(model=model, ref=ref, q=q, eps=cfg.eps_schedule[0])
    return model, spec, bd, ref, op


def with_overrides(cfg: RunConfig, **kwargs) -> RunConfig:
    return replace(cfg, **{k: v for k, v in kwargs.items() if v is not None})
