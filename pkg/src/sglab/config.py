"""INI experiment configuration: parsing, defaults and validation."""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field
from typing import Optional

from .errors import ConfigError, RegimeError
from .spectral import SHARP_MOLLIFIER, STANDARD_MOLLIFIER, DomainSpec
from .wick import Angle, DensityWeight, TestFunction

RHO_CATALOG = ("smooth_bump", "sine_window", "constant_on_support")
PSI_CATALOG = ("one", "xor_disk")
THETA_CATALOG = ("gaussian_bump", "zero")
DOMAIN_KINDS = ("unit_square", "rectangle", "unit_disk")
MOLLIFIERS = {"standard": STANDARD_MOLLIFIER, "sharp": SHARP_MOLLIFIER}
OUTPUT_ENV = "SGLAB_OUT"

# section -> key -> default (None marks a required key)
DEFAULTS = {
    "domain": {"kind": "unit_square", "width": "1.0", "height": "1.0"},
    "spectrum": {"modes": "64", "green_modes": "2000", "weyl_modes": "5000", "chaos_modes": "256"},
    "mollifier": {"eps": "0.2, 0.1, 0.05", "profile": "standard", "compare_profile": "sharp", "grid": "64",
                  "partition_grid": "32"},
    "model": {"alpha": "1.0", "beta": "1.0", "alphas": "", "betas": "", "wick_betas": "0.5, 1.0, 1.4"},
    "functions": {"rho": None, "rho_center": "", "rho_radius": "", "rho_file": "", "psi": "one", "psi_file": "",
                  "theta": "gaussian_bump", "theta_amplitude": "1.0", "theta_width": "0.15"},
    "monte_carlo": {"samples": "100000", "outer": "10000", "inner": "1000", "paths": "10000", "steps": "32",
                    "n_max": "4", "char_n_max": "3", "deltas": "0.4, 0.2, 0.1, 0.05", "bump": "1e-3"},
    "quadrature": {"green_pairs": "20", "xor_radial": "12", "xor_angular": "16"},
    "run": {"seed": "12345", "output": ""},
}


@dataclass
class ExperimentConfig:
    domain_kind: str
    width: float
    height: float
    modes: int
    green_modes: int
    weyl_modes: int
    chaos_modes: int
    eps: list
    profile: str
    compare_profile: str
    grid: int
    partition_grid: int
    alpha: float
    beta: float
    alphas: list
    betas: list
    wick_betas: list
    rho: str
    rho_center: Optional[tuple]
    rho_radius: Optional[float]
    rho_file: str
    psi: str
    psi_file: str
    theta: str
    theta_amplitude: float
    theta_width: float
    samples: int
    outer: int
    inner: int
    paths: int
    steps: int
    n_max: int
    char_n_max: int
    deltas: list
    bump: float
    green_pairs: int
    xor_radial: int
    xor_angular: int
    seed: int
    output: str
    source: str = ""
    defaults_used: list = field(default_factory=list)

    # -- builders ---------------------------------------------------------

    def domain(self) -> DomainSpec:
        if self.domain_kind == "unit_square":
            return DomainSpec.unit_square()
        if self.domain_kind == "rectangle":
            return DomainSpec.rectangle(self.width, self.height)
        return DomainSpec.unit_disk()

    def mollifier(self, which: str = "profile"):
        return MOLLIFIERS[getattr(self, which)]

    def rho_function(self) -> TestFunction:
        if self.rho_file:
            return TestFunction.from_csv(self.rho_file)
        dom = self.domain()
        center = self.rho_center if self.rho_center is not None else tuple(dom.center)
        if self.rho_radius is not None:
            radius = self.rho_radius
        else:
            x0, x1, y0, y1 = dom.bbox
            radius = 0.35 * min(x1 - x0, y1 - y0)
        if self.rho == "smooth_bump":
            return TestFunction.smooth_bump(center, radius)
        if self.rho == "sine_window":
            return TestFunction.sine_window(center, radius / 2**0.5)
        return TestFunction.constant_on_support(center, radius)

    def psi_function(self) -> Optional[DensityWeight]:
        if self.psi_file:
            return DensityWeight.from_csv(self.psi_file)
        if self.psi == "one":
            return None
        return DensityWeight.xor_disk()

    def theta_function(self) -> Angle:
        if self.theta == "zero":
            return Angle.zero()
        return Angle.gaussian_bump(self.theta_amplitude, self.rho_function().center, self.theta_width)

    def echo(self) -> dict:
        return {k: v for k, v in self.__dict__.items() if k not in ("defaults_used",)}


def _floats(text: str, where: str) -> list:
    try:
        return [float(t) for t in text.replace(";", ",").split(",") if t.strip()]
    except ValueError as exc:
        raise ConfigError(f"{where}: expected comma-separated numbers, got {text!r}") from exc


def _num(text: str, where: str, kind=float):
    try:
        v = float(text)
    except ValueError as exc:
        raise ConfigError(f"{where}: expected a number, got {text!r}") from exc
    if kind is int:
        if v != int(v):
            raise ConfigError(f"{where}: expected an integer, got {text!r}")
        return int(v)
    return v


def load_config(path, seed: Optional[int] = None, output: Optional[str] = None) -> ExperimentConfig:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    return parse_config(parser, str(path), seed, output)


def parse_config(parser: configparser.ConfigParser, source: str = "<memory>", seed=None, output=None) -> ExperimentConfig:
    for section in parser.sections():
        if section not in DEFAULTS:
            raise ConfigError(f"[{section}]: unknown section (known: {', '.join(DEFAULTS)})")
        for key in parser[section]:
            if key not in DEFAULTS[section]:
                raise ConfigError(f"[{section}] {key}: unknown key (known: {', '.join(DEFAULTS[section])})")
    raw, used = {}, []
    for section, keys in DEFAULTS.items():
        for key, default in keys.items():
            if parser.has_option(section, key):
                raw[key] = parser.get(section, key).strip()
            elif default is None:
                if key == "rho":
                    raise ConfigError(f"[functions] rho: missing selection; choose one of {', '.join(RHO_CATALOG)} "
                                      "or set rho_file")
                raise ConfigError(f"[{section}] {key}: required")
            else:
                raw[key] = default
                used.append(f"[{section}] {key} = {default}")

    cfg = {}
    cfg["domain_kind"] = raw["kind"]
    if cfg["domain_kind"] not in DOMAIN_KINDS:
        raise ConfigError(f"[domain] kind: {raw['kind']!r} not in {', '.join(DOMAIN_KINDS)}")
    for k in ("width", "height", "alpha", "beta", "theta_amplitude", "theta_width", "bump"):
        cfg[k] = _num(raw[k], _where(k))
    for k in ("modes", "green_modes", "weyl_modes", "chaos_modes", "grid", "partition_grid", "samples", "outer",
              "inner", "paths", "steps", "n_max", "char_n_max", "green_pairs", "xor_radial", "xor_angular", "seed"):
        cfg[k] = _num(raw[k], _where(k), int)
    for k in ("eps", "wick_betas", "deltas"):
        cfg[k] = _floats(raw[k], _where(k))
    cfg["alphas"] = _floats(raw["alphas"], _where("alphas")) or [cfg["alpha"]]
    cfg["betas"] = _floats(raw["betas"], _where("betas")) or [cfg["beta"]]
    for k in ("profile", "compare_profile"):
        if raw[k] not in MOLLIFIERS:
            raise ConfigError(f"{_where(k)}: {raw[k]!r} not in {', '.join(MOLLIFIERS)}")
        cfg[k] = raw[k]
    cfg["rho"], cfg["rho_file"] = raw["rho"], raw["rho_file"]
    if not cfg["rho_file"] and cfg["rho"] not in RHO_CATALOG:
        raise ConfigError(f"[functions] rho: {raw['rho']!r} not in catalog ({', '.join(RHO_CATALOG)})")
    c = _floats(raw["rho_center"], _where("rho_center"))
    if c and len(c) != 2:
        raise ConfigError("[functions] rho_center: expected two coordinates")
    cfg["rho_center"] = tuple(c) if c else None
    cfg["rho_radius"] = _num(raw["rho_radius"], _where("rho_radius")) if raw["rho_radius"] else None
    cfg["psi"], cfg["psi_file"] = raw["psi"], raw["psi_file"]
    if not cfg["psi_file"] and cfg["psi"] not in PSI_CATALOG:
        raise ConfigError(f"[functions] psi: {raw['psi']!r} not in catalog ({', '.join(PSI_CATALOG)})")
    cfg["theta"] = raw["theta"]
    if cfg["theta"] not in THETA_CATALOG:
        raise ConfigError(f"[functions] theta: {raw['theta']!r} not in catalog ({', '.join(THETA_CATALOG)})")
    cfg["output"] = raw["output"]
    if seed is not None:
        cfg["seed"] = int(seed)
    if output is not None:
        cfg["output"] = output
    if not cfg["output"]:
        cfg["output"] = os.environ.get(OUTPUT_ENV, "sglab-out")
    out = ExperimentConfig(**cfg, source=source, defaults_used=used)
    validate(out)
    return out


def validate(cfg: ExperimentConfig) -> None:
    """Raise a :class:`ConfigError` naming the first offending field."""
    for name, betas in (("[model] beta", [cfg.beta]), ("[model] betas", cfg.betas),
                        ("[model] wick_betas", cfg.wick_betas)):
        for b in betas:
            if not b**2 < 2:
                raise RegimeError(f"{name}: beta = {b:g} gives beta^2 = {b * b:g}; the finite-ultraviolet regime "
                                  "requires beta^2 < 2")
    if not cfg.eps:
        raise ConfigError("[mollifier] eps: empty list")
    if any(not (0 < e <= 1) for e in cfg.eps):
        raise ConfigError("[mollifier] eps: every value must lie in (0, 1]")
    if any(b >= a for a, b in zip(cfg.eps, cfg.eps[1:])):
        raise ConfigError("[mollifier] eps: list must be strictly decreasing")
    for k in ("modes", "green_modes", "weyl_modes", "chaos_modes", "grid", "partition_grid", "samples", "outer",
              "inner", "paths", "steps", "green_pairs", "xor_radial", "xor_angular"):
        if getattr(cfg, k) <= 0:
            raise ConfigError(f"{_where(k)}: must be positive")
    if cfg.samples < 2:
        raise ConfigError("[monte_carlo] samples: need at least 2")
    if not (0 <= cfg.n_max <= 4):
        raise ConfigError("[monte_carlo] n_max: must lie in 0..4 (tensor quadrature limit)")
    if not (0 <= cfg.char_n_max <= 4):
        raise ConfigError("[monte_carlo] char_n_max: must lie in 0..4")
    if cfg.width <= 0 or cfg.height <= 0:
        raise ConfigError("[domain] width/height: must be positive")
    if cfg.bump < 1e-8:
        raise ConfigError("[monte_carlo] bump: must be >= 1e-8")
    if any(d <= 0 for d in cfg.deltas):
        raise ConfigError("[monte_carlo] deltas: must be positive")
    if cfg.rho_radius is not None and cfg.rho_radius <= 0:
        raise ConfigError("[functions] rho_radius: must be positive")


def _where(key):
    for s, keys in DEFAULTS.items():
        if key in keys:
            return f"[{s}] {key}"
    return key


def validation_report(cfg: ExperimentConfig) -> str:
    lines = [f"ok: {cfg.source}", "effective defaults:"]
    lines += [f"  {d}" for d in cfg.defaults_used] or ["  (none)"]
    return "\n".join(lines)
