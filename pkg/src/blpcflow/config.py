"""Flat run configuration and the `key = value` config-file parser."""

from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path

from .bilateral import BilateralParams
from .errors import ConfigError
from .framework import FrameworkConfig


@dataclass
class RunConfig:
    """Every tunable of the pipeline as one flat document.

    ``sigma_s1``/``sigma_s2``/``densify_sigma_s``/``t_r`` default to
    None, meaning "derive from m_w / s_u at run time".
    """

    method: str = "auto"            # pc | blpc | auto
    m_w: int = 32
    alpha: float = 2.0
    s_u: int = 16
    t_p: int = 2000
    m_min: int = 640
    n_min: int = 360
    t_r: float | None = None
    sigma_s1: float | None = None
    sigma_s2: float | None = None
    sigma_r: float = 30.0
    slice_m: int = 3
    lk_window: int = 15
    lambda_min: float = 1e-4
    densify_sigma_s: float | None = None
    densify_sigma_r: float = 25.0
    densify_k: int = 16
    threads: int = 1
    psnr_per_image_max: bool = False

    def framework_config(self) -> FrameworkConfig:
        return FrameworkConfig(
            alpha=self.alpha,
            s_u=self.s_u,
            t_p=self.t_p,
            m_w=self.m_w,
            m_min=self.m_min,
            n_min=self.n_min,
            sigma_r=self.sigma_r,
            slice_m=self.slice_m,
            t_r=self.t_r,
            method=self.method,
            lk_window=self.lk_window,
            lambda_min=self.lambda_min,
            densify_sigma_s=self.densify_sigma_s,
            densify_sigma_r=self.densify_sigma_r,
            densify_k=self.densify_k,
            threads=self.threads,
        )

    def bilateral_params(self) -> BilateralParams:
        s1 = self.sigma_s1 if self.sigma_s1 is not None else self.m_w / 8.0
        s2 = self.sigma_s2 if self.sigma_s2 is not None else self.m_w / 2.0
        return BilateralParams(s1, s2, self.sigma_r, self.slice_m)


_BOOL_WORDS = {"true": True, "1": True, "yes": True, "false": False, "0": False, "no": False}


def _coerce(name: str, raw: str, annotation: str):
    raw = raw.strip()
    if raw.lower() == "none":
        return None
    if "bool" in annotation:
        if raw.lower() not in _BOOL_WORDS:
            raise ConfigError(f"cannot parse boolean {name} = {raw!r}")
        return _BOOL_WORDS[raw.lower()]
    if "int" in annotation and "float" not in annotation:
        try:
            return int(raw)
        except ValueError as exc:
            raise ConfigError(f"cannot parse integer {name} = {raw!r}") from exc
    if "float" in annotation:
        try:
            return float(raw)
        except ValueError as exc:
            raise ConfigError(f"cannot parse number {name} = {raw!r}") from exc
    return raw


def parse_config_file(path: str | Path, base: RunConfig | None = None) -> RunConfig:
    """Parse `key = value` lines (# comments); unknown keys are rejected."""
    cfg = base or RunConfig()
    by_name = {f.name: f for f in fields(RunConfig)}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected key = value, got {line!r}")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        if key not in by_name:
            raise ConfigError(f"{path}:{lineno}: unknown configuration key {key!r}")
        setattr(cfg, key, _coerce(key, raw, str(by_name[key].type)))
    if cfg.method not in ("pc", "blpc", "auto"):
        raise ConfigError(f"method must be pc, blpc or auto, got {cfg.method!r}")
    return cfg


def format_config(cfg: RunConfig) -> str:
    lines = []
    for f in fields(RunConfig):
        v = getattr(cfg, f.name)
        lines.append(f"{f.name} = {'none' if v is None else v}")
    return "\n".join(lines) + "\n"
