"""Run configuration: INI sections with JSON-valued matrices and tables.

Example::

    [sft]
    m = 2
    A = [[1, 1], [1, 1]]

    [potential]
    kind = kstep
    k = 1
    table = [0, 1]

    [metric]
    constant = -0.6931471805599453

    [run]
    alpha = 0.25
"""
from __future__ import annotations

import configparser
import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .geometry import PRESETS, SelfSimilarIFS, coding_potential
from .metric import WeakGibbsMetric
from .potential import KStepPotential, MatrixCocyclePotential, PotentialBundle
from .sft import SFT, build_sft


@dataclass
class RunConfig:
    digest: str
    sft: SFT | None = None
    ifs: SelfSimilarIFS | None = None
    potential: PotentialBundle | None = None
    metric: WeakGibbsMetric | None = None
    xi: KStepPotential | None = None
    xi_interval: bool = False
    params: dict = field(default_factory=dict)

    def param(self, key, default=None):
        return self.params.get(key, default)


def _json(section, key, default=None):
    if key not in section:
        if default is None:
            raise ConfigError(f"missing key {key!r} in [{section.name}]")
        return default
    try:
        return json.loads(section[key])
    except json.JSONDecodeError as exc:
        raise ConfigError(f"[{section.name}] {key}: {exc}") from None


def _kstep(section, sft: SFT, d_allowed: bool = False):
    if "constant" in section:
        return KStepPotential.constant(sft, float(section["constant"]))
    k = int(section.get("k", "1"))
    table = np.array(_json(section, "table"), dtype=float)
    if table.ndim == 2 and d_allowed:
        comps = []
        for row in table:
            if row.size != sft.m ** k:
                raise ConfigError(f"[{section.name}] each component needs {sft.m ** k} values")
            comps.append(KStepPotential(sft, k, row))
        return PotentialBundle(tuple(comps))
    if table.ndim != 1 or table.size != sft.m ** k:
        raise ConfigError(f"[{section.name}] table needs {sft.m ** k} values for k={k}")
    return KStepPotential(sft, k, table)


def _potential(section, sft: SFT):
    kind = section.get("kind", "kstep")
    if kind == "cocycle":
        try:
            return PotentialBundle((MatrixCocyclePotential(sft, _json(section, "matrices")),))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    if kind != "kstep":
        raise ConfigError(f"unknown potential kind {kind!r}")
    pot = _kstep(section, sft, d_allowed=True)
    return pot if isinstance(pot, PotentialBundle) else PotentialBundle((pot,))


def _ifs(section) -> SelfSimilarIFS:
    if "preset" in section:
        name = section["preset"].strip().lower()
        if name not in PRESETS:
            raise ConfigError(f"unknown IFS preset {name!r}; known: {sorted(PRESETS)}")
        return PRESETS[name]()
    sosc = section.getboolean("sosc", fallback=True)
    try:
        return SelfSimilarIFS(np.array(_json(section, "ratios"), dtype=float),
                              np.array(_json(section, "offsets"), dtype=float), sosc_asserted=sosc)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def parse_config(text: str) -> RunConfig:
    parser = configparser.ConfigParser()
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"unreadable config: {exc}") from None
    digest = hashlib.sha256(text.encode()).hexdigest()
    has_sft, has_ifs = parser.has_section("sft"), parser.has_section("ifs")
    if has_sft == has_ifs:
        raise ConfigError("exactly one of [sft] and [ifs] is required")
    cfg = RunConfig(digest)
    if parser.has_section("run"):
        cfg.params = {k: _json(parser["run"], k) for k in parser["run"]}
    try:
        if has_sft:
            sec = parser["sft"]
            A = _json(sec, "A")
            m = int(sec.get("m", str(len(A))))
            cfg.sft = build_sft(m, A, p_cap=int(sec["p_cap"]) if "p_cap" in sec else None)
            if parser.has_section("potential"):
                cfg.potential = _potential(parser["potential"], cfg.sft)
            if parser.has_section("metric"):
                psi = _kstep(parser["metric"], cfg.sft) if parser["metric"].get("kind", "kstep") == "kstep" \
                    else _potential(parser["metric"], cfg.sft).components[0]
                cfg.metric = WeakGibbsMetric(psi)
        else:
            cfg.ifs = _ifs(parser["ifs"])
            cfg.sft = cfg.ifs.sft
            psi, bundle, _ = coding_potential(cfg.ifs, int(cfg.params.get("k", 8)))
            cfg.metric = WeakGibbsMetric(psi)
            cfg.potential = _potential(parser["potential"], cfg.sft) if parser.has_section("potential") else bundle
        if parser.has_section("xi"):
            cfg.xi = _kstep(parser["xi"], cfg.sft)
            cfg.xi_interval = parser["xi"].getboolean("interval", fallback=False)
    except (ValueError, TypeError, KeyError) as exc:
        raise ConfigError(str(exc)) from None
    return cfg


def load_config(path: str) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_config(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
