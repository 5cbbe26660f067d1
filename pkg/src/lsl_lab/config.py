"""Experiment configuration: JSON documents validated into typed objects."""
from __future__ import annotations

import copy
import json
import math
import warnings
from dataclasses import dataclass, field

from .distributions import Gaussian, LogPerturbedPareto, Rademacher, StudentT, Uniform
from .moments import G1, G2, G3, G4, G5
from .normalizers import GeneralSV, LogFraction, LogLogFraction, Power, Regime, WindowLaw
from .subsequences import OverLog, PowerGrid, SqrtExp

__all__ = ["KINDS", "ConfigError", "RegimeWarning", "ExperimentConfig", "parse_config",
           "build_law", "build_distribution", "build_family", "build_growth", "DEFAULTS"]

KINDS = ("simulate", "surrogate-limsup", "moments", "bounds", "subseq", "verify-appendix")
STOCHASTIC = {"simulate", "surrogate-limsup", "bounds"}


class ConfigError(ValueError):
    pass


class RegimeWarning(UserWarning):
    pass


DEFAULTS = {
    "simulate": {"law": {"case": "i"}, "distribution": {"kind": "gaussian"},
                 "grid": {"m": [100, 1000]}, "replicates": 200, "eps": 1.0, "delta": 0.1},
    "surrogate-limsup": {"law": {"case": "i"}, "family": {"kind": "sqrtexp", "c": 0.25},
                         "grid": {"K": 2000}, "burn_in": 0.25},
    "moments": {"distribution": {"kind": "pareto", "beta": 2.0, "gamma": 4.5}, "cases": [1],
                "grid": {"horizon": 8}},
    "bounds": {"law": {"case": "i"}, "grid": {"m": [200]}, "eps": 0.25, "delta": 0.1,
               "gamma_slack": 0.1, "replicates": 0, "summability": {"factors": [0.8, 1.2], "delta": 0.05}},
    "subseq": {"law": {"case": "i"}, "family": {"kind": "sqrtexp", "c": 3.0}, "eta": 0.2,
               "grid": {"i_max": 100000, "disjoint_i_max": 1000000}},
    "verify-appendix": {"cases": [1, 2, 3, 4], "grid": {"x": [1e4, 1e6, 1e8, 1e10, 1e12], "lower": 1.0},
                        "alpha": 0.5, "tolerances": {"rel_tol": 1e-3, "band": 10.0, "drift": 0.25}},
}

TOP_KEYS = {"kind", "law", "distribution", "family", "seed", "replicates", "grid", "eps", "delta",
            "eta", "gamma_slack", "tolerances", "output", "cases", "alpha", "burn_in", "summability"}
SUB_KEYS = {
    "law": {"case", "axis1", "axis2", "sigma", "alpha"},
    "axis": {"rule", "alpha", "p", "q"},
    "distribution": {"kind", "sigma", "nu", "beta", "gamma", "dlt"},
    "family": {"kind", "c", "alpha"},
    "grid": {"m", "n", "K", "i_max", "disjoint_i_max", "x", "lower", "horizon", "n0"},
    "tolerances": {"rel_tol", "band", "drift"},
    "summability": {"factors", "delta", "c", "k_max"},
}


def _check_keys(d: dict, allowed: set, where: str):
    if not isinstance(d, dict):
        raise ConfigError(f"{where} must be an object")
    extra = set(d) - allowed
    if extra:
        raise ConfigError(f"unknown key(s) {sorted(extra)} in {where}; accepted keys: {sorted(allowed)}")


def _alpha(v, where):
    if v is None or not (0.0 < float(v) < 1.0):
        raise ConfigError(f"{where}: alpha must lie in the open interval (0, 1), got {v}")
    return float(v)


def _axis(spec: dict, where: str):
    _check_keys(spec, SUB_KEYS["axis"], where)
    rule = spec.get("rule")
    if rule == "power":
        return Power(_alpha(spec.get("alpha"), where))
    if rule == "log":
        return LogFraction()
    if rule == "loglog":
        return LogLogFraction()
    if rule == "general":
        return GeneralSV(float(spec.get("p", 1.0)), float(spec.get("q", 0.0)))
    raise ConfigError(f"{where}: rule must be one of power, log, loglog, general")


def build_law(spec: dict) -> WindowLaw:
    _check_keys(spec, SUB_KEYS["law"], "law")
    sigma = float(spec.get("sigma", 1.0))
    if not sigma > 0:
        raise ConfigError("law.sigma must be positive")
    case = spec.get("case")
    try:
        if case is not None:
            if "axis1" in spec or "axis2" in spec:
                raise ConfigError("law: give either case or axis1/axis2, not both")
            axes = {"i": (LogFraction(), LogFraction()), "ii": (LogLogFraction(), LogLogFraction()),
                    "iii": (LogFraction(), LogLogFraction())}
            if case == "mixed":
                return WindowLaw(Power(_alpha(spec.get("alpha"), "law")), LogFraction(), sigma)
            if case not in axes:
                raise ConfigError("law.case must be one of i, ii, iii, mixed")
            return WindowLaw(*axes[case], sigma)
        return WindowLaw(_axis(spec.get("axis1", {}), "law.axis1"), _axis(spec.get("axis2", {}), "law.axis2"), sigma)
    except ConfigError:
        raise
    except ValueError as e:
        raise ConfigError(f"law: {e}") from e


def build_distribution(spec: dict):
    _check_keys(spec, SUB_KEYS["distribution"], "distribution")
    kind = spec.get("kind")
    try:
        if kind == "gaussian":
            return Gaussian(float(spec.get("sigma", 1.0)))
        if kind == "rademacher":
            return Rademacher()
        if kind == "uniform":
            return Uniform(float(spec.get("sigma", 1.0)))
        if kind == "student_t":
            return StudentT(float(spec["nu"]))
        if kind == "pareto":
            return LogPerturbedPareto(float(spec["beta"]), float(spec.get("gamma", 0.0)), float(spec.get("dlt", 0.0)))
    except KeyError as e:
        raise ConfigError(f"distribution: missing parameter {e}") from e
    except ValueError as e:
        raise ConfigError(f"distribution: {e}") from e
    raise ConfigError("distribution.kind must be one of gaussian, rademacher, uniform, student_t, pareto")


def build_family(spec: dict):
    _check_keys(spec, SUB_KEYS["family"], "family")
    kind = spec.get("kind")
    c = spec.get("c")
    if c is None or not float(c) > 0:
        raise ConfigError("family.c must be positive")
    c = float(c)
    if kind == "sqrtexp":
        return SqrtExp(c)
    if kind == "overlog":
        return OverLog(c)
    if kind == "powergrid":
        return PowerGrid(c, _alpha(spec.get("alpha"), "family"))
    raise ConfigError("family.kind must be one of sqrtexp, overlog, powergrid")


def build_growth(case: int, alpha: float = 0.5):
    table = {1: G1(), 2: G2(), 3: G3(), 4: G4(alpha), 5: G5(LogFraction(), LogFraction())}
    if case not in table:
        raise ConfigError(f"unknown case {case}")
    return table[case]


@dataclass
class ExperimentConfig:
    kind: str
    raw: dict
    law: WindowLaw | None = None
    distribution: object = None
    family: object = None
    seed: int | None = None
    flags: list = field(default_factory=list)

    def get(self, key, default=None):
        return self.raw.get(key, default)

    def grid(self, key, default=None):
        return self.raw.get("grid", {}).get(key, default)


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict) and k not in ("law", "distribution", "family"):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _regime_flags(cfg: ExperimentConfig) -> list:
    flags = []
    fam = cfg.family
    if cfg.kind == "subseq" and fam is not None and cfg.law is not None:
        reg = cfg.law.regime
        need = None
        if isinstance(fam, SqrtExp) and reg in (Regime.LOG, Regime.LOG_LOGLOG) and fam.c <= 2:
            need = "c > 2"
        elif isinstance(fam, OverLog) and reg is Regime.LOGLOG and fam.c <= 1:
            need = "c > 1"
        elif isinstance(fam, PowerGrid) and reg is Regime.POWER_LOG and fam.c <= 1:
            need = "c > 1"
        if need:
            flags.append(f"disjointness construction needs {need}; got c={fam.c:g}")
    dist = cfg.distribution
    if cfg.kind == "simulate" and dist is not None and not math.isfinite(dist.variance):
        flags.append("summand variance is infinite; the normalization has no finite limit")
    return flags


def parse_config(text: str | dict, kind: str | None = None) -> ExperimentConfig:
    """Parse a JSON document (or dict) into a validated config with defaults filled."""
    if isinstance(text, dict):
        doc = copy.deepcopy(text)
    else:
        try:
            doc = json.loads(text) if text.strip() else {}
        except json.JSONDecodeError as e:
            raise ConfigError(f"malformed config: {e}") from e
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    _check_keys(doc, TOP_KEYS, "config")
    k = doc.get("kind", kind)
    if kind is not None and doc.get("kind") not in (None, kind):
        raise ConfigError(f"config kind {doc.get('kind')!r} does not match subcommand {kind!r}")
    if k not in KINDS:
        raise ConfigError(f"kind must be one of {list(KINDS)}")
    for sub in ("grid", "tolerances", "summability"):
        if sub in doc:
            _check_keys(doc[sub], SUB_KEYS[sub], sub)
    doc = _merge(DEFAULTS[k], doc)
    doc["kind"] = k
    cfg = ExperimentConfig(kind=k, raw=doc)
    if "law" in doc:
        cfg.law = build_law(doc["law"])
    if "distribution" in doc:
        cfg.distribution = build_distribution(doc["distribution"])
    if "family" in doc:
        cfg.family = build_family(doc["family"])
    if "alpha" in doc:
        _alpha(doc["alpha"], "alpha")
    for key in ("eps", "eta", "burn_in"):
        if key in doc and not float(doc[key]) > 0:
            raise ConfigError(f"{key} must be positive")
    if "delta" in doc and not 0 < float(doc["delta"]) < 1:
        raise ConfigError("delta must lie in (0, 1)")
    for key, v in doc.get("tolerances", {}).items():
        if not float(v) > 0:
            raise ConfigError(f"tolerances.{key} must be positive")
    if "replicates" in doc and int(doc["replicates"]) < 0:
        raise ConfigError("replicates must be nonnegative")
    if "seed" in doc:
        seed = int(doc["seed"])
        if not 0 <= seed < 2 ** 64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        cfg.seed = seed
    cfg.flags = _regime_flags(cfg)
    for f in cfg.flags:
        warnings.warn(f, RegimeWarning, stacklevel=2)
    return cfg


def require_seed(cfg: ExperimentConfig):
    if cfg.kind in STOCHASTIC and cfg.seed is None:
        raise ConfigError(f"a seed is required for the stochastic kind {cfg.kind!r}")
