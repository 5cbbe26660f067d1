"""Run a parsed experiment and write CSV, summary and manifest files."""
from __future__ import annotations

import hashlib
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import (BoundParams, discover_d0, kolmogorov_evaluator, kolmogorov_lower,
                     phase_threshold, summability_diagnostic, tprime_tail_sandwich)
from .config import ConfigError, ExperimentConfig, build_growth
from .distributions import Gaussian, LogPerturbedPareto
from .field import BudgetError, cell_budget, window_rect, windowed_statistic
from .limsup import sup_quantile, surrogate_limsup
from .moments import Moment, classify_moment, closed_form_M, equivalence_check, sublevel_measure
from .normalizers import Regime
from .series import Verdict
from .subsequences import (DisjointnessError, PowerGrid, SqrtExp, block_variance_bounds, coupled_c,
                           disjointness_threshold, gap_report)

__all__ = ["RunResult", "run", "write_outputs", "SCHEMA_VERSION"]

SCHEMA_VERSION = 1


@dataclass
class RunResult:
    kind: str
    columns: list
    rows: list
    summary: dict
    checks: dict = field(default_factory=dict)   # name -> (passed, hard)

    @property
    def failed_hard(self) -> list:
        return [k for k, (ok, hard) in self.checks.items() if hard and not ok]


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _jsonable(o):
    if isinstance(o, dict):
        return {str(k): _jsonable(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_jsonable(v) for v in o]
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating, float)):
        f = float(o)
        return f if math.isfinite(f) else repr(f)
    if isinstance(o, (np.bool_,)):
        return bool(o)
    return o


def _run_simulate(cfg: ExperimentConfig, threads: int) -> RunResult:
    law, dist = cfg.law, cfg.distribution
    eps, delta = float(cfg.get("eps")), float(cfg.get("delta"))
    ms = [int(v) for v in cfg.grid("m")]
    ns = [int(v) for v in cfg.grid("n", ms)]
    if len(ns) != len(ms):
        raise ConfigError("grid.n must match grid.m in length")
    reps = int(cfg.get("replicates"))
    for m, n in zip(ms, ns):
        cells = window_rect(law, m, n).cells
        if cells > cell_budget():
            raise BudgetError(f"window at ({m}, {n}) has {cells} cells, over the budget of {cell_budget()}")
    rows, summary, checks = [], {"windows": []}, {}
    additive = True
    for m, n in zip(ms, ns):
        rect = window_rect(law, m, n)

        def unit(r, m=m, n=n):
            return windowed_statistic(law, m, n, dist, cfg.seed, eps, delta, replicate=r)

        with ThreadPoolExecutor(max_workers=threads) as ex:
            stats = list(ex.map(unit, range(reps)))
        T = np.array([s.T for s in stats])
        for r, s in enumerate(stats):
            rows.append((m, n, r, s.T, s.Tp, s.Tpp, s.Tppp, s.normalized))
            additive &= s.T == s.Tp + s.Tpp + s.Tppp
        summary["windows"].append({
            "m": m, "n": n, "cells": rect.cells,
            "var_T_over_cells": float(np.var(T, ddof=1) / rect.cells) if reps > 1 else None,
            "mean_T_over_sqrt_cells": float(T.mean() / math.sqrt(rect.cells)) if reps else None,
            "max_normalized": float(max((s.normalized for s in stats), default=float("nan"))),
        })
    checks["additivity"] = (bool(additive), True)
    return RunResult("simulate", ["m", "n", "replicate", "T", "T_prime", "T_dprime", "T_tprime", "normalized"],
                     rows, summary, checks)


def _run_surrogate(cfg: ExperimentConfig, threads: int) -> RunResult:
    K = int(cfg.grid("K"))
    burn = float(cfg.get("burn_in"))
    tr = surrogate_limsup(cfg.law, cfg.family, K, cfg.seed, burn, threads)
    idx = tr.changes()
    rows = [(int(tr.i[k]), int(tr.j[k]), float(tr.m[k]), float(tr.n[k]), float(tr.statistic[k]),
             float(tr.running_max[k])) for k in idx]
    qs = {f"q{int(q * 1000):04d}": sup_quantile(cfg.law, cfg.family, K, q, burn) for q in (0.05, 0.5, 0.95)}
    summary = {"final_running_max": tr.final, "argmax": list(tr.argmax), "entries": len(tr),
               "exact_sup_quantiles": qs, "lsl_constant": cfg.law.sigma}
    monotone = bool(np.all(np.diff(tr.running_max) >= 0))
    checks = {"running_max_monotone": (monotone, True),
              "final_within_exact_90pct": (qs["q0050"] <= tr.final <= qs["q0950"], False)}
    return RunResult("surrogate-limsup", ["i", "j", "m_i", "n_j", "statistic", "running_max"], rows, summary, checks)


def _run_moments(cfg: ExperimentConfig, threads: int) -> RunResult:
    dist = cfg.distribution
    alpha = float(cfg.get("alpha", 0.5))
    horizon = int(cfg.grid("horizon", 8))
    n0 = int(cfg.grid("n0", 256))
    rows, summary, checks = [], {"cases": []}, {}
    for case in cfg.get("cases"):
        G = build_growth(int(case), alpha)
        rep = equivalence_check(dist, G, horizon=horizon, n0=n0)
        for k, h in enumerate(rep.horizons):
            rows.append((case, h, rep.lattice.partial_sums[k], rep.integral.partial_sums[k],
                         rep.expectation.partial_sums[k]))
        entry = {"case": case, "verdicts": [v.value for v in rep.verdicts],
                 "slopes": [rep.lattice.slope, rep.integral.slope, rep.expectation.slope]}
        checks[f"case{case}_routes_agree"] = (rep.agree, True)
        if isinstance(dist, LogPerturbedPareto) and case in (1, 2, 3, 4):
            try:
                cls = classify_moment(dist, int(case), alpha if case == 4 else None)
            except ValueError as e:
                entry["classifier"] = f"n/a: {e}"
            else:
                entry["classifier"] = cls.value
                if rep.agree and rep.verdict is not Verdict.BOUNDARY:
                    want = Verdict.CONVERGENT if cls is Moment.FINITE else Verdict.DIVERGENT
                    checks[f"case{case}_classifier_agrees"] = (rep.verdict is want, True)
        summary["cases"].append(entry)
    return RunResult("moments", ["case", "log_horizon", "lattice_sum", "double_integral", "expected_M"],
                     rows, summary, checks)


def _run_bounds(cfg: ExperimentConfig, threads: int) -> RunResult:
    law = cfg.law
    sigma = law.sigma
    p = BoundParams(eps=float(cfg.get("eps")), delta=float(cfg.get("delta")),
                    gamma_slack=float(cfg.get("gamma_slack")), sigma=sigma)
    p1 = BoundParams(eps=1.0, delta=p.delta, gamma_slack=p.gamma_slack, sigma=sigma)
    d0, table = discover_d0(law, p1)
    rows = [(m, d, ex, up, float(kolmogorov_lower(p1, d))) for m, d, ex, up in table]
    checks = {"d0_found": (d0 is not None, True),
              "lower_le_upper": (all(r[4] <= r[3] * (1 + 1e-12) for r in rows), True)}
    summary = {"d0": d0, "sandwich": []}
    reps = int(cfg.get("replicates"))
    for m in cfg.grid("m"):
        m = int(m)
        rep = tprime_tail_sandwich(law, m, m, p, Gaussian(sigma), mc_replicates=reps, seed=cfg.seed or 0)
        summary["sandwich"].append({k: getattr(rep, k) for k in
                                    ("m", "n", "d", "exact", "upper", "lower", "status", "truncated_mass",
                                     "mc_estimate", "mc_se", "mc_replicates")})
        if reps:
            checks[f"mc_within_3se_m{m}"] = (bool(rep.mc_ok), True)
    sm = cfg.get("summability")
    if sm and law.regime in (Regime.LOG, Regime.LOG_LOGLOG, Regime.LOGLOG):
        dl = float(sm.get("delta", 0.05))
        thr = phase_threshold(sigma, dl)
        fam = SqrtExp(float(sm.get("c", 1.0)))
        res = {}
        for f in sm.get("factors", [0.8, 1.2]):
            v = summability_diagnostic(kolmogorov_evaluator(law, fam, BoundParams(eps=f * thr, delta=dl, sigma=sigma)),
                                       i0=fam.i0, k_max=int(sm.get("k_max", 12)))
            res[str(f)] = {"verdict": v.verdict.value, "slope": v.slope}
            if law.regime is Regime.LOG and f != 1.0:
                want = Verdict.CONVERGENT if f > 1 else Verdict.DIVERGENT
                checks[f"summability_{f}"] = (v.verdict is want, True)
        summary["summability"] = {"threshold": thr, "results": res}
    return RunResult("bounds", ["m", "d", "exact_tail", "upper", "lower"], rows, summary, checks)


def _coupled_family(fam, law, eta):
    """Same family kind with c tied to eta, as used by the gap inequalities."""
    c = coupled_c(law.regime, eta, getattr(law.axis1, "alpha", None))
    if isinstance(fam, PowerGrid):
        return PowerGrid(c, fam.alpha)
    return type(fam)(c)


def _run_subseq(cfg: ExperimentConfig, threads: int) -> RunResult:
    law, fam = cfg.law, cfg.family
    eta = float(cfg.get("eta"))
    i_max = int(cfg.grid("i_max"))
    gfam = _coupled_family(fam, law, eta)
    rep = gap_report(gfam, law.axis1, eta, (gfam.i0, i_max), law.axis2)
    checks = {"gap_thresholds_found": (rep.threshold is not None, True),
              "gap_no_later_violations": (not any(rep.violations.values()), True)}
    summary = {"gap": {"family": repr(gfam), "system": rep.system, "bounds": rep.bounds, "thresholds": rep.thresholds,
                       "violations": rep.violations}}
    try:
        dth = disjointness_threshold(fam, law.axis1, int(cfg.grid("disjoint_i_max")))
        summary["disjointness_threshold"] = dth
        checks["disjointness"] = (True, not cfg.flags)
    except DisjointnessError as e:
        summary["disjointness_threshold"] = None
        summary["disjointness_error"] = str(e)
        checks["disjointness"] = (False, not cfg.flags)
    rows = []
    start = rep.threshold if rep.threshold is not None else gfam.i0
    for i in np.unique(np.round(np.geomspace(start, i_max, 25)).astype(int)):
        v = block_variance_bounds(law, gfam, eta, int(i), int(i))
        rows.append((int(i), *(v.ratios[k] for k in ("inner", "stretch1", "stretch2", "both")), v.ok))
    checks["variance_bounds"] = (all(r[-1] for r in rows), rep.threshold is not None)
    return RunResult("subseq", ["i", "var_inner", "var_stretch1", "var_stretch2", "var_both", "within_bounds"],
                     rows, summary, checks)


def _run_appendix(cfg: ExperimentConfig, threads: int) -> RunResult:
    alpha = float(cfg.get("alpha"))
    xs = [float(x) for x in cfg.grid("x")]
    lower = float(cfg.grid("lower", 1.0))
    tol = cfg.get("tolerances")
    rows, summary, checks = [], {"lower": lower, "cases": []}, {}
    for case in cfg.get("cases"):
        G = build_growth(int(case), alpha)

        def unit(x, G=G, case=case):
            num = sublevel_measure(G, x, float(tol["rel_tol"]), lower=lower)
            cf = closed_form_M(int(case), x, alpha=alpha)
            return (case, x, num, cf, num / cf)

        with ThreadPoolExecutor(max_workers=threads) as ex:
            part = list(ex.map(unit, xs))
        rows.extend(part)
        r = [row[4] for row in part]
        width = max(r) / min(r)
        drift = max((abs(r[k + 1] / r[k] - 1) for k in range(len(r) - 1)), default=0.0)
        summary["cases"].append({"case": case, "ratios": r, "band_width": width, "max_drift": drift})
        checks[f"case{case}_band"] = (width <= float(tol["band"]), True)
        checks[f"case{case}_drift"] = (drift < float(tol["drift"]), True)
    return RunResult("verify-appendix", ["case", "x", "numeric_M", "closed_form", "ratio"], rows, summary, checks)


RUNNERS = {"simulate": _run_simulate, "surrogate-limsup": _run_surrogate, "moments": _run_moments,
           "bounds": _run_bounds, "subseq": _run_subseq, "verify-appendix": _run_appendix}


def run(cfg: ExperimentConfig, threads: int = 1) -> RunResult:
    needs_seed = cfg.kind in ("simulate", "surrogate-limsup") or (cfg.kind == "bounds" and int(cfg.get("replicates", 0)))
    if needs_seed and cfg.seed is None:
        raise ConfigError(f"a seed is required for {cfg.kind!r}")
    res = RUNNERS[cfg.kind](cfg, max(1, int(threads)))
    res.summary["flags"] = list(cfg.flags)
    return res


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_outputs(res: RunResult, cfg: ExperimentConfig, out_dir, wall_clock: float) -> dict:
    """Write results.csv, summary.json and manifest.json; returns the manifest."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "results.csv"
    lines = [f"# schema: lsl-lab/{res.kind}/v{SCHEMA_VERSION}", ",".join(res.columns)]
    lines += [",".join(_fmt(v) for v in row) for row in res.rows]
    csv_path.write_text("\n".join(lines) + "\n")
    checks = {k: {"passed": bool(ok), "hard": bool(hard)} for k, (ok, hard) in sorted(res.checks.items())}
    summary = {"kind": res.kind, "seed": cfg.seed, "config": cfg.raw, "checks": checks, **res.summary}
    sum_path = out / "summary.json"
    sum_path.write_text(json.dumps(_jsonable(summary), indent=2, sort_keys=True) + "\n")
    manifest = {"artifact_version": __version__, "config": cfg.raw, "seed": cfg.seed,
                "wall_clock_seconds": wall_clock, "checks": checks,
                "digests": {p.name: _sha256(p) for p in (csv_path, sum_path)},
                "exit_status": 1 if res.failed_hard else 0}
    (out / "manifest.json").write_text(json.dumps(_jsonable(manifest), indent=2, sort_keys=True) + "\n")
    return manifest


def timed_run(cfg: ExperimentConfig, out_dir, threads: int = 1):
    t0 = time.perf_counter()
    res = run(cfg, threads)
    manifest = write_outputs(res, cfg, out_dir, time.perf_counter() - t0)
    return res, manifest
