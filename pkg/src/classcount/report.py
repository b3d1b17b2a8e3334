"""Analysis orchestration and report rendering.

``analyze`` runs the full pipeline (moment bounds, classical functionals,
NPMLE, plug-in counts, envelope limit, optional bootstrap) and returns an
AnalysisReport whose dict form is the single source of truth: the JSON
output and the human-readable table are both rendered from it, and the
echoed config suffices to reproduce the report bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import __version__
from .backend import backend_name
from .classical import EstimateSet, estimate_set, estimate_set_from_mixture
from .envelope import EnvelopeConfig, lower_confidence_limit
from .hankel import DEFAULT_K_CAP, LadderTruncationError, ladder, ladder_from_moments, model_moments
from .ingest import FrequencyData
from .montecarlo import RNG_DESCRIPTION, bootstrap_quantiles, default_estimators
from .npmle import NpmleConfig, fit_npmle, odds

__all__ = ["AnalysisOptions", "AnalysisReport", "analyze", "render_table"]


@dataclass(frozen=True)
class AnalysisOptions:
    """Everything that can change an analyze run, echoed into the report."""

    k_cap: int = DEFAULT_K_CAP
    alpha: float = 0.05
    bootstrap: int = 0
    alpha_q: float = 0.05
    seed: int = 0
    threads: int = 1
    unconditional: bool = False
    run_envelope: bool = True
    envelope: EnvelopeConfig = field(default_factory=EnvelopeConfig)
    npmle: NpmleConfig = field(default_factory=NpmleConfig)


@dataclass(frozen=True)
class AnalysisReport:
    data: dict[str, Any]
    degraded: bool

    def to_dict(self) -> dict[str, Any]:
        return self.data


def _estimates_dict(est: EstimateSet) -> dict[str, Any]:
    return {
        "odds_dr": est.theta_dr,
        "odds_cl": est.theta_cl,
        "odds_cb": est.theta_cb,
        "ladder": list(est.theta_ladder),
        "c_hats": dict(est.c_hats),
        "notes": list(est.notes),
    }


def analyze(
    d: FrequencyData, options: AnalysisOptions | None = None, source: str = "<data>"
) -> AnalysisReport:
    """Full analysis of one dataset; collects failures as diagnostics."""
    opt = options or AnalysisOptions()
    diagnostics: list[str] = []
    degraded = False

    empirical = estimate_set(d, opt.k_cap)
    emp_ladder = ladder(d, opt.k_cap)
    if emp_ladder.chi_hat == 0:
        diagnostics.append("no usable moment bound (support rank 0)")
        degraded = True
    diagnostics.extend(f"empirical: {note}" for note in empirical.notes)

    fit = fit_npmle(d, opt.npmle)
    if not fit.converged:
        diagnostics.append(
            f"NPMLE not converged: sup gradient {fit.sup_gradient:.3e} after "
            f"{fit.outer_iterations} refinement rounds"
        )
        degraded = True
    q_hat = fit.mixture
    model = estimate_set_from_mixture(q_hat, d.n, opt.k_cap)
    diagnostics.extend(f"fitted model: {note}" for note in model.notes)
    try:
        model_ladder = ladder_from_moments(model_moments(q_hat, opt.k_cap), opt.k_cap)
        model_ladder_padded = model_ladder.padded(len(emp_ladder.theta))
        model_chi = model_ladder.chi_hat
    except LadderTruncationError:
        model_ladder_padded = ()
        model_chi = 0

    report: dict[str, Any] = {
        "dataset": {
            "source": source,
            "n": d.n,
            "S": d.S,
            "x_max": d.x_max,
            "counts": {str(x): nx for x, nx in sorted(d.counts.items())},
        },
        "empirical": {
            **_estimates_dict(empirical),
            "chi_hat": emp_ladder.chi_hat,
            "precondition_scale": emp_ladder.scale,
        },
        "npmle": {
            **_estimates_dict(model),
            "odds": odds(q_hat),
            "atoms": q_hat.atoms.tolist(),
            "weights": q_hat.weights.tolist(),
            "n_atoms": q_hat.n_atoms,
            "chi_hat": model_chi,
            "ladder_padded": list(model_ladder_padded),
            "converged": fit.converged,
            "outer_iterations": fit.outer_iterations,
            "em_sweeps": fit.em_sweeps,
            "sup_gradient": fit.sup_gradient,
            "log_lik": fit.log_lik,
        },
    }

    if opt.run_envelope:
        env = lower_confidence_limit(d, opt.alpha, opt.envelope)
        if env.solution.status != "feasible":
            diagnostics.append("envelope LP infeasible at the chosen grid")
            degraded = True
        report["envelope"] = {
            "status": env.solution.status,
            "theta_lower": None if math.isnan(env.theta_lower) else env.theta_lower,
            "epsilon": env.epsilon,
            "c_lower": env.c_lower,
            "alpha": env.alpha,
        }
    else:
        report["envelope"] = None

    if opt.bootstrap > 0:
        estimators = default_estimators(max(emp_ladder.chi_hat, 1))
        summary = bootstrap_quantiles(
            q_hat,
            d.n,
            opt.bootstrap,
            alpha_q=opt.alpha_q,
            estimators=estimators,
            seed=opt.seed,
            threads=opt.threads,
            unconditional_c=(
                empirical.c_hats.get("odds_1") if opt.unconditional else None
            ),
        )
        report["bootstrap"] = {
            "B": summary.B,
            "alpha_q": summary.alpha_q,
            "seed": summary.seed,
            "quantiles": {k: _none_if_nan(v) for k, v in summary.quantiles.items()},
            "missing": dict(summary.missing),
            "rng": summary.rng,
        }
    else:
        report["bootstrap"] = None

    report["config"] = {
        "version": __version__,
        "backend": backend_name(),
        "rng": RNG_DESCRIPTION,
        "k_cap": opt.k_cap,
        "alpha": opt.alpha,
        "bootstrap": opt.bootstrap,
        "alpha_q": opt.alpha_q,
        "seed": opt.seed,
        "threads": opt.threads,
        "unconditional": opt.unconditional,
        "envelope": {
            "grid_size": opt.envelope.grid_size,
            "grid_lo": opt.envelope.grid_lo,
            "grid_hi": opt.envelope.grid_hi,
            "reps": opt.envelope.reps,
            "seed": opt.envelope.seed,
        },
        "npmle": {
            "initial_grid_size": opt.npmle.initial_grid_size,
            "scan_grid_size": opt.npmle.scan_grid_size,
            "grid_lo": opt.npmle.grid_lo,
            "scan_lo": opt.npmle.scan_lo,
            "grid_hi": opt.npmle.grid_hi,
            "tolerance": opt.npmle.tolerance,
            "max_outer": opt.npmle.max_outer,
            "max_em_sweeps": opt.npmle.max_em_sweeps,
        },
    }
    report["diagnostics"] = diagnostics
    return AnalysisReport(data=report, degraded=degraded)


def _none_if_nan(v: float) -> float | None:
    return None if isinstance(v, float) and math.isnan(v) else v


def _fmt(v: Any, width: int = 9) -> str:
    if v is None:
        return " " * width
    return f"{v:{width}.3f}"


def render_table(report: dict[str, Any]) -> str:
    """Aligned text view of a report (numbers at 3 decimals)."""
    ds = report["dataset"]
    lines = [
        f"dataset: {ds['source']}   n={ds['n']}  S={ds['S']}  x_max={ds['x_max']}",
        "",
    ]
    emp = report["empirical"]
    mod = report["npmle"]
    k = len(emp["ladder"])
    header = ["estimate".ljust(14)] + [h.rjust(9) for h in ("odds_dr", "odds_cl", "odds_cb")]
    header += [f"odds_{i}".rjust(9) for i in range(1, k + 1)]
    lines.append("".join(header))

    def row(label: str, src: dict[str, Any], ladder_key: str) -> str:
        cells = [label.ljust(14)]
        for key in ("odds_dr", "odds_cl", "odds_cb"):
            cells.append(_fmt(src.get(key)))
        lad = list(src.get(ladder_key) or [])
        for i in range(k):
            cells.append(_fmt(lad[i] if i < len(lad) else None))
        return "".join(cells)

    lines.append(row("empirical", emp, "ladder"))
    lines.append(row("fitted model", mod, "ladder_padded"))
    boot = report.get("bootstrap")
    if boot:
        qrow = {k_: v for k_, v in boot["quantiles"].items()}
        qsrc = {
            "odds_dr": qrow.get("odds_dr"),
            "odds_cl": qrow.get("odds_cl"),
            "odds_cb": qrow.get("odds_cb"),
            "ladder_q": [qrow.get(f"odds_{i}") for i in range(1, k + 1)],
        }
        lines.append(row(f"{int(boot['alpha_q']*100)}% quantile", qsrc, "ladder_q"))
    lines.append("")

    lines.append(
        "fitted mixture: "
        + ", ".join(
            f"{a:.4f}*{w:.4f}" for a, w in zip(mod["atoms"], mod["weights"])
        )
        + f"   (odds {mod['odds']:.4f}, "
        + ("converged" if mod["converged"] else "NOT converged")
        + f", sup gradient {mod['sup_gradient']:.2e})"
    )
    counts = {**emp["c_hats"]}
    model_counts = {**mod["c_hats"]}
    lines.append(
        "plug-in class counts (empirical): "
        + ", ".join(f"{k_}={v}" for k_, v in counts.items())
    )
    lines.append(
        "plug-in class counts (fitted model): "
        + ", ".join(f"{k_}={v}" for k_, v in model_counts.items())
    )
    env = report.get("envelope")
    if env:
        if env["theta_lower"] is not None:
            lines.append(
                f"envelope lower limit: odds >= {env['theta_lower']:.3f} "
                f"(eps = {env['epsilon']:.3f}, alpha = {env['alpha']:.2f}) "
                f"-> classes >= {env['c_lower']}"
            )
        else:
            lines.append("envelope lower limit: infeasible")
    if report.get("diagnostics"):
        lines.append("")
        lines.append("diagnostics:")
        lines.extend(f"  - {msg}" for msg in report["diagnostics"])
    return "\n".join(lines)
