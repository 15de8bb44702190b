"""
Experiment tasks, one per CLI subcommand.

Each ``*_tool`` takes a serialized RunContext (or the context itself),
computes its tables, writes them atomically into ``global.out_dir`` and
returns a result dictionary: success, context, confidence, metrics,
errors, suggestions. Failures are returned, not raised; the raised
exception travels under ``exception`` so the runner can map it to an exit
code.
"""

import logging
from dataclasses import replace
from pathlib import Path
from typing import Any, Dict, List, Sequence, Tuple, Union

from core.async_utils import ParallelExecutor, run_async_safe
from core.context import RunContext
from core.utils import create_recovery_suggestions, derive_seed, write_csv_atomic
from tools.complexity import (
    backend_from_config,
    check_H1a,
    check_H1b,
    check_H2,
    check_H3,
    check_H4,
    h1a_corpus,
    h1b_corpus,
    h2_corpus,
    h3_lists,
)
from tools.covering import build_covering
from tools.ergodic import AdmissibleSequence, index_partition, validate
from tools.estimators import (
    covering_infimum_rate,
    entropy_pipeline,
    epsilon_scan,
    tau_invariance,
    time_rate,
    variational_gap,
)
from tools.lattice_systems import sample_for_orbit, sampler_for, site_values, system_from_config, trajectory

logger = logging.getLogger(__name__)

SIMULATE_COLUMNS = ["sample", "window_lo", "window_hi", "t", "values"]
COMPLEXITY_COLUMNS = ["estimator", "eps", "tau", "window_lo", "window_hi", "level", "value", "residual",
                      "passed", "flags"]
ENTROPY_COUNT_COLUMNS = ["eps", "window_lo", "window_hi", "n", "n_lower", "sigma_upper", "log2_n_lower",
                         "saturated"]
ENTROPY_COLUMNS = ["quantity", "eps", "window_size", "value", "residual", "exact", "lower_bound", "monotone"]
VARIATIONAL_COLUMNS = ["eps", "window_lo", "window_hi", "mean_k_rate", "entropy_rate_quarter_eps", "gap",
                       "direction_holds", "flags"]
AXIOM_COLUMNS = ["hypothesis", "backend", "corpus", "passed", "informational", "slack_name", "slack",
                 "doubled_slack", "stable"]
SEQUENCE_COLUMNS = ["kind", "passed", "prefix_length", "cond_succ_1_margin", "l_a_proxy", "l_b_proxy",
                    "violated", "witness_k", "flags"]
PARTITION_COLUMNS = ["k", "a", "b", "label"]

# Slack ratios between a corpus and its doubling that still count as stable.
STABILITY_FACTOR = 2.0


def _as_context(context: Union[RunContext, Dict[str, Any]]) -> RunContext:
    return context if isinstance(context, RunContext) else RunContext.from_dict(context)


def _environment(context: RunContext):
    config = context.config
    system = system_from_config(config.system)
    sampler = sampler_for(system, config.sampler.seed, config.sampler.distribution, config.sampler.p,
                          config.sampler.tape_depth, halo=config.system.halo)
    executor = ParallelExecutor(config.global_config.workers)
    return system, sampler, backend_from_config(config.backend), executor


def _report_flags(system) -> List[str]:
    """Flags carried by every estimate row: coding is by partition, CA runs are not invariant"""
    flags = ["partition-coding"]
    if system.kind == "elementary_ca":
        flags.append("qualitative")
    return flags


def _admissible(context: RunContext) -> AdmissibleSequence:
    config = context.config
    return AdmissibleSequence.from_config(config.admissible, config.grids.windows)


def _write(context: RunContext, name: str, columns: Sequence[str], rows: List[Dict[str, Any]]) -> Path:
    path = Path(context.config.global_config.out_dir) / name
    run_async_safe(write_csv_atomic(path, columns, rows))
    context.record_output(name, path)
    context.log_step(context.subcommand, "wrote", {"file": name, "rows": len(rows)})
    return path


def _success(context: RunContext, metrics: Dict[str, Any], confidence: float = 1.0) -> Dict[str, Any]:
    context.results.update(metrics)
    context.log_step(context.subcommand, "completed", metrics)
    return {
        "success": True,
        "context": context.to_dict(),
        "confidence": confidence,
        "metrics": metrics,
        "errors": [],
        "suggestions": [],
    }


def _failure(name: str, context: RunContext, error: Exception) -> Dict[str, Any]:
    logger.error("%s failed: %s", name, error)
    context.log_step(name, "failed", {"error": str(error), "type": type(error).__name__})
    suggestions = list(getattr(error, "recovery_suggestions", []))
    suggestions.extend(create_recovery_suggestions(type(error).__name__, name))
    return {
        "success": False,
        "context": context.to_dict(),
        "metrics": {},
        "errors": [str(error)],
        "suggestions": suggestions,
        "exception": error,
    }


def simulate_tool(context: Union[RunContext, Dict[str, Any]]) -> Dict[str, Any]:
    """Evolve ``ensemble.samples`` draws per window for n_grid[0] steps and dump windowed states"""
    context = _as_context(context)
    try:
        context.log_step("simulate", "started")
        config = context.config
        system, sampler, _, _ = _environment(context)
        steps = config.grids.n_grid[0]
        rows = []
        for lo, hi in config.grids.windows:
            for i in range(config.ensemble.samples):
                seeded = replace(sampler, seed=derive_seed(sampler.seed, lo, hi, i))
                f = sample_for_orbit(seeded, system, (lo, hi), steps)
                for t, state in enumerate(trajectory(f, system, steps)):
                    rows.append({"sample": i, "window_lo": lo, "window_hi": hi, "t": t,
                                 "values": list(site_values(state, (lo, hi)))})
        _write(context, "simulate.csv", SIMULATE_COLUMNS, rows)
        return _success(context, {"trajectories": len(config.grids.windows) * config.ensemble.samples,
                                  "steps": steps})
    except Exception as e:
        return _failure("simulate", context, e)


def _largest_window(context: RunContext) -> Tuple[int, int]:
    lo, hi = context.config.grids.windows[-1]
    return (lo, hi)


def complexity_tool(context: Union[RunContext, Dict[str, Any]]) -> Dict[str, Any]:
    """Time rates, covering infimum, volume rates per eps, the eps scan and tau invariance"""
    context = _as_context(context)
    try:
        context.log_step("complexity", "started")
        config = context.config
        tol = config.tolerances
        system, sampler, backend, executor = _environment(context)
        seq = _admissible(context)
        grid = config.grids.n_grid
        lo, hi = _largest_window(context)
        extra = _report_flags(system)
        rows = []

        seeded = replace(sampler, seed=derive_seed(sampler.seed, lo, hi, 0))
        f = sample_for_orbit(seeded, system, (lo, hi), grid[-1])
        for eps in config.grids.eps_grid:
            estimate = time_rate(f, system, build_covering((lo, hi), eps), backend, grid)
            rows.append({"estimator": "time_rate", "eps": eps, "tau": system.tau, "window_lo": lo,
                         "window_hi": hi, "level": 0, "value": estimate.fitted_rate,
                         "residual": estimate.residual, "flags": estimate.flags + extra})
            if config.ensemble.max_level >= 1:
                infimum = covering_infimum_rate(f, system, (lo, hi), eps, backend, config.ensemble.max_level,
                                                grid, tol.level_tolerance)
                rows.append({"estimator": "covering_infimum_rate", "eps": eps, "tau": system.tau,
                             "window_lo": lo, "window_hi": hi, "level": infimum.diagnostics["argmin_level"],
                             "value": infimum.fitted_rate, "residual": infimum.residual,
                             "passed": infimum.monotone_flag, "flags": infimum.flags + extra})
        context.log_step("complexity", "time_rates", {"eps": len(config.grids.eps_grid)})

        scan = epsilon_scan(sampler, system, backend, config.grids.eps_grid, seq, config.ensemble.samples, grid,
                            noise=tol.eps_noise, convergence=tol.convergence, l_min=config.admissible.l_min,
                            max_level=config.ensemble.max_level, executor=executor)
        for eps, estimate in scan.table:
            for (w_lo, w_hi), rate in zip(estimate.diagnostics["windows"], estimate.diagnostics["window_rates"]):
                rows.append({"estimator": "window_rate", "eps": eps, "tau": system.tau, "window_lo": w_lo,
                             "window_hi": w_hi, "level": 0, "value": rate})
            rows.append({"estimator": "volume_rate", "eps": eps, "tau": system.tau, "level": 0,
                         "value": estimate.fitted_rate, "residual": estimate.residual,
                         "flags": estimate.flags + extra})
        rows.append({"estimator": "epsilon_scan", "eps": config.grids.eps_grid[-1], "tau": system.tau,
                     "value": scan.k_mu, "passed": scan.monotone_flag,
                     "flags": ["converged" if scan.converged else "not-converged"]})
        context.log_step("complexity", "epsilon_scan", {"k_mu": scan.k_mu})

        if len(config.grids.tau_list) >= 2:
            report = tau_invariance(sampler, system, config.grids.eps_grid[-1], backend, config.grids.tau_list,
                                    (lo, hi), grid, config.ensemble.samples, tol.tau_tolerance, executor)
            for tau in config.grids.tau_list:
                rows.append({"estimator": "tau_ratio", "eps": config.grids.eps_grid[-1], "tau": tau,
                             "window_lo": lo, "window_hi": hi, "value": report.ratios[tau]})
            rows.append({"estimator": "tau_invariance", "eps": config.grids.eps_grid[-1], "window_lo": lo,
                         "window_hi": hi, "value": report.spread, "passed": report.passed})

        _write(context, "complexity.csv", COMPLEXITY_COLUMNS, rows)
        return _success(context, {"k_mu": scan.k_mu, "monotone": scan.monotone_flag, "converged": scan.converged},
                        confidence=1.0 if scan.converged else 0.5)
    except Exception as e:
        return _failure("complexity", context, e)


def entropy_tool(context: Union[RunContext, Dict[str, Any]]) -> Dict[str, Any]:
    """Distinguishable-orbit counts and entropy rates over the eps grid and window list"""
    context = _as_context(context)
    try:
        context.log_step("entropy", "started")
        config = context.config
        system, sampler, _, executor = _environment(context)
        estimate = entropy_pipeline(sampler, system, config.grids.eps_grid, config.grids.windows,
                                    config.grids.count_n_grid, config.ensemble.size,
                                    noise=config.tolerances.eps_noise, limit_fraction=config.ensemble.limit_fraction,
                                    executor=executor)

        count_rows = [{"eps": c.eps, "window_lo": c.window[0], "window_hi": c.window[1], "n": c.n,
                       "n_lower": c.n_lower, "sigma_upper": c.sigma_upper, "log2_n_lower": c.log2_n_lower,
                       "saturated": c.saturated} for c in estimate.counts]
        common = {"exact": estimate.exact, "lower_bound": estimate.lower_bound}
        rows = [dict(common, quantity="h_lambda", eps=eps, window_size=size, value=h)
                for eps, size, h in estimate.h_lambda]
        for eps, volume in estimate.per_volume.items():
            rows.append(dict(common, quantity="h_per_volume", eps=eps, value=volume.fitted_rate,
                             residual=volume.residual))
        rows.append(dict(common, quantity="h_top", eps=estimate.htop_trend[-1][0], value=estimate.h_top,
                         monotone=estimate.monotone_flag))

        _write(context, "entropy_counts.csv", ENTROPY_COUNT_COLUMNS, count_rows)
        _write(context, "entropy.csv", ENTROPY_COLUMNS, rows)
        return _success(context, {"h_top": estimate.h_top, "exact": estimate.exact,
                                  "lower_bound": estimate.lower_bound},
                        confidence=0.5 if estimate.lower_bound else 1.0)
    except Exception as e:
        return _failure("entropy", context, e)


def variational_tool(context: Union[RunContext, Dict[str, Any]]) -> Dict[str, Any]:
    """Mean complexity rate at eps against the entropy rate at eps/4 on the first window"""
    context = _as_context(context)
    try:
        context.log_step("variational", "started")
        config = context.config
        system, sampler, backend, executor = _environment(context)
        lo, hi = config.grids.windows[0]
        rows = []
        holds = True
        for eps in config.grids.eps_grid:
            gap = variational_gap(sampler, system, eps, (lo, hi), config.grids.n_grid[-1], config.ensemble.size,
                                  backend, config.ensemble.samples, config.grids.count_n_grid,
                                  config.tolerances.variational_slack,
                                  limit_fraction=config.ensemble.limit_fraction, executor=executor)
            holds = holds and gap.direction_holds
            rows.append({"eps": eps, "window_lo": lo, "window_hi": hi, "mean_k_rate": gap.mean_k_rate,
                         "entropy_rate_quarter_eps": gap.entropy_rate_quarter_eps, "gap": gap.gap,
                         "direction_holds": gap.direction_holds, "flags": gap.flags + _report_flags(system)})
        _write(context, "variational.csv", VARIATIONAL_COLUMNS, rows)
        return _success(context, {"direction_holds": holds})
    except Exception as e:
        return _failure("variational", context, e)


def _stable(slack: float, doubled: float) -> bool:
    if slack == doubled:
        return True
    low, high = sorted((abs(slack), abs(doubled)))
    return low > 0 and high / low <= STABILITY_FACTOR


def axioms_tool(context: Union[RunContext, Dict[str, Any]]) -> Dict[str, Any]:
    """(H1)-(H4) reports; H1 and H2 slacks are recomputed on a doubled corpus"""
    context = _as_context(context)
    try:
        context.log_step("axioms", "started")
        config = context.config
        axioms, tol = config.axioms, config.tolerances
        _, _, backend, _ = _environment(context)
        seed = derive_seed(config.sampler.seed, 7)
        size, max_len = axioms.corpus_size, axioms.max_word_len

        def reports(count: int):
            return [
                check_H1a(backend, h1a_corpus(seed, count, max_len), tol.h1a_const),
                check_H1b(backend, h1b_corpus(seed, count, max_len), tol.h_alpha, tol.h_beta),
                check_H2(backend, h2_corpus(seed, count, max_len), tol.h2_const, tol.q),
            ]

        base, doubled = reports(size), reports(2 * size)
        context.log_step("axioms", "h1_h2", {"corpus_size": size})
        rows = []
        stable_all = True
        for report, twice in zip(base, doubled):
            for name, slack in report.slacks.items():
                stable = _stable(slack, twice.slacks[name])
                stable_all = stable_all and stable
                rows.append(dict(report.to_row(), slack_name=name, slack=slack,
                                 doubled_slack=twice.slacks[name], stable=stable))
        for report in (check_H3(backend, h3_lists(seed), tol.c0),
                       check_H4(backend, axioms.h4_alphabet, axioms.h4_max_len, axioms.h4_c)):
            for name, slack in report.slacks.items():
                rows.append(dict(report.to_row(), slack_name=name, slack=slack))
            base.append(report)

        _write(context, "axioms.csv", AXIOM_COLUMNS, rows)
        return _success(context, {"passed": all(r.passed for r in base), "stable": stable_all,
                                  "informational": backend.informational})
    except Exception as e:
        return _failure("axioms", context, e)


def validate_seq_tool(context: Union[RunContext, Dict[str, Any]]) -> Dict[str, Any]:
    """Admissibility proxies and the index partition of the configured sequence"""
    context = _as_context(context)
    try:
        context.log_step("validate-seq", "started")
        config = context.config
        seq = _admissible(context)
        report = validate(seq, config.admissible.l_min, config.admissible.k_max)
        ks = range(1, report.prefix_length + 1)
        partition = [{"k": p.k, "a": p.a, "b": p.b, "label": p.label} for p in index_partition(seq, ks)]
        _write(context, "validate_seq.csv", SEQUENCE_COLUMNS, [dict(report.to_row(), kind=seq.kind)])
        _write(context, "partition.csv", PARTITION_COLUMNS, partition)
        return _success(context, {"passed": report.passed, "violated": report.condition,
                                  "witness_k": report.witness_k})
    except Exception as e:
        return _failure("validate-seq", context, e)
