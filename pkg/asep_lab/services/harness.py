"""
Experiment orchestration: trial functions, the parallel trial farm and aggregation.

Trials are pure functions of (spec, trial_index): each builds its own state and its own
RngStream keyed by (master_seed, trial_index). Records are sorted by trial index before
aggregation, so reports do not depend on how trials were scheduled.
"""
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import structlog

from asep_lab.config import get_settings
from asep_lab.errors import ExperimentInterrupted, FitError, SpecError
from asep_lab.models.experiment import ExperimentKind, ExperimentSpec, Report, TrialRecord
from asep_lab.models.lattice import Window
from asep_lab.services import statistics as st
from asep_lab.services.coupling import (
    check_identity, check_labels, check_projection, init_coupling, run_coupled_until,
)
from asep_lab.services.dynamics import (
    Observer, SimState, leftmost_second_class, position_of_color, run_until,
)
from asep_lab.services.initial_data import (
    init_asep_step, init_colored_step, init_single_second_class, init_two_species, make_window,
)
from asep_lab.services.performance_monitor import PerformanceMonitor
from asep_lab.services.rng import RngStream

logger = structlog.get_logger(__name__)

RECORDS_FILE = "records.jsonl"
SPEC_FILE = "spec.json"

TrialFn = Callable[[ExperimentSpec, int], TrialRecord]


def _record(spec: ExperimentSpec, index: int, started: float, **values) -> TrialRecord:
    return TrialRecord(trial_index=index, master_seed=spec.master_seed, p=spec.p, L=spec.L, t=spec.t,
                       wall_time=time.perf_counter() - started, **values)


# Trial functions

def speed_trial(spec: ExperimentSpec, index: int, observer: Optional[Observer] = None) -> TrialRecord:
    """Position of the leftmost second-class particle at time t"""
    started = time.perf_counter()
    params = spec.params
    window = make_window(spec.t, spec.L, spec.safety)
    stream = RngStream(spec.master_seed, index)

    if spec.initial_data == "coupled":
        state = init_coupling(params, window)
        outcome = run_coupled_until(state, spec.t, stream, stride=0, observer=observer)
        sim, events, accepted = state.twospec, outcome.events, outcome.accepted
    else:
        if spec.initial_data == "single_second_class":
            config = init_single_second_class(spec.L, window, vacate_origin=spec.vacate_origin)
        else:
            config = init_two_species(params, window)
        sim = run_until(SimState.start(config, params), spec.t, stream, observer=observer)
        events, accepted = sim.events, sim.accepted

    position = leftmost_second_class(sim)
    return _record(spec, index, started, position=position, speed=position / spec.t,
                   events=events, accepted=accepted)


def coupling_trial(spec: ExperimentSpec, index: int, observer: Optional[Observer] = None) -> TrialRecord:
    """Coupled trajectory audited after every event"""
    started = time.perf_counter()
    window = make_window(spec.t, spec.L, spec.safety)
    stream = RngStream(spec.master_seed, index)
    state = init_coupling(spec.params, window)
    outcome = run_coupled_until(state, spec.t, stream, stride=spec.audit_stride, observer=observer)

    violation = outcome.violation
    if violation is None:
        final = {"identity": check_identity(state), "projection": check_projection(state),
                 "site_class": check_labels(state), "bijection": state.status.is_bijection(),
                 "second_class_labels": state.status.second_class_count() == spec.L + 1}
        failed = [name for name, ok in final.items() if not ok]
        if failed:
            violation = {"kind": failed[0], "time": state.clock, "event_index": outcome.events}
    if violation is not None:
        violation = {**violation, "trial_index": index}

    return _record(spec, index, started, position=leftmost_second_class(state.twospec),
                   events=outcome.events, accepted=outcome.accepted,
                   observables={"violations": int(violation is not None), "violation": violation,
                                "label_swaps": outcome.label_swaps})


def identity_window(spec: ExperimentSpec) -> Window:
    base = make_window(spec.t, 0, spec.safety)
    I, J, P = spec.identity_I, spec.identity_J, spec.identity_P
    lo = min([base.lo] + [i - 1 for i in I] + [-j for j in J])
    hi = max([base.hi] + [P + j + 1 for j in J] + [P + 1])
    return Window(lo, hi)


def identity_trial(spec: ExperimentSpec, index: int, observer: Optional[Observer] = None) -> TrialRecord:
    """
    Trials 0..n-1 run the uncolored step process and test "I occupied and P+J occupied";
    trials n..2n-1 run the colored step process and test "I occupied and colors J right of P".
    """
    started = time.perf_counter()
    window = identity_window(spec)
    stream = RngStream(spec.master_seed, index)
    colored = index >= spec.n_trials
    config = init_colored_step(window) if colored else init_asep_step(window)
    sim = run_until(SimState.start(config, spec.params), spec.t, stream, observer=observer)

    occupied = all(sim.config.color_at(i) != 0 for i in spec.identity_I)
    if colored:
        hit = occupied and all(position_of_color(sim, j) > spec.identity_P for j in spec.identity_J)
    else:
        hit = occupied and all(sim.config.color_at(spec.identity_P + j) != 0 for j in spec.identity_J)
    return _record(spec, index, started, events=sim.events, accepted=sim.accepted,
                   observables={"side": "colored" if colored else "single", "indicator": int(hit)})


def block_key(t: float) -> str:
    return f"block@{t:g}"


def block_trial(spec: ExperimentSpec, index: int, observer: Optional[Observer] = None) -> TrialRecord:
    """Step process observed at every time of the grid: are floor(st)..floor(st)+L all occupied?"""
    started = time.perf_counter()
    times = spec.block_times
    window = make_window(max(times), spec.L, spec.safety)
    stream = RngStream(spec.master_seed, index)
    sim = SimState.start(init_asep_step(window), spec.params)

    observables = {}
    for t in times:
        run_until(sim, t, stream, observer=observer)
        start = math.floor(spec.block_s * t)
        observables[block_key(t)] = int(all(sim.config.color_at(start + j) != 0 for j in range(spec.L + 1)))
    return _record(spec, index, started, events=sim.events, accepted=sim.accepted, observables=observables)


def sweep_trial(spec: ExperimentSpec, index: int, observer: Optional[Observer] = None) -> TrialRecord:
    """Speed trial at p_grid[index // n_trials]; the trial index keeps the stream distinct"""
    p = spec.p_grid[index // spec.n_trials]
    sub = ExperimentSpec.from_dict({**spec.to_dict(), "kind": ExperimentKind.FIT_ALPHA.value, "p": p})
    return speed_trial(sub, index, observer=observer)


TRIAL_FUNCTIONS: Dict[ExperimentKind, TrialFn] = {
    ExperimentKind.SPEED: speed_trial,
    ExperimentKind.FIT_ALPHA: speed_trial,
    ExperimentKind.COUPLING_AUDIT: coupling_trial,
    ExperimentKind.IDENTITY: identity_trial,
    ExperimentKind.BLOCK: block_trial,
    ExperimentKind.ALPHA_SWEEP: sweep_trial,
}


def trial_indices(spec: ExperimentSpec) -> range:
    if spec.kind == ExperimentKind.IDENTITY:
        return range(2 * spec.n_trials)
    if spec.kind == ExperimentKind.ALPHA_SWEEP:
        return range(len(spec.p_grid) * spec.n_trials)
    return range(spec.n_trials)


# Scheduler

def load_records(path: Path, tolerate_truncation: bool = False) -> List[TrialRecord]:
    """Read records.jsonl; an interrupted write may leave a partial last line, which can be skipped"""
    with open(path, "r", encoding="utf-8") as handle:
        lines = [line.strip() for line in handle if line.strip()]
    records = []
    for number, line in enumerate(lines, start=1):
        try:
            records.append(TrialRecord.from_dict(json.loads(line)))
        except json.JSONDecodeError:
            if tolerate_truncation and number == len(lines):
                logger.warning("truncated_record_skipped", path=str(path), line=number)
                break
            raise
    return records


def _prepare_output(spec: ExperimentSpec, output_dir: Path, resume: bool) -> Dict[int, TrialRecord]:
    output_dir.mkdir(parents=True, exist_ok=True)
    spec_path = output_dir / SPEC_FILE
    records_path = output_dir / RECORDS_FILE
    if not resume:
        records_path.unlink(missing_ok=True)
        spec_path.unlink(missing_ok=True)
    if spec_path.exists():
        with open(spec_path, "r", encoding="utf-8") as handle:
            previous = json.load(handle)
        if previous != spec.to_dict():
            raise SpecError(f"{output_dir} holds records of a different experiment")
    else:
        with open(spec_path, "w", encoding="utf-8") as handle:
            json.dump(spec.to_dict(), handle, indent=2)
    if not records_path.exists():
        return {}
    records = load_records(records_path, tolerate_truncation=True)
    with open(records_path, "w", encoding="utf-8") as handle:
        for record in records:
            handle.write(json.dumps(record.to_dict()) + "\n")
    return {r.trial_index: r for r in records}


def run_trials(spec: ExperimentSpec, indices: Iterable[int], workers: Optional[int] = None,
               output_dir: Optional[Path] = None, resume: bool = False,
               monitor: Optional[PerformanceMonitor] = None) -> List[TrialRecord]:
    """
    Run the trials of `spec` with the given indices on `workers` processes.

    With an output directory, finished records are appended to records.jsonl as they arrive. With
    `resume`, indices already present there are not run again; otherwise the directory starts empty.
    """
    indices = list(indices)
    trial_fn = partial(TRIAL_FUNCTIONS[spec.kind], spec)
    workers = workers or get_settings().workers
    done: Dict[int, TrialRecord] = {}
    if output_dir is not None:
        wanted = set(indices)
        done = {i: r for i, r in _prepare_output(spec, Path(output_dir), resume).items() if i in wanted}
        if done:
            logger.info("resuming", experiment=spec.kind.value, completed=len(done), total=len(indices))
    todo = [i for i in indices if i not in done]

    sink = open(Path(output_dir) / RECORDS_FILE, "a", encoding="utf-8") if output_dir is not None else None
    executor = None
    try:
        if workers <= 1 or len(todo) <= 1:
            results = map(trial_fn, todo)
        else:
            executor = ProcessPoolExecutor(max_workers=workers)
            chunksize = max(1, len(todo) // (workers * 8))
            results = executor.map(trial_fn, todo, chunksize=chunksize)
        for record in results:
            done[record.trial_index] = record
            if sink is not None:
                sink.write(json.dumps(record.to_dict()) + "\n")
                sink.flush()
            if monitor is not None:
                monitor.record_trial(record)
    except KeyboardInterrupt:
        raise ExperimentInterrupted(f"stopped after {len(done)} of {len(indices)} trials")
    finally:
        if executor is not None:
            executor.shutdown(wait=True, cancel_futures=True)
        if sink is not None:
            sink.close()
    return [done[i] for i in indices]


# Aggregation

def s_grid_values(spec: ExperimentSpec) -> np.ndarray:
    lo, hi, steps = spec.s_grid
    return np.linspace(lo, hi, int(steps))


def _speeds(records: Sequence[TrialRecord]) -> np.ndarray:
    return np.array([r.speed for r in records], dtype=np.float64)


def _cdf_curve(spec: ExperimentSpec, ecdf: st.EmpiricalCdf, law: st.SpeedLaw,
               fitted: Optional[st.SpeedLaw] = None) -> List[Dict[str, float]]:
    s = s_grid_values(spec)
    empirical = ecdf(s)
    theoretical = st.speed_cdf(s, law)
    rows = []
    for k, value in enumerate(s):
        row = {"s": float(value), "empirical_cdf": float(empirical[k]), "theoretical_cdf": float(theoretical[k])}
        if fitted is not None:
            row["fitted_cdf"] = float(st.speed_cdf(value, fitted))
        rows.append(row)
    return rows


def _aggregate_speed(spec, records):
    ecdf = st.EmpiricalCdf(_speeds(records))
    law = st.SpeedLaw(gamma=spec.params.gamma, L=spec.L)
    ks = st.ks_distance(ecdf, lambda x: st.speed_cdf(x, law))
    mean, se = st.mean_and_se(ecdf.samples)
    median = ecdf.median()
    analytic_median = st.speed_median(law)
    aggregates = {
        "n": ecdf.n,
        "gamma": law.gamma,
        "ks": ks,
        "ks_threshold": spec.ks_limit,
        "ks_critical_1pct": st.ks_critical_value(ecdf.n, 0.01),
        "mean_speed": mean,
        "mean_speed_se": se,
        "analytic_mean": st.speed_mean(law),
        "median_speed": median,
        "analytic_median": analytic_median,
        "median_error": abs(median - analytic_median),
    }
    passed = ks <= spec.ks_limit
    if spec.median_tolerance is not None:
        passed = passed and aggregates["median_error"] <= spec.median_tolerance
    return aggregates, _cdf_curve(spec, ecdf, law), passed


def _fit(spec, records, L) -> Dict[str, Any]:
    ecdf = st.EmpiricalCdf(_speeds(records))
    gamma = 2 * records[0].p - 1
    alpha_hat, sse = st.fit_alpha(ecdf, L)
    fitted = st.SpeedLaw(gamma=gamma, L=L, alpha=alpha_hat)
    limit = st.SpeedLaw(gamma=gamma, L=L)
    coefficients, poly_sse = st.fit_polynomial_cdf(ecdf, L + 1)
    return {
        "ecdf": ecdf, "fitted": fitted, "limit": limit,
        "values": {
            "n": ecdf.n,
            "gamma": gamma,
            "alpha_hat": alpha_hat,
            "sse": sse,
            "ks_at_alpha": st.ks_distance(ecdf, lambda x: st.speed_cdf(x, fitted)),
            "ks_at_gamma": st.ks_distance(ecdf, lambda x: st.speed_cdf(x, limit)),
            "polynomial_coefficients": [float(c) for c in coefficients],
            "polynomial_sse": poly_sse,
        },
    }


def _aggregate_fit_alpha(spec, records):
    fit = _fit(spec, records, spec.L)
    aggregates = dict(fit["values"])
    passed = True
    if spec.alpha_range is not None:
        lo, hi = spec.alpha_range
        aggregates["alpha_range"] = [lo, hi]
        passed = lo <= aggregates["alpha_hat"] <= hi
    curve = _cdf_curve(spec, fit["ecdf"], fit["limit"], fit["fitted"])
    return aggregates, curve, passed


def _aggregate_alpha_sweep(spec, records):
    rows = []
    passed = True
    for k, p in enumerate(spec.p_grid):
        chunk = records[k * spec.n_trials:(k + 1) * spec.n_trials]
        try:
            values = _fit(spec, chunk, spec.L)["values"]
        except FitError as e:
            logger.warning("alpha_fit_failed", p=p, error=str(e))
            rows.append({"p": p, "gamma": 2 * p - 1, "alpha_hat": None, "error": str(e)})
            passed = False
            continue
        rows.append({"p": p, "gamma": values["gamma"], "alpha_hat": values["alpha_hat"], "sse": values["sse"],
                     "ks_at_alpha": values["ks_at_alpha"], "alpha_minus_gamma": values["alpha_hat"] - values["gamma"]})
        passed = passed and 0 < values["alpha_hat"] <= 1
    return {"n_per_p": spec.n_trials, "table": rows}, None, passed


def _aggregate_coupling(spec, records):
    violations = [r.observables["violation"] for r in records if r.observables.get("violations")]
    aggregates = {
        "trials": len(records),
        "events_checked": int(sum(r.events for r in records)),
        "label_swaps": int(sum(r.observables.get("label_swaps", 0) for r in records)),
        "violations": len(violations),
        "first_violation": violations[0] if violations else None,
    }
    return aggregates, None, not violations


def _aggregate_identity(spec, records):
    n = spec.n_trials
    single = np.array([r.observables["indicator"] for r in records[:n]], dtype=np.float64)
    colored = np.array([r.observables["indicator"] for r in records[n:]], dtype=np.float64)
    p1, p2 = float(single.mean()), float(colored.mean())
    se1, se2 = st.binomial_se(p1, n), st.binomial_se(p2, n)
    se = math.sqrt(se1 ** 2 + se2 ** 2)
    diff = abs(p1 - p2)
    z = diff / se if se > 0 else (0.0 if diff == 0 else math.inf)
    aggregates = {
        "I": list(spec.identity_I), "J": list(spec.identity_J), "P": spec.identity_P,
        "n_per_side": n,
        "p_single": p1, "se_single": se1,
        "p_colored": p2, "se_colored": se2,
        "combined_se": se, "z": z, "z_threshold": spec.z_threshold,
    }
    return aggregates, None, z <= spec.z_threshold


def _aggregate_block(spec, records):
    gamma = spec.params.gamma
    target = st.block_prob_target(spec.block_s, gamma, spec.L)
    n = len(records)
    rows = []
    for t in spec.block_times:
        estimate = float(np.mean([r.observables[block_key(t)] for r in records]))
        se = st.binomial_se(estimate, n)
        rows.append({"t": t, "estimate": estimate, "se": se, "target": target, "abs_error": abs(estimate - target)})
    # convergence: the error may only grow within two combined standard errors
    monotone = all(
        b["abs_error"] <= a["abs_error"] + 2 * math.sqrt(a["se"] ** 2 + b["se"] ** 2)
        for a, b in zip(rows, rows[1:])
    )
    final = rows[-1]
    aggregates = {
        "s": spec.block_s, "gamma": gamma, "target": target,
        "estimate": final["estimate"], "se": final["se"], "abs_error": final["abs_error"],
        "tolerance": spec.block_tolerance, "convergence_monotone": monotone, "t_grid": rows,
    }
    return aggregates, None, final["abs_error"] <= spec.block_tolerance and monotone


AGGREGATORS = {
    ExperimentKind.SPEED: _aggregate_speed,
    ExperimentKind.FIT_ALPHA: _aggregate_fit_alpha,
    ExperimentKind.ALPHA_SWEEP: _aggregate_alpha_sweep,
    ExperimentKind.COUPLING_AUDIT: _aggregate_coupling,
    ExperimentKind.IDENTITY: _aggregate_identity,
    ExperimentKind.BLOCK: _aggregate_block,
}


def build_report(spec: ExperimentSpec, records: Sequence[TrialRecord]) -> Report:
    """Aggregate records (any order) into a Report; the same records always give the same Report"""
    records = sorted(records, key=lambda r: r.trial_index)
    expected = list(trial_indices(spec))
    if [r.trial_index for r in records] != expected:
        raise SpecError(f"records do not cover trial indices 0..{len(expected) - 1} exactly once")
    aggregates, curve, passed = AGGREGATORS[spec.kind](spec, records)
    aggregates["wall_time"] = float(sum(r.wall_time for r in records))
    return Report(spec=spec, records=list(records), aggregates=aggregates, passed=bool(passed), curve=curve)


def run_experiment(spec: ExperimentSpec, workers: Optional[int] = None,
                   output_dir: Optional[Path] = None, resume: bool = False) -> Report:
    spec.validate()
    monitor = PerformanceMonitor(spec.kind.value)
    logger.info("experiment_started", experiment=spec.kind.value, trials=len(trial_indices(spec)),
                p=spec.p, L=spec.L, t=spec.t, seed=spec.master_seed)
    records = run_trials(spec, trial_indices(spec), workers=workers, output_dir=output_dir,
                         resume=resume, monitor=monitor)
    report = build_report(spec, records)
    logger.info("experiment_finished", experiment=spec.kind.value, passed=report.passed, **monitor.get_stats())
    if output_dir is not None:
        monitor.write(Path(output_dir) / "metrics.prom")
    return report


def _require(spec: ExperimentSpec, kind: ExperimentKind) -> None:
    if spec.kind != kind:
        raise SpecError(f"expected a {kind.value} spec, got {spec.kind.value}")


def run_speed_experiment(spec: ExperimentSpec, workers: Optional[int] = None,
                         output_dir: Optional[Path] = None, resume: bool = False) -> Report:
    _require(spec, ExperimentKind.SPEED)
    return run_experiment(spec, workers, output_dir, resume)


def run_coupling_audit(spec: ExperimentSpec, workers: Optional[int] = None,
                       output_dir: Optional[Path] = None, resume: bool = False) -> Report:
    _require(spec, ExperimentKind.COUPLING_AUDIT)
    return run_experiment(spec, workers, output_dir, resume)


def run_identity_experiment(spec: ExperimentSpec, workers: Optional[int] = None,
                            output_dir: Optional[Path] = None, resume: bool = False) -> Report:
    _require(spec, ExperimentKind.IDENTITY)
    return run_experiment(spec, workers, output_dir, resume)


def run_block_experiment(spec: ExperimentSpec, workers: Optional[int] = None,
                         output_dir: Optional[Path] = None, resume: bool = False) -> Report:
    _require(spec, ExperimentKind.BLOCK)
    return run_experiment(spec, workers, output_dir, resume)


def run_fit_alpha_experiment(spec: ExperimentSpec, workers: Optional[int] = None,
                             output_dir: Optional[Path] = None, resume: bool = False) -> Report:
    _require(spec, ExperimentKind.FIT_ALPHA)
    return run_experiment(spec, workers, output_dir, resume)


def run_alpha_sweep(spec: ExperimentSpec, workers: Optional[int] = None,
                    output_dir: Optional[Path] = None, resume: bool = False) -> Report:
    _require(spec, ExperimentKind.ALPHA_SWEEP)
    return run_experiment(spec, workers, output_dir, resume)


def replay_trial(spec: ExperimentSpec, index: int, observer: Optional[Observer] = None) -> TrialRecord:
    """Re-run one trial, optionally streaming its events to an observer"""
    spec.validate()
    if index not in trial_indices(spec):
        raise SpecError(f"trial {index} is not part of this experiment")
    return TRIAL_FUNCTIONS[spec.kind](spec, index, observer=observer)
