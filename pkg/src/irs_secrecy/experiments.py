"""Monte Carlo runner and aggregation for the comparison experiments.

A run plan sweeps (configuration, surface size, realization) triples.
Every scheme of a realization shares the channel seed (paired design);
scheme-specific randomness (initial phases, rounding, baseline phases)
uses separate derived streams, all reproducible from the base seed via
SHA-256 key derivation. Aggregation is a deterministic sequential
reduction in sorted key order, so repeated runs write byte-identical
CSVs. Realizations marked failed by a solver error are excluded from
every scheme's mean for that cell, with a count.
"""

import concurrent.futures
import csv
import dataclasses
import json
import os
from dataclasses import dataclass, field, replace

import numpy as np

from . import __version__
from .ao import run_algorithm1
from .baselines import (BaselineKind, POWER_MODE_MAX, POWER_MODE_MIN,
                        POWER_MODE_OPT, corner_search_power,
                        grid_search_power, no_irs_baseline,
                        random_phase_baseline)
from .channel import SystemParams, build_effective, sample_channels
from .convex_kernel import SolverError
from .geometry import ScenarioConfig, default_scenario, place_nodes
from .power_opt import SurrogateDomainError, fp_loop
from .rates import random_phase_vector
from .util import derive_seed, fractional_increase

AO_SCHEME = "ao"

_BASELINE_RUNNERS = {
    BaselineKind.RANDOM_PHASE_OPT_POWER: ("random", POWER_MODE_OPT),
    BaselineKind.RANDOM_PHASE_PMAX: ("random", POWER_MODE_MAX),
    BaselineKind.RANDOM_PHASE_PMIN: ("random", POWER_MODE_MIN),
    BaselineKind.NO_IRS_OPT_POWER: ("noirs", POWER_MODE_OPT),
    BaselineKind.NO_IRS_PMAX: ("noirs", POWER_MODE_MAX),
    BaselineKind.NO_IRS_PMIN: ("noirs", POWER_MODE_MIN),
}


@dataclass(frozen=True)
class RunPlan:
    """Declarative sweep: which scenarios, surface sizes, realizations,
    baselines and outputs. `base_params` carries non-default system
    parameters; L and N are overridden per cell."""

    scenarios: tuple
    L_values: tuple
    realizations: int = 50
    seed: int = 1
    baselines: tuple = (BaselineKind.RANDOM_PHASE_OPT_POWER,)
    out_dir: str | None = None
    write_traces: bool = False
    grid_q: int = 50
    n_jobs: int = 1
    base_params: SystemParams | None = None

    def __post_init__(self):
        if self.realizations < 1:
            raise ValueError("need at least one realization")
        if not self.L_values:
            raise ValueError("need a nonempty surface-size list")


@dataclass
class AggregateReport:
    """Mean min-secrecy per (config, L, scheme) plus outer-loop mean
    fractional-increase curves and exclusion counts."""

    means: dict
    n_ok: dict
    n_excluded: dict
    outer_delta: dict
    records: list = field(default_factory=list)


def cell_params(scenario, L, base_params=None):
    params = base_params if base_params is not None else SystemParams()
    params = replace(params, L=L, N=scenario.n_pairs)
    if scenario.param_overrides:
        params = params.with_overrides(scenario.param_overrides)
    return params


def delta_trace(trace):
    """Per-iteration fractional increases of an objective trace."""
    trace = list(trace)
    if len(trace) < 2:
        raise ValueError("need a trace of at least two entries")
    return np.array([fractional_increase(a, b)
                     for a, b in zip(trace, trace[1:])])


def pad_trace(trace, length):
    """Repeat the final value so converged runs contribute zero increase."""
    trace = list(trace)
    if len(trace) >= length:
        return trace[:length]
    return trace + [trace[-1]] * (length - len(trace))


def mean_delta_curve(traces):
    """Average the per-iteration fractional increases over realizations,
    padding shorter traces with their final value."""
    length = max(len(t) for t in traces)
    padded = np.array([pad_trace(t, length) for t in traces])
    deltas = np.array([delta_trace(t) for t in padded])
    return deltas.mean(axis=0)


def _realization_seeds(base_seed, label, L, r):
    return {
        "channel": derive_seed(base_seed, label, L, r, "channel"),
        "ao": derive_seed(base_seed, label, L, r, "ao"),
        "baseline_phase": derive_seed(base_seed, label, L, r, "baseline-phase"),
    }


def run_realization(scenario, L, r, base_seed, baselines, grid_q,
                    base_params=None):
    """All schemes on one shared channel draw; returns a plain dict."""
    label = scenario.label
    params = cell_params(scenario, L, base_params)
    seeds = _realization_seeds(base_seed, label, L, r)
    geom = place_nodes(scenario)
    chs = sample_channels(geom, params, seeds["channel"])
    eff = build_effective(chs, geom)

    out = {
        "config": label,
        "L": L,
        "realization": r,
        "seeds": seeds,
        "schemes": {},
        "failed": None,
        "ao_record": None,
    }
    try:
        res = run_algorithm1(eff, params, seeds["ao"])
        out["schemes"][AO_SCHEME] = res.min_secrecy
        out["ao_record"] = res.to_record()
        for kind in baselines:
            if kind in _BASELINE_RUNNERS:
                family, mode = _BASELINE_RUNNERS[kind]
                if family == "random":
                    bd = random_phase_baseline(eff, params,
                                               seeds["baseline_phase"], mode)
                else:
                    bd = no_irs_baseline(chs, params, mode)
                out["schemes"][kind.value] = bd.min_secrecy
            elif kind is BaselineKind.GRID_SEARCH_POWER:
                rng = np.random.Generator(np.random.Philox(
                    np.random.SeedSequence(seeds["baseline_phase"])))
                omega = random_phase_vector(rng, eff.L)
                _, val = grid_search_power(eff, omega, params, grid_q)
                out["schemes"][kind.value] = val
            elif kind is BaselineKind.CORNER_SEARCH_POWER:
                rng = np.random.Generator(np.random.Philox(
                    np.random.SeedSequence(seeds["baseline_phase"])))
                omega = random_phase_vector(rng, eff.L)
                _, val = corner_search_power(eff, omega, params)
                out["schemes"][kind.value] = val
    except (SolverError, SurrogateDomainError) as exc:
        out["failed"] = str(exc)
    return out


def _worker(task):
    scenario_dict, L, r, base_seed, baseline_values, grid_q, params_dict = task
    scenario = ScenarioConfig(**scenario_dict)
    baselines = tuple(BaselineKind(v) for v in baseline_values)
    base_params = SystemParams(**params_dict) if params_dict else None
    return run_realization(scenario, L, r, base_seed, baselines, grid_q,
                           base_params)


def run_plan(plan: RunPlan) -> AggregateReport:
    """Execute the sweep, aggregate deterministically, write outputs."""
    tasks = []
    for scenario in plan.scenarios:
        for L in plan.L_values:
            for r in range(plan.realizations):
                tasks.append((
                    dataclasses.asdict(scenario), L, r, plan.seed,
                    tuple(k.value for k in plan.baselines), plan.grid_q,
                    dataclasses.asdict(plan.base_params)
                    if plan.base_params is not None else None,
                ))
    if plan.n_jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(plan.n_jobs) as pool:
            records = list(pool.map(_worker, tasks, chunksize=1))
    else:
        records = [_worker(t) for t in tasks]

    cells = {}
    for rec in records:
        cells.setdefault((rec["config"], rec["L"]), []).append(rec)

    means = {}
    n_ok = {}
    n_excluded = {}
    outer_delta = {}
    for key in sorted(cells):
        recs = sorted(cells[key], key=lambda x: x["realization"])
        ok = [x for x in recs if x["failed"] is None]
        n_ok[key] = len(ok)
        n_excluded[key] = len(recs) - len(ok)
        schemes = sorted({s for x in ok for s in x["schemes"]})
        for scheme in schemes:
            vals = [x["schemes"][scheme] for x in ok]
            means[key + (scheme,)] = float(np.mean(vals)) if vals else float("nan")
        traces = [x["ao_record"]["outer_trace"] for x in ok if x["ao_record"]]
        if traces:
            outer_delta[key] = mean_delta_curve(traces)

    report = AggregateReport(means=means, n_ok=n_ok, n_excluded=n_excluded,
                             outer_delta=outer_delta, records=records)
    if plan.out_dir is not None:
        write_outputs(plan, report)
    return report


def _fmt(x):
    return repr(float(x))


def write_outputs(plan, report):
    out = plan.out_dir
    os.makedirs(out, exist_ok=True)
    with open(os.path.join(out, "aggregate.csv"), "w", newline="",
              encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["config", "L", "scheme", "mean_min_secrecy",
                    "n_realizations", "n_excluded"])
        for key in sorted(report.means):
            config, L, scheme = key
            w.writerow([config, L, scheme, _fmt(report.means[key]),
                        report.n_ok[(config, L)], report.n_excluded[(config, L)]])
    with open(os.path.join(out, "outer_delta.csv"), "w", newline="",
              encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["config", "L", "outer_iter", "mean_fractional_increase"])
        for key in sorted(report.outer_delta):
            for i, v in enumerate(report.outer_delta[key], start=1):
                w.writerow([key[0], key[1], i, _fmt(v)])
    if plan.write_traces:
        trace_dir = os.path.join(out, "traces")
        run_dir = os.path.join(out, "runs")
        os.makedirs(trace_dir, exist_ok=True)
        os.makedirs(run_dir, exist_ok=True)
        for rec in report.records:
            if rec["ao_record"] is None:
                continue
            seed = rec["seeds"]["channel"]
            stem = f'{rec["config"]}_L{rec["L"]}_{seed}'
            with open(os.path.join(trace_dir, stem + ".csv"), "w", newline="",
                      encoding="utf-8") as fh:
                w = csv.writer(fh)
                w.writerow(["phase", "outer_iter", "sub_iter", "objective"])
                ao = rec["ao_record"]
                for outer, tr in enumerate(ao["fp_traces"], start=1):
                    for sub, v in enumerate(tr):
                        w.writerow(["fp", outer, sub, _fmt(v)])
                for outer, tr in enumerate(ao["sca_traces"], start=1):
                    for sub, v in enumerate(tr):
                        w.writerow(["sca", outer, sub, _fmt(v)])
                for i, v in enumerate(ao["outer_trace"]):
                    w.writerow(["outer", i, 0, _fmt(v)])
            with open(os.path.join(run_dir, stem + ".json"), "w",
                      encoding="utf-8") as fh:
                json.dump({**rec["ao_record"], "config": rec["config"],
                           "L": rec["L"], "seeds": rec["seeds"]},
                          fh, sort_keys=True, indent=1)
    write_manifest(plan, report)


def write_manifest(plan, report):
    scen = [dataclasses.asdict(s) for s in plan.scenarios]
    params = plan.base_params if plan.base_params is not None else SystemParams()
    manifest = {
        "package_version": __version__,
        "plan": {
            "L_values": list(plan.L_values),
            "realizations": plan.realizations,
            "seed": plan.seed,
            "baselines": [k.value for k in plan.baselines],
            "grid_q": plan.grid_q,
            "n_jobs": plan.n_jobs,
            "scenarios": scen,
        },
        "params": {k: (v if not isinstance(v, float) else float(v))
                   for k, v in dataclasses.asdict(params).items()},
        "decision_knobs": {
            "surface_link_exponent_rule":
                "alpha_irs applies to every link terminating at the surface, "
                "including the eavesdropper-surface link",
            "power_lattice_spacing": "linear watts, endpoints included",
            "leakage_transform": "inverted_ratio",
            "trust_region_default": "0.05*(L+1), Frobenius norm",
            "trace_padding": "shorter traces repeat their final value",
            "delta_alt_aggregation": "clamped at zero in aggregate curves, "
                                     "raw values in per-realization output",
            "stop_rule_zero_base": "a step from a nonpositive objective always "
                                   "counts as above tolerance (caps bound the "
                                   "work)",
        },
        "seed_derivation":
            "sha256(base:config:L:realization:stream) -> 63-bit seed; "
            "streams: channel, ao, baseline-phase",
        "n_ok": {f"{k[0]}_L{k[1]}": v for k, v in report.n_ok.items()},
        "n_excluded": {f"{k[0]}_L{k[1]}": v
                       for k, v in report.n_excluded.items()},
    }
    with open(os.path.join(plan.out_dir, "meta.json"), "w",
              encoding="utf-8") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=1)


def fp_convergence(n_pairs, L, realizations, seed, n_steps, params=None,
                   grid_q=50, scenario=None):
    """Power-loop convergence at fixed random phases (one cell).

    Returns per-iteration mean fractional increase and mean distance to
    the exhaustive-search objective (corner enumeration for one pair, a
    lattice search otherwise), with negative distances clamped to zero
    in the averaged curve.
    """
    if scenario is None:
        scenario = (default_scenario("C1") if n_pairs == 2
                    else default_scenario("custom", n_pairs=n_pairs,
                                          eve_anchor="W", irs_anchor="Z"))
    params = cell_params(scenario, L, params)
    geom = place_nodes(scenario)
    traces = []
    alt_vals = []
    for r in range(realizations):
        seeds = _realization_seeds(seed, scenario.label + f"-fp{n_pairs}", L, r)
        chs = sample_channels(geom, params, seeds["channel"])
        eff = build_effective(chs, geom)
        rng = np.random.Generator(np.random.Philox(
            np.random.SeedSequence(seeds["baseline_phase"])))
        omega = random_phase_vector(rng, eff.L)
        _, trace = fp_loop(eff, omega, None, params, max_steps=n_steps,
                           eps=-np.inf)
        traces.append(trace)
        if n_pairs == 1:
            _, alt = corner_search_power(eff, omega, params)
        else:
            _, alt = grid_search_power(eff, omega, params, grid_q)
        alt_vals.append(alt)

    length = max(len(t) for t in traces)
    padded = np.array([pad_trace(t, length) for t in traces])
    mean_delta = mean_delta_curve(traces)
    raw_alt = (np.array(alt_vals)[:, None] - padded) / np.array(alt_vals)[:, None]
    mean_delta_alt = np.maximum(raw_alt, 0.0).mean(axis=0)
    return {
        "mean_delta": mean_delta,
        "mean_delta_alt": mean_delta_alt[1:],  # after each sub-iteration
        "raw_delta_alt": raw_alt,
        "traces": traces,
        "alt_values": alt_vals,
    }


def outer_convergence(scenario, L, realizations, seed, params=None):
    """Full alternating runs on one cell; mean outer fractional increase."""
    params = cell_params(scenario, L, params)
    geom = place_nodes(scenario)
    traces = []
    failures = 0
    for r in range(realizations):
        seeds = _realization_seeds(seed, scenario.label, L, r)
        chs = sample_channels(geom, params, seeds["channel"])
        eff = build_effective(chs, geom)
        try:
            res = run_algorithm1(eff, params, seeds["ao"])
        except (SolverError, SurrogateDomainError):
            failures += 1
            continue
        traces.append(res.outer_trace)
    return {
        "mean_delta": mean_delta_curve(traces),
        "traces": traces,
        "failures": failures,
    }
