"""Batch command line: run sweeps, dump single-realization traces,
self-validate the numerical kernels.

    irs-secrecy run --config C1 --L 10,20 --realizations 10 --out results/
    irs-secrecy run --scenario my_scenario.ini
    irs-secrecy trace --config C1 --L 20 --mode fp --grid-reference --out tr/
    irs-secrecy validate
"""

import argparse
import csv
import json
import os
import sys

import numpy as np

from .ao import run_algorithm1
from .baselines import BaselineKind, grid_search_power
from .channel import build_effective, sample_channels
from .experiments import (RunPlan, cell_params, fp_convergence,
                          outer_convergence, run_plan, _realization_seeds)
from .geometry import default_scenario, load_scenario, place_nodes
from .phase_opt import sca_loop, sca_start, sca_step
from .power_opt import fp_loop, fp_start_from_gains, fp_step_from_gains
from .rates import breakdown_from_gains, phase_gains, random_phase_vector
from .util import fractional_increase


def _scenario_from_args(args):
    if args.scenario:
        return load_scenario(args.scenario)
    return default_scenario(args.config)


def _parse_baselines(text):
    names = [t.strip() for t in text.split(",") if t.strip()]
    return tuple(BaselineKind(n) for n in names)


def _cmd_run(args):
    scenario = _scenario_from_args(args)
    run_defaults = dict(scenario.run_defaults)
    L_text = args.L or run_defaults.get("l", "20")
    L_values = tuple(int(x) for x in str(L_text).split(","))
    realizations = args.realizations or int(run_defaults.get("realizations", 50))
    seed = args.seed if args.seed is not None else int(run_defaults.get("seed", 1))
    baselines = _parse_baselines(
        args.baselines or run_defaults.get("baselines", "random-opt"))
    out = args.out or run_defaults.get("out", "results")
    plan = RunPlan(scenarios=(scenario,), L_values=L_values,
                   realizations=realizations, seed=seed, baselines=baselines,
                   out_dir=out, write_traces=args.traces, grid_q=args.grid_q,
                   n_jobs=args.jobs)
    report = run_plan(plan)
    for key in sorted(report.means):
        config, L, scheme = key
        print(f"{config} L={L} {scheme}: mean min-secrecy "
              f"{report.means[key]:.4f} bits "
              f"({report.n_ok[(config, L)]} ok, "
              f"{report.n_excluded[(config, L)]} excluded)")
    print(f"outputs written to {out}/")
    return 0


def _cmd_trace(args):
    scenario = _scenario_from_args(args)
    L = int(args.L)
    params = cell_params(scenario, L)
    geom = place_nodes(scenario)
    seeds = _realization_seeds(args.seed, scenario.label, L, args.realization)
    chs = sample_channels(geom, params, seeds["channel"])
    eff = build_effective(chs, geom)
    os.makedirs(args.out, exist_ok=True)
    stem = f"{scenario.label}_L{L}_{seeds['channel']}"

    if args.mode == "fp":
        rng = np.random.Generator(np.random.Philox(
            np.random.SeedSequence(seeds["baseline_phase"])))
        omega = random_phase_vector(rng, eff.L)
        gains = phase_gains(eff, omega)
        ref_P = ref_val = None
        if args.grid_reference:
            ref_P, ref_val = grid_search_power(eff, omega, params, args.grid_q)
        path = os.path.join(args.out, f"fp_{stem}.csv")
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            n = eff.n_users
            header = (["sub_iter", "objective"]
                      + [f"C_{j}" for j in range(1, eff.n_pairs + 1)]
                      + [f"P_frac_{i}" for i in range(1, n + 1)])
            if ref_val is not None:
                header += (["grid_objective"]
                           + [f"grid_P_frac_{i}" for i in range(1, n + 1)])
            w.writerow(header)

            def row(state):
                bd = breakdown_from_gains(gains, state.P_hat, params)
                vals = ([state.iteration, repr(state.objective)]
                        + [repr(float(c)) for c in bd.secrecy]
                        + [repr(float(p / params.Pmax)) for p in state.P_hat])
                if ref_val is not None:
                    vals += ([repr(float(ref_val))]
                             + [repr(float(p / params.Pmax)) for p in ref_P])
                w.writerow(vals)

            state = fp_start_from_gains(gains, np.full(n, params.Pmax), params)
            row(state)
            for _ in range(args.steps):
                state = fp_step_from_gains(gains, state, params)
                row(state)
        print(f"wrote {path}")
    elif args.mode == "sca":
        P = np.full(eff.n_users, params.Pmax)
        rng = np.random.Generator(np.random.Philox(
            np.random.SeedSequence(seeds["ao"])))
        omega0 = random_phase_vector(rng, eff.L)
        W0 = np.outer(omega0, omega0.conj())
        path = os.path.join(args.out, f"sca_{stem}.csv")
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["sub_iter", "min_pair_value", "solver_status"])
            state = sca_start(eff, P, W0, params)
            w.writerow([0, repr(state.objective), ""])
            for _ in range(args.steps):
                state = sca_step(eff, P, state, params)
                w.writerow([state.iteration, repr(state.objective),
                            state.statuses[-1]])
        print(f"wrote {path}")
    else:  # ao
        res = run_algorithm1(eff, params, seeds["ao"])
        path = os.path.join(args.out, f"ao_{stem}.json")
        with open(path, "w", encoding="utf-8") as fh:
            json.dump({**res.to_record(), "config": scenario.label, "L": L,
                       "seeds": seeds}, fh, sort_keys=True, indent=1)
        print(f"wrote {path}; min secrecy {res.min_secrecy:.4f} bits")
    return 0


def _check(name, fn):
    try:
        ok, detail = fn()
    except Exception as exc:  # a failing oracle must not stop the others
        ok, detail = False, f"exception: {exc}"
    print(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")
    return ok


def _cmd_validate(args):
    from .phase_opt import grad_S, s_value, taylor_upper_bound
    from .power_opt import surrogate_f, update_aux
    from .rates import secrecy_breakdown, trace_form_G

    scenario = default_scenario("C1")
    params = cell_params(scenario, 8)
    geom = place_nodes(scenario)

    def instance(seed):
        chs = sample_channels(geom, params, seed)
        eff = build_effective(chs, geom)
        rng = np.random.default_rng(seed)
        omega = random_phase_vector(rng, eff.L)
        P = rng.uniform(params.Pmin, params.Pmax, eff.n_users)
        return eff, omega, P, rng

    def sdr_consistency():
        worst = 0.0
        for seed in range(10):
            eff, omega, P, _ = instance(seed)
            W = np.outer(omega, omega.conj())
            bd = secrecy_breakdown(eff, P, omega, params)
            for j in range(1, eff.n_pairs + 1):
                g = trace_form_G(eff, P, W, j, params)
                worst = max(worst, abs(g - bd.secrecy_unclamped[j - 1]))
        return worst <= 1e-9, f"max |G - C| = {worst:.2e}"

    def gradient_fd():
        worst = 0.0
        for seed in range(3):
            eff, omega, P, rng = instance(seed)
            W = np.outer(omega, omega.conj()) + 0.1 * np.eye(eff.L + 1)
            G = grad_S(eff, P, W, 1, params)
            for _ in range(4):
                D = rng.normal(size=W.shape) + 1j * rng.normal(size=W.shape)
                D = 0.5 * (D + D.conj().T)
                h = 1e-6
                fd = (s_value(eff, P, W + h * D, 1, params)
                      - s_value(eff, P, W - h * D, 1, params)) / (2 * h)
                an = float(np.real(np.vdot(G, D)))
                worst = max(worst, abs(fd - an) / max(abs(an), 1e-12))
        return worst < 1e-5, f"max rel err = {worst:.2e}"

    def taylor():
        worst = -np.inf
        for seed in range(5):
            eff, omega, P, rng = instance(seed)
            W_hat = np.outer(omega, omega.conj())
            for _ in range(20):
                v = random_phase_vector(rng, eff.L)
                W = np.outer(v, v.conj())
                bound = taylor_upper_bound(eff, P, W, W_hat, 1, params)
                worst = max(worst, s_value(eff, P, W, 1, params) - bound)
        return worst <= 1e-10, f"max S - bound = {worst:.2e}"

    def fp_tightness():
        worst = 0.0
        for seed in range(10):
            eff, omega, P, _ = instance(seed)
            aux = update_aux(eff, P, omega, params)
            bd = secrecy_breakdown(eff, P, omega, params)
            for j in range(1, eff.n_pairs + 1):
                f = surrogate_f(eff, P, omega, aux, j, params)
                worst = max(worst, abs(f - bd.secrecy_unclamped[j - 1]))
        return worst <= 1e-9, f"max |f - C| = {worst:.2e}"

    def determinism():
        eff, omega, P, _ = instance(0)
        r1 = run_algorithm1(eff, params, 123)
        r2 = run_algorithm1(eff, params, 123)
        same = (np.array_equal(r1.phase_angles, r2.phase_angles)
                and np.array_equal(r1.powers, r2.powers)
                and r1.min_secrecy == r2.min_secrecy)
        return same, "identical outputs under equal seeds"

    checks = [
        ("trace-form equals unclamped pair value", sdr_consistency),
        ("analytic gradient matches finite differences", gradient_fd),
        ("linearization upper-bounds the concave term", taylor),
        ("transformed pair value tight at refreshed auxiliaries", fp_tightness),
        ("alternating run deterministic under equal seeds", determinism),
    ]
    results = [_check(name, fn) for name, fn in checks]
    return 0 if all(results) else 1


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="irs-secrecy",
        description="Max-min secrecy optimization experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="Monte Carlo sweep")
    p_run.add_argument("--scenario", help="scenario file path")
    p_run.add_argument("--config", default="C1",
                       choices=["C1", "C2", "C3", "C4"],
                       help="named default configuration")
    p_run.add_argument("--L", help="comma-separated surface sizes")
    p_run.add_argument("--realizations", type=int)
    p_run.add_argument("--seed", type=int)
    p_run.add_argument("--baselines",
                       help="comma-separated scheme names "
                            "(random-opt,random-pmax,random-pmin,"
                            "noirs-opt,noirs-pmax,noirs-pmin,grid,corner)")
    p_run.add_argument("--out")
    p_run.add_argument("--grid-q", type=int, default=50)
    p_run.add_argument("--jobs", type=int, default=1)
    p_run.add_argument("--traces", action="store_true",
                       help="write per-realization trace files")
    p_run.set_defaults(fn=_cmd_run)

    p_tr = sub.add_parser("trace", help="single-realization full traces")
    p_tr.add_argument("--scenario")
    p_tr.add_argument("--config", default="C1",
                      choices=["C1", "C2", "C3", "C4"])
    p_tr.add_argument("--L", default="20")
    p_tr.add_argument("--seed", type=int, default=1)
    p_tr.add_argument("--realization", type=int, default=0)
    p_tr.add_argument("--mode", choices=["fp", "sca", "ao"], default="ao")
    p_tr.add_argument("--steps", type=int, default=40)
    p_tr.add_argument("--grid-reference", action="store_true",
                      help="append exhaustive-search reference columns")
    p_tr.add_argument("--grid-q", type=int, default=50)
    p_tr.add_argument("--out", default="traces")
    p_tr.set_defaults(fn=_cmd_trace)

    p_val = sub.add_parser("validate", help="run the oracle self-checks")
    p_val.set_defaults(fn=_cmd_validate)

    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
