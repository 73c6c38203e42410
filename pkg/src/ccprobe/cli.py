"""Experiment runner: baselines, attacks, transfer matrix, retraining.

Commands: baseline | attack | transfer | lp-case | train | retrain |
sweep-p | gen-trace | export. The output root comes from --out, then the
CCPROBE_OUT env var, then the config's output_dir. Every CSV starts with a
provenance comment line (# config=<hash> seed=<n>) and carries no
timestamps, so reruns with identical inputs are byte-identical. Exit code
is 0 only when all invariant checks pass.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from . import advtrain
from .adversary import (AdversarySpec, DelayConstraint, FeatureBound,
                        FeatureIntercept, PerturbMode, SurfaceMode,
                        adversarial_episode, calibrate_tau,
                        random_baseline_traces, select_worst_trace,
                        train_adversary)
from .cc import RULE_BASED, Lp, make_controller
from .config import ExperimentConfig, SchemaError, load_config
from .learned import (LearnedController, PolicyNet, load_policy, save_policy,
                      train_controller)
from .metrics import build_report, dump_series_csv
from .netsim import (BandwidthTrace, SimConfig, export_mahimahi, read_trace,
                     run_episode, write_trace)
from .tracegen import (SmoothnessBudget, check_feasible, gen_burst_trace,
                       gen_random_trace, gen_unconstrained)

ALL_CONTROLLERS = tuple(RULE_BASED) + ("learned",)


# --- plumbing ----------------------------------------------------------------

def _out_dir(args, cfg: ExperimentConfig) -> str:
    root = args.out or os.environ.get("CCPROBE_OUT") or cfg.output_dir
    os.makedirs(root, exist_ok=True)
    return root


def _load_cfg(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    return cfg


def _write_csv(path: str, header: list[str], rows: list[list],
               cfg_hash: str, seed: int) -> None:
    def fmt(v):
        if isinstance(v, float):
            return f"{v:.6f}"
        return str(v)
    with open(path, "w") as f:
        f.write(f"# config={cfg_hash} seed={seed}\n")
        f.write(",".join(header) + "\n")
        for row in rows:
            f.write(",".join(fmt(v) for v in row) + "\n")


def _build_traces(cfg: ExperimentConfig) -> list[BandwidthTrace]:
    t = cfg.traces
    iv = cfg.sim.trace_interval_ms
    length = cfg.sim.n_intervals
    if t.source == "random":
        return random_baseline_traces(cfg.budget, t.n, length, iv, cfg.seed)
    if t.source == "constant":
        return [BandwidthTrace(iv, [t.constant_mbps] * length)]
    if t.source == "burst":
        return [gen_burst_trace(length, t.peak, t.trough, t.rise_intervals,
                                t.fall_intervals, interval_ms=iv)]
    return [read_trace(p) for p in t.paths]


def _make_factory(name: str, constants: dict, checkpoint: str | None,
                  b_max: float):
    if name == "learned":
        if checkpoint is None:
            raise SystemExit("learned controller requires --checkpoint")
        policy = load_policy(checkpoint)
        return lambda: LearnedController(policy, b_max=b_max)
    return lambda: make_controller(name, **constants)


def _run_job(job: dict) -> dict:
    """One episode end-to-end; module-level so worker processes can run it."""
    sim = SimConfig(**job["sim"])
    trace = BandwidthTrace(job["interval_ms"], job["values"])
    if job["controller"] == "learned":
        policy = load_policy(job["checkpoint"])
        ctl = LearnedController(policy, b_max=job["b_max"])
    else:
        ctl = make_controller(job["controller"], **job.get("constants", {}))
    log = run_episode(sim, trace, ctl)
    rep = build_report(log)
    return {"utilization": rep.utilization, "mean_delay_ms": rep.mean_delay_ms,
            "p95_delay_ms": rep.p95_delay_ms, "dropped": log.dropped,
            "json": rep.to_json()}


def _map_jobs(jobs: list[dict], workers: int) -> list[dict]:
    if workers <= 1:
        return [_run_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_job, jobs))


def _episode_jobs(controllers, traces, cfg: ExperimentConfig, checkpoint,
                  setting: str) -> tuple[list[dict], list[tuple]]:
    jobs, keys = [], []
    for name in controllers:
        for ti, trace in enumerate(traces):
            for rep in range(cfg.repetitions):
                sim = {**cfg.sim.__dict__, "rng_seed": cfg.seed + rep}
                jobs.append({"sim": sim, "interval_ms": trace.interval_ms,
                             "values": list(trace.values), "controller": name,
                             "constants": cfg.controller_constants if name == cfg.controller else {},
                             "checkpoint": checkpoint, "b_max": cfg.reward.b_max})
                keys.append((name, setting, ti, rep))
    return jobs, keys


def _mean(xs):
    return sum(xs) / len(xs)


# --- commands ----------------------------------------------------------------

def cmd_baseline(args) -> int:
    cfg = _load_cfg(args)
    out = _out_dir(args, cfg)
    controllers = (args.controllers.split(",") if args.controllers
                   else [c for c in ALL_CONTROLLERS
                         if c != "learned" or args.checkpoint])
    settings = []
    if args.setting in ("clean", "both"):
        iv = cfg.sim.trace_interval_ms
        const = BandwidthTrace(iv, [cfg.traces.constant_mbps] * cfg.sim.n_intervals)
        settings.append(("clean", [const]))
    if args.setting in ("random", "both"):
        settings.append(("random", _build_traces_random(cfg)))

    jobs, keys = [], []
    for setting, traces in settings:
        j, k = _episode_jobs(controllers, traces, cfg, args.checkpoint, setting)
        jobs += j
        keys += k
    results = _map_jobs(jobs, args.workers)

    rows = []
    for name in controllers:
        for setting, _ in settings:
            got = [r for r, key in zip(results, keys)
                   if key[0] == name and key[1] == setting]
            rows.append([name, setting,
                         _mean([g["utilization"] for g in got]),
                         _mean([g["mean_delay_ms"] for g in got]),
                         _mean([g["p95_delay_ms"] for g in got])])
    _write_csv(os.path.join(out, "baseline.csv"),
               ["model", "setting", "utilization", "delay_ms", "p95_ms"],
               rows, cfg.config_hash(), cfg.seed)
    with open(os.path.join(out, "baseline_episodes.jsonl"), "w") as f:
        for key, r in zip(keys, results):
            f.write(f'{{"key": "{key[0]}/{key[1]}/t{key[2]}/r{key[3]}", '
                    f'"report": {r["json"].replace(chr(10), " ")}}}\n')
    print(f"wrote {out}/baseline.csv ({len(rows)} rows, {len(jobs)} episodes)")
    return 0


def _build_traces_random(cfg: ExperimentConfig) -> list[BandwidthTrace]:
    return random_baseline_traces(cfg.budget, cfg.traces.n, cfg.sim.n_intervals,
                                  cfg.sim.trace_interval_ms, cfg.seed)


def cmd_attack(args) -> int:
    cfg = _load_cfg(args)
    out = _out_dir(args, cfg)
    adv = cfg.adversary
    target = args.controller or cfg.controller
    factory = _make_factory(target, cfg.controller_constants, args.checkpoint,
                            cfg.reward.b_max)
    baseline_traces = _build_traces_random(cfg)

    tau = adv.tau_ms
    if tau is None and adv.reward_mode == "delay_constrained":
        tau = calibrate_tau(factory, baseline_traces, cfg.sim, cfg.repetitions)
        print(f"calibrated tau = {tau:.3f} ms")
    constraint = DelayConstraint(tau_ms=tau or 0.0, alpha=adv.alpha,
                                 window_h=adv.window_h, window_k=adv.window_k)
    if adv.surface == "feature":
        spec = AdversarySpec(surface=SurfaceMode.FEATURE_MIN_RTT,
                             reward_mode=adv.reward_enum(),
                             constraint=constraint,
                             feature_bound=FeatureBound(adv.x_fraction,
                                                        adv.perturb_enum()))
    else:
        spec = AdversarySpec(surface=SurfaceMode.ENV_BANDWIDTH,
                             reward_mode=adv.reward_enum(),
                             constraint=constraint, budget=cfg.budget)

    policy, history = train_adversary(spec, factory, cfg.sim, adv.episodes,
                                      cfg.reward, cfg.train.cem(cfg.seed),
                                      clean_traces=baseline_traces)
    import dataclasses
    spec = dataclasses.replace(spec, policy=policy)
    _write_csv(os.path.join(out, f"adv_train_{target}.csv"),
               ["generation", "elite_mean", "best_return",
                "constraint_satisfaction_rate"],
               [[h.generation, h.elite_mean, h.best_return,
                 h.constraint_satisfaction_rate] for h in history],
               cfg.config_hash(), cfg.seed)
    save_policy(policy, os.path.join(out, f"adv_policy_{target}.ckpt"),
                feature_names=tuple(f"f{i}" for i in range(policy.n_features)))

    # baseline numbers for the delta columns
    base_evals = []
    for trace in baseline_traces:
        for rep in range(cfg.repetitions):
            sim = SimConfig(**{**cfg.sim.__dict__, "rng_seed": cfg.seed + rep,
                               "record_acks": False})
            log = run_episode(sim, trace, factory())
            base_evals.append((log.mean_utilization(), log.mean_queuing_delay_ms()))
    base_util = _mean([u for u, _ in base_evals])
    base_delay = _mean([d for _, d in base_evals])

    ok = True
    rows = [[target, "baseline", base_util, base_delay, 0.0, 0.0]]
    if adv.surface == "env":
        worst = select_worst_trace(spec, policy, factory, cfg.sim, cfg.reward,
                                   n_rollouts=adv.rollouts, seed=cfg.seed)
        if worst is None:
            print("no rollout satisfied the delay constraint", file=sys.stderr)
            return 1
        trace = BandwidthTrace(cfg.sim.trace_interval_ms, worst.values)
        if not check_feasible(trace.values, cfg.budget):
            print("selected trace violates the smoothness budget", file=sys.stderr)
            ok = False
        write_trace(trace, os.path.join(out, f"worst_{target}.trace"))
        rows.append([target, "attack", worst.utilization, worst.mean_delay_ms,
                     worst.utilization - base_util,
                     worst.mean_delay_ms - base_delay])
    else:
        evals = []
        for i, trace in enumerate(baseline_traces):
            ev = adversarial_episode(spec, None, factory, cfg.sim, cfg.reward,
                                     seed=i, clean_traces=baseline_traces)
            evals.append(ev)
        util = _mean([e.utilization for e in evals])
        delay = _mean([e.mean_delay_ms for e in evals])
        rows.append([target, "attack", util, delay,
                     util - base_util, delay - base_delay])
    _write_csv(os.path.join(out, f"attack_{target}.csv"),
               ["model", "condition", "utilization", "delay_ms",
                "util_delta", "delay_delta"],
               rows, cfg.config_hash(), cfg.seed)
    print(f"wrote {out}/attack_{target}.csv")
    return 0 if ok else 1


def cmd_transfer(args) -> int:
    cfg = _load_cfg(args)
    out = _out_dir(args, cfg)
    trace_files = sorted(
        f for f in os.listdir(args.traces) if f.endswith(".trace"))
    if len(trace_files) < 2:
        print("transfer needs >= 2 worst-trace artifacts", file=sys.stderr)
        return 1
    named = []
    for fn in trace_files:
        name = fn[len("worst_"):-len(".trace")] if fn.startswith("worst_") else fn[:-6]
        named.append((name, read_trace(os.path.join(args.traces, fn))))
    controllers = (args.controllers.split(",") if args.controllers
                   else [c for c in ALL_CONTROLLERS
                         if c != "learned" or args.checkpoint])

    jobs, keys = [], []
    for src, trace in named:
        for ctl in controllers:
            for rep in range(cfg.repetitions):
                sim = {**cfg.sim.__dict__, "rng_seed": cfg.seed + rep}
                jobs.append({"sim": sim, "interval_ms": trace.interval_ms,
                             "values": list(trace.values), "controller": ctl,
                             "constants": {}, "checkpoint": args.checkpoint,
                             "b_max": cfg.reward.b_max})
                keys.append((src, ctl, rep))
    results = _map_jobs(jobs, args.workers)

    cells = {}
    for (src, ctl, _), r in zip(keys, results):
        cells.setdefault((src, ctl), []).append(r)
    col_min = {}
    for ctl in controllers:
        utils = {src: _mean([x["utilization"] for x in cells[(src, ctl)]])
                 for src, _ in named}
        col_min[ctl] = min(utils, key=utils.get)
    rows = []
    for src, _ in named:
        for ctl in controllers:
            got = cells[(src, ctl)]
            rows.append([src, ctl,
                         _mean([x["utilization"] for x in got]),
                         _mean([x["mean_delay_ms"] for x in got]),
                         int(src == ctl), int(col_min[ctl] == src)])
    _write_csv(os.path.join(out, "transfer.csv"),
               ["trace_target", "controller", "utilization", "delay_ms",
                "diagonal", "column_min"],
               rows, cfg.config_hash(), cfg.seed)
    print(f"wrote {out}/transfer.csv ({len(named)}x{len(controllers)} cells)")
    return 0


def cmd_lp_case(args) -> int:
    cfg = _load_cfg(args)
    out = _out_dir(args, cfg)
    t = cfg.traces
    trace = gen_burst_trace(cfg.sim.n_intervals, t.peak, t.trough,
                            t.rise_intervals, t.fall_intervals,
                            interval_ms=cfg.sim.trace_interval_ms)
    write_trace(trace, os.path.join(out, "burst.trace"))

    # the comparison sender starts converged (ssthresh at the peak-rate BDP)
    # so its episode stays loss-free and only loss signals could back it off
    peak_bdp = (t.peak * 1e6 / 8.0 * cfg.sim.base_rtt_ms / 1000.0
                / cfg.sim.packet_size)
    comparison = dict(cfg.controller_constants)
    comparison.setdefault("initial_ssthresh", peak_bdp)

    names = ["lp", "reno"] + (["learned"] if args.checkpoint else [])
    rows = []
    checks = []
    for name in names:
        constants = comparison if name == "reno" else {}
        ctl = _make_factory(name, constants, args.checkpoint, cfg.reward.b_max)()
        log = run_episode(SimConfig(**{**cfg.sim.__dict__, "rng_seed": cfg.seed}),
                          trace, ctl)
        rep = build_report(log)
        n_ind = len(getattr(ctl, "backoffs", []))
        rows.append([name, rep.utilization, rep.mean_delay_ms, n_ind, log.dropped])
        dump_series_csv(log, os.path.join(out, f"lp_case_{name}.csv"))
        if name == "lp":
            checks.append(("lp emits >= 1 early-congestion indication", n_ind >= 1))
            lp_util = rep.utilization
        if name == "reno":
            checks.append(("reno sees a loss-free episode", log.dropped == 0))
            checks.append(("reno performs zero backoffs", n_ind == 0))
        if name == "learned":
            checks.append(("learned utilization exceeds lp's", rep.utilization > lp_util))
    _write_csv(os.path.join(out, "lp_case.csv"),
               ["model", "utilization", "delay_ms", "indications", "dropped"],
               rows, cfg.config_hash(), cfg.seed)
    ok = True
    for label, passed in checks:
        print(f"[{'ok' if passed else 'FAIL'}] {label}")
        ok = ok and passed
    return 0 if ok else 1


def cmd_train(args) -> int:
    cfg = _load_cfg(args)
    out = _out_dir(args, cfg)
    traces = _build_traces(cfg)
    policy = PolicyNet(n_features=5, hidden=cfg.train.hidden,
                       a_max=cfg.train.a_max)
    episodes = args.episodes or cfg.train.episodes
    policy, log_rows = train_controller(policy, traces, episodes, cfg.sim,
                                        cfg.reward, cfg.train.cem(cfg.seed))
    ckpt = args.checkpoint_out or os.path.join(out, "learned.ckpt")
    save_policy(policy, ckpt)
    _write_csv(os.path.join(out, "train_log.csv"),
               ["generation", "elite_mean", "best_return"],
               [[r.generation, r.elite_mean, r.best_return] for r in log_rows],
               cfg.config_hash(), cfg.seed)
    suite = advtrain.evaluate_suite(policy, {"train_pool": traces}, cfg.sim,
                                    cfg.reward, cfg.repetitions)
    for row in suite:
        print(f"{row.trace_set}: util={row.utilization:.4f} "
              f"delay={row.mean_delay_ms:.2f}ms")
    print(f"wrote {ckpt}")
    return 0


def _load_pool_dir(path: str) -> list[BandwidthTrace]:
    files = sorted(f for f in os.listdir(path) if f.endswith(".trace"))
    return [read_trace(os.path.join(path, f)) for f in files]


def cmd_retrain(args) -> int:
    cfg = _load_cfg(args)
    out = _out_dir(args, cfg)
    policy = load_policy(args.init)
    benign = (_load_pool_dir(args.pool_benign) if args.pool_benign
              else _build_traces_random(cfg))
    adversarial = _load_pool_dir(args.pool_adv) if args.pool_adv else []
    mix_p = cfg.train.mix_p if args.mix_p is None else args.mix_p
    pool = advtrain.TracePool(benign=benign, adversarial=adversarial,
                              mix_p=mix_p)
    episodes = args.episodes or cfg.train.episodes
    new_policy, _ = advtrain.adversarial_retrain(policy, pool, episodes,
                                                 cfg.sim, cfg.reward,
                                                 cfg.train.cem(cfg.seed))
    ckpt = args.checkpoint_out or os.path.join(out, "retrained.ckpt")
    save_policy(new_policy, ckpt)
    sets = {"random_baseline": benign}
    if adversarial:
        sets["adversarial"] = adversarial
    rows = []
    for tag, pol in [("before", policy), ("after", new_policy)]:
        for srow in advtrain.evaluate_suite(pol, sets, cfg.sim, cfg.reward,
                                            cfg.repetitions):
            rows.append([tag, srow.trace_set, srow.utilization,
                         srow.mean_delay_ms])
    _write_csv(os.path.join(out, "retrain_eval.csv"),
               ["stage", "trace_set", "utilization", "delay_ms"],
               rows, cfg.config_hash(), cfg.seed)
    print(f"wrote {ckpt} and {out}/retrain_eval.csv")
    return 0


P_GRID = (0.0, 0.1, 0.2, 0.5, 0.8, 1.0)


def cmd_sweep_p(args) -> int:
    cfg = _load_cfg(args)
    out = _out_dir(args, cfg)
    policy = load_policy(args.init)
    benign = (_load_pool_dir(args.pool_benign) if args.pool_benign
              else _build_traces_random(cfg))
    adversarial = _load_pool_dir(args.pool_adv)
    episodes = args.episodes or cfg.train.episodes
    rows = []
    for p in P_GRID:
        pool = advtrain.TracePool(
            benign=benign if p < 1 else [],
            adversarial=adversarial if p > 0 else [], mix_p=p)
        new_policy, _ = advtrain.adversarial_retrain(
            policy, pool, episodes, cfg.sim, cfg.reward, cfg.train.cem(cfg.seed))
        suite = advtrain.evaluate_suite(
            new_policy, {"random_baseline": benign, "adversarial": adversarial},
            cfg.sim, cfg.reward, cfg.repetitions)
        by = {s.trace_set: s for s in suite}
        rows.append([p, by["random_baseline"].utilization,
                     by["random_baseline"].mean_delay_ms,
                     by["adversarial"].utilization,
                     by["adversarial"].mean_delay_ms])
        print(f"p={p}: random util={rows[-1][1]:.4f} adv util={rows[-1][3]:.4f}")
    _write_csv(os.path.join(out, "sweep_p.csv"),
               ["mix_p", "random_util", "random_delay_ms",
                "adv_util", "adv_delay_ms"],
               rows, cfg.config_hash(), cfg.seed)
    return 0


def cmd_gen_trace(args) -> int:
    cfg = _load_cfg(args)
    out = _out_dir(args, cfg)
    budget = SmoothnessBudget(delta=args.delta, window_k=args.window_k,
                              bw_min=args.bw_min, bw_max=args.bw_max)
    iv = cfg.sim.trace_interval_ms
    ok = True
    for i in range(args.n):
        if args.mode == "random":
            trace = gen_random_trace(args.length, budget, seed=cfg.seed + i,
                                     interval_ms=iv)
            if not check_feasible(trace.values, budget):
                print(f"trace {i} failed the budget check", file=sys.stderr)
                ok = False
        elif args.mode == "unconstrained":
            trace = gen_unconstrained(args.length, args.bw_min, args.bw_max,
                                      seed=cfg.seed + i, interval_ms=iv)
        else:
            trace = gen_burst_trace(args.length, interval_ms=iv)
        write_trace(trace, os.path.join(out, f"trace_{i:03d}.trace"))
    print(f"wrote {args.n} trace(s) to {out}")
    return 0 if ok else 1


def cmd_export(args) -> int:
    trace = read_trace(args.trace)
    export_mahimahi(trace, args.dest)
    print(f"wrote {args.dest}")
    return 0


# --- argument parsing --------------------------------------------------------

def _common(p):
    p.add_argument("--config", help="YAML experiment config")
    p.add_argument("--out", help="output directory (overrides CCPROBE_OUT)")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--workers", type=int, default=1,
                   help="episode worker pool size")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ccprobe",
                                 description=__doc__.split("\n")[0])
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("baseline", help="clean/random-trace controller baselines")
    _common(p)
    p.add_argument("--controllers", help="comma-separated controller names")
    p.add_argument("--setting", choices=["clean", "random", "both"],
                   default="both")
    p.add_argument("--checkpoint", help="learned-controller checkpoint")
    p.set_defaults(fn=cmd_baseline)

    p = sub.add_parser("attack", help="train the adversary against one target")
    _common(p)
    p.add_argument("--controller", help="target controller name")
    p.add_argument("--checkpoint", help="learned-controller checkpoint")
    p.set_defaults(fn=cmd_attack)

    p = sub.add_parser("transfer", help="cross-controller trace transfer matrix")
    _common(p)
    p.add_argument("--traces", required=True,
                   help="directory of worst_<target>.trace artifacts")
    p.add_argument("--controllers")
    p.add_argument("--checkpoint")
    p.set_defaults(fn=cmd_transfer)

    p = sub.add_parser("lp-case", help="burst-trace early-congestion case study")
    _common(p)
    p.add_argument("--checkpoint", help="include the learned controller")
    p.set_defaults(fn=cmd_lp_case)

    p = sub.add_parser("train", help="train the learned controller")
    _common(p)
    p.add_argument("--episodes", type=int)
    p.add_argument("--checkpoint-out")
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("retrain", help="continue training on a mixed pool")
    _common(p)
    p.add_argument("--init", required=True, help="starting checkpoint")
    p.add_argument("--mix-p", type=float)
    p.add_argument("--pool-benign", help="directory of benign .trace files")
    p.add_argument("--pool-adv", help="directory of adversarial .trace files")
    p.add_argument("--episodes", type=int)
    p.add_argument("--checkpoint-out")
    p.set_defaults(fn=cmd_retrain)

    p = sub.add_parser("sweep-p", help="mixing-probability sweep")
    _common(p)
    p.add_argument("--init", required=True)
    p.add_argument("--pool-benign")
    p.add_argument("--pool-adv", required=True)
    p.add_argument("--episodes", type=int)
    p.set_defaults(fn=cmd_sweep_p)

    p = sub.add_parser("gen-trace", help="generate bandwidth traces")
    _common(p)
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--length", type=int, default=600)
    p.add_argument("--mode", choices=["random", "unconstrained", "burst"],
                   default="random")
    p.add_argument("--delta", type=float, default=48.0)
    p.add_argument("--window-k", type=int, default=1)
    p.add_argument("--bw-min", type=float, default=1.0)
    p.add_argument("--bw-max", type=float, default=96.0)
    p.set_defaults(fn=cmd_gen_trace)

    p = sub.add_parser("export", help="convert a trace to mahimahi format")
    p.add_argument("--trace", required=True)
    p.add_argument("--dest", required=True)
    p.set_defaults(fn=cmd_export)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (SchemaError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
