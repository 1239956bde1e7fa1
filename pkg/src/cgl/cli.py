"""Command-line entry point: benchmarks, planning, the property suite and maps.

Exit codes: 0 success, 1 a property check failed, 2 usage or config error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import replace
from typing import Optional, Sequence

import numpy as np

from cgl.bench import METHODS, ExperimentConfig, run_am_experiment, run_grid_benchmark
from cgl.checks import run_checks
from cgl.envs import AmProcess, AmProcessSpec, GridWorld, GridWorldSpec, am_priors, gridworld_new, gridworld_priors
from cgl.io import FORMATS, ConfigError, default_config, dump_config, emit_results, load_config, summary_records
from cgl.planner import ConvergenceError, bfs_shortest, greedy_policy, greedy_rollout, solve_fixed_point

EXIT_OK, EXIT_CHECK_FAILED, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.split(",") if x)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _str_list(text: str) -> tuple[str, ...]:
    return tuple(x.strip() for x in text.split(",") if x.strip())


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="cgl", description="Prior-regularized tabular learners, benchmarks and planners.")
    p.add_argument("--config", help="JSON run configuration")
    p.add_argument("--seed", type=int, help="base seed for every random stream")
    p.add_argument("--format", choices=FORMATS, default="csv", help="output format for tables")
    p.add_argument("--dump-config", action="store_true", help="print the effective configuration and exit")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    bench = sub.add_parser("bench", help="seeded multi-replication benchmarks")
    bsub = bench.add_subparsers(dest="target", parser_class=_Parser)
    grid = bsub.add_parser("grid", help="gridworld benchmark")
    grid.add_argument("--size", type=_int_list, help="grid side(s), e.g. 6 or 6,7,8")
    grid.add_argument("--case", type=_str_list, help="prior case(s): a, b or a,b")
    grid.add_argument("--reps", type=int, help="replications")
    grid.add_argument("--episodes", type=int, help="episodes per replication")
    grid.add_argument("--methods", type=_str_list, help=f"subset of {','.join(METHODS)}")
    grid.add_argument("--layout", choices=("consistent", "literal"))
    grid.add_argument("--out", help="directory for result files (default: print summary)")
    grid.add_argument("--no-svg", action="store_true", help="skip curves.svg")
    am = bsub.add_parser("am", help="mock AM transfer experiments")
    am.add_argument("--experiment", type=_int_list, help="experiment id(s) 1, 2, 3")
    am.add_argument("--reps", type=int, help="replications")
    am.add_argument("--out", help="directory for result files (default: print summary)")
    am.add_argument("--no-svg", action="store_true", help="skip curves.svg")

    plan = sub.add_parser("plan", help="solve the soft fixed point of a built-in environment")
    plan.add_argument("--env", required=True, help="grid:N:a|b or am:g1|g2")
    plan.add_argument("--csv", help="also write CG* to this CSV file")

    sub.add_parser("check", help="randomized property suite").add_argument(
        "--trials", type=int, default=1000, help="trials per property")

    render = sub.add_parser("render", help="ASCII map of an environment and its priors")
    render.add_argument("--env", required=True, help="grid:N:a|b or am:g1|g2")
    render.add_argument("--prior", choices=("offline", "online", "none"), default="offline")
    return p


def _effective_config(args, env: str) -> ExperimentConfig:
    if args.config:
        cfg = load_config(args.config)
        if cfg.env != env:
            raise UsageError(f"config is for env {cfg.env!r} but the command runs {env!r}")
    else:
        cfg = default_config(env)
    if args.seed is not None:
        cfg = replace(cfg, hp=replace(cfg.hp, seed=args.seed))
    if args.command != "bench":
        return cfg
    hp_over, over = {}, {}
    if getattr(args, "reps", None) is not None:
        hp_over["replications"] = args.reps
    if getattr(args, "episodes", None) is not None:
        hp_over["episodes"] = args.episodes
    for flag, key in (("size", "sizes"), ("case", "cases"), ("methods", "methods"),
                      ("layout", "layout"), ("experiment", "experiments")):
        v = getattr(args, flag, None)
        if v is not None:
            over[key] = v
    try:
        return replace(cfg, hp=replace(cfg.hp, **hp_over), **over)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _parse_env(text: str):
    """'grid:N:a|b' or 'am:g1|g2' -> (env, priors)."""
    parts = text.lower().split(":")
    if parts[0] == "grid" and len(parts) == 3:
        try:
            spec = GridWorldSpec(int(parts[1]), parts[2])
        except ValueError as exc:
            raise UsageError(f"bad grid env {text!r}: {exc}") from exc
        return gridworld_new(spec), gridworld_priors(spec)
    if parts[0] == "am" and len(parts) == 2 and parts[1] in ("g1", "g2"):
        g = parts[1].upper()
        env = AmProcess(AmProcessSpec(g))
        priors = (am_priors(g, "offline"),) if g == "G1" else (am_priors(g, "offline"), am_priors(g, "online"))
        return env, priors
    raise UsageError(f"--env must be grid:N:a|b or am:g1|g2, got {text!r}")


def _print_summary(cfg_result, fmt: str, out) -> None:
    recs = summary_records(cfg_result)
    if fmt == "json":
        out.write(json.dumps(recs, indent=1) + "\n")
        return
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["method", "case", "size", "mean_total", "sd_total"])
    for r in recs:
        w.writerow([r["method"], r["case"], r["size"], f"{r['mean_total']:.17g}", f"{r['sd_total']:.17g}"])


def _cmd_bench(args, out) -> int:
    if args.target is None:
        raise UsageError("bench needs a target: grid or am")
    cfg = _effective_config(args, args.target)
    if args.dump_config:
        out.write(dump_config(cfg))
        return EXIT_OK
    result = run_grid_benchmark(cfg) if args.target == "grid" else run_am_experiment(cfg)
    if args.out:
        for path in emit_results(result, args.format, args.out, svg=not args.no_svg):
            out.write(f"wrote {path}\n")
    else:
        _print_summary(result, args.format, out)
    return EXIT_OK


def _cmd_plan(args, out) -> int:
    env, priors = _parse_env(args.env)
    hp = load_config(args.config).hp if args.config else default_config(
        "grid" if isinstance(env, GridWorld) else "am").hp
    if args.seed is not None:
        hp = replace(hp, seed=args.seed)
    betas = (list(hp.betas) * len(priors))[: len(priors)]
    try:
        rep = solve_fixed_point(env, priors, betas, hp.gamma)
    except ConvergenceError as exc:
        out.write(f"{exc}\n")
        return EXIT_CHECK_FAILED
    policy = greedy_policy(rep.cg_star)
    steps, reached, path = greedy_rollout(env, policy)
    bfs, _ = bfs_shortest(env)
    names = env.action_names
    if args.format == "json":
        out.write(json.dumps({
            "env": args.env, "priors": [p.name for p in priors], "betas": betas, "gamma": hp.gamma,
            "sweeps": rep.iterations, "residual": rep.residual,
            "states": [env.describe_state(s) for s in range(env.num_states)], "actions": list(names),
            "cg_star": rep.cg_star.tolist(), "greedy_policy": [names[a] for a in policy],
            "greedy_path": [[env.describe_state(s), names[a]] for s, a in path],
            "greedy_steps": steps, "reached_goal": reached, "bfs_shortest": bfs,
        }, indent=1) + "\n")
    else:
        out.write(f"# {args.env}  priors={','.join(p.name for p in priors)}  betas={betas}  gamma={hp.gamma}\n")
        out.write(f"# sweeps={rep.iterations}  residual={rep.residual:.3e}\n")
        out.write("state," + ",".join(names) + ",greedy\n")
        for s in range(env.num_states):
            row = ",".join(f"{v:.10g}" for v in rep.cg_star[s])
            greedy = "-" if env.is_terminal(s) else names[policy[s]]
            out.write(f"{env.describe_state(s)},{row},{greedy}\n")
        route = " ".join(f"{env.describe_state(s)}-{names[a]}" for s, a in path)
        out.write(f"# greedy path ({steps} steps, reached={reached}, bfs={bfs}): {route}\n")
        if isinstance(env, GridWorld):
            out.write(env.render(policy=policy) + "\n")
    if args.csv:
        try:
            with open(args.csv, "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["state", *names])
                for s in range(env.num_states):
                    w.writerow([env.describe_state(s), *(f"{v:.17g}" for v in rep.cg_star[s])])
        except OSError as exc:
            raise OSError(f"writing {args.csv}: {exc}") from exc
    return EXIT_OK


def _cmd_check(args, out) -> int:
    seed = 0 if args.seed is None else args.seed
    results = run_checks(seed, args.trials)
    for r in results:
        out.write(r.line() + "\n")
    failed = [r for r in results if not r.passed]
    out.write(f"{len(results) - len(failed)}/{len(results)} properties passed (seed {seed})\n")
    return EXIT_CHECK_FAILED if failed else EXIT_OK


def _cmd_render(args, out) -> int:
    env, priors = _parse_env(args.env)
    prior = None
    if args.prior != "none":
        index = 0 if args.prior == "offline" else 1
        if index >= len(priors):
            raise UsageError(f"{args.env} has no {args.prior} prior")
        prior = priors[index]
    if hasattr(env, "render"):
        out.write(env.render(prior=prior) + "\n")
        return EXIT_OK
    model = env.model()
    for s in range(env.num_states):
        mark = " (start)" if s == env.initial_state() else " (target)" if model.terminal[s] else ""
        out.write(f"{env.describe_state(s)} {env.describe_setting(s)}{mark}\n")
        if prior is not None and not model.terminal[s]:
            probs = prior.probs[s]
            if not np.allclose(probs, probs[0]):
                best = int(np.argmax(probs))
                out.write(f"    prior favors {env.action_names[best]} ({probs[best]:.2f})\n")
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None, out=None) -> int:
    out = sys.stdout if out is None else out
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            if args.dump_config:
                out.write(dump_config(load_config(args.config) if args.config else default_config()))
                return EXIT_OK
            raise UsageError("a command is required: bench, plan, check or render")
        if args.command == "bench":
            return _cmd_bench(args, out)
        if args.dump_config:
            raise UsageError("--dump-config applies to bench runs or stands alone")
        if args.command == "plan":
            return _cmd_plan(args, out)
        if args.command == "check":
            return _cmd_check(args, out)
        return _cmd_render(args, out)
    except (UsageError, ConfigError) as exc:
        sys.stderr.write(f"{exc}\n")
        return EXIT_USAGE
    except OSError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
