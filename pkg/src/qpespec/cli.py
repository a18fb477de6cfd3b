"""qpe-bench: command-line front end for the benchmark campaigns.

Subcommands map onto the scenario drivers:

    simulate       one configured campaign point with a per-trial dump,
                   or any named scenario via --scenario
    scaling-study  error scaling of a single eigenphase vs N and K
    surface        two-eigenvalue error against gap and overlap
    noise-study    depolarizing noise with and without compensation
    chi-selftest   exhaustive weight-coefficient identity check
    selftest       fast end-to-end smoke test of the whole pipeline

Options may come from an INI-style config file (--config); explicit
command-line flags win over the file, which wins over built-in
defaults.  The ``[run]`` section holds ScenarioConfig fields, the
``[sweep]`` section holds per-scenario sweep grids.  Results go to
--out as CSV (config echoed as '#' comments) or to stdout.
"""

from __future__ import annotations

import argparse
import configparser
import dataclasses
import sys

from . import bench
from .extraction import exact_signal
from .prony import estimate as prony_estimate
from .spectrum import Spectrum, circular_distance

_SCENARIO_OF = {
    "scaling-study": "single_ev_scaling",
    "surface": "two_ev_surface",
    "noise-study": "depolarizing_study",
    "chi-selftest": "chi_selftest",
}


def _int(text):
    return int(float(text))


def _bool(text):
    lowered = str(text).strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _ints(text):
    return tuple(_int(part) for part in str(text).split(",") if part.strip())


def _floats(text):
    return tuple(float(part) for part in str(text).split(",") if part.strip())


#: Converters for [run] config keys (also the set of accepted keys).
_RUN_TYPES = {
    "scenario": str,
    "estimator": str,
    "design": str,
    "recipe": str,
    "mode": str,
    "out": str,
    "n": _int,
    "k": _int,
    "trials": _int,
    "seed": _int,
    "l": _int,
    "n_track": _int,
    "n_eig": _int,
    "workers": _int,
    "k_err": float,
    "delta": float,
    "a0": float,
    "phi0": float,
    "phi_max": float,
    "compensate": _bool,
    "weighted": _bool,
    "phases": _floats,
    "weights": _floats,
}

#: [sweep] config keys per scenario -> (driver kwarg, converter).
_SWEEP_KEYS = {
    "single_ev_scaling": {"n": ("n_sweep", _ints), "k": ("k_sweep", _ints)},
    "two_ev_surface": {"deltas": ("deltas", _floats), "a0s": ("a0s", _floats)},
    "many_ev": {"deltas": ("deltas", _floats), "n_eigs": ("n_eigs", _ints)},
    "depolarizing_study": {
        "n": ("n_sweep", _ints),
        "bayes_n": ("bayes_n_sweep", _ints),
        "bayes_trials": ("bayes_trials", _int),
    },
    "chi_selftest": {"k": ("k_values", _ints)},
}


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="FILE",
                        help="INI config file ([run] and [sweep] sections)")
    common.add_argument("--seed", type=_int)
    common.add_argument("--trials", type=_int)
    common.add_argument("--n", type=_int, help="experiment budget N")
    common.add_argument("--k", type=_int, help="largest round order K")
    common.add_argument("--k-err", dest="k_err", type=float,
                        help="depolarizing error order K_err")
    common.add_argument("--estimator", choices=("time_series", "bayes"))
    common.add_argument("--design",
                        choices=("ts_single_round_cycle", "ts_multi_round",
                                 "bayes_adaptive"))
    common.add_argument("--l", type=_int, help="pencil size (default: auto)")
    common.add_argument("--mode", choices=("symmetric", "positive_only"))
    common.add_argument("--workers", type=_int)
    common.add_argument("--out", metavar="FILE", help="CSV output path")

    parser = argparse.ArgumentParser(
        prog="qpe-bench",
        description="Monte-Carlo benchmarks for single-ancilla phase "
                    "estimation estimators.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", parents=[common],
                         help="run one campaign point (or --scenario)")
    sim.add_argument("--scenario", choices=bench.SCENARIOS)
    sim.add_argument("--recipe", choices=bench.RECIPES)
    sim.add_argument("--n-eig", dest="n_eig", type=_int)
    sim.add_argument("--n-track", dest="n_track", type=_int)
    sim.add_argument("--delta", type=float)
    sim.add_argument("--a0", type=float)
    sim.add_argument("--phi0", type=float)
    sim.add_argument("--phases", type=_floats, help="comma list (explicit recipe)")
    sim.add_argument("--weights", type=_floats, help="comma list (explicit recipe)")
    sim.add_argument("--no-compensate", dest="compensate", action="store_false",
                     default=None)
    sim.add_argument("--weighted", action="store_true", default=None)
    sim.add_argument("--random-k", action="store_true",
                     help="draw adaptive k uniformly instead of cycling")
    sim.add_argument("--summary-only", action="store_true",
                     help="skip the per-trial dump")
    sim.set_defaults(func=_cmd_simulate)

    scal = sub.add_parser("scaling-study", parents=[common],
                          help="single-eigenphase error scaling")
    scal.add_argument("--n-sweep", type=_ints)
    scal.add_argument("--k-sweep", type=_ints)
    scal.set_defaults(func=_cmd_scenario)

    surf = sub.add_parser("surface", parents=[common],
                          help="two-eigenvalue gap/overlap study")
    surf.add_argument("--deltas", type=_floats)
    surf.add_argument("--a0s", type=_floats)
    surf.set_defaults(func=_cmd_scenario)

    noise = sub.add_parser("noise-study", parents=[common],
                           help="depolarizing compensation study")
    noise.add_argument("--n-sweep", type=_ints)
    noise.add_argument("--bayes-trials", dest="bayes_trials", type=_int)
    noise.add_argument("--bayes-n-sweep", dest="bayes_n_sweep", type=_ints)
    noise.set_defaults(func=_cmd_scenario)

    chi = sub.add_parser("chi-selftest", parents=[common],
                         help="coefficient identity self-test")
    chi.add_argument("--k-values", dest="k_values", type=_ints)
    chi.set_defaults(func=_cmd_chi_selftest)

    self_p = sub.add_parser("selftest", parents=[common],
                            help="fast end-to-end smoke test")
    self_p.set_defaults(func=_cmd_selftest)
    return parser


def _read_config(path, parser):
    """Parse the INI file into ([run] dict, [sweep] dict of raw strings)."""
    ini = configparser.ConfigParser()
    read = ini.read(path)
    if not read:
        parser.error(f"config file not found: {path}")
    run: dict = {}
    for key, raw in (ini["run"].items() if ini.has_section("run") else ()):
        if key not in _RUN_TYPES:
            parser.error(f"unknown [run] config key: {key}")
        try:
            run[key] = _RUN_TYPES[key](raw)
        except ValueError as exc:
            parser.error(f"bad value for [run] {key}: {exc}")
    sweep = dict(ini["sweep"].items()) if ini.has_section("sweep") else {}
    return run, sweep


def _merge_config(args, parser, scenario=None) -> tuple[bench.ScenarioConfig, dict]:
    """Layer defaults < config file < CLI flags into a ScenarioConfig."""
    run: dict = {}
    sweep_raw: dict = {}
    if args.config:
        run, sweep_raw = _read_config(args.config, parser)
    for key in _RUN_TYPES:
        value = getattr(args, key, None)
        if value is not None:
            run[key] = value
    if scenario is not None:
        run["scenario"] = scenario
    run.setdefault("scenario", "single_ev_scaling")
    # Choosing the Bayesian estimator implies its adaptive design; an
    # explicitly conflicting --design still errors out below.
    if run.get("estimator") == "bayes":
        run.setdefault("design", "bayes_adaptive")
    field_names = {f.name for f in dataclasses.fields(bench.ScenarioConfig)}
    try:
        cfg = bench.ScenarioConfig(**{k: v for k, v in run.items()
                                      if k in field_names})
    except (TypeError, ValueError) as exc:
        parser.error(str(exc))

    kwargs: dict = {}
    for key, raw in sweep_raw.items():
        table = _SWEEP_KEYS.get(cfg.scenario, {})
        if key not in table:
            parser.error(f"[sweep] key {key!r} not valid for {cfg.scenario}")
        name, convert = table[key]
        try:
            kwargs[name] = convert(raw)
        except ValueError as exc:
            parser.error(f"bad value for [sweep] {key}: {exc}")
    for attr in ("n_sweep", "k_sweep", "deltas", "a0s", "bayes_trials",
                 "bayes_n_sweep", "k_values"):
        value = getattr(args, attr, None)
        if value is not None:
            kwargs[attr] = value
    return cfg, kwargs


def _output(rows, cfg: bench.ScenarioConfig, already_written: bool) -> None:
    if cfg.out:
        if not already_written:
            bench.write_rows(cfg.out, rows, dataclasses.asdict(cfg))
        print(f"wrote {len(rows)} rows to {cfg.out}")
    else:
        bench.write_rows(sys.stdout, rows, None)


def _cmd_scenario(args, parser) -> int:
    cfg, kwargs = _merge_config(args, parser, _SCENARIO_OF[args.command])
    rows = bench.run_scenario(cfg, **kwargs)
    _output(rows, cfg, already_written=True)
    return 0


def _cmd_simulate(args, parser) -> int:
    cfg, kwargs = _merge_config(args, parser, getattr(args, "scenario", None))
    if args.scenario:
        rows = bench.run_scenario(cfg, **kwargs)
        _output(rows, cfg, already_written=True)
        return 0
    if args.random_k and cfg.estimator != "bayes":
        parser.error("--random-k applies only to the Bayesian estimator")
    overrides = {"random_k": True} if args.random_k else None
    rows = bench.run_simulate(cfg, dump_trials=not args.summary_only,
                              overrides=overrides)
    _output(rows, cfg, already_written=False)
    return 0


def _cmd_chi_selftest(args, parser) -> int:
    cfg, kwargs = _merge_config(args, parser, "chi_selftest")
    rows = bench.run_scenario(cfg, **kwargs)
    if cfg.out:
        print(f"wrote {len(rows)} rows to {cfg.out}")
    all_ok = True
    for row in rows:
        ok = bool(row.get("passed"))
        all_ok = all_ok and ok
        print(f"{'PASS' if ok else 'FAIL'} {row['check']} "
              f"(max err {row['max_abs_err']:.3e})")
    return 0 if all_ok else 1


def _cmd_selftest(args, parser) -> int:
    cfg, _ = _merge_config(args, parser, "chi_selftest")
    seed = cfg.seed
    checks: list[tuple[str, bool, str]] = []

    for row in bench.scenario_chi_selftest(cfg, k_values=(2, 4, 6)):
        checks.append((row["check"], bool(row["passed"]),
                       f"max err {row['max_abs_err']:.2e}"))

    spectrum = Spectrum.from_pairs(
        [(-2.0, 0.2), (-0.7, 0.2), (0.4, 0.2), (1.5, 0.2), (2.6, 0.2)])
    est = prony_estimate(exact_signal(spectrum, 16), l=16)
    worst = max(min(circular_distance(p, q) for q in est.phases)
                for p in spectrum.phases)
    checks.append(("exact_pencil_recovery", worst < 1e-8,
                   f"worst phase err {worst:.2e}"))

    ts_cfg = bench.ScenarioConfig(
        scenario="single_ev_scaling", estimator="time_series",
        recipe="single", n=20_000, k=20, trials=40, seed=seed)
    eps = bench.run_point(ts_cfg)[0]["eps"]
    checks.append(("time_series_sanity", eps < 0.02, f"eps {eps:.2e}"))

    twice = bench.run_point(ts_cfg)[0]["eps"]
    checks.append(("seeded_rerun_identical", twice == eps,
                   f"{eps!r} vs {twice!r}"))
    pooled = bench.run_point(bench._replace(ts_cfg, workers=2))[0]["eps"]
    checks.append(("worker_pool_identical", pooled == eps,
                   f"{eps!r} vs {pooled!r}"))

    bayes_cfg = bench.ScenarioConfig(
        scenario="single_ev_scaling", estimator="bayes",
        design="bayes_adaptive", recipe="single", n=400, k=20,
        trials=10, seed=seed)
    eps_b = bench.run_point(bayes_cfg)[0]["eps"]
    checks.append(("bayes_sanity", eps_b < 0.05, f"eps {eps_b:.2e}"))

    failed = False
    for name, ok, detail in checks:
        print(f"{'PASS' if ok else 'FAIL'} {name} ({detail})")
        failed = failed or not ok
    return 1 if failed else 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    return args.func(args, parser)


if __name__ == "__main__":
    sys.exit(main())
