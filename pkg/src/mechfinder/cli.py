"""
Command-line front end.

    mechfinder simulate CASE [--seed N] [--out data.csv]
    mechfinder generate (--config run.ini | --case NAME) --iteration N
    mechfinder fit (--config run.ini | --case NAME) --mechanism "A -> D; ..." [--data data.csv]
    mechfinder discover (--config run.ini | --case NAME) [--data data.csv] [--out report.json]
    mechfinder doe (--config run.ini | --case NAME) --report report.json

Exit codes: 0 ok, 1 usage or configuration error, 2 data error, 3 internal error.
"""

import argparse
import configparser
import csv
import io
import json
import logging
import math
import os
import sys
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from mechfinder import datagen
from mechfinder.datagen import Dataset, Experiment
from mechfinder.doe import DesignSpace, design
from mechfinder.fit import estimate
from mechfinder.genmech import enumerate_mechanisms
from mechfinder.integrate import simulate
from mechfinder.problem import OverallReaction, ProblemSpec, default_names, plan_iteration, validate
from mechfinder.select import FitPolicy, NoCandidates, RunReport, aic, nll, run_discovery
from mechfinder.translate import (CONVENTIONS, parse_reaction_strings, steps_to_matrix, to_kinetic_model,
                                  to_reaction_strings)

LOG = logging.getLogger("mechfinder")

FORMAT_VERSION = 1
EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3
INITIAL = "initial"


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


# configuration ---------------------------------------------------------------

_KEYS = {
    "reaction": {"species", "stoichiometry", "noise_sd"},
    "search": {"min_steps", "min_species", "max_iterations", "gen_time_budget_s", "workers"},
    "fit": {"bounds", "n_starts", "seed", "convention", "screen_above", "screen_starts", "refine_top"},
    "doe": {"lower", "upper", "budget", "t_end", "n_times"},
    "io": {"dataset", "report"},
}


def _floats(text: str) -> List[float]:
    return [float(x) for x in text.replace(",", " ").split()]


def _ints(text: str) -> List[int]:
    return [int(x) for x in text.replace(",", " ").split()]


@dataclass
class RunConfig:
    spec: ProblemSpec
    seed: int = 0
    policy: FitPolicy = field(default_factory=FitPolicy)
    doe_lower: Optional[Tuple[float, ...]] = None
    doe_upper: Optional[Tuple[float, ...]] = None
    doe_budget: int = 64
    doe_t_end: Optional[float] = None
    doe_n_times: Optional[int] = None
    dataset: Optional[str] = None
    report: Optional[str] = None

    @property
    def species(self) -> Tuple[str, ...]:
        return self.spec.overall.species_names


def parse_config(text: str, base_dir: str = ".") -> RunConfig:
    """Parse an INI run configuration; unknown sections or keys are rejected."""
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise UsageError("cannot parse config: %s" % exc) from None
    for section in cp.sections():
        if section not in _KEYS:
            raise UsageError("unknown config section [%s]" % section)
        extra = set(cp[section]) - _KEYS[section]
        if extra:
            raise UsageError("unknown key(s) in [%s]: %s" % (section, ", ".join(sorted(extra))))
    try:
        if not cp.has_section("reaction"):
            raise UsageError("config needs a [reaction] section")
        r = cp["reaction"]
        names = tuple(r.get("species", "").replace(",", " ").split())
        overall = OverallReaction(names, tuple(_ints(r.get("stoichiometry", ""))))
        s = cp["search"] if cp.has_section("search") else {}
        f = cp["fit"] if cp.has_section("fit") else {}
        bounds = tuple(_floats(f.get("bounds", "0 10")))
        if len(bounds) != 2:
            raise UsageError("[fit] bounds needs two numbers")
        spec = ProblemSpec(
            overall=overall,
            min_steps=int(s.get("min_steps", "1")),
            min_species=int(s.get("min_species", str(len(names)))),
            rate_bounds=bounds,
            gen_time_budget=float(s.get("gen_time_budget_s", "600")),
            max_iterations=int(s.get("max_iterations", "6")),
            multistart_count=int(f.get("n_starts", "10")),
            workers=int(s.get("workers", "1")),
            noise_model=tuple(_floats(r["noise_sd"])) if "noise_sd" in r else None,
        )
        screen = f.get("screen_above", "300").strip().lower()
        policy = FitPolicy(
            convention=f.get("convention", "mass_action").strip(),
            screen_above=None if screen in ("none", "never", "") else int(screen),
            screen_starts=int(f.get("screen_starts", "1")),
            refine_top=int(f.get("refine_top", "25")),
        )
        d = cp["doe"] if cp.has_section("doe") else {}
        cfg = RunConfig(
            spec=spec,
            seed=int(f.get("seed", "0")),
            policy=policy,
            doe_lower=tuple(_floats(d["lower"])) if "lower" in d else None,
            doe_upper=tuple(_floats(d["upper"])) if "upper" in d else None,
            doe_budget=int(d.get("budget", "64")),
            doe_t_end=float(d["t_end"]) if "t_end" in d else None,
            doe_n_times=int(d["n_times"]) if "n_times" in d else None,
        )
    except ValueError as exc:
        raise UsageError("bad config value: %s" % exc) from None
    if policy.convention not in CONVENTIONS:
        raise UsageError("[fit] convention must be one of %s" % ", ".join(CONVENTIONS))
    if cp.has_section("io"):
        for key in ("dataset", "report"):
            if key in cp["io"]:
                setattr(cfg, key, os.path.join(base_dir, cp["io"][key]))
    report = validate(spec)
    if not report.ok:
        raise UsageError("invalid problem: " + "; ".join(report.violations))
    return cfg


def load_config(path: str) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise UsageError("cannot read config %s: %s" % (path, exc)) from None
    return parse_config(text, os.path.dirname(os.path.abspath(path)))


def case_config(name: str) -> RunConfig:
    """Run configuration of a built-in case study."""
    try:
        cs = datagen.case(name)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    lower = tuple(0.0 for _ in cs.observed_names)
    upper = tuple(float(max(c0[k] for c0 in cs.experiments)) or 1.0
                  for k in np.flatnonzero(cs.observed_mask))
    return RunConfig(spec=cs.problem(), doe_lower=lower, doe_upper=upper,
                     doe_t_end=cs.time_span[1], doe_n_times=cs.n_t)


def config_text(cfg: RunConfig) -> str:
    """INI text that parses back to ``cfg`` (paths excluded)."""
    sp = cfg.spec
    lines = [
        "[reaction]",
        "species = " + ", ".join(sp.overall.species_names),
        "stoichiometry = " + ", ".join(str(x) for x in sp.overall.stoich),
    ]
    if sp.noise_model is not None:
        lines.append("noise_sd = " + ", ".join(repr(x) for x in sp.noise_model))
    lines += [
        "",
        "[search]",
        "min_steps = %d" % sp.min_steps,
        "min_species = %d" % sp.min_species,
        "max_iterations = %d" % sp.max_iterations,
        "gen_time_budget_s = %r" % sp.gen_time_budget,
        "workers = %d" % sp.workers,
        "",
        "[fit]",
        "bounds = %r, %r" % tuple(sp.rate_bounds),
        "n_starts = %d" % sp.multistart_count,
        "seed = %d" % cfg.seed,
        "convention = %s" % cfg.policy.convention,
        "screen_above = %s" % ("none" if cfg.policy.screen_above is None else cfg.policy.screen_above),
        "screen_starts = %d" % cfg.policy.screen_starts,
        "refine_top = %d" % cfg.policy.refine_top,
    ]
    if cfg.doe_lower is not None:
        lines += ["", "[doe]", "lower = " + ", ".join(repr(x) for x in cfg.doe_lower),
                  "upper = " + ", ".join(repr(x) for x in cfg.doe_upper), "budget = %d" % cfg.doe_budget]
        if cfg.doe_t_end is not None:
            lines.append("t_end = %r" % cfg.doe_t_end)
        if cfg.doe_n_times is not None:
            lines.append("n_times = %d" % cfg.doe_n_times)
    return "\n".join(lines) + "\n"


# dataset wire format -----------------------------------------------------------

def _num(x: float) -> str:
    return "" if math.isnan(x) else "%.17g" % x


def write_dataset(data: Dataset, fh) -> None:
    """CSV ``experiment,time,<species>``.

    Each experiment starts with a row whose time cell is ``initial`` holding
    its known initial concentrations, followed by one row per sample time.
    Missing measurements are empty cells.
    """
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["experiment", "time"] + list(data.observed_names))
    for e, exp in enumerate(data.experiments, start=1):
        w.writerow([e, INITIAL] + [_num(x) for x in exp.c0])
        for t, row in zip(exp.times, exp.y):
            w.writerow([e, _num(t)] + [_num(x) for x in row])


def dataset_text(data: Dataset) -> str:
    buf = io.StringIO()
    write_dataset(data, buf)
    return buf.getvalue()


def read_dataset(fh, species: Optional[Sequence[str]] = None) -> Dataset:
    """Inverse of ``write_dataset``.

    With ``species`` given the columns are checked against (and reordered
    to) that list.  Experiments without an ``initial`` row use their t=0
    sample as the initial state.
    """
    reader = csv.reader(fh)
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise DataError("dataset is empty") from None
    if header[:2] != ["experiment", "time"]:
        raise DataError("dataset header must start with 'experiment,time'")
    columns = header[2:]
    if species is None:
        species = columns
    missing = [s for s in species if s not in columns]
    if missing:
        raise DataError("dataset lacks column(s) for species %s (has %s)" % (", ".join(missing), ", ".join(columns)))
    extra = [c for c in columns if c not in species]
    if extra:
        raise DataError("dataset has unexpected column(s) %s" % ", ".join(extra))
    pick = [columns.index(s) for s in species]

    def values(cells, line):
        out = []
        for k in pick:
            text = cells[k].strip() if k < len(cells) else ""
            try:
                out.append(float(text) if text else math.nan)
            except ValueError:
                raise DataError("line %d: bad number %r" % (line, text)) from None
        return out

    order: List[str] = []
    initial: Dict[str, List[float]] = {}
    samples: Dict[str, List[Tuple[float, List[float]]]] = {}
    for line, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise DataError("line %d: expected %d cells, got %d" % (line, len(header), len(row)))
        key, t = row[0].strip(), row[1].strip()
        if key not in samples:
            order.append(key)
            samples[key] = []
        cells = row[2:]
        if t == INITIAL:
            initial[key] = values(cells, line)
            continue
        try:
            time = float(t)
        except ValueError:
            raise DataError("line %d: bad time %r" % (line, t)) from None
        samples[key].append((time, values(cells, line)))
    if not order:
        raise DataError("dataset has no rows")
    exps = []
    for key in order:
        rows = samples[key]
        if not rows:
            raise DataError("experiment %s has no samples" % key)
        times = np.array([t for t, _ in rows])
        if np.any(np.diff(times) <= 0) or times[0] < 0:
            raise DataError("experiment %s: times must be nonnegative and increasing" % key)
        y = np.array([v for _, v in rows], dtype=float)
        if key in initial:
            c0 = np.array(initial[key])
        elif times[0] == 0 and np.all(np.isfinite(y[0])):
            c0 = np.clip(y[0], 0, None)
        else:
            raise DataError("experiment %s: no initial row and no complete t=0 sample" % key)
        if not np.all(np.isfinite(c0)) or np.any(c0 < 0):
            raise DataError("experiment %s: initial concentrations must be finite and nonnegative" % key)
        exps.append(Experiment(c0, times, y))
    return Dataset(exps, tuple(species))


def load_dataset(path: str, species=None) -> Dataset:
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            return read_dataset(fh, species)
    except OSError as exc:
        raise DataError("cannot read dataset %s: %s" % (path, exc)) from None


# reports -----------------------------------------------------------------------

def _names(cfg: RunConfig, n_species: int) -> List[str]:
    return default_names(n_species, list(cfg.species))


def _candidate_json(c, names) -> dict:
    return {
        "matrix": [list(row) for row in c.matrix],
        "reactions": to_reaction_strings(c.matrix, names),
        "theta": [float(x) for x in c.fit.theta_star],
        "sse": float(c.fit.sse),
        "n_obs": int(c.fit.n_obs_total),
        "nll": float(c.nll),
        "d": int(c.d),
        "aic": float(c.aic),
        "converged": bool(c.fit.converged),
        "n_equivalent": int(c.n_equivalent),
        "screened": bool(c.screened),
    }


def report_json(run: RunReport, cfg: RunConfig) -> dict:
    """Machine report; contains nothing run-time dependent so it is reproducible byte for byte."""
    sp = cfg.spec
    iterations = []
    for it in run.iterations:
        names = _names(cfg, it.plan.n_species)
        iterations.append({
            "index": it.plan.iteration_index,
            "n_steps": it.plan.n_steps,
            "n_species": it.plan.n_species,
            "species": names,
            "n_candidates": it.n_candidates,
            "n_models": it.n_models,
            "complete": it.complete,
            "best_aic": float(it.best.aic),
            "candidates": [_candidate_json(c, names) for c in it.all_scores],
        })
    win_names = _names(cfg, len(run.winner.matrix[0]))
    winner = dict(_candidate_json(run.winner, win_names), iteration=run.winner_iteration, species=win_names)
    return {
        "format_version": FORMAT_VERSION,
        "problem": {
            "species": list(sp.overall.species_names),
            "stoichiometry": list(sp.overall.stoich),
            "min_steps": sp.min_steps,
            "min_species": sp.min_species,
            "max_iterations": sp.max_iterations,
            "bounds": list(sp.rate_bounds),
            "n_starts": sp.multistart_count,
            "seed": cfg.seed,
            "convention": cfg.policy.convention,
        },
        "iterations": iterations,
        "winner": winner,
        "terminated": {"reason": run.terminated_reason, "iteration": len(run.iterations)},
    }


def dump_json(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True) + "\n"


def summary_text(report: dict) -> str:
    """Human-readable table: one block per iteration with its best mechanism."""
    out = ["%-9s %-7s %-7s %-9s %-12s %s" % ("iteration", "steps", "species", "models", "best AIC", "mechanism")]
    for it in report["iterations"]:
        best = it["candidates"][0]
        reactions = ["%s  (k%d = %.4g)" % (r, i + 1, k) for i, (r, k) in enumerate(zip(best["reactions"], best["theta"]))]
        head = "%-9d %-7d %-7d %-9d %-12.2f " % (it["index"], it["n_steps"], it["n_species"], it["n_models"],
                                                 it["best_aic"])
        out.append(head + reactions[0])
        out.extend(" " * len(head) + r for r in reactions[1:])
    term = report["terminated"]
    out.append("")
    out.append("terminated: %s at iteration %d; winner: iteration %d"
               % (term["reason"], term["iteration"], report["winner"]["iteration"]))
    return "\n".join(out) + "\n"


def prediction_tables(report: dict, data: Dataset, convention: str) -> List[str]:
    """Per-experiment CSV text of the winner's trajectories (all species) on the data grid."""
    win = report["winner"]
    model = to_kinetic_model(win["matrix"], convention, win["theta"])
    tables = []
    for exp in data.experiments:
        c0 = np.zeros(model.n_species)
        c0[: data.n_observed] = exp.c0
        traj = simulate(model, c0, exp.times)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["time"] + win["species"])
        for t, row in zip(traj.times, traj.states):
            w.writerow([_num(t)] + [_num(x) for x in row])
        tables.append(buf.getvalue())
    return tables


def load_report(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            report = json.load(fh)
    except (OSError, ValueError) as exc:
        raise DataError("cannot read report %s: %s" % (path, exc)) from None
    if report.get("format_version") != FORMAT_VERSION:
        raise DataError("unsupported report format_version %r" % report.get("format_version"))
    return report


# subcommands -------------------------------------------------------------------

def _write(path: Optional[str], text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise DataError("cannot write %s: %s" % (path, exc)) from None


def _config(args) -> RunConfig:
    if args.config and args.case:
        raise UsageError("give either --config or --case, not both")
    if args.config:
        cfg = load_config(args.config)
    elif args.case:
        cfg = case_config(args.case)
    else:
        raise UsageError("--config or --case is required")
    overrides = {}
    if args.workers is not None:
        overrides["workers"] = args.workers
    if args.time_budget is not None:
        overrides["gen_time_budget"] = args.time_budget
    if overrides:
        sp = cfg.spec
        cfg.spec = ProblemSpec(**dict(sp.__dict__, **overrides))
        report = validate(cfg.spec)
        if not report.ok:
            raise UsageError("; ".join(report.violations))
    if args.seed is not None:
        cfg.seed = args.seed
    return cfg


def _data(args, cfg: RunConfig) -> Dataset:
    path = getattr(args, "data", None) or cfg.dataset
    if path:
        return load_dataset(path, cfg.species)
    if args.case:
        return datagen.generate(datagen.case(args.case), cfg.seed)
    raise UsageError("no dataset: pass --data or set [io] dataset")


def cmd_simulate(args) -> int:
    try:
        cs = datagen.case(args.case_name)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    data = datagen.generate(cs, 0 if args.seed is None else args.seed)
    _write(args.out, dataset_text(data))
    return EXIT_OK


def cmd_generate(args) -> int:
    cfg = _config(args)
    try:
        plan = plan_iteration(cfg.spec, args.iteration)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    mats, complete = enumerate_mechanisms(plan, cfg.spec.overall, time_budget=cfg.spec.gen_time_budget,
                                          workers=cfg.spec.workers)
    names = _names(cfg, plan.n_species)
    lines = ["# %d steps, species %s" % (plan.n_steps, " ".join(names))]
    for k, m in enumerate(mats, start=1):
        lines.append("")
        lines.append("mechanism %d" % k)
        for row, text in zip(m, to_reaction_strings(m, names)):
            lines.append("  " + " ".join("%2d" % x for x in row) + "    " + text)
    lines.append("")
    lines.append("%d mechanisms (%s)" % (len(mats), "complete" if complete else "incomplete: time budget reached"))
    _write(args.out, "\n".join(lines) + "\n")
    return EXIT_OK


def _parse_mechanism(text: str, observed: Sequence[str]):
    lines = [s.strip() for s in text.replace("\n", ";").split(";") if s.strip()]
    if not lines:
        raise UsageError("empty mechanism")
    names = list(observed)
    for line in lines:
        for tok in line.replace("->", "+").split("+"):
            tok = tok.strip().lstrip("12").strip()
            if tok and tok not in names:
                names.append(tok)
    try:
        steps = parse_reaction_strings(lines, names)
    except ValueError as exc:
        raise UsageError("bad mechanism: %s" % exc) from None
    return steps_to_matrix(steps, len(names)), names


def cmd_fit(args) -> int:
    cfg = _config(args)
    matrix, names = _parse_mechanism(args.mechanism, cfg.species)
    data = _data(args, cfg)
    model = to_kinetic_model(matrix, cfg.policy.convention)
    res = estimate(model, data, cfg.spec.rate_bounds, cfg.spec.multistart_count, cfg.seed)
    value = nll(res.sse, res.n_obs_total)
    lines = ["species: " + " ".join(names)]
    for i, (r, k) in enumerate(zip(to_reaction_strings(matrix, names), res.theta_star), start=1):
        lines.append("k%d = %.8g    %s" % (i, k, r))
    lines += ["sse = %.8g" % res.sse, "n_obs = %d" % res.n_obs_total, "nll = %.6f" % value,
              "aic = %.6f" % aic(value, len(matrix)), "converged = %s" % res.converged]
    _write(args.out, "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_discover(args) -> int:
    cfg = _config(args)
    data = _data(args, cfg)

    def progress(it):
        LOG.info("iteration %d done: %d models, best AIC %.3f", it.plan.iteration_index, it.n_models, it.best.aic)

    try:
        run = run_discovery(cfg.spec, data, cfg.seed, cfg.policy, progress=progress)
    except NoCandidates as exc:
        raise DataError(str(exc)) from None
    report = report_json(run, cfg)
    out = args.out or cfg.report
    summary = summary_text(report)
    if out is None or out == "-":
        sys.stdout.write(summary)
        return EXIT_OK
    _write(out, dump_json(report))
    stem = os.path.splitext(out)[0]
    _write(stem + "_summary.txt", summary)
    for e, table in enumerate(prediction_tables(report, data, cfg.policy.convention), start=1):
        _write("%s_pred_exp%d.csv" % (stem, e), table)
    sys.stdout.write(summary)
    return EXIT_OK


def top_two(report: dict):
    """The two lowest-AIC candidates over every iteration of a report."""
    pool = []
    for it in report["iterations"]:
        for c in it["candidates"]:
            pool.append((c["aic"], c["matrix"], c["theta"]))
    pool.sort(key=lambda x: (x[0], x[1]))
    if len(pool) < 2:
        raise DataError("need two models in the report, found %d" % len(pool))
    return pool[0], pool[1]


def cmd_doe(args) -> int:
    cfg = _config(args)
    path = args.report or cfg.report
    if not path:
        raise UsageError("no report: pass --report or set [io] report")
    report = load_report(path)
    conv = report["problem"].get("convention", cfg.policy.convention)
    first, second = top_two(report)
    nu = to_kinetic_model(first[1], conv, first[2])
    mu = to_kinetic_model(second[1], conv, second[2])
    n_obs = len(cfg.species)
    if cfg.doe_lower is None or cfg.doe_upper is None:
        raise UsageError("[doe] lower and upper bounds are required")
    if len(cfg.doe_lower) != n_obs or len(cfg.doe_upper) != n_obs:
        raise UsageError("[doe] bounds need one value per observed species")
    t_end = cfg.doe_t_end if cfg.doe_t_end is not None else 10.0
    n_t = cfg.doe_n_times if cfg.doe_n_times is not None else 30
    space = DesignSpace(cfg.doe_lower, cfg.doe_upper, tuple(np.linspace(0.0, t_end, n_t)))
    prop = design(nu, mu, space, cfg.doe_budget, cfg.seed)
    lines = ["x_star: " + " ".join("%s=%.6g" % (n, x) for n, x in zip(cfg.species, prop.x_star)),
             "objective: %.8g" % prop.objective, "evaluations: %d" % prop.evaluations]
    if prop.objective == 0:
        lines.append("warning: the two best models give identical predictions (objective 0)")
    _write(args.out, "\n".join(lines) + "\n")
    return EXIT_OK


# entry point -------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI run configuration")
    common.add_argument("--case", help="use a built-in case study instead of --config")
    common.add_argument("--seed", type=int, help="overrides [fit] seed")
    common.add_argument("--out", help="output path (default stdout)")
    common.add_argument("--workers", type=int, help="overrides [search] workers")
    common.add_argument("--time-budget", type=float, help="per-iteration generation budget, seconds")
    common.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="mechfinder", description="Discover elementary-step mechanisms from concentration data.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    s = sub.add_parser("simulate", help="write a case study's noisy dataset as CSV")
    s.add_argument("case_name", metavar="CASE", help=", ".join(datagen.CASE_NAMES))
    s.add_argument("--seed", type=int)
    s.add_argument("--out")
    s.add_argument("-v", "--verbose", action="store_true")
    s.set_defaults(func=cmd_simulate)

    g = sub.add_parser("generate", parents=[common], help="list the feasible mechanisms of one iteration")
    g.add_argument("--iteration", type=int, required=True)
    g.set_defaults(func=cmd_generate)

    f = sub.add_parser("fit", parents=[common], help="fit one mechanism to a dataset")
    f.add_argument("--mechanism", required=True, help='steps separated by ";", e.g. "2A -> B; A -> D"')
    f.add_argument("--data")
    f.set_defaults(func=cmd_fit)

    d = sub.add_parser("discover", parents=[common], help="run the full discovery loop")
    d.add_argument("--data")
    d.set_defaults(func=cmd_discover)

    e = sub.add_parser("doe", parents=[common], help="propose a discriminating experiment")
    e.add_argument("--report")
    e.set_defaults(func=cmd_doe)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        return args.func(args)
    except UsageError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print("data error: %s" % exc, file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # pragma: no cover - last resort
        LOG.debug("internal error", exc_info=True)
        print("internal error: %s: %s" % (type(exc).__name__, exc), file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
