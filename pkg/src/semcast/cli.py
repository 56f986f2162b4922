"""Command-line interface: ``semcast <subcommand> --help`` for details."""

from __future__ import annotations

import csv
import io
import sys

import click
import numpy as np

from . import __version__
from .channel import ChannelRealization, draw_channel
from .config import DEFAULTS, load_config, load_scenario
from .errors import SemcastError
from .harness import POLICIES, UNITS, ExperimentPlan, emit_csv, run_experiment
from .labelmap import ingest_label_map
from .metrics import fgm_metrics, metrics_from_solution, ngm_metrics
from .optimizer import SqpOptions, reduced_solve, sqp_solve
from .rdp import fit_curve, read_samples_csv

TABLE3_USERS = (1, 2, 3, 5, 10, 15)

units_opt = click.option("--units", type=click.Choice(sorted(UNITS)), default="milli", show_default=True,
                         help="milli: ms and mW; si: s and W.")
output_opt = click.option("-o", "--output", type=click.Path(dir_okay=False), default=None,
                          help="CSV output path (stdout text report if omitted).")
seed_opt = click.option("--seed", type=int, default=0, show_default=True, help="Master RNG seed.")


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _write(text: str, path):
    if path is None:
        click.echo(text, nl=False)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def _scenario_and_channel(config, seed):
    sc, ch_cfg = load_scenario(config, np.random.default_rng(seed))
    if "gains" in ch_cfg:
        ch = ChannelRealization.fixed(ch_cfg["gains"])
    else:
        ch = draw_channel(sc.radio, ch_cfg.get("seed", seed), fading=ch_cfg.get("fading", "mean"))
    return sc, ch


def _floats(text: str):
    return [float(v) for v in text.split(",") if v.strip()]


@click.group()
@click.version_option(__version__)
def main():
    """Latency-optimal intent-aware generative semantic multicast planner."""


@main.command()
@click.argument("config", type=click.Path(exists=True, dir_okay=False))
@click.option("--method", type=click.Choice(["sqp", "reduced"]), default="sqp", show_default=True)
@click.option("--hessian", type=click.Choice(["bfgs", "exact"]), default="bfgs", show_default=True)
@click.option("--tol", type=float, default=1e-8, show_default=True)
@click.option("--max-iter", type=int, default=500, show_default=True)
@seed_opt
@units_opt
@output_opt
def solve(config, method, hessian, tol, max_iter, seed, units, output):
    """Solve one scenario file and report the allocation."""
    sc, ch = _scenario_and_channel(config, seed)
    if method == "sqp":
        rep = sqp_solve(sc, ch, SqpOptions(max_iter=max_iter, tol=tol, hessian=hessian))
    else:
        rep = reduced_solve(sc, ch)
    if output is None:
        click.echo(rep.to_text(), nl=False)
        return
    row = rep.csv_row()
    if units == "si":
        row = {_si_key(k): _si_value(k, v) for k, v in row.items()}
    _write(_csv_text(list(row), [list(row.values())]), output)
    if not rep.converged:
        sys.exit(2)


def _si_key(k):
    return k.replace("_ms", "_s").replace("_mW", "_W")


def _si_value(k, v):
    if k.endswith("_ms") or k.endswith("_mW"):
        return f"{float(v) * 1e-3:.9g}"
    return v


@main.command()
@click.argument("config", type=click.Path(exists=True, dir_okay=False))
@seed_opt
@units_opt
@output_opt
def bench(config, seed, units, output):
    """Compare the proposed allocation with the NGM and FGM baselines."""
    sc, ch = _scenario_and_channel(config, seed)
    rep = sqp_solve(sc, ch)
    ls, lu, _, _ = UNITS[units]
    rows = []
    for name, m in (("proposed", metrics_from_solution(rep, sc, ch)),
                    ("ngm", ngm_metrics(sc, ch)), ("fgm", fgm_metrics(sc, ch))):
        rows.append([name, f"{m.per_user_latency * ls:.10g}", f"{m.spectral_efficiency:.10g}",
                     f"{m.power_ratio:.10g}", f"{m.compression_rate:.10g}", f"{m.total_bits:.10g}"])
    header = ["benchmark", f"latency_{lu}", "spectral_efficiency_bps_hz", "power_ratio",
              "compression_rate_bpp", "total_bits"]
    if output is None:
        click.echo(f"{'benchmark':<10} {'latency_' + lu:>14} {'lambda':>10} {'gamma':>8} {'r*':>9} {'|b|':>10}")
        for r in rows:
            click.echo(f"{r[0]:<10} {float(r[1]):>14.6f} {float(r[2]):>10.4f} {float(r[3]):>8.4f} "
                       f"{float(r[4]):>9.5f} {float(r[5]):>10.1f}")
        return
    _write(_csv_text(header, rows), output)


def _plan_from_options(plan_file, users, power_mw, requirements, tg_ms, trials, seed, policy,
                       per_user, total_classes, num_classes, fading, benchmarks, failures):
    cfg = load_config(plan_file).get("plan", {}) if plan_file else {}

    def pick(name, flag, default):
        return flag if flag is not None else cfg.get(name, default)

    users = pick("users", users and [int(u) for u in users.split(",")], [10])
    power = pick("power_budget_mw", power_mw and _floats(power_mw), [DEFAULTS["power_budget_w"] * 1e3])
    if requirements:
        reqs = [tuple(float(x) for x in pair.split(":")) for pair in requirements.split(",")]
    else:
        reqs = [tuple(r) for r in cfg.get("requirements",
                                          [(DEFAULTS["recon_requirement"], DEFAULTS["synth_requirement"])])]
    tg = pick("generation_latency_ms", tg_ms and _floats(tg_ms), [DEFAULTS["generation_latency_s"] * 1e3])
    benches = pick("benchmarks", benchmarks and benchmarks.split(","), ["proposed", "ngm", "fgm"])
    return ExperimentPlan.grid(
        users, [p / 1e3 for p in power], reqs, [t / 1e3 for t in tg],
        trials=int(pick("trials", trials, 6000)),
        seed=int(pick("seed", seed, 0)),
        intent_policy=pick("policy", policy, "distinct-single"),
        per_user=int(pick("per_user", per_user, 1)),
        total_classes=pick("total_classes", total_classes, None),
        num_classes=int(pick("num_classes", num_classes, DEFAULTS["num_classes"])),
        fading=pick("fading", fading, "mean"),
        benchmarks=tuple(benches),
        failure_dir=pick("failure_dir", failures, None),
    )


@main.command()
@click.option("--plan", "plan_file", type=click.Path(exists=True, dir_okay=False), default=None,
              help="TOML file with a [plan] table; flags override it.")
@click.option("--users", default=None, help="Comma-separated K values.")
@click.option("--power-mw", default=None, help="Comma-separated power budgets in mW.")
@click.option("--requirements", default=None, help="Comma-separated recon:synth pairs.")
@click.option("--tg-ms", default=None, help="Comma-separated generation latencies in ms.")
@click.option("--trials", type=int, default=None, help="Trials per sweep point [6000].")
@click.option("--seed", type=int, default=None, help="Master RNG seed [0].")
@click.option("--policy", type=click.Choice([p for p in POLICIES if p != "explicit"]), default=None)
@click.option("--per-user", type=int, default=None)
@click.option("--total-classes", type=int, default=None)
@click.option("--num-classes", type=int, default=None)
@click.option("--fading", type=click.Choice(["mean", "rayleigh"]), default=None)
@click.option("--benchmarks", default=None, help="Subset of proposed,ngm,fgm.")
@click.option("--failures", type=click.Path(file_okay=False), default=None,
              help="Directory for failed-trial dumps.")
@click.option("--jobs", type=int, default=1, show_default=True, help="Worker processes.")
@units_opt
@output_opt
def montecarlo(plan_file, users, power_mw, requirements, tg_ms, trials, seed, policy, per_user,
               total_classes, num_classes, fading, benchmarks, failures, jobs, units, output):
    """Run a Monte Carlo sweep and write the aggregate CSV."""
    plan = _plan_from_options(plan_file, users, power_mw, requirements, tg_ms, trials, seed, policy,
                              per_user, total_classes, num_classes, fading, benchmarks, failures)
    result = run_experiment(plan, jobs=jobs)
    _write(emit_csv(result, units=units), output)


@main.command()
@click.argument("samples", type=click.Path(exists=True, dir_okay=False))
@output_opt
def fit(samples, output):
    """Fit a*exp(-b r) + c to a (rate_bpp, metric) CSV."""
    res = fit_curve(read_samples_csv(samples))
    a, b, c = res.curve.as_tuple()
    if output is None:
        click.echo(f"a = {a:.10g}\nb = {b:.10g}\nc = {c:.10g}\nrms = {res.rms:.3e} ({res.n_samples} samples)")
        click.echo(f"config: [{a:.10g}, {b:.10g}, {c:.10g}]")
        return
    _write(_csv_text(["a", "b", "c", "rms", "samples"],
                     [[f"{a:.10g}", f"{b:.10g}", f"{c:.10g}", f"{res.rms:.6e}", res.n_samples]]), output)


@main.command()
@click.argument("label_map", type=click.Path(exists=True, dir_okay=False))
@click.option("--num-classes", type=int, required=True, help="Declared number of classes L.")
@output_opt
def ingest(label_map, num_classes, output):
    """Signal geometry (|X|, |X_bar|/|X|, class counts) from a label map."""
    geo = ingest_label_map(label_map, num_classes)
    if output is None:
        click.echo(f"total_pixels          {geo.total_pixels}")
        click.echo(f"class_pixel_fraction  {geo.class_pixel_fraction:.10g}")
        click.echo(f"avg_class_pixels      {geo.avg_class_pixels():.10g}")
        click.echo("class counts          " + " ".join(str(c) for c in geo.class_counts))
        return
    rows = [["total", geo.total_pixels, f"{geo.class_pixel_fraction:.10g}"]]
    rows += [[l, c, f"{c / geo.total_pixels:.10g}"] for l, c in enumerate(geo.class_counts)]
    _write(_csv_text(["class", "pixels", "fraction"], rows), output)


@main.command()
@click.option("--trials", type=int, default=100, show_default=True,
              help="Trials per K for the latency column (rates do not depend on the channel).")
@seed_opt
@click.option("--jobs", type=int, default=1, show_default=True)
@units_opt
@output_opt
def table3(trials, seed, jobs, units, output):
    """Average compression rate r* and transmitted bits |b| versus K."""
    plan = ExperimentPlan.grid(TABLE3_USERS, trials=trials, seed=seed, benchmarks=("proposed",))
    result = run_experiment(plan, jobs=jobs)
    ls, lu, _, _ = UNITS[units]
    rows = []
    for i, k in enumerate(TABLE3_USERS):
        rows.append([k, f"{result.mean(i, 'proposed', 'compression_rate'):.5f}",
                     f"{result.mean(i, 'proposed', 'total_bits'):.0f}",
                     f"{result.mean(i, 'proposed', 'latency') * ls:.6g}"])
    header = ["num_users", "compression_rate_bpp", "total_bits", f"latency_{lu}"]
    if output is None:
        click.echo(f"{'K':>3} {'r* (bpp)':>10} {'|b| (bits)':>11} {'T* (' + lu + ')':>10}")
        for r in rows:
            click.echo(f"{r[0]:>3} {r[1]:>10} {r[2]:>11} {float(r[3]):>10.4f}")
        return
    _write(_csv_text(header, rows), output)


def run():
    try:
        main(standalone_mode=True)
    except SemcastError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
