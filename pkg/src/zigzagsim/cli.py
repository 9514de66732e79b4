"""Command-line front end: single runs, the paired experiment matrix, and
loss-model validation."""

import argparse
import csv
import math
import multiprocessing
import os
import sys
from dataclasses import replace

from . import loss as loss_models
from . import metrics
from .harness import run_scenario
from .kernel import RngStream
from .scenario import (GILBERT, UNIFORM, LossSpec, Scenario, ScenarioError,
                       load_scenario)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2
EXIT_TOLERANCE = 3

# Table-style default campaign: the 19.8%-PLR couple is covered by
# validate-loss but not part of the comparison matrix.
DEFAULT_COUPLES = [(0.001, 0.6), (0.01, 0.5), (0.1, 0.6)]
DEFAULT_FLOWS = [1, 5, 10]
DEFAULT_RATES = [1.0e6, 1.5e6]
DEFAULT_KINDS = [GILBERT, UNIFORM]

PLR_REL_TOL = 0.05
BURST_REL_TOL = 0.05


def _run_tag(scenario):
    plr = 100.0 * scenario.loss.analytic_plr
    return (f"{scenario.loss.kind}_plr{plr:.3f}pct_{scenario.flow_count}f_"
            f"{scenario.aggregate_rate_bps / 1e6:g}Mbps_"
            f"seed{scenario.seed}_{scenario.policy}")


def _write_run_artifacts(out_dir, result):
    tag = _run_tag(result.scenario)
    series = metrics.throughput_series(result)
    metrics.write_series_csv(os.path.join(out_dir, f"{tag}_series.csv"),
                             series)
    metrics.write_controller_trace_csv(
        os.path.join(out_dir, f"{tag}_trace.csv"), result)
    return tag


def cmd_run(args):
    try:
        scenario = load_scenario(args.config)
    except (OSError, ScenarioError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        os.makedirs(args.out, exist_ok=True)
        result = run_scenario(scenario)
        tag = _write_run_artifacts(args.out, result)
        tput = metrics.run_mean_throughput(result)
        util = metrics.bandwidth_utilization(tput, scenario.aggregate_rate_bps)
        summary_path = os.path.join(args.out, f"{tag}_summary.csv")
        with open(summary_path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["flow_count", "loss_kind", "plr_pct",
                        "aggregate_rate_bps", "policy", "seed",
                        "mean_throughput_bps", "bw_utilization_pct",
                        "congestion_events", "wireless_events",
                        "queue_drops", "wireless_drops"])
            w.writerow([scenario.flow_count, scenario.loss.kind,
                        f"{100.0 * scenario.loss.analytic_plr:.4f}",
                        scenario.aggregate_rate_bps, scenario.policy,
                        scenario.seed, f"{tput:.3f}", f"{util:.3f}",
                        result.congestion_events, result.wireless_events,
                        sum(f.queue_drops for f in result.flows),
                        sum(f.wireless_drops for f in result.flows)])
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    print(f"run complete: {tag} "
          f"(mean throughput {tput / 1e6:.4f} Mb/s, {util:.2f}% utilization)")
    return EXIT_OK


# -- matrix ------------------------------------------------------------


def _parse_list(value, conv):
    return [conv(v.strip()) for v in value.split(",") if v.strip()]


def load_matrix_spec(path):
    """Parse a matrix spec file; missing keys fall back to the defaults."""
    spec = {
        "flows": DEFAULT_FLOWS,
        "couples": DEFAULT_COUPLES,
        "rates_bps": DEFAULT_RATES,
        "kinds": DEFAULT_KINDS,
        "duration_s": 500.0,
        "seed": 1,
        "queue_capacity_pkts": 50,
        "packet_size_bytes": 1000,
        "alpha": 0.125,
    }
    if path is None:
        return spec
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ScenarioError(f"line {lineno}: expected 'key = value'")
            key, _, value = line.partition("=")
            key = key.strip()
            value = value.strip()
            if key == "flows":
                spec["flows"] = _parse_list(value, int)
            elif key == "couples":
                couples = []
                for item in _parse_list(value, str):
                    p, _, q = item.partition(":")
                    couples.append((float(p), float(q)))
                spec["couples"] = couples
            elif key == "rates_bps":
                spec["rates_bps"] = _parse_list(value, float)
            elif key == "kinds":
                spec["kinds"] = _parse_list(value, str)
            elif key in ("duration_s", "alpha"):
                spec[key] = float(value)
            elif key in ("seed", "queue_capacity_pkts", "packet_size_bytes"):
                spec[key] = int(value)
            else:
                raise ScenarioError(f"line {lineno}: unknown key {key!r}")
    return spec


def expand_matrix(spec):
    """Expand a matrix spec into policy-free scenario templates."""
    templates = []
    for kind in spec["kinds"]:
        for p, q in spec["couples"]:
            if kind == GILBERT:
                lspec = LossSpec(kind=GILBERT, p=p, q=q)
            elif kind == UNIFORM:
                lspec = LossSpec(kind=UNIFORM,
                                 plr=loss_models.steady_state_plr(p, q))
            else:
                raise ScenarioError(f"kinds: unknown loss kind {kind!r}")
            for flows in spec["flows"]:
                for rate in spec["rates_bps"]:
                    templates.append(Scenario(
                        flow_count=flows,
                        aggregate_rate_bps=rate,
                        loss=lspec,
                        duration_s=spec["duration_s"],
                        seed=spec["seed"],
                        queue_capacity_pkts=spec["queue_capacity_pkts"],
                        packet_size_bytes=spec["packet_size_bytes"],
                        alpha=spec["alpha"],
                    ).validate())
    return templates


def run_pair(template, out_dir=None):
    """Run one scenario under both policies and summarize the pair."""
    baseline = run_scenario(template.with_policy("baseline"))
    zigzag = run_scenario(template.with_policy("zigzag"))
    if out_dir is not None:
        _write_run_artifacts(out_dir, baseline)
        _write_run_artifacts(out_dir, zigzag)
    return metrics.summarize(baseline, zigzag)


def _pair_worker(payload):
    index, template, out_dir = payload
    try:
        return index, run_pair(template, out_dir), None
    except Exception as exc:  # keep completed rows on partial failure
        return index, None, f"{_run_tag(template)}: {exc}"


def run_matrix(templates, out_dir, jobs=1):
    """Run every pair, return (rows in template order, failure messages)."""
    payloads = [(i, t, out_dir) for i, t in enumerate(templates)]
    if jobs > 1 and len(payloads) > 1:
        with multiprocessing.Pool(jobs) as pool:
            outcomes = pool.map(_pair_worker, payloads)
    else:
        outcomes = [_pair_worker(p) for p in payloads]
    outcomes.sort(key=lambda o: o[0])
    rows = [row for _, row, err in outcomes if err is None]
    failures = [err for _, _, err in outcomes if err is not None]
    return rows, failures


def cmd_matrix(args):
    try:
        spec = load_matrix_spec(args.spec)
        templates = expand_matrix(spec)
    except (OSError, ScenarioError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    os.makedirs(args.out, exist_ok=True)
    rows, failures = run_matrix(templates, args.out, jobs=args.jobs)
    metrics.write_summary_csv(os.path.join(args.out, "summary.csv"), rows)
    print(f"matrix complete: {len(rows)} paired rows "
          f"({len(failures)} failures) -> {args.out}/summary.csv")
    for err in failures:
        print(f"failed: {err}", file=sys.stderr)
    return EXIT_RUNTIME if failures else EXIT_OK


# -- loss model validation ---------------------------------------------


def validate_loss_model(p, q, packet_count, seed, report=print):
    """Compare a simulated Gilbert trace against the analytic statistics.

    Returns True when the empirical PLR and mean burst length are within
    the documented tolerances of p/(p+q) and 1/q.
    """
    if packet_count < 10 ** 5:
        raise ValueError("packet_count must be >= 10^5")
    model = loss_models.GilbertElliottModel(p, q)
    rng = RngStream(seed).substream("loss")
    drops = loss_models.simulate_trace(model, rng, packet_count)
    stats = loss_models.trace_statistics(drops)
    analytic_plr = loss_models.steady_state_plr(p, q) if p + q > 0 else 0.0
    analytic_burst = loss_models.mean_burst_length(q)
    report(f"gilbert p={p} q={q} packets={packet_count} seed={seed}")
    report(f"  empirical PLR      {100 * stats['plr']:.4f}%")
    report(f"  analytic  PLR      {100 * analytic_plr:.4f}%  (p/(p+q))")
    report(f"  empirical burst    {stats['mean_burst']:.4f}")
    report(f"  analytic  burst    {analytic_burst:.4f}  (1/q)")
    report(f"  P(drop|drop)       {stats['p_drop_given_drop']:.4f}  "
           f"(1-q = {1 - q:.4f})")
    if p == 0.0:
        ok = stats["plr"] == 0.0
    else:
        plr_ok = abs(stats["plr"] - analytic_plr) <= PLR_REL_TOL * analytic_plr
        burst_ok = abs(stats["mean_burst"] - analytic_burst) \
            <= BURST_REL_TOL * analytic_burst
        ok = plr_ok and burst_ok
    report(f"  verdict            {'PASS' if ok else 'FAIL'}")
    return ok


def plr_standard_error(p, q, sample_size):
    """Asymptotic standard error of the empirical PLR of a 2-state chain."""
    pi = loss_models.steady_state_plr(p, q)
    variance = pi * (1.0 - pi) * (2.0 / (p + q) - 1.0) / sample_size
    return math.sqrt(variance)


def cmd_validate_loss(args):
    try:
        ok = validate_loss_model(args.p, args.q, args.n, args.seed)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK if ok else EXIT_TOLERANCE


def build_parser():
    parser = argparse.ArgumentParser(
        prog="zigzagsim",
        description="Wired-cum-wireless congestion control simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a single scenario")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out", required=True)
    p_run.set_defaults(func=cmd_run)

    p_matrix = sub.add_parser("matrix",
                              help="run the paired baseline/zigzag campaign")
    p_matrix.add_argument("--spec", default=None)
    p_matrix.add_argument("--out", required=True)
    p_matrix.add_argument("--jobs", type=int, default=1)
    p_matrix.set_defaults(func=cmd_matrix)

    p_val = sub.add_parser("validate-loss",
                           help="check Gilbert model statistics")
    p_val.add_argument("--p", type=float, required=True)
    p_val.add_argument("--q", type=float, required=True)
    p_val.add_argument("--n", type=int, default=10 ** 6)
    p_val.add_argument("--seed", type=int, default=1)
    p_val.set_defaults(func=cmd_validate_loss)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except Exception as exc:  # pragma: no cover - defensive
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
