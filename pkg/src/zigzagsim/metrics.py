"""Post-processing of run traces into reported quantities and CSV files."""

import csv
import hashlib
import math
from dataclasses import dataclass

from .control import TraceRecord
from .harness import WIRELESS_BANDWIDTH_BPS


class PairingError(ValueError):
    """Baseline/zig-zag runs must share scenario, seed and loss pattern."""


def mean_throughput(delivery_times, packet_size_bytes, warmup_s, duration_s):
    """Delivered payload bits in (warmup, duration], over the window length."""
    if duration_s <= warmup_s:
        raise ValueError("duration must exceed warm-up")
    bits = sum(1 for t in delivery_times if warmup_s < t <= duration_s) \
        * packet_size_bytes * 8
    return bits / (duration_s - warmup_s)


def run_mean_throughput(result):
    sc = result.scenario
    times = [t for fs in result.flows for t in fs.delivery_times]
    return mean_throughput(times, sc.packet_size_bytes, sc.warmup_s,
                           sc.duration_s)


def throughput_increase_pct(zigzag_bps, baseline_bps):
    if baseline_bps <= 0:
        raise ZeroDivisionError("baseline throughput must be positive")
    return 100.0 * (zigzag_bps - baseline_bps) / baseline_bps


def bandwidth_utilization(mean_bps, offered_bps,
                          bottleneck_bps=WIRELESS_BANDWIDTH_BPS):
    """Percent of the achievable ceiling: min(offered, bottleneck)."""
    ceiling = min(offered_bps, bottleneck_bps)
    return 100.0 * mean_bps / ceiling


@dataclass
class ThroughputSeries:
    bucket_width_s: float
    duration_s: float
    per_flow: dict   # flow_id -> list of bits/s per bucket
    aggregate: list  # bits/s per bucket


def throughput_series(result, bucket_width_s=1.0):
    sc = result.scenario
    buckets = math.ceil(sc.duration_s / bucket_width_s)
    size_bits = sc.packet_size_bytes * 8
    per_flow = {}
    aggregate = [0.0] * buckets
    for flow_id, fs in enumerate(result.flows):
        series = [0.0] * buckets
        for t in fs.delivery_times:
            idx = min(int(t / bucket_width_s), buckets - 1)
            series[idx] += size_bits / bucket_width_s
            aggregate[idx] += size_bits / bucket_width_s
        per_flow[flow_id] = series
    return ThroughputSeries(bucket_width_s, sc.duration_s, per_flow, aggregate)


def controller_trace_hash(result):
    """Stable digest of all controller trace rows, for determinism checks."""
    h = hashlib.sha256()
    for trace in result.traces:
        for rec in trace:
            h.update(",".join(rec.as_row()).encode())
            h.update(b"\n")
    return h.hexdigest()


def delivery_hash(result):
    h = hashlib.sha256()
    for fs in result.flows:
        for t in fs.delivery_times:
            h.update(f"{t:.9f};".encode())
        h.update(b"|")
    return h.hexdigest()


def wireless_loss_prefix_equal(a, b):
    """True iff the two runs saw the same wireless drop pattern.

    The paired runs transmit different packet counts, so the traces are
    compared over their common prefix of the shared drop stream.
    """
    n = min(len(a.loss_trace), len(b.loss_trace))
    return a.loss_trace[:n] == b.loss_trace[:n]


@dataclass
class ExperimentResult:
    """One summary row in the paired comparison table."""

    flow_count: int
    loss_kind: str
    plr_pct: float
    aggregate_rate_bps: float
    seed: int
    congestion_baseline: int
    congestion_zigzag: int
    wireless_zigzag: int
    mean_throughput_baseline_bps: float
    mean_throughput_zigzag_bps: float
    throughput_increase_pct: float
    bw_utilization_baseline_pct: float
    bw_utilization_zigzag_pct: float
    halve_violations: int = 0

    FIELDS = ("flow_count", "loss_kind", "plr_pct", "aggregate_rate_bps",
              "seed", "congestion_baseline", "congestion_zigzag",
              "wireless_zigzag", "mean_throughput_baseline_bps",
              "mean_throughput_zigzag_bps", "throughput_increase_pct",
              "bw_utilization_baseline_pct", "bw_utilization_zigzag_pct",
              "halve_violations")

    def as_row(self):
        return [getattr(self, f) for f in self.FIELDS]


def count_halve_violations(result):
    """cwnd decreases that do not coincide with a halving-eligible loss event.

    Baseline: any loss event may shrink the window.  Zig-zag: only
    congestion-classified events may.  Returns the number of trace rows
    violating that rule.
    """
    violations = 0
    for trace in result.traces:
        prev_cwnd = None
        for rec in trace:
            if prev_cwnd is not None and rec.cwnd < prev_cwnd - 1e-12:
                ok = rec.event_type == "loss" and rec.loss_class == "congestion"
                if not ok:
                    violations += 1
            prev_cwnd = rec.cwnd
    return violations


def summarize(baseline, zigzag):
    """Fold one paired (baseline, zig-zag) run into a summary row."""
    if baseline.scenario.key() != zigzag.scenario.key():
        raise PairingError("runs do not share a scenario")
    if baseline.scenario.policy != "baseline" \
            or zigzag.scenario.policy != "zigzag":
        raise PairingError("expected one baseline run and one zigzag run")
    if not wireless_loss_prefix_equal(baseline, zigzag):
        raise PairingError("wireless loss traces diverge; seeds differ?")
    sc = baseline.scenario
    tput_b = run_mean_throughput(baseline)
    tput_z = run_mean_throughput(zigzag)
    increase = throughput_increase_pct(tput_z, tput_b) if tput_b > 0 else 0.0
    return ExperimentResult(
        flow_count=sc.flow_count,
        loss_kind=sc.loss.kind,
        plr_pct=100.0 * sc.loss.analytic_plr,
        aggregate_rate_bps=sc.aggregate_rate_bps,
        seed=sc.seed,
        congestion_baseline=baseline.congestion_events,
        congestion_zigzag=zigzag.congestion_events,
        wireless_zigzag=zigzag.wireless_events,
        mean_throughput_baseline_bps=tput_b,
        mean_throughput_zigzag_bps=tput_z,
        throughput_increase_pct=increase,
        bw_utilization_baseline_pct=bandwidth_utilization(
            tput_b, sc.aggregate_rate_bps),
        bw_utilization_zigzag_pct=bandwidth_utilization(
            tput_z, sc.aggregate_rate_bps),
        halve_violations=(count_halve_violations(baseline)
                          + count_halve_violations(zigzag)),
    )


# -- CSV writers -------------------------------------------------------

def write_series_csv(path, series):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["t_bucket_start", "flow_id", "throughput_bps"])
        for flow_id in sorted(series.per_flow):
            samples = series.per_flow[flow_id]
            for i, bps in enumerate(samples):
                w.writerow([f"{i * series.bucket_width_s:.3f}", flow_id,
                            f"{bps:.3f}"])


def write_controller_trace_csv(path, result):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(TraceRecord.FIELDS)
        for trace in result.traces:
            for rec in trace:
                w.writerow(rec.as_row())


def write_loss_trace(path, result):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("packet_index\tdropped\tstate\n")
        for index, dropped, state in result.loss_trace:
            fh.write(f"{index}\t{dropped}\t{state}\n")


def write_summary_csv(path, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(ExperimentResult.FIELDS)
        for row in rows:
            w.writerow(row.as_row())
