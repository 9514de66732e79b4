import pytest

from zigzagsim import metrics
from zigzagsim.control import TraceRecord
from zigzagsim.harness import run_scenario
from zigzagsim.scenario import LossSpec, Scenario


class TestMeanThroughput:
    def test_fifty_thousand_packets_over_400s_is_one_mbps(self):
        # 50,000 x 1000-byte packets spread over (100, 500]
        times = [100.0 + (i + 1) * (400.0 / 50_000) for i in range(50_000)]
        assert metrics.mean_throughput(times, 1000, 100.0, 500.0) \
            == pytest.approx(1.0e6)

    def test_no_deliveries_after_warmup_is_zero(self):
        times = [5.0, 60.0, 99.9]
        assert metrics.mean_throughput(times, 1000, 100.0, 500.0) == 0.0

    def test_window_edges(self):
        # delivery exactly at warm-up excluded, exactly at horizon included
        assert metrics.mean_throughput([100.0], 1000, 100.0, 500.0) == 0.0
        assert metrics.mean_throughput([500.0], 1000, 100.0, 500.0) \
            == pytest.approx(8000 / 400.0)

    def test_requires_window(self):
        with pytest.raises(ValueError):
            metrics.mean_throughput([], 1000, 500.0, 500.0)


class TestIncreasePct:
    def test_equal_is_zero(self):
        assert metrics.throughput_increase_pct(0.5e6, 0.5e6) == 0.0

    def test_table_row_scale(self):
        # Mb/s-scale pair consistent with the 1-flow 1.92%-PLR comparison
        assert metrics.throughput_increase_pct(0.2018e6, 0.1340e6) \
            == pytest.approx(50.6, abs=0.1)

    def test_regression_is_negative(self):
        assert metrics.throughput_increase_pct(0.8e6, 1.0e6) < 0

    def test_zero_baseline_rejected(self):
        with pytest.raises(ZeroDivisionError):
            metrics.throughput_increase_pct(1.0, 0.0)


class TestUtilization:
    def test_offered_below_bottleneck(self):
        assert metrics.bandwidth_utilization(0.8e6, 1.0e6) \
            == pytest.approx(80.0)

    def test_at_ceiling(self):
        assert metrics.bandwidth_utilization(1.0e6, 1.0e6) == 100.0

    def test_bottleneck_caps_denominator(self):
        assert metrics.bandwidth_utilization(1.255e6, 1.5e6) \
            == pytest.approx(96.5, abs=0.1)


def run_pair(**kw):
    sc = Scenario(duration_s=120.0, warmup_s=100.0, **kw)
    return run_scenario(sc.with_policy("baseline")), \
        run_scenario(sc.with_policy("zigzag"))


class TestSummarize:
    LOSS = LossSpec("gilbert", p=0.01, q=0.5)

    def test_row_contents(self):
        baseline, zigzag = run_pair(flow_count=2, loss=self.LOSS, seed=5)
        row = metrics.summarize(baseline, zigzag)
        assert row.flow_count == 2
        assert row.plr_pct == pytest.approx(100 * 0.01 / 0.51)
        assert row.congestion_baseline == baseline.congestion_events
        assert row.congestion_zigzag == zigzag.congestion_events
        assert row.wireless_zigzag == zigzag.wireless_events
        assert row.halve_violations == 0

    def test_no_loss_pair(self):
        baseline, zigzag = run_pair(flow_count=1, seed=2)
        row = metrics.summarize(baseline, zigzag)
        assert row.throughput_increase_pct == pytest.approx(0.0, abs=1e-9)
        assert row.wireless_zigzag == 0

    def test_mismatched_seed_rejected(self):
        baseline, _ = run_pair(flow_count=1, loss=self.LOSS, seed=1)
        _, zigzag = run_pair(flow_count=1, loss=self.LOSS, seed=2)
        with pytest.raises(metrics.PairingError):
            metrics.summarize(baseline, zigzag)

    def test_policy_mismatch_rejected(self):
        baseline, zigzag = run_pair(flow_count=1, loss=self.LOSS, seed=1)
        with pytest.raises(metrics.PairingError):
            metrics.summarize(zigzag, baseline)

    def test_utilization_bounded(self):
        baseline, zigzag = run_pair(flow_count=1, seed=7)
        row = metrics.summarize(baseline, zigzag)
        size_bits = baseline.scenario.packet_size_bytes * 8
        quantum = 100.0 * size_bits / baseline.scenario.aggregate_rate_bps
        assert row.bw_utilization_baseline_pct <= 100.0 + quantum
        assert row.bw_utilization_zigzag_pct <= 100.0 + quantum


class TestSeries:
    def test_bucket_sum_matches_scalar_mean(self):
        sc = Scenario(flow_count=2, duration_s=200.0, warmup_s=100.0,
                      loss=LossSpec("gilbert", p=0.01, q=0.5), seed=4)
        result = run_scenario(sc)
        series = metrics.throughput_series(result, bucket_width_s=1.0)
        window_bits = sum(series.aggregate[100:200])  # bits/s x 1 s buckets
        scalar = metrics.run_mean_throughput(result)
        bucket_quantum = sc.packet_size_bytes * 8
        assert abs(window_bits / 100.0 - scalar) <= bucket_quantum

    def test_aggregate_is_sum_of_flows(self):
        sc = Scenario(flow_count=3, duration_s=120.0)
        result = run_scenario(sc)
        series = metrics.throughput_series(result)
        for i, total in enumerate(series.aggregate):
            assert total == pytest.approx(
                sum(series.per_flow[f][i] for f in series.per_flow))


class TestHalveViolations:
    def test_detects_synthetic_violation(self):
        class Fake:
            traces = [[
                TraceRecord(1.0, 0, 10.0, "congestion_avoidance", "ack", "",
                            0, 0.3, 0.3, 0.0),
                TraceRecord(2.0, 0, 5.0, "congestion_avoidance", "loss",
                            "wireless", 1, 0.3, 0.3, 0.0),
            ]]

        assert metrics.count_halve_violations(Fake()) == 1

    def test_clean_run_has_none(self):
        baseline, zigzag = run_pair(
            flow_count=2, loss=LossSpec("gilbert", p=0.05, q=0.5), seed=1)
        assert metrics.count_halve_violations(baseline) == 0
        assert metrics.count_halve_violations(zigzag) == 0


class TestCsvWriters:
    def test_files_roundtrip(self, tmp_path):
        sc = Scenario(flow_count=1, duration_s=120.0,
                      loss=LossSpec("gilbert", p=0.01, q=0.5))
        result = run_scenario(sc)
        series_path = tmp_path / "series.csv"
        trace_path = tmp_path / "trace.csv"
        loss_path = tmp_path / "loss.tsv"
        metrics.write_series_csv(series_path,
                                 metrics.throughput_series(result))
        metrics.write_controller_trace_csv(trace_path, result)
        metrics.write_loss_trace(loss_path, result)
        assert series_path.read_text().startswith(
            "t_bucket_start,flow_id,throughput_bps")
        assert trace_path.read_text().startswith("t,flow_id,cwnd")
        lines = loss_path.read_text().splitlines()
        assert lines[0] == "packet_index\tdropped\tstate"
        assert len(lines) == 1 + len(result.loss_trace)
