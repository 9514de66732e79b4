"""Window-based congestion control with sender-side wireless/congestion loss
discrimination.

Two policies share one controller: the baseline halves its window on every
loss event, the zig-zag variant halves only when the loss classifies as
congestion.  Classification uses the consecutive-loss count n and the
relative one-way trip time (ROTT, approximated as RTT/2) against its
exponential mean and deviation.
"""

import math
from dataclasses import dataclass, field

BASELINE = "baseline"
ZIGZAG = "zigzag"

WIRELESS = "wireless"
CONGESTION = "congestion"

SLOW_START = "slow_start"
CONGESTION_AVOIDANCE = "congestion_avoidance"

DEFAULT_ALPHA = 0.125
INITIAL_CWND = 2.0
# capped near the bottleneck buffer so startup slow start cannot blow
# straight through the drop-tail queue
INITIAL_SSTHRESH = 50.0
MIN_SSTHRESH = 2.0


class EstimatorNotReady(RuntimeError):
    """classify_loss needs at least one ROTT sample."""


def estimate_rott(rtt):
    """ROTT approximated at the sender as one half of the measured RTT."""
    if rtt <= 0.0:
        raise ValueError(f"rtt must be positive, got {rtt}")
    return rtt / 2.0


@dataclass
class RottEstimator:
    """Exponential average and mean deviation of ROTT samples.

    The mean is updated first and its new value is used inside the
    deviation's absolute difference.  The first sample initializes
    mean = sample, dev = 0.
    """

    alpha: float = DEFAULT_ALPHA
    mean: float = 0.0
    dev: float = 0.0
    sample_count: int = 0

    def __post_init__(self):
        if not (0.0 < self.alpha < 0.5):
            raise ValueError(f"alpha must be in (0, 0.5), got {self.alpha}")

    def update(self, rott_i):
        if rott_i <= 0.0:
            raise ValueError(f"rott sample must be positive, got {rott_i}")
        a = self.alpha
        if self.sample_count == 0:
            self.mean = rott_i
            self.dev = 0.0
        else:
            self.mean = (1.0 - a) * self.mean + a * rott_i
            self.dev = (1.0 - 2.0 * a) * self.dev \
                + 2.0 * a * abs(rott_i - self.mean)
        self.sample_count += 1


@dataclass
class LossEvent:
    """A maximal run of n consecutive missing sequence numbers."""

    n: int
    rott_at_detection: float
    detected_at: float = 0.0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("loss event needs n >= 1")


def classify_loss(n, rott_i, mean, dev, sample_count=1, strict_n4=False):
    """Classify one loss event as WIRELESS or CONGESTION.

    Wireless iff one of:
      n = 1  and rott_i < mean - dev
      n = 2  and rott_i < mean - 0.5*dev
      n = 3  and rott_i < mean
      n >= 4 and rott_i < mean + 0.5*dev

    With strict_n4, the last rule applies to n = 4 only and n >= 5 is
    always congestion.
    """
    if sample_count < 1:
        raise EstimatorNotReady("no ROTT samples yet")
    if n < 1:
        raise ValueError("n must be >= 1")
    if n == 1:
        wireless = rott_i < mean - dev
    elif n == 2:
        wireless = rott_i < mean - 0.5 * dev
    elif n == 3:
        wireless = rott_i < mean
    elif n == 4 or not strict_n4:
        wireless = rott_i < mean + 0.5 * dev
    else:
        wireless = False
    return WIRELESS if wireless else CONGESTION


@dataclass
class CongestionController:
    """Slow-start / congestion-avoidance window controller.

    ``policy`` selects the reaction to loss events; everything else is
    identical between the two variants, so zero-loss runs are bitwise
    equivalent.
    """

    policy: str = BASELINE
    alpha: float = DEFAULT_ALPHA
    strict_n4: bool = False
    cwnd: float = INITIAL_CWND
    ssthresh: float = INITIAL_SSTHRESH
    congestion_events: int = 0
    wireless_events: int = 0
    estimator: RottEstimator = None

    def __post_init__(self):
        if self.policy not in (BASELINE, ZIGZAG):
            raise ValueError(f"unknown policy {self.policy!r}")
        if self.estimator is None:
            self.estimator = RottEstimator(alpha=self.alpha)

    @property
    def phase(self):
        return SLOW_START if self.cwnd < self.ssthresh else CONGESTION_AVOIDANCE

    def allowed_in_flight(self):
        """Window in whole packets; never below one."""
        return max(1, math.floor(self.cwnd))

    def on_ack(self, rtt, acked=1, window_limited=True):
        """Process an acknowledgement of ``acked`` new packets.

        The window only grows while the window is the binding constraint;
        an application-limited sender must not inflate cwnd.
        """
        if acked < 1:
            raise ValueError("acked must be >= 1")
        self.estimator.update(estimate_rott(rtt))
        if window_limited:
            if self.phase == SLOW_START:
                self.cwnd += acked
            else:
                self.cwnd += acked / self.cwnd

    def on_loss_event(self, event, forced_congestion=False):
        """React to one loss event; returns its class.

        Baseline policy treats every event as congestion.  Timeout-detected
        events are forced to congestion under either policy.
        """
        est = self.estimator
        if forced_congestion or self.policy == BASELINE \
                or est.sample_count < 1:
            cls = CONGESTION
        else:
            cls = classify_loss(event.n, event.rott_at_detection,
                                est.mean, est.dev, est.sample_count,
                                self.strict_n4)
        if cls == CONGESTION:
            self.ssthresh = max(self.cwnd / 2.0, MIN_SSTHRESH)
            self.cwnd = self.ssthresh
            self.congestion_events += 1
        else:
            self.wireless_events += 1
        return cls


@dataclass
class TraceRecord:
    """One controller trace row; reproduces window-versus-time plots."""

    t: float
    flow_id: int
    cwnd: float
    phase: str
    event_type: str  # "ack" or "loss"
    loss_class: str  # "" for acks
    n: int
    rott_i: float
    rott_mean: float
    rott_dev: float

    FIELDS = ("t", "flow_id", "cwnd", "phase", "event_type",
              "loss_class", "n", "rott_i", "rott_mean", "rott_dev")

    def as_row(self):
        return (f"{self.t:.9f}", str(self.flow_id), f"{self.cwnd:.6f}",
                self.phase, self.event_type, self.loss_class, str(self.n),
                f"{self.rott_i:.9f}", f"{self.rott_mean:.9f}",
                f"{self.rott_dev:.9f}")
