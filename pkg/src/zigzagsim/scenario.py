"""Scenario description and its flat key-value file format."""

from dataclasses import dataclass, field, replace

from . import loss as loss_models

GILBERT = "gilbert"
UNIFORM = "uniform"
NONE = "none"

DEFAULT_DURATION_S = 500.0
DEFAULT_WARMUP_S = 100.0
DEFAULT_QUEUE_CAPACITY = 50
DEFAULT_PACKET_SIZE = 1000
DEFAULT_FEEDBACK_SIZE = 40
DEFAULT_ALPHA = 0.125
DEFAULT_SEED = 1


class ScenarioError(ValueError):
    """Invalid scenario; the message names the offending field."""


@dataclass(frozen=True)
class LossSpec:
    kind: str = NONE
    p: float = 0.0
    q: float = 0.0
    plr: float = 0.0

    def validate(self):
        if self.kind not in (GILBERT, UNIFORM, NONE):
            raise ScenarioError(f"loss.kind: unknown kind {self.kind!r}")
        if self.kind == GILBERT:
            if not (0.0 <= self.p <= 1.0):
                raise ScenarioError(f"loss.p: must be in [0,1], got {self.p}")
            if not (0.0 < self.q <= 1.0):
                raise ScenarioError(f"loss.q: must be in (0,1], got {self.q}")
        if self.kind == UNIFORM and not (0.0 <= self.plr <= 1.0):
            raise ScenarioError(f"loss.plr: must be in [0,1], got {self.plr}")

    @property
    def analytic_plr(self):
        if self.kind == GILBERT:
            return loss_models.steady_state_plr(self.p, self.q)
        if self.kind == UNIFORM:
            return self.plr
        return 0.0

    def build(self):
        """Instantiate the per-packet drop model, or None for lossless."""
        if self.kind == GILBERT:
            return loss_models.GilbertElliottModel(self.p, self.q)
        if self.kind == UNIFORM:
            return loss_models.UniformLossModel(self.plr)
        return None


@dataclass(frozen=True)
class Scenario:
    flow_count: int = 1
    aggregate_rate_bps: float = 1.0e6
    loss: LossSpec = field(default_factory=LossSpec)
    policy: str = "baseline"
    duration_s: float = DEFAULT_DURATION_S
    seed: int = DEFAULT_SEED
    queue_capacity_pkts: int = DEFAULT_QUEUE_CAPACITY
    packet_size_bytes: int = DEFAULT_PACKET_SIZE
    feedback_size_bytes: int = DEFAULT_FEEDBACK_SIZE
    alpha: float = DEFAULT_ALPHA
    warmup_s: float = DEFAULT_WARMUP_S
    strict_n4: bool = False
    initial_ssthresh_pkts: float = 50.0

    def validate(self):
        if self.flow_count < 1:
            raise ScenarioError(f"flow_count: must be >= 1, got {self.flow_count}")
        if self.aggregate_rate_bps <= 0:
            raise ScenarioError("aggregate_rate_bps: must be positive")
        if self.policy not in ("baseline", "zigzag"):
            raise ScenarioError(f"policy: unknown policy {self.policy!r}")
        if self.duration_s < self.warmup_s:
            raise ScenarioError(
                f"duration_s: must be >= warm-up ({self.warmup_s} s)")
        if self.queue_capacity_pkts < 1:
            raise ScenarioError("queue_capacity_pkts: must be >= 1")
        if self.packet_size_bytes < 1:
            raise ScenarioError("packet_size_bytes: must be >= 1")
        if not (0.0 < self.alpha < 0.5):
            raise ScenarioError(f"alpha: must be in (0, 0.5), got {self.alpha}")
        if self.initial_ssthresh_pkts < 2:
            raise ScenarioError("initial_ssthresh_pkts: must be >= 2")
        self.loss.validate()
        return self

    @property
    def per_flow_rate_bps(self):
        return self.aggregate_rate_bps / self.flow_count

    def with_policy(self, policy):
        return replace(self, policy=policy)

    def key(self):
        """Scenario identity minus policy; paired runs must agree on this."""
        return (self.flow_count, self.aggregate_rate_bps, self.loss,
                self.duration_s, self.seed, self.queue_capacity_pkts,
                self.packet_size_bytes, self.feedback_size_bytes,
                self.alpha, self.warmup_s, self.strict_n4,
                self.initial_ssthresh_pkts)


_FIELD_PARSERS = {
    "flow_count": int,
    "aggregate_rate_bps": float,
    "policy": str,
    "duration_s": float,
    "seed": int,
    "queue_capacity_pkts": int,
    "packet_size_bytes": int,
    "feedback_size_bytes": int,
    "alpha": float,
    "warmup_s": float,
    "strict_n4": lambda s: s.lower() in ("1", "true", "yes"),
    "initial_ssthresh_pkts": float,
}

_LOSS_PARSERS = {
    "loss.kind": str,
    "loss.p": float,
    "loss.q": float,
    "loss.plr": float,
}


def parse_scenario_text(text):
    """Parse the flat ``key = value`` scenario format ('#' starts a comment)."""
    fields = {}
    loss_fields = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ScenarioError(f"line {lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        try:
            if key in _FIELD_PARSERS:
                fields[key] = _FIELD_PARSERS[key](value)
            elif key in _LOSS_PARSERS:
                loss_fields[key.split(".", 1)[1]] = _LOSS_PARSERS[key](value)
            else:
                raise ScenarioError(f"line {lineno}: unknown key {key!r}")
        except ValueError as exc:
            raise ScenarioError(f"{key}: bad value {value!r}") from exc
    if loss_fields:
        fields["loss"] = LossSpec(**loss_fields)
    scenario = Scenario(**fields)
    scenario.validate()
    return scenario


def load_scenario(path):
    with open(path, "r", encoding="utf-8") as fh:
        return parse_scenario_text(fh.read())


def format_scenario(scenario):
    """Render a Scenario back into its flat file format."""
    lines = [
        f"flow_count = {scenario.flow_count}",
        f"aggregate_rate_bps = {scenario.aggregate_rate_bps}",
        f"loss.kind = {scenario.loss.kind}",
        f"loss.p = {scenario.loss.p}",
        f"loss.q = {scenario.loss.q}",
        f"loss.plr = {scenario.loss.plr}",
        f"policy = {scenario.policy}",
        f"duration_s = {scenario.duration_s}",
        f"seed = {scenario.seed}",
        f"queue_capacity_pkts = {scenario.queue_capacity_pkts}",
        f"packet_size_bytes = {scenario.packet_size_bytes}",
        f"feedback_size_bytes = {scenario.feedback_size_bytes}",
        f"alpha = {scenario.alpha}",
        f"warmup_s = {scenario.warmup_s}",
        f"strict_n4 = {scenario.strict_n4}",
        f"initial_ssthresh_pkts = {scenario.initial_ssthresh_pkts}",
    ]
    return "\n".join(lines) + "\n"
