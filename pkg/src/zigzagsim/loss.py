"""Per-packet drop models for the wireless hop: bursty 2-state Gilbert and
memoryless uniform, plus their analytic reference statistics."""

GOOD = "good"
BAD = "bad"


class UndefinedChainError(ValueError):
    """p = q = 0 leaves the 2-state chain with no stationary distribution."""


class InfiniteBurstError(ValueError):
    """q = 0 never leaves the bad state, so burst length is unbounded."""


class GilbertElliottModel:
    """2-state Markov loss process: 0% PLR in Good, 100% PLR in Bad.

    p is the probability of leaving the good state, q the probability of
    leaving the bad state.  On each packet the state transitions first,
    then the packet is dropped iff the new state is Bad.
    """

    def __init__(self, p, q, initial_state=GOOD):
        if not (0.0 <= p <= 1.0):
            raise ValueError(f"p must be in [0,1], got {p}")
        if not (0.0 <= q <= 1.0):
            raise ValueError(f"q must be in [0,1], got {q}")
        if initial_state not in (GOOD, BAD):
            raise ValueError(f"bad initial state {initial_state!r}")
        self.p = p
        self.q = q
        self.state = initial_state

    def should_drop(self, rng):
        """Advance one transition step and return True iff the packet is lost."""
        if self.state == GOOD:
            if rng.random() < self.p:
                self.state = BAD
        else:
            if rng.random() < self.q:
                self.state = GOOD
        return self.state == BAD


class UniformLossModel:
    """Memoryless model: each packet dropped independently with probability plr."""

    def __init__(self, plr):
        if not (0.0 <= plr <= 1.0):
            raise ValueError(f"plr must be in [0,1], got {plr}")
        self.plr = plr
        self.state = GOOD  # fixed; kept so loss traces share one schema

    def should_drop(self, rng):
        return rng.random() < self.plr


def steady_state_plr(p, q):
    """Stationary probability of the Bad state, p/(p+q)."""
    if p + q <= 0.0:
        raise UndefinedChainError("p + q must be positive")
    return p / (p + q)


def mean_burst_length(q):
    """Expected consecutive drops: geometric sojourn in Bad, 1/q."""
    if q <= 0.0:
        raise InfiniteBurstError("q must be positive")
    return 1.0 / q


def simulate_trace(model, rng, count):
    """Drive ``model`` for ``count`` packets; return the list of drop flags."""
    drop = model.should_drop
    return [drop(rng) for _ in range(count)]


def trace_statistics(drops):
    """Empirical PLR, mean burst length and P(drop | previous drop) of a trace."""
    n = len(drops)
    losses = sum(drops)
    bursts = 0
    prev = False
    repeat = 0  # drops immediately following a drop
    for d in drops:
        if d:
            if not prev:
                bursts += 1
            else:
                repeat += 1
        prev = d
    plr = losses / n if n else 0.0
    mean_burst = losses / bursts if bursts else 0.0
    # conditional drop frequency given the previous packet dropped
    prior = losses - (1 if drops and drops[-1] else 0)
    cond = repeat / prior if prior else 0.0
    return {
        "packets": n,
        "losses": losses,
        "plr": plr,
        "bursts": bursts,
        "mean_burst": mean_burst,
        "p_drop_given_drop": cond,
    }
