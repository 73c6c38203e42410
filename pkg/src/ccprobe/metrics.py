"""Post-episode analysis: utilization, queuing-delay stats, cwnd smoothness.

Metrics always use ground truth (the true base RTT, the realized capacities),
never the controller's possibly-perturbed estimates.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .netsim import BandwidthTrace, DurationMismatch, EmptyLog, EpisodeLog
from .tracegen import avg_abs_slope


class DomainError(ValueError):
    pass


@dataclass
class EpisodeReport:
    utilization: float
    mean_delay_ms: float
    p95_delay_ms: float
    mean_reward: float
    cwnd_series: list[tuple[float, float]] = field(default_factory=list)
    ingress_mbps: list[float] = field(default_factory=list)   # offered load (sent)
    egress_mbps: list[float] = field(default_factory=list)    # delivered goodput
    capacity_mbps: list[float] = field(default_factory=list)

    def to_json(self) -> str:
        d = {
            "utilization": self.utilization,
            "mean_delay_ms": self.mean_delay_ms,
            "p95_delay_ms": self.p95_delay_ms,
            "mean_reward": self.mean_reward,
        }
        return json.dumps(d, indent=2)


def utilization(log: EpisodeLog, trace: BandwidthTrace) -> float:
    """Delivered goodput bytes / integral of trace capacity, clamped to [0,1]."""
    n = len(log.observations)
    trace_s = trace.duration_s
    episode_s = n * log.config.trace_interval_ms / 1000.0
    if abs(trace_s - episode_s) > 1e-6:
        raise DurationMismatch(f"trace covers {trace_s}s, log covers {episode_s}s")
    cap_bytes = trace.total_bytes(n)
    if cap_bytes <= 0 or log.delivered == 0:
        return 0.0
    return min(1.0, log.delivered_bytes / cap_bytes)


def nearest_rank_p95(values) -> float:
    ordered = sorted(values)
    rank = math.ceil(0.95 * len(ordered))
    return ordered[rank - 1]


def delay_stats(log: EpisodeLog, base_rtt_ms: float | None = None) -> tuple[float, float]:
    """(mean, p95) per-ACK queuing delay: rtt_sample minus ground-truth base RTT."""
    if not log.ack_rtts_ms:
        raise EmptyLog("no ACKs recorded")
    base = log.config.base_rtt_ms if base_rtt_ms is None else base_rtt_ms
    delays = [r - base for r in log.ack_rtts_ms]
    return sum(delays) / len(delays), nearest_rank_p95(delays)


def cwnd_smoothness(series, k: int = 1) -> tuple[float, float]:
    """(linear, log_scaled) smoothness of a (time_s, cwnd) series.

    linear: mean over t of the windowed average absolute slope of cwnd
    (no time normalization). log_scaled: same windowing over
    |log(b_i) - log(b_{i-1})| / (t_i - t_{i-1}), natural log. The two metrics
    deliberately differ in time units; log_scaled is invariant under
    multiplicative rescaling of cwnd.
    """
    if len(series) < k + 1:
        raise ValueError(f"need at least {k + 1} samples")
    times = [t for t, _ in series]
    cwnds = [c for _, c in series]
    if any(c <= 0 for c in cwnds):
        raise DomainError("cwnd values must be positive")
    if any(t2 <= t1 for t1, t2 in zip(times, times[1:])):
        raise DomainError("timestamps must be strictly increasing")
    n = len(series)
    linear_terms = [avg_abs_slope(cwnds, t, k) for t in range(k, n)]
    log_rates = [abs(math.log(cwnds[i]) - math.log(cwnds[i - 1])) / (times[i] - times[i - 1])
                 for i in range(1, n)]
    # same windowing applied to the time-normalized log differences
    log_terms = [sum(log_rates[i] for i in range(t - k, t)) / k for t in range(k, n)]
    return sum(linear_terms) / len(linear_terms), sum(log_terms) / len(log_terms)


def build_report(log: EpisodeLog, trace: BandwidthTrace | None = None,
                 mean_reward: float = 0.0) -> EpisodeReport:
    if trace is not None:
        util = utilization(log, trace)
    else:
        util = log.mean_utilization()
    if log.ack_rtts_ms:
        mean_d, p95_d = delay_stats(log)
    else:
        mean_d = log.mean_queuing_delay_ms()
        p95_d = float("nan")
    pkt = log.config.packet_size
    secs = log.config.trace_interval_ms / 1000.0
    ingress = []
    egress = []
    for o in log.observations:
        egress.append(o.throughput_mbps)
        ingress.append(o.throughput_mbps + o.loss_mbps)
    series = [(t / 1000.0, max(c, 1e-9)) for t, c in log.cwnd_series]
    return EpisodeReport(
        utilization=util,
        mean_delay_ms=mean_d,
        p95_delay_ms=p95_d,
        mean_reward=mean_reward,
        cwnd_series=series,
        ingress_mbps=ingress,
        egress_mbps=egress,
        capacity_mbps=list(log.capacities),
    )


def dump_series_csv(log: EpisodeLog, path: str) -> None:
    """time_ms, cwnd, ingress_mbps, egress_mbps, capacity_mbps per interval."""
    with open(path, "w") as f:
        f.write("time_ms,cwnd,ingress_mbps,egress_mbps,capacity_mbps\n")
        for o in log.observations:
            ingress = o.throughput_mbps + o.loss_mbps
            f.write(f"{o.now_ms:.1f},{o.cwnd:.4f},{ingress:.4f},"
                    f"{o.throughput_mbps:.4f},{o.capacity_mbps:.4f}\n")
