"""Simulation configuration and result records.

Times are held internally in integer microseconds so that the delay
decomposition (sender residual + route residuals + hops * link delay)
is exact; the public fields expose float seconds.
"""

from __future__ import annotations

from dataclasses import dataclass

from marketpalace.errors import ParameterError

US = 1_000_000

TOPOLOGIES = ("complete", "ring", "random")


def us_to_str(us: int) -> str:
    """Exact decimal rendering of a microsecond count, in seconds."""
    sign = "-" if us < 0 else ""
    us = abs(us)
    return f"{sign}{us // US}.{us % US:06d}"


@dataclass(frozen=True)
class SimConfig:
    num_nodes: int
    timer_period_s: float = 90.0
    k: int = 20
    seed: int = 0
    topology: str = "complete"
    degree: int | None = None
    link_delay_s: float = 0.0
    trials: int = 100

    def __post_init__(self):
        if not isinstance(self.num_nodes, int) or self.num_nodes < 2:
            raise ParameterError("num_nodes must be an integer >= 2")
        if not self.timer_period_s > 0:
            raise ParameterError("timer_period_s must be positive")
        if not isinstance(self.k, int) or self.k < 1:
            raise ParameterError("k must be an integer >= 1")
        if self.topology not in TOPOLOGIES:
            raise ParameterError(f"topology must be one of {TOPOLOGIES}")
        if self.topology == "random":
            if not isinstance(self.degree, int) or self.degree < 1:
                raise ParameterError("random topology needs degree >= 1")
            if self.degree >= self.num_nodes:
                raise ParameterError("degree must be below num_nodes")
        if self.link_delay_s < 0:
            raise ParameterError("link_delay_s must be non-negative")
        if not isinstance(self.trials, int) or self.trials < 1:
            raise ParameterError("trials must be an integer >= 1")

    @property
    def period_us(self) -> int:
        return round(self.timer_period_s * US)

    @property
    def link_delay_us(self) -> int:
        return round(self.link_delay_s * US)

    def label(self) -> str:
        topo = self.topology if self.degree is None else f"random({self.degree})"
        return (
            f"n{self.num_nodes}-p{self.timer_period_s:g}-k{self.k}"
            f"-{topo}-s{self.seed}"
        )


@dataclass(frozen=True)
class TrialResult:
    """Measured propagation of one listing from source to observer.

    delay_us == residual_timer_us + sum(route_residuals_us)
             + hops * link_delay_us, exactly (integer arithmetic).
    """

    delay_us: int
    hops: int
    residual_timer_us: int
    route_residuals_us: tuple[int, ...]
    link_delay_us: int

    @property
    def delay_s(self) -> float:
        return self.delay_us / US

    @property
    def residual_timer_s(self) -> float:
        return self.residual_timer_us / US

    @property
    def route_residuals_s(self) -> tuple[float, ...]:
        return tuple(r / US for r in self.route_residuals_us)


@dataclass(frozen=True)
class StatsSummary:
    mean_s: float
    median_s: float
    stddev_s: float
    mode_s: float
    p95_s: float
    n: int
    note: str = ""
