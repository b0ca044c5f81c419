"""Discrete-event kernel for timer-driven push propagation.

Each node has a periodic push timer with a fixed phase; when it fires,
the node forwards everything it holds to its push targets. One trial
injects a listing at the source node at a chosen instant and measures
when a fixed observer node first holds it.

Event ordering is deterministic: events are processed in non-decreasing
time, ties broken by (node index, kind order, insertion sequence) with
kind order listing-added < delivery < timer-fire, so a listing added or
delivered at the exact instant a node's timer fires is included in that
fire. All times are integer microseconds, which makes the reported
decomposition delay = sender residual + route residuals + hops * link
delay an exact identity rather than a float approximation.
"""

from __future__ import annotations

import heapq

import numpy as np

from marketpalace.errors import MarketPalaceError
from marketpalace.sim.model import SimConfig, TrialResult
from marketpalace.sim import topology as topo

_ADD = 0
_DELIVERY = 1
_FIRE = 2


class UnreachableError(MarketPalaceError):
    """The observer can never receive the listing (disconnected route)."""


def run_scenario(
    push_targets: list[list[int]],
    period_us: int,
    phases_us: list[int],
    add_time_us: int,
    source: int,
    observer: int,
    link_delay_us: int = 0,
) -> TrialResult:
    """Simulate one propagation with everything fixed (no sampling).

    ``push_targets[i]`` are the nodes i forwards to when its timer fires
    at phases_us[i] + n * period_us. The listing appears at ``source``
    at ``add_time_us``.
    """
    n = len(push_targets)
    if not (0 <= source < n and 0 <= observer < n) or source == observer:
        raise ValueError("source and observer must be distinct node indices")
    if period_us <= 0:
        raise ValueError("period_us must be positive")

    # arrival[i]: (time received, parent node, parent fire time); the
    # source's entry uses parent None.
    arrival: list[tuple[int, int | None, int | None] | None] = [None] * n

    heap: list[tuple[int, int, int, int]] = []
    seq = 0

    def push_event(time_us: int, node: int, kind: int, payload=None):
        nonlocal seq
        heapq.heappush(heap, (time_us, node, kind, seq, payload))
        seq += 1

    for i, phase in enumerate(phases_us):
        first_fire = phase if phase >= 0 else 0
        push_event(first_fire, i, _FIRE)
    push_event(add_time_us, source, _ADD)

    # Propagation from the add instant needs at most one full period per
    # hop plus link delays; beyond that the observer is unreachable.
    deadline = add_time_us + (n + 1) * period_us + (n + 1) * link_delay_us

    while heap:
        time_us, node, kind, _, payload = heapq.heappop(heap)
        if time_us > deadline:
            raise UnreachableError(
                f"observer {observer} unreachable from {source} on the push graph"
            )
        if kind == _ADD:
            arrival[node] = (time_us, None, None)
        elif kind == _DELIVERY:
            if arrival[node] is None:
                parent, parent_fire = payload
                arrival[node] = (time_us, parent, parent_fire)
                if node == observer:
                    break
        else:  # _FIRE
            if arrival[node] is not None:
                for target in push_targets[node]:
                    if arrival[target] is None:
                        push_event(
                            time_us + link_delay_us,
                            target,
                            _DELIVERY,
                            (node, time_us),
                        )
            push_event(time_us + period_us, node, _FIRE)
    else:
        raise UnreachableError("event queue drained before the observer received")

    # Walk the winning route backwards to decompose the delay.
    route: list[tuple[int, int, int]] = []  # (node, its arrival, parent fire)
    cursor = observer
    while cursor != source:
        info = arrival[cursor]
        assert info is not None and info[1] is not None
        time_received, parent, parent_fire = info
        route.append((parent, time_received, parent_fire))
        cursor = parent
    route.reverse()

    add_info = arrival[source]
    assert add_info is not None
    hops = len(route)
    first_fire_after_add = route[0][2]
    residual_timer_us = first_fire_after_add - add_time_us
    route_residuals: list[int] = []
    for parent, _, parent_fire in route[1:]:
        parent_arrival = arrival[parent]
        assert parent_arrival is not None
        route_residuals.append(parent_fire - parent_arrival[0])

    observer_info = arrival[observer]
    assert observer_info is not None
    delay_us = observer_info[0] - add_time_us

    result = TrialResult(
        delay_us=delay_us,
        hops=hops,
        residual_timer_us=residual_timer_us,
        route_residuals_us=tuple(route_residuals),
        link_delay_us=link_delay_us,
    )
    # Exactness of the decomposition is a structural invariant.
    assert (
        result.delay_us
        == result.residual_timer_us
        + sum(result.route_residuals_us)
        + result.hops * link_delay_us
    )
    return result


def _experiment_setup(config: SimConfig):
    """Seed-derived per-experiment structure: topology and push targets."""
    root = np.random.SeedSequence(config.seed)
    children = root.spawn(config.trials + 1)
    setup_rng = np.random.Generator(np.random.Philox(children[0]))
    adjacency = topo.build_adjacency(
        config.topology, config.num_nodes, config.degree, setup_rng
    )
    node_ids = topo.synthesize_node_ids(config.num_nodes, setup_rng)
    targets = topo.push_targets(adjacency, node_ids, config.k)
    observer = topo.pick_observer(adjacency, source=0)
    return targets, observer, children[1:]


def run_trial(config: SimConfig, trial_index: int = 0) -> TrialResult:
    """One trial with phases and add instant sampled from the trial stream.

    Deterministic in (config.seed, trial_index) regardless of how many
    other trials ran before.
    """
    targets, observer, trial_seeds = _experiment_setup(config)
    return _sampled_trial(config, targets, observer, trial_seeds[trial_index])


def _sampled_trial(
    config: SimConfig, targets, observer: int, seed_seq: np.random.SeedSequence
) -> TrialResult:
    rng = np.random.Generator(np.random.Philox(seed_seq))
    period_us = config.period_us
    phases = [int(p) for p in rng.integers(0, period_us, size=config.num_nodes)]
    add_time = int(rng.integers(0, period_us))
    return run_scenario(
        push_targets=targets,
        period_us=period_us,
        phases_us=phases,
        add_time_us=add_time,
        source=0,
        observer=observer,
        link_delay_us=config.link_delay_us,
    )


def run_experiment(config: SimConfig):
    """All trials of one config; returns (StatsSummary, [TrialResult])."""
    from marketpalace.sim.stats import summarize

    targets, observer, trial_seeds = _experiment_setup(config)
    results = [
        _sampled_trial(config, targets, observer, trial_seeds[i])
        for i in range(config.trials)
    ]
    summary = summarize([r.delay_s for r in results])
    return summary, results
