"""Delay statistics matching the experiment's reporting conventions.

Median is the midpoint for even n; standard deviation is the sample
(n-1) form, 0 by convention for a single observation; the mode is the
lower edge of the most populated 1-second bin (smallest bin on ties),
mirroring a once-per-second page refresh; p95 is nearest-rank.
"""

from __future__ import annotations

import math
import statistics
from collections import Counter
from typing import Sequence

from marketpalace.errors import ParameterError
from marketpalace.sim.model import StatsSummary


def summarize(delays_s: Sequence[float]) -> StatsSummary:
    delays = list(delays_s)
    if not delays:
        raise ParameterError("cannot summarize an empty delay list")
    n = len(delays)
    note = ""
    if n == 1:
        stddev = 0.0
        note = "stddev reported as 0 by convention for n=1"
    else:
        stddev = statistics.stdev(delays)

    bins = Counter(math.floor(d) for d in delays)
    top = max(bins.values())
    mode = float(min(b for b, c in bins.items() if c == top))

    ranked = sorted(delays)
    p95 = ranked[math.ceil(0.95 * n) - 1]

    return StatsSummary(
        mean_s=statistics.fmean(delays),
        median_s=statistics.median(delays),
        stddev_s=stddev,
        mode_s=mode,
        p95_s=p95,
        n=n,
        note=note,
    )
