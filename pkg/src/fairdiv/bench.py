"""Timing harness for the two-agent pipelines."""

from __future__ import annotations

import gc
import statistics
import time
from dataclasses import asdict, dataclass, field

from .errors import InputError
from .generate import gen_random_instance
from .twoagent import bobw_chores, bobw_goods

ALGORITHMS = {
    "bobw-goods": ("goods", bobw_goods),
    "bobw-chores": ("chores", bobw_chores),
}


@dataclass
class BenchRecord:
    algo: str
    m: int
    trial: int
    seed: int
    wall_time: float
    phases: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def run_bench(algo: str, ms, trials: int = 5, seed: int = 0, low=None, high=None):
    """Time ``algo`` on one seeded n=2 instance per size; returns the records
    and a summary with medians and doubling ratios.

    The instance for size ``m`` is generated from seed ``seed + m`` outside
    the timed region; the garbage collector is paused while timing.
    """
    if algo not in ALGORITHMS:
        raise InputError(f"unknown algorithm {algo!r}; choose from {sorted(ALGORITHMS)}")
    if trials < 1:
        raise InputError("trials must be positive")
    kind, fn = ALGORITHMS[algo]
    records = []
    medians = {}
    start = time.perf_counter()
    for m in ms:
        inst = gen_random_instance(kind, 2, m, low, high, seed + m)
        times = []
        for trial in range(trials):
            phases = {}
            gc_was_enabled = gc.isenabled()
            gc.disable()
            try:
                t0 = time.perf_counter()
                fn(inst, seed + trial, timings=phases)
                elapsed = time.perf_counter() - t0
            finally:
                if gc_was_enabled:
                    gc.enable()
            times.append(elapsed)
            records.append(BenchRecord(algo, m, trial, seed, elapsed, phases))
        medians[m] = statistics.median(times)
    sizes = list(medians)
    ratios = []
    for a, b in zip(sizes, sizes[1:]):
        ratios.append({"m": a, "m_next": b, "size_ratio": b / a, "time_ratio": medians[b] / medians[a]})
    summary = {
        "algo": algo,
        "trials": trials,
        "seed": seed,
        "medians": [{"m": m, "median_time": t} for m, t in medians.items()],
        "ratios": ratios,
        "total_time": time.perf_counter() - start,
    }
    return records, summary
