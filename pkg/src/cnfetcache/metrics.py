"""Latency, miss-rate, AMAT, and energy accounting for a simulation run.

Runtime for the static-energy term is the total LLC service time: the sum
of all hit latencies plus the memory penalty for every miss.  Energy is
reported in normalized units; dynamic energy charges each read, each write,
and each block relocation performed by data shuffling as one extra write.
"""

import io
from collections import Counter
from dataclasses import dataclass, field


@dataclass(frozen=True)
class EnergyParams:
    static_power_units_per_cycle: float = 1.0
    e_read_units: float = 1.0
    e_write_units: float = 2.0
    memory_latency_cycles: int = 30

    def __post_init__(self):
        if min(self.static_power_units_per_cycle, self.e_read_units,
               self.e_write_units, self.memory_latency_cycles) < 0:
            raise ValueError("energy parameters must be non-negative")


@dataclass
class RunStats:
    memory_latency_cycles: int = 30
    accesses: int = 0
    hits: int = 0
    misses: int = 0
    reads: int = 0
    writes: int = 0
    shuffle_moves: int = 0
    hit_latency_histogram: Counter = field(default_factory=Counter)
    total_llc_cycles: int = 0

    @property
    def llc_miss_rate(self):
        return self.misses / self.accesses if self.accesses else 0.0

    @property
    def mean_hit_latency(self):
        return (sum(c * n for c, n in self.hit_latency_histogram.items()) / self.hits
                if self.hits else 0.0)


def record_access(stats, result):
    """Fold one AccessResult into the running counters."""
    stats.accesses += 1
    if result.write:
        stats.writes += 1
    else:
        stats.reads += 1
    stats.shuffle_moves += result.shuffle_moves
    if result.hit:
        stats.hits += 1
        stats.hit_latency_histogram[result.latency_cycles] += 1
        stats.total_llc_cycles += result.latency_cycles
    else:
        stats.misses += 1
        stats.total_llc_cycles += stats.memory_latency_cycles
    return stats


def amat(stats, params=None):
    """Average memory access time: mean hit latency + miss_rate * memory penalty."""
    if stats.accesses == 0:
        raise ValueError("no accesses recorded")
    penalty = (params.memory_latency_cycles if params is not None
               else stats.memory_latency_cycles)
    return stats.mean_hit_latency + stats.llc_miss_rate * penalty


def energy(stats, params, total_cycles=None):
    """(static, dynamic) energy in normalized units."""
    if total_cycles is None:
        total_cycles = stats.total_llc_cycles
    static = total_cycles * params.static_power_units_per_cycle
    dynamic = (params.e_read_units * stats.reads
               + params.e_write_units * (stats.writes + stats.shuffle_moves))
    return static, dynamic


def merge_stats(a, b):
    """Associative addition of two runs' counters."""
    if a.memory_latency_cycles != b.memory_latency_cycles:
        raise ValueError("cannot merge stats with different memory latencies")
    out = RunStats(memory_latency_cycles=a.memory_latency_cycles)
    out.accesses = a.accesses + b.accesses
    out.hits = a.hits + b.hits
    out.misses = a.misses + b.misses
    out.reads = a.reads + b.reads
    out.writes = a.writes + b.writes
    out.shuffle_moves = a.shuffle_moves + b.shuffle_moves
    out.hit_latency_histogram = a.hit_latency_histogram + b.hit_latency_histogram
    out.total_llc_cycles = a.total_llc_cycles + b.total_llc_cycles
    return out


CSV_FIELDS = ["policy", "layout", "workload", "accesses", "hits", "misses",
              "miss_rate", "mean_hit_latency", "amat", "total_llc_cycles",
              "shuffle_moves", "reads", "writes", "static_energy",
              "dynamic_energy", "total_energy"]


def stats_row(stats, params, policy, layout, workload):
    """One CSV row of all run statistics, deterministically formatted."""
    static, dynamic = energy(stats, params)
    values = {
        "policy": policy,
        "layout": layout,
        "workload": workload,
        "accesses": stats.accesses,
        "hits": stats.hits,
        "misses": stats.misses,
        "miss_rate": f"{stats.llc_miss_rate:.6f}",
        "mean_hit_latency": f"{stats.mean_hit_latency:.6f}",
        "amat": f"{amat(stats, params):.6f}" if stats.accesses else "",
        "total_llc_cycles": stats.total_llc_cycles,
        "shuffle_moves": stats.shuffle_moves,
        "reads": stats.reads,
        "writes": stats.writes,
        "static_energy": f"{static:.6f}",
        "dynamic_energy": f"{dynamic:.6f}",
        "total_energy": f"{static + dynamic:.6f}",
    }
    return [str(values[f]) for f in CSV_FIELDS]


def write_stats_csv(rows, stream=None):
    out = stream if stream is not None else io.StringIO()
    out.write(",".join(CSV_FIELDS) + "\n")
    for row in rows:
        out.write(",".join(row) + "\n")
    if stream is None:
        return out.getvalue()
    return None


def write_histogram_csv(stats, stream=None):
    out = stream if stream is not None else io.StringIO()
    out.write("cycles,count\n")
    for cycles in sorted(stats.hit_latency_histogram):
        out.write(f"{cycles},{stats.hit_latency_histogram[cycles]}\n")
    if stream is None:
        return out.getvalue()
    return None
