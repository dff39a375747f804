"""Mapping of group drive strengths to integer cycle latencies.

Delay is modeled as inversely proportional to drive current, which is
proportional to the conducting-CNT count: a group at the nominal strength
runs at min_cycles and weaker groups slow down as nominal/effective, rounded
up to whole cycles and clamped into [min_cycles, max_cycles].  The nominal
strength is calibrated to the median group strength of the process corner so
that the typical group runs at the best-case latency; the slow tail created
by weak stages then lands at the top of the cycle range.
"""

import io
import math
from dataclasses import dataclass, field
from enum import Enum

from . import variation


class LayoutKind(Enum):
    """Orientation of the CNT growth direction relative to the array.

    SET_ALIGNED: growth parallel to the bitlines; latency varies per way.
    WAY_ALIGNED: growth parallel to the wordlines; latency varies per set.
    """

    SET_ALIGNED = "set_aligned"
    WAY_ALIGNED = "way_aligned"


def _is_pow2(n):
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class CacheGeometry:
    capacity_bytes: int
    num_ways: int
    line_bytes: int

    def __post_init__(self):
        for name in ("capacity_bytes", "num_ways", "line_bytes"):
            if not _is_pow2(getattr(self, name)):
                raise ValueError(f"{name} must be a power of two")
        if self.capacity_bytes % (self.line_bytes * self.num_ways) != 0:
            raise ValueError("capacity not divisible by line_bytes*num_ways")
        if not _is_pow2(self.num_sets):
            raise ValueError("num_sets must be a power of two")

    @property
    def num_sets(self):
        return self.capacity_bytes // (self.line_bytes * self.num_ways)

    @property
    def offset_bits(self):
        return self.line_bytes.bit_length() - 1

    @property
    def set_bits(self):
        return self.num_sets.bit_length() - 1


@dataclass
class LatencyMap:
    """Integer cycle latency per aligned group (per way or per set)."""

    layout: LayoutKind
    latencies: list
    min_cycles: int
    max_cycles: int
    geometry: CacheGeometry = None
    failed: list = field(default=None, repr=False)

    def __post_init__(self):
        if any(not self.min_cycles <= c <= self.max_cycles for c in self.latencies):
            raise ValueError("latency outside [min_cycles, max_cycles]")
        if self.geometry is not None:
            expect = (self.geometry.num_ways if self.layout is LayoutKind.SET_ALIGNED
                      else self.geometry.num_sets)
            if len(self.latencies) != expect:
                raise ValueError(f"expected {expect} latencies, got {len(self.latencies)}")

    def worst(self):
        return max(self.latencies)

    def best(self):
        return min(self.latencies)


def strengths_to_latency(strengths, nominal_count, min_cycles, max_cycles):
    """Quantize group strengths into cycles: ceil(min*nominal/effective), clamped.

    Failed groups (zero effective count) are pinned at max_cycles.
    """
    if nominal_count <= 0:
        raise ValueError("nominal_count must be > 0")
    if min_cycles > max_cycles:
        raise ValueError("min_cycles must be <= max_cycles")
    out = []
    for g in strengths:
        if g.failed:
            out.append(max_cycles)
        else:
            cycles = math.ceil(min_cycles * nominal_count / g.effective_count)
            out.append(min(max(cycles, min_cycles), max_cycles))
    return out


def delay_ratios(strengths, nominal_count):
    """Pre-quantization delay factors nominal/effective for working groups."""
    return [nominal_count / g.effective_count for g in strengths if not g.failed]


def _raw_count_pmf(params, tail_sigmas=10.0):
    """Exact pmf of round(Normal(mu, sigma)) clamped at 0."""
    if params.sigma == 0:
        return {round(params.mu): 1.0}

    def cdf(x):
        return 0.5 * (1.0 + math.erf((x - params.mu) / (params.sigma * math.sqrt(2.0))))

    rmax = int(math.ceil(params.mu + tail_sigmas * params.sigma))
    pmf = {}
    for r in range(0, rmax + 1):
        lo = 0.0 if r == 0 else cdf(r - 0.5)
        p = cdf(r + 0.5) - lo
        if p > 0.0:
            pmf[r] = p
    return pmf


def effective_count_cdf(params, stages):
    """Exact CDF of the min-over-stages effective count, as {k: P(eff <= k)}.

    Per stage the survivor count given a raw count r is Binomial(r, q) where
    q is the per-CNT survival probability; the two-way metallic /
    semiconducting split collapses to a single Bernoulli per tube.
    """
    q = params.survival_probability()
    praw = _raw_count_pmf(params)
    rmax = max(praw)
    # P(stage >= k | r) via upper-tail binomial sums.
    ge = {}
    for k in range(0, rmax + 2):
        total = 0.0
        for r, pr in praw.items():
            if k > r:
                continue
            tail = sum(math.comb(r, i) * q ** i * (1 - q) ** (r - i)
                       for i in range(k, r + 1))
            total += pr * tail ** stages
        ge[k] = total
    return {k: 1.0 - ge.get(k + 1, 0.0) for k in range(0, rmax + 1)}


def calibrate_nominal_count(params, stages):
    """Median of the group effective-count distribution (at least 1).

    Anchoring the nominal strength here makes the typical group run at
    min_cycles, so the latency histogram peaks at the fast end while weak
    minority groups populate the slow tail.
    """
    cdf = effective_count_cdf(params, stages)
    for k in sorted(cdf):
        if cdf[k] >= 0.5:
            return max(k, 1)
    return max(max(cdf), 1)


DEFAULT_STAGES = 8
DEFAULT_CYCLE_RANGE = {
    LayoutKind.SET_ALIGNED: (6, 12),
    LayoutKind.WAY_ALIGNED: (6, 10),
}


def build_latency_map(geometry, layout, params, stages=DEFAULT_STAGES,
                      min_cycles=None, max_cycles=None, nominal_count=None,
                      rng=None):
    """Sample a LatencyMap for the given layout.

    Set aligned: one group per way.  Way aligned: one group per set.
    """
    if min_cycles is None:
        min_cycles = DEFAULT_CYCLE_RANGE[layout][0]
    if max_cycles is None:
        max_cycles = DEFAULT_CYCLE_RANGE[layout][1]
    if nominal_count is None:
        nominal_count = calibrate_nominal_count(params, stages)
    num_groups = (geometry.num_ways if layout is LayoutKind.SET_ALIGNED
                  else geometry.num_sets)
    strengths = variation.sample_group_strengths(params, num_groups, stages, rng)
    latencies = strengths_to_latency(strengths, nominal_count, min_cycles, max_cycles)
    return LatencyMap(layout, latencies, min_cycles, max_cycles,
                      geometry=geometry, failed=[g.failed for g in strengths])


def serialize_latency_map(latmap, stream=None):
    """Header (layout, geometry, cycle range) plus one `index,cycles` line per group."""
    out = stream if stream is not None else io.StringIO()
    out.write(f"layout={latmap.layout.value}\n")
    if latmap.geometry is not None:
        g = latmap.geometry
        out.write(f"capacity_bytes={g.capacity_bytes}\n")
        out.write(f"num_ways={g.num_ways}\n")
        out.write(f"line_bytes={g.line_bytes}\n")
    out.write(f"min_cycles={latmap.min_cycles}\n")
    out.write(f"max_cycles={latmap.max_cycles}\n")
    for i, c in enumerate(latmap.latencies):
        out.write(f"{i},{c}\n")
    if stream is None:
        return out.getvalue()
    return None


def load_latency_map(stream):
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    header = {}
    latencies = {}
    for lineno, line in enumerate(stream, start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" in line:
            key, value = line.split("=", 1)
            header[key] = value
        else:
            parts = line.split(",")
            if len(parts) != 2:
                raise ValueError(f"line {lineno}: expected `index,cycles`")
            latencies[int(parts[0])] = int(parts[1])
    for key in ("layout", "min_cycles", "max_cycles"):
        if key not in header:
            raise ValueError(f"missing header key {key}")
    geometry = None
    if "capacity_bytes" in header:
        geometry = CacheGeometry(int(header["capacity_bytes"]),
                                 int(header["num_ways"]),
                                 int(header["line_bytes"]))
    ordered = [latencies[i] for i in sorted(latencies)]
    if sorted(latencies) != list(range(len(ordered))):
        raise ValueError("group indices must be 0..n-1 without gaps")
    return LatencyMap(LayoutKind(header["layout"]), ordered,
                      int(header["min_cycles"]), int(header["max_cycles"]),
                      geometry=geometry)
