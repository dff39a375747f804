"""Non-uniform cache architecture layer: banks on a 2D mesh, X-Y routing,
and the unified latency model hit_lat + noc_lat(core, bank).

Banks are independent cache instances carved out of the LLC capacity; the
bank id sits in the address bits immediately above the per-bank set index,
so a page's lines always land in a single bank.  Routing cost is hop count
times cycles per hop, doubled by default for the request/response round
trip.  Contention is not modeled (single-cycle routers)."""

from dataclasses import dataclass, field

from . import cache_core, vasa, vawa
from .timing import CacheGeometry, LayoutKind


@dataclass
class MeshTopology:
    rows: int = 2
    cols: int = 4
    bank_coords: dict = field(default_factory=dict)   # bank id -> (row, col)
    core_coords: dict = field(default_factory=dict)   # core id -> (row, col)
    cycles_per_hop: int = 1
    round_trip_factor: int = 2

    def __post_init__(self):
        if not self.bank_coords:
            # One bank per router, row-major.
            self.bank_coords = {b: divmod(b, self.cols)
                                for b in range(self.rows * self.cols)}
        if not self.core_coords:
            # Four cores at the corner routers.
            self.core_coords = {
                0: (0, 0),
                1: (0, self.cols - 1),
                2: (self.rows - 1, 0),
                3: (self.rows - 1, self.cols - 1),
            }
        for name, coords in (("bank", self.bank_coords), ("core", self.core_coords)):
            for ident, (r, c) in coords.items():
                if not (0 <= r < self.rows and 0 <= c < self.cols):
                    raise ValueError(f"{name} {ident} coordinate {(r, c)} off grid")
        if len(set(self.bank_coords)) != len(self.bank_coords):
            raise ValueError("bank ids must be unique")

    @property
    def num_banks(self):
        return len(self.bank_coords)


def noc_latency(topology, core_id, bank_id):
    """Round-trip X-Y routing cycles between a core and a bank router."""
    try:
        cr, cc = topology.core_coords[core_id]
        br, bc = topology.bank_coords[bank_id]
    except KeyError as exc:
        raise KeyError(f"unknown core or bank id: {exc}") from None
    hops = abs(cr - br) + abs(cc - bc)
    return topology.round_trip_factor * hops * topology.cycles_per_hop


def bank_of(address, num_banks, bank_geometry):
    """Bank id from the address bits immediately above the set-index bits."""
    if num_banks & (num_banks - 1):
        raise ValueError("num_banks must be a power of two")
    if num_banks == 1:
        return 0
    shift = bank_geometry.offset_bits + bank_geometry.set_bits
    return (address >> shift) & (num_banks - 1)


@dataclass
class UnifiedLatency:
    hit_lat: int
    noc_lat: int

    def __post_init__(self):
        if self.hit_lat < 0 or self.noc_lat < 0:
            raise ValueError("latency components must be >= 0")

    @property
    def total(self):
        return self.hit_lat + self.noc_lat


def bank_average_latency(latmap):
    """Mean way latency of a bank, the per-bank cost metric for page mapping
    on set aligned banks."""
    return sum(latmap.latencies) / len(latmap.latencies)


class NucaCache:
    """LLC distributed over mesh-attached banks, one cache instance each.

    Set aligned banks run the per-way delay-register policy (with optional
    data shuffling, which never crosses banks); way aligned banks each carry
    their own segment table or uniform grouping, forming one logical way
    aligned cache with many latency groups.  Baseline and partial-disabling
    policies apply bank by bank at a uniform clock.
    """

    def __init__(self, total_geometry, topology, layout, latmaps,
                 policy=cache_core.PolicyKind.VASA, shuffle_groups=None,
                 latency_sources=None, disabled=None, memory=None):
        self.topology = topology
        self.layout = layout
        self.policy = policy
        banks = topology.num_banks
        if total_geometry.capacity_bytes % banks != 0:
            raise ValueError("capacity must divide evenly across banks")
        self.bank_geometry = CacheGeometry(
            total_geometry.capacity_bytes // banks,
            total_geometry.num_ways, total_geometry.line_bytes)
        if len(latmaps) != banks:
            raise ValueError("need one latency map per bank")
        self.latmaps = latmaps
        self.shuffle_groups = shuffle_groups
        self.latency_sources = latency_sources
        self.disabled = disabled
        self.memory = {} if memory is None else memory
        self.banks = [cache_core.CacheState(self.bank_geometry, self.memory)
                      for _ in range(banks)]
        self.worst_cycles = max(m.worst() for m in latmaps)

    def bank_of(self, address):
        return bank_of(address, self.topology.num_banks, self.bank_geometry)

    def _bank_access(self, bank, address, write, value):
        state = self.banks[bank]
        latmap = self.latmaps[bank]
        kind = cache_core.PolicyKind
        if self.policy is kind.BASELINE_WORST:
            return cache_core.access_baseline(state, address, latmap,
                                              self.worst_cycles, write, value)
        if self.policy is kind.BASELINE_PD:
            return cache_core.access_partial_disable(state, address, latmap,
                                                     self.disabled[bank],
                                                     write, value)
        if self.layout is LayoutKind.SET_ALIGNED:
            if self.policy is kind.VASA_DS:
                return vasa.access_vasa_ds(state, address, latmap,
                                           self.shuffle_groups[bank],
                                           write, value)
            return vasa.access_vasa(state, address, latmap, write, value)
        return vawa.access_vawa(state, address, self.latency_sources[bank],
                                write, value)

    def access(self, core_id, address, write=False, value=0):
        """One LLC reference; the result's latency is hit_lat + noc_lat."""
        bank = self.bank_of(address)
        result = self._bank_access(bank, address, write, value)
        parts = UnifiedLatency(result.latency_cycles,
                               noc_latency(self.topology, core_id, bank))
        result.latency_cycles = parts.total
        return result, parts, bank


def access_nuca(nuca_cache, core_id, address, write=False, value=0):
    result, _, _ = nuca_cache.access(core_id, address, write, value)
    return result
