"""Set-associative cache engine: decomposition, tag match, LRU, baseline policies.

Line payloads are modeled as last-writer sequence numbers rather than bytes;
a flat memory dict backs misses and write-backs, which is enough to check
that any replacement or promotion policy returns the most recently written
value for every read.  All policy variants plug into this state.
"""

from dataclasses import dataclass
from enum import Enum

from .timing import LayoutKind


class PolicyKind(Enum):
    BASELINE_WORST = "baseline"
    BASELINE_PD = "baseline_pd"
    VASA = "vasa"
    VASA_DS = "vasa_ds"
    VAWA_UG = "vawa_ug"
    VAWA_NG = "vawa_ng"


class CacheLine:
    """One cache line: tag/valid/dirty plus replacement metadata.

    lru_rank is the recency rank (0 = most recent) within the set, or within
    the line's way group when the data-shuffling policy manages the set.
    priority_bit is the 1-bit T field used by way-group shuffling: 0 marks
    the most recently used line of its group.
    """

    __slots__ = ("valid", "tag", "addr", "data", "dirty", "lru_rank",
                 "priority_bit")

    def __init__(self):
        self.valid = False
        self.tag = 0
        self.addr = 0
        self.data = 0
        self.dirty = False
        self.lru_rank = 0
        # Invalid lines carry the low-priority value; only the group MRU is 0.
        self.priority_bit = 1

    def __repr__(self):
        return (f"CacheLine(valid={self.valid}, tag={self.tag:#x}, "
                f"rank={self.lru_rank}, T={self.priority_bit})")


@dataclass
class AccessResult:
    hit: bool
    way: int = None
    latency_cycles: int = 1
    evicted_tag: int = None
    shuffle_moves: int = 0
    write: bool = False
    value: int = 0
    evicted_addr: int = None
    evicted_dirty: bool = False

    def __post_init__(self):
        if self.hit and self.way is None:
            raise ValueError("hit result must carry the way")
        if self.latency_cycles < 1:
            raise ValueError("latency_cycles must be >= 1")


def decompose(address, geometry):
    """Split an address into (tag, set_index, offset).

    Offset is the low log2(line_bytes) bits, the set index the next
    log2(num_sets) bits, the tag everything above.
    """
    offset = address & (geometry.line_bytes - 1)
    set_index = (address >> geometry.offset_bits) & (geometry.num_sets - 1)
    tag = address >> (geometry.offset_bits + geometry.set_bits)
    return tag, set_index, offset


class CacheState:
    """Mutable state of one cache instance (single-threaded)."""

    def __init__(self, geometry, memory=None):
        self.geometry = geometry
        self.sets = [[CacheLine() for _ in range(geometry.num_ways)]
                     for _ in range(geometry.num_sets)]
        # line-aligned address -> last written value
        self.memory = {} if memory is None else memory
        self._offset_bits = geometry.offset_bits
        self._set_mask = geometry.num_sets - 1
        self._tag_shift = geometry.offset_bits + geometry.set_bits

    def locate(self, address):
        line_addr = address >> self._offset_bits
        set_index = line_addr & self._set_mask
        tag = address >> self._tag_shift
        return tag, set_index, line_addr << self._offset_bits

    def valid_tags(self, set_index):
        return sorted(l.tag for l in self.sets[set_index] if l.valid)


def find_way(lines, tag, allowed=None):
    """Index of the valid line holding tag, searched over allowed ways."""
    if allowed is None:
        for w, line in enumerate(lines):
            if line.valid and line.tag == tag:
                return w
    else:
        for w in allowed:
            line = lines[w]
            if line.valid and line.tag == tag:
                return w
    return None


def promote_lru(lines, way, allowed=None):
    """Make `way` most recent; ranks of younger valid lines age by one."""
    ways = range(len(lines)) if allowed is None else allowed
    prev = lines[way].lru_rank
    for w in ways:
        line = lines[w]
        if line.valid and line.lru_rank < prev:
            line.lru_rank += 1
    lines[way].lru_rank = 0


def pick_victim(lines, allowed=None):
    """Way to fill: an invalid way if any, else the LRU valid way."""
    ways = range(len(lines)) if allowed is None else allowed
    victim = None
    worst_rank = -1
    for w in ways:
        line = lines[w]
        if not line.valid:
            return w, False
        if line.lru_rank > worst_rank:
            worst_rank = line.lru_rank
            victim = w
    return victim, True


def install(state, lines, way, tag, line_addr, write, value, allowed=None):
    """Evict (if needed) and fill `way` with the line for line_addr.

    Returns (evicted_tag, evicted_addr, evicted_dirty).
    """
    line = lines[way]
    evicted_tag = evicted_addr = None
    evicted_dirty = False
    if line.valid:
        evicted_tag = line.tag
        evicted_addr = line.addr
        evicted_dirty = line.dirty
        if line.dirty:
            state.memory[line.addr] = line.data
    else:
        # Newly valid line enters as the oldest, then gets promoted.
        ways = range(len(lines)) if allowed is None else allowed
        line.lru_rank = sum(1 for w in ways if lines[w].valid)
        line.valid = True
    line.tag = tag
    line.addr = line_addr
    line.data = state.memory.get(line_addr, 0)
    line.dirty = False
    if write:
        line.data = value
        line.dirty = True
    promote_lru(lines, way, allowed)
    return evicted_tag, evicted_addr, evicted_dirty


def _lru_access(state, address, hit_latency, miss_latency, write, value,
                allowed=None):
    tag, set_index, line_addr = state.locate(address)
    lines = state.sets[set_index]
    way = find_way(lines, tag, allowed)
    if way is not None:
        line = lines[way]
        if write:
            line.data = value
            line.dirty = True
        promote_lru(lines, way, allowed)
        return AccessResult(hit=True, way=way, latency_cycles=hit_latency,
                            write=write, value=line.data)
    way, _ = pick_victim(lines, allowed)
    ev_tag, ev_addr, ev_dirty = install(state, lines, way, tag, line_addr,
                                        write, value, allowed)
    return AccessResult(hit=False, way=None, latency_cycles=miss_latency,
                        evicted_tag=ev_tag, write=write,
                        value=lines[way].data, evicted_addr=ev_addr,
                        evicted_dirty=ev_dirty)


def access_baseline(state, address, latmap, worst_cycles, write=False, value=0):
    """Plain LRU lookup with the whole cache clocked at the worst timing."""
    return _lru_access(state, address, worst_cycles, worst_cycles, write, value)


def worst_groups(latmap):
    """Indices of groups at the map's worst latency; empty when all are worst."""
    worst = max(latmap.latencies)
    disabled = {i for i, c in enumerate(latmap.latencies) if c == worst}
    if len(disabled) == len(latmap.latencies):
        return set()
    return disabled


def access_partial_disable(state, address, latmap, disabled, write=False,
                           value=0):
    """Baseline with the worst-timing groups disabled.

    Set aligned: lookups and fills skip the disabled ways.  Way aligned:
    requests to disabled sets bypass the cache and are served by memory.
    The remaining groups run at the fastest uniform clock they support.
    """
    if latmap.layout is LayoutKind.SET_ALIGNED:
        enabled = [w for w in range(state.geometry.num_ways) if w not in disabled]
        if not enabled:
            raise ValueError("all cache ways disabled")
        clock = max(latmap.latencies[w] for w in enabled)
        return _lru_access(state, address, clock, clock, write, value,
                           allowed=enabled)

    enabled_lat = [c for i, c in enumerate(latmap.latencies) if i not in disabled]
    if not enabled_lat:
        raise ValueError("all cache sets disabled")
    clock = max(enabled_lat)
    tag, set_index, line_addr = state.locate(address)
    if set_index in disabled:
        # Forced miss straight to memory; nothing is allocated.
        if write:
            state.memory[line_addr] = value
            return AccessResult(hit=False, latency_cycles=1, write=True,
                                value=value)
        return AccessResult(hit=False, latency_cycles=1,
                            value=state.memory.get(line_addr, 0))
    return _lru_access(state, address, clock, clock, write, value)
