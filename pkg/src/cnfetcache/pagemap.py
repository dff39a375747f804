"""Variation-aware page mapping: profile page hotness, tag physical frames by
cache latency, and allocate the hottest pages to the fastest frames.

The mapping is a two-pass scheme: a profiling pass counts LLC-bound accesses
per virtual page (optionally behind the L1 filter), then pages sorted by
access count greedily claim the cheapest free frame.  Frame cost is the
latency class of the cache sets the frame's lines occupy, plus the NoC
round-trip to the frame's bank under a NUCA organization.  Because the cost
of a frame does not depend on which page holds it (for a fixed requesting
core), the greedy order minimizes total count-weighted latency.
"""

import io
from dataclasses import dataclass, field


@dataclass
class PageProfile:
    """Per-virtual-page LLC access counts, with per-core breakdowns."""

    counts: dict = field(default_factory=dict)        # vpage -> count
    core_counts: dict = field(default_factory=dict)   # vpage -> {core: count}

    def record(self, vpage, core_id, n=1):
        self.counts[vpage] = self.counts.get(vpage, 0) + n
        per = self.core_counts.setdefault(vpage, {})
        per[core_id] = per.get(core_id, 0) + n

    def dominant_core(self, vpage):
        """Core issuing the most accesses to the page (ties: lowest id)."""
        per = self.core_counts.get(vpage)
        if not per:
            return None
        best = max(per.values())
        return min(c for c, n in per.items() if n == best)

    def pages_by_hotness(self):
        """Pages ordered by access count descending, ties by page number."""
        return sorted(self.counts, key=lambda p: (-self.counts[p], p))


@dataclass
class Frame:
    """One physical page frame and the cache footprint of its lines."""

    index: int
    start_set: int
    span_sets: int
    bank: int = 0
    latency_class: int = 0
    free: bool = True

    @property
    def sets(self):
        return range(self.start_set, self.start_set + self.span_sets)


@dataclass
class FrameInventory:
    frames: list
    page_bytes: int

    def free_frames(self):
        return [f for f in self.frames if f.free]


def page_granularity(page_bytes, line_bytes, num_ways):
    """Grouping granularity in cache sets implied by page-level mapping:
    one page of data equals the capacity of page_bytes/(line_bytes*num_ways)
    sets."""
    if page_bytes % (line_bytes * num_ways) != 0:
        raise ValueError("page size not divisible by line_bytes*num_ways")
    return page_bytes // (line_bytes * num_ways)


def frame_span_sets(page_bytes, line_bytes, num_sets):
    """Consecutive sets actually touched by one frame's lines: one line per
    set under standard indexing, bounded by the set count."""
    if page_bytes % line_bytes != 0:
        raise ValueError("page size not divisible by line size")
    return min(page_bytes // line_bytes, num_sets)


def build_frame_inventory(geometry, page_bytes, num_frames, set_latency,
                          num_banks=1):
    """Enumerate frames 0..num_frames-1 with their set footprint and latency.

    Frame placement follows the address math (frame i starts at physical
    address i*page_bytes, bank bits above the per-bank set bits).
    set_latency(bank, set_index) supplies the effective latency of a set;
    the frame is tagged with the maximum over its footprint, so a frame
    whose footprint falls entirely inside one latency segment gets that
    class and any straddling frame is tagged conservatively.
    """
    span = frame_span_sets(page_bytes, geometry.line_bytes, geometry.num_sets)
    blocks_per_bank = geometry.num_sets // span
    frames = []
    for idx in range(num_frames):
        block = idx % blocks_per_bank
        bank = (idx // blocks_per_bank) % num_banks
        start = block * span
        lat = max(set_latency(bank, s) for s in range(start, start + span))
        frames.append(Frame(idx, start, span, bank, lat))
    return FrameInventory(frames, page_bytes)


def profile_trace(records, page_bytes, l1_config=None):
    """Count LLC-bound accesses per virtual page.

    With an enabled L1 config the trace is first run through the L1 filter
    and only the misses and write-backs are counted; otherwise raw accesses
    are counted.
    """
    if l1_config is not None and l1_config.enabled:
        from .workload import l1_filter
        records = l1_filter(records, l1_config).records
    profile = PageProfile()
    for rec in records:
        profile.record(rec.vaddr // page_bytes, rec.core_id)
    return profile


def assign_pages(profile, inventory, latency_of_frame=None):
    """Greedy hot-page-to-fast-frame assignment.

    Pages are taken hottest first (count descending, page number ascending on
    ties); each claims the free frame minimizing latency_of_frame(frame,
    dominant_core), ties broken by frame index.  Default cost is the frame's
    latency class.  Raises if the touched pages outnumber the free frames.
    """
    if latency_of_frame is None:
        latency_of_frame = lambda frame, core: frame.latency_class
    pages = profile.pages_by_hotness()
    free = inventory.free_frames()
    if len(pages) > len(free):
        raise ValueError(f"{len(pages)} pages exceed {len(free)} free frames")
    mapping = {}
    for vpage in pages:
        core = profile.dominant_core(vpage)
        best = min(free, key=lambda f: (latency_of_frame(f, core), f.index))
        free.remove(best)
        best.free = False
        mapping[vpage] = best.index
    return mapping


def translate(vaddr, mapping, page_bytes):
    """Rewrite the page bits of a virtual address per the assignment."""
    vpage, offset = divmod(vaddr, page_bytes)
    frame = mapping.get(vpage)
    if frame is None:
        return vaddr
    return frame * page_bytes + offset


def serialize_page_map(mapping, inventory=None, stream=None):
    """`vpage,frame[,bank]` lines, ordered by virtual page."""
    out = stream if stream is not None else io.StringIO()
    banks = {}
    if inventory is not None:
        banks = {f.index: f.bank for f in inventory.frames}
    for vpage in sorted(mapping):
        frame = mapping[vpage]
        if banks:
            out.write(f"{vpage},{frame},{banks[frame]}\n")
        else:
            out.write(f"{vpage},{frame}\n")
    if stream is None:
        return out.getvalue()
    return None


def load_page_map(stream):
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    mapping = {}
    for lineno, line in enumerate(stream, start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(",")
        if len(parts) not in (2, 3):
            raise ValueError(f"line {lineno}: expected `vpage,frame[,bank]`")
        mapping[int(parts[0])] = int(parts[1])
    return mapping


def serialize_profile(profile, stream=None):
    """`vpage,count,core:count,...` lines ordered by virtual page."""
    out = stream if stream is not None else io.StringIO()
    for vpage in sorted(profile.counts):
        per = profile.core_counts.get(vpage, {})
        cores = ",".join(f"{c}:{per[c]}" for c in sorted(per))
        out.write(f"{vpage},{profile.counts[vpage]}" + ("," + cores if cores else "") + "\n")
    if stream is None:
        return out.getvalue()
    return None
