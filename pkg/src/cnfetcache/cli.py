"""Experiment driver: config files, pipeline orchestration, and the CLI.

A single flat-key config file describes an experiment end to end
(`cache.ways=8` style, `#` comments, CLI --set overrides).  The pipeline is
variation sampling -> latency map -> grouping -> optional profiling and page
mapping -> trace simulation -> CSV report.  All randomness is seeded from
the config, so a fixed config reproduces byte-identical reports.

Subcommands: gen-variation, simulate, profile, compare, gen-trace.
"""

import argparse
import sys
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from . import (cache_core, metrics, nuca, pagemap, timing, variation, vasa,
               vawa, workload)
from .cache_core import PolicyKind
from .timing import CacheGeometry, LayoutKind


class ConfigError(ValueError):
    pass


def _parse_value(raw):
    raw = raw.strip()
    low = raw.lower()
    if low in ("true", "false"):
        return low == "true"
    try:
        return int(raw, 0)
    except ValueError:
        pass
    try:
        return float(raw)
    except ValueError:
        pass
    return raw


def parse_config_file(path):
    keys = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value")
            key, value = line.split("=", 1)
            keys[key.strip()] = _parse_value(value)
    return keys


def _int_list(value):
    if isinstance(value, int):
        return [value]
    if isinstance(value, str):
        return [int(x) for x in value.split(",") if x.strip()]
    return list(value)


@dataclass
class ExperimentConfig:
    capacity_bytes: int = 2 * 1024 * 1024
    num_ways: int = 8
    line_bytes: int = 64
    layout: str = "set_aligned"
    policy: str = "baseline"
    mu: float = 9.0
    sigma: float = 2.1
    p_metallic: float = 0.05
    p_remove_metallic: float = 0.999
    p_remove_semiconducting: float = 0.05
    p_align: float = 0.05
    cnt_seed: int = 1
    stages: int = 8
    min_cycles: int = None
    max_cycles: int = None
    nominal_count: float = None
    map_file: str = None
    way_groups: int = 4
    uniform_groups: int = 64
    classes: list = field(default_factory=lambda: [6, 7])
    budget: int = 16
    granularity: int = None
    pm_enabled: bool = False
    pm_page_bytes: int = 4096
    pm_unified: bool = True
    pm_count_raw: bool = False
    nuca_enabled: bool = False
    nuca_rows: int = 2
    nuca_cols: int = 4
    nuca_cycles_per_hop: int = 1
    nuca_round_trip: int = 2
    l1_enabled: bool = False
    trace_path: str = None
    wl_num_pages: int = 256
    wl_zipf: float = 1.2
    wl_read_fraction: float = 0.7
    wl_length: int = 100_000
    wl_num_cores: int = 1
    wl_instr_stream: bool = False
    wl_seed: int = 0
    wl_page_bytes: int = 4096
    wl_core_affinity: float = 0.75
    static_power: float = 1.0
    e_read: float = 1.0
    e_write: float = 2.0
    memory_latency: int = 30

    KEYMAP = {
        "cache.capacity_bytes": "capacity_bytes",
        "cache.ways": "num_ways",
        "cache.line_bytes": "line_bytes",
        "layout": "layout",
        "policy": "policy",
        "cnt.mu": "mu",
        "cnt.sigma": "sigma",
        "cnt.p_metallic": "p_metallic",
        "cnt.p_remove_metallic": "p_remove_metallic",
        "cnt.p_remove_semiconducting": "p_remove_semiconducting",
        "cnt.p_align": "p_align",
        "cnt.seed": "cnt_seed",
        "timing.stages": "stages",
        "timing.min_cycles": "min_cycles",
        "timing.max_cycles": "max_cycles",
        "timing.nominal_count": "nominal_count",
        "timing.map_file": "map_file",
        "vasa.way_groups": "way_groups",
        "grouping.num_groups": "uniform_groups",
        "grouping.classes": "classes",
        "grouping.budget": "budget",
        "grouping.granularity": "granularity",
        "pagemap.enabled": "pm_enabled",
        "pagemap.page_bytes": "pm_page_bytes",
        "pagemap.unified": "pm_unified",
        "pagemap.count_raw": "pm_count_raw",
        "nuca.enabled": "nuca_enabled",
        "nuca.rows": "nuca_rows",
        "nuca.cols": "nuca_cols",
        "nuca.cycles_per_hop": "nuca_cycles_per_hop",
        "nuca.round_trip_factor": "nuca_round_trip",
        "l1.enabled": "l1_enabled",
        "workload.trace": "trace_path",
        "workload.num_pages": "wl_num_pages",
        "workload.zipf": "wl_zipf",
        "workload.read_fraction": "wl_read_fraction",
        "workload.length": "wl_length",
        "workload.num_cores": "wl_num_cores",
        "workload.instr_stream": "wl_instr_stream",
        "workload.seed": "wl_seed",
        "workload.page_bytes": "wl_page_bytes",
        "workload.core_affinity": "wl_core_affinity",
        "energy.static_power": "static_power",
        "energy.e_read": "e_read",
        "energy.e_write": "e_write",
        "energy.memory_latency": "memory_latency",
    }

    @classmethod
    def from_keys(cls, keys):
        cfg = cls()
        for key, value in keys.items():
            attr = cls.KEYMAP.get(key)
            if attr is None:
                raise ConfigError(f"unknown config key {key!r}")
            if attr == "classes":
                value = _int_list(value)
            setattr(cfg, attr, value)
        cfg.validate()
        return cfg

    def copy_with(self, **overrides):
        import copy
        cfg = copy.deepcopy(self)
        for attr, value in overrides.items():
            setattr(cfg, attr, value)
        cfg.validate()
        return cfg

    # -- derived pieces -------------------------------------------------

    @property
    def layout_kind(self):
        try:
            return LayoutKind(self.layout)
        except ValueError:
            raise ConfigError(f"unknown layout {self.layout!r}") from None

    @property
    def policy_kind(self):
        try:
            return PolicyKind(self.policy)
        except ValueError:
            raise ConfigError(f"unknown policy {self.policy!r}") from None

    @property
    def geometry(self):
        return CacheGeometry(self.capacity_bytes, self.num_ways, self.line_bytes)

    @property
    def bank_geometry(self):
        if not self.nuca_enabled:
            return self.geometry
        banks = self.num_banks
        return CacheGeometry(self.capacity_bytes // banks, self.num_ways,
                             self.line_bytes)

    @property
    def num_banks(self):
        return self.nuca_rows * self.nuca_cols if self.nuca_enabled else 1

    @property
    def cnt_params(self):
        from .variation import CntParams
        return CntParams(self.mu, self.sigma, self.p_metallic,
                         self.p_remove_metallic, self.p_remove_semiconducting,
                         self.p_align, self.cnt_seed)

    @property
    def cycle_range(self):
        lo, hi = timing.DEFAULT_CYCLE_RANGE[self.layout_kind]
        return (self.min_cycles if self.min_cycles is not None else lo,
                self.max_cycles if self.max_cycles is not None else hi)

    @property
    def energy_params(self):
        return metrics.EnergyParams(self.static_power, self.e_read,
                                    self.e_write, self.memory_latency)

    @property
    def topology(self):
        return nuca.MeshTopology(self.nuca_rows, self.nuca_cols,
                                 cycles_per_hop=self.nuca_cycles_per_hop,
                                 round_trip_factor=self.nuca_round_trip)

    @property
    def effective_granularity(self):
        """Segment granularity in sets; page-mapped tables must be aligned to
        a whole frame footprint so every frame falls in one latency class."""
        if self.pm_enabled:
            return min(self.pm_page_bytes // self.line_bytes,
                       self.bank_geometry.num_sets)
        return self.granularity if self.granularity is not None else 1

    def workload_label(self):
        # Single CSV cell: no commas.
        if self.trace_path:
            return self.trace_path
        return (f"synthetic(pages={self.wl_num_pages};zipf={self.wl_zipf};"
                f"len={self.wl_length};cores={self.wl_num_cores};seed={self.wl_seed})")

    def workload_signature(self):
        if self.trace_path:
            return ("trace", self.trace_path)
        return ("synthetic", self.wl_num_pages, self.wl_zipf,
                self.wl_read_fraction, self.wl_length, self.wl_num_cores,
                self.wl_instr_stream, self.wl_seed, self.wl_page_bytes,
                self.wl_core_affinity)

    def validate(self):
        try:
            geometry = self.geometry
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        policy = self.policy_kind
        layout = self.layout_kind
        lo, hi = self.cycle_range
        if lo > hi or lo < 1:
            raise ConfigError(f"bad cycle range [{lo},{hi}]")
        if policy in (PolicyKind.VASA, PolicyKind.VASA_DS) and layout is not LayoutKind.SET_ALIGNED:
            raise ConfigError(f"policy {self.policy} requires layout=set_aligned")
        if policy in (PolicyKind.VAWA_UG, PolicyKind.VAWA_NG) and layout is not LayoutKind.WAY_ALIGNED:
            raise ConfigError(f"policy {self.policy} requires layout=way_aligned")
        if self.pm_enabled:
            if policy in (PolicyKind.BASELINE_WORST, PolicyKind.BASELINE_PD):
                raise ConfigError("page mapping requires a variation-aware policy")
            if layout is LayoutKind.SET_ALIGNED and not self.nuca_enabled:
                raise ConfigError("page mapping on a set aligned layout requires NUCA "
                                  "(all sets share one latency)")
            if self.pm_page_bytes % self.line_bytes != 0:
                raise ConfigError("page size must be a multiple of the line size")
            if self.nuca_enabled and self.pm_page_bytes // self.line_bytes > self.bank_geometry.num_sets:
                raise ConfigError("page footprint exceeds one bank's sets; "
                                  "use smaller pages or larger banks")
        if policy is PolicyKind.VASA_DS and geometry.num_ways % self.way_groups != 0:
            raise ConfigError("vasa.way_groups must divide the way count")
        if policy is PolicyKind.VAWA_UG and self.bank_geometry.num_sets % self.uniform_groups != 0:
            raise ConfigError("grouping.num_groups must divide the set count")
        if policy is PolicyKind.VAWA_NG:
            if sorted(self.classes) != list(self.classes):
                raise ConfigError("grouping.classes must be ascending")
            if any(c >= hi for c in self.classes):
                raise ConfigError("grouping.classes must be below max_cycles")
        if self.nuca_enabled:
            if self.capacity_bytes % self.num_banks != 0:
                raise ConfigError("capacity must divide across banks")
            if self.wl_num_cores > len(self.topology.core_coords):
                raise ConfigError("more trace cores than cores on the mesh")
        return self


# -- pipeline ------------------------------------------------------------


def load_records(cfg):
    if cfg.trace_path:
        num_cores = (len(cfg.topology.core_coords) if cfg.nuca_enabled
                     else None)
        with open(cfg.trace_path) as fh:
            return workload.parse_trace(fh, num_cores=num_cores)
    spec = workload.SyntheticSpec(cfg.wl_num_pages, cfg.wl_zipf,
                                  cfg.wl_read_fraction, cfg.wl_length,
                                  cfg.wl_num_cores, cfg.wl_instr_stream,
                                  cfg.wl_seed, cfg.wl_page_bytes,
                                  cfg.line_bytes, cfg.wl_core_affinity)
    return workload.generate_synthetic(spec)


def build_latency_maps(cfg):
    """One latency map per bank: loaded from timing.map_file when given,
    otherwise sampled, deterministically seeded from cnt.seed."""
    if cfg.map_file:
        if cfg.nuca_enabled:
            raise ConfigError("timing.map_file only supports a single bank; "
                              "NUCA maps are generated from cnt.seed")
        with open(cfg.map_file) as fh:
            latmap = timing.load_latency_map(fh)
        if latmap.layout is not cfg.layout_kind:
            raise ConfigError(f"map file layout {latmap.layout.value} does "
                              f"not match config layout {cfg.layout}")
        expect = (cfg.geometry.num_ways
                  if cfg.layout_kind is LayoutKind.SET_ALIGNED
                  else cfg.geometry.num_sets)
        if len(latmap.latencies) != expect:
            raise ConfigError(f"map file has {len(latmap.latencies)} groups, "
                              f"geometry needs {expect}")
        return [latmap]
    lo, hi = cfg.cycle_range
    params = cfg.cnt_params
    nominal = cfg.nominal_count
    if nominal is None:
        nominal = timing.calibrate_nominal_count(params, cfg.stages)
    seeds = np.random.SeedSequence(cfg.cnt_seed).spawn(cfg.num_banks)
    maps = []
    for seq in seeds:
        rng = np.random.default_rng(seq)
        maps.append(timing.build_latency_map(cfg.bank_geometry, cfg.layout_kind,
                                             params, cfg.stages, lo, hi,
                                             nominal_count=nominal, rng=rng))
    return maps


@dataclass
class Machinery:
    """Per-bank policy state built from the latency maps."""

    latmaps: list
    worst_cycles: int = 0
    disabled: list = None
    shuffle_groups: list = None
    latency_sources: list = None

    def set_latency(self, bank, set_index):
        """Effective latency the cache charges for a hit in this set."""
        if self.latency_sources is not None:
            src = self.latency_sources[bank]
            if isinstance(src, vawa.UniformGroups):
                return src.latency_of_set(set_index)
            return vawa.lookup_latency(src, set_index)
        return nuca.bank_average_latency(self.latmaps[bank])


def build_machinery(cfg, latmaps):
    policy = cfg.policy_kind
    m = Machinery(latmaps)
    m.worst_cycles = max(lm.worst() for lm in latmaps)
    if policy is PolicyKind.BASELINE_PD:
        m.disabled = [cache_core.worst_groups(lm) for lm in latmaps]
    if policy is PolicyKind.VASA_DS:
        m.shuffle_groups = [vasa.WayGroups.from_latency_map(lm, cfg.way_groups)
                            for lm in latmaps]
    if policy is PolicyKind.VAWA_UG:
        m.latency_sources = [vawa.build_uniform_groups(lm, cfg.uniform_groups)
                             for lm in latmaps]
    if policy is PolicyKind.VAWA_NG:
        m.latency_sources = [vawa.build_nonuniform_groups(
            lm, list(cfg.classes), cfg.budget, cfg.effective_granularity)
            for lm in latmaps]
    return m


def _uca_accessor(cfg, machinery):
    policy = cfg.policy_kind
    state = cache_core.CacheState(cfg.geometry)
    latmap = machinery.latmaps[0]
    if policy is PolicyKind.BASELINE_WORST:
        worst = machinery.worst_cycles
        return state, lambda core, addr, w, v: cache_core.access_baseline(
            state, addr, latmap, worst, w, v)
    if policy is PolicyKind.BASELINE_PD:
        disabled = machinery.disabled[0]
        return state, lambda core, addr, w, v: cache_core.access_partial_disable(
            state, addr, latmap, disabled, w, v)
    if policy is PolicyKind.VASA:
        return state, lambda core, addr, w, v: vasa.access_vasa(
            state, addr, latmap, w, v)
    if policy is PolicyKind.VASA_DS:
        groups = machinery.shuffle_groups[0]
        return state, lambda core, addr, w, v: vasa.access_vasa_ds(
            state, addr, latmap, groups, w, v)
    source = machinery.latency_sources[0]
    return state, lambda core, addr, w, v: vawa.access_vawa(
        state, addr, source, w, v)


def _nuca_accessor(cfg, machinery):
    cache = nuca.NucaCache(cfg.geometry, cfg.topology, cfg.layout_kind,
                           machinery.latmaps, policy=cfg.policy_kind,
                           shuffle_groups=machinery.shuffle_groups,
                           latency_sources=machinery.latency_sources,
                           disabled=machinery.disabled)
    cache.worst_cycles = machinery.worst_cycles
    return cache, lambda core, addr, w, v: nuca.access_nuca(cache, core, addr, w, v)


def build_page_mapping(cfg, machinery, llc_records, raw_records):
    """Profile the workload and assign hot pages to fast frames."""
    page_bytes = cfg.pm_page_bytes
    source = raw_records if cfg.pm_count_raw else llc_records
    profile = pagemap.PageProfile()
    for rec in source:
        profile.record(rec.vaddr // page_bytes, rec.core_id)

    geometry = cfg.bank_geometry
    span = pagemap.frame_span_sets(page_bytes, cfg.line_bytes, geometry.num_sets)
    blocks = cfg.num_banks * (geometry.num_sets // span)
    pages = len(profile.counts)
    copies = max(1, -(-pages // blocks))
    num_frames = copies * blocks

    inventory = pagemap.build_frame_inventory(
        geometry, page_bytes, num_frames, machinery.set_latency,
        num_banks=cfg.num_banks)

    if cfg.nuca_enabled and cfg.pm_unified:
        topology = cfg.topology
        cost = lambda frame, core: (frame.latency_class
                                    + nuca.noc_latency(topology, core or 0, frame.bank))
    else:
        cost = lambda frame, core: frame.latency_class
    mapping = pagemap.assign_pages(profile, inventory, cost)
    return profile, inventory, mapping


def make_accessor(cfg, machinery):
    """Callable (core_id, addr, write, value) -> AccessResult for the
    configured policy, over a fresh cache instance."""
    if cfg.nuca_enabled:
        return _nuca_accessor(cfg, machinery)[1]
    return _uca_accessor(cfg, machinery)[1]


def simulate_records(records, accessor, stats, translate_fn=None):
    seq = 0
    for rec in records:
        addr = rec.vaddr if translate_fn is None else translate_fn(rec.vaddr)
        if rec.op == "W":
            seq += 1
            result = accessor(rec.core_id, addr, True, seq)
        else:
            result = accessor(rec.core_id, addr, False, 0)
        metrics.record_access(stats, result)
    return stats


@dataclass
class ExperimentOutput:
    config: ExperimentConfig
    stats: metrics.RunStats
    latmaps: list
    profile: object = None
    mapping: dict = None
    inventory: object = None
    notes: list = field(default_factory=list)

    def stats_row(self):
        return metrics.stats_row(self.stats, self.config.energy_params,
                                 self.config.policy, self.config.layout,
                                 self.config.workload_label())


def run_experiment(cfg, records=None):
    cfg.validate()
    if records is None:
        records = load_records(cfg)
    llc_records = records
    if cfg.l1_enabled:
        llc_records = workload.l1_filter(records, workload.L1Config()).records

    latmaps = build_latency_maps(cfg)
    machinery = build_machinery(cfg, latmaps)

    translate_fn = None
    profile = mapping = inventory = None
    notes = []
    if cfg.pm_enabled:
        profile, inventory, mapping = build_page_mapping(
            cfg, machinery, llc_records, records)
        page_bytes = cfg.pm_page_bytes
        translate_fn = lambda vaddr: pagemap.translate(vaddr, mapping, page_bytes)

    if cfg.nuca_enabled:
        _, accessor = _nuca_accessor(cfg, machinery)
        averages = [nuca.bank_average_latency(lm) for lm in latmaps]
        spread = max(averages) - min(averages)
        notes.append("bank_avg_hit_latency=" +
                     ";".join(f"{a:.4f}" for a in averages))
        if spread > 0.25:
            notes.append(f"bank_avg_spread={spread:.4f} (banks differ materially)")
    else:
        _, accessor = _uca_accessor(cfg, machinery)

    policy = cfg.policy_kind
    if policy in (PolicyKind.VASA, PolicyKind.VASA_DS):
        report = vasa.overhead_report(cfg.bank_geometry)
        notes.append("overhead: " + " ".join(f"{k}={v}" for k, v
                                             in sorted(report.items())))
    elif policy in (PolicyKind.VAWA_UG, PolicyKind.VAWA_NG):
        table = (machinery.latency_sources[0]
                 if policy is PolicyKind.VAWA_NG else None)
        report = vawa.overhead_report(table)
        notes.append("overhead: " + " ".join(f"{k}={v}" for k, v
                                             in sorted(report.items())))

    stats = metrics.RunStats(memory_latency_cycles=cfg.memory_latency)
    simulate_records(llc_records, accessor, stats, translate_fn)
    return ExperimentOutput(cfg, stats, latmaps, profile, mapping, inventory,
                            notes)


# -- subcommands ----------------------------------------------------------


def _config_from_args(args):
    keys = {}
    if getattr(args, "config", None):
        keys.update(parse_config_file(args.config))
    for item in getattr(args, "set", None) or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        keys[key.strip()] = _parse_value(value)
    return ExperimentConfig.from_keys(keys)


def cmd_gen_variation(args):
    cfg = _config_from_args(args)
    params = cfg.cnt_params
    nominal = cfg.nominal_count
    if nominal is None:
        nominal = timing.calibrate_nominal_count(params, cfg.stages)
    lo, hi = cfg.cycle_range
    layout = cfg.layout_kind
    geometry = cfg.bank_geometry
    num_groups = (geometry.num_ways if layout is LayoutKind.SET_ALIGNED
                  else geometry.num_sets)
    rng = np.random.default_rng(np.random.SeedSequence(cfg.cnt_seed).spawn(1)[0])
    strengths = variation.sample_group_strengths(params, num_groups,
                                                 cfg.stages, rng)
    latencies = timing.strengths_to_latency(strengths, nominal, lo, hi)
    latmap = timing.LatencyMap(layout, latencies, lo, hi, geometry=geometry,
                               failed=[g.failed for g in strengths])
    with open(args.out, "w") as fh:
        timing.serialize_latency_map(latmap, fh)
    hist = Counter(latmap.latencies)
    mode = min(c for c in hist if hist[c] == max(hist.values()))
    lines = [
        f"groups={len(latmap.latencies)}",
        f"min={latmap.best()}",
        f"max={latmap.worst()}",
        f"mode={mode}",
        f"failed={sum(latmap.failed)}",
        f"nominal_count={nominal}",
        f"quantized_spread={latmap.worst() / latmap.best():.4f}",
    ]
    ratios = timing.delay_ratios(strengths, nominal)
    if ratios:
        lines.append(f"prequant_spread={max(ratios) / min(ratios):.4f}")
    lines.append("histogram:")
    for cycles in sorted(hist):
        lines.append(f"{cycles},{hist[cycles]}")
    summary = "\n".join(lines) + "\n"
    if args.summary:
        with open(args.summary, "w") as fh:
            fh.write(summary)
    else:
        sys.stdout.write(summary)
    return 0


def cmd_simulate(args):
    cfg = _config_from_args(args)
    out = run_experiment(cfg)
    csv_text = metrics.write_stats_csv([out.stats_row()])
    with open(args.out, "w") as fh:
        fh.write(csv_text)
    with open(args.out + ".hist.csv", "w") as fh:
        metrics.write_histogram_csv(out.stats, fh)
    for note in out.notes:
        sys.stdout.write(note + "\n")
    sys.stdout.write(csv_text)
    return 0


def cmd_profile(args):
    cfg = _config_from_args(args)
    records = load_records(cfg)
    l1 = workload.L1Config(enabled=cfg.l1_enabled)
    profile = pagemap.profile_trace(records, cfg.pm_page_bytes,
                                    l1 if cfg.l1_enabled else None)
    text = pagemap.serialize_profile(profile)
    with open(args.out, "w") as fh:
        fh.write(text)
    return 0


def cmd_gen_trace(args):
    cfg = _config_from_args(args)
    records = load_records(cfg)
    with open(args.out, "w") as fh:
        workload.serialize_trace(records, fh)
    return 0


RECIPES = {
    "set-uca": [
        ("baseline", {"policy": "baseline", "pm_enabled": False}),
        ("baseline_pd", {"policy": "baseline_pd", "pm_enabled": False}),
        ("vasa", {"policy": "vasa", "pm_enabled": False}),
        ("vasa_ds", {"policy": "vasa_ds", "pm_enabled": False}),
    ],
    "way-uca": [
        ("baseline", {"policy": "baseline", "pm_enabled": False}),
        ("baseline_pd", {"policy": "baseline_pd", "pm_enabled": False}),
        ("vawa_ug", {"policy": "vawa_ug", "pm_enabled": False}),
        ("vawa_ng", {"policy": "vawa_ng", "pm_enabled": False}),
        ("vawa_ug_pm", {"policy": "vawa_ug", "pm_enabled": True}),
        ("vawa_ng_pm", {"policy": "vawa_ng", "pm_enabled": True}),
    ],
    "set-nuca": [
        ("baseline", {"policy": "baseline", "pm_enabled": False}),
        ("vasa", {"policy": "vasa", "pm_enabled": False}),
        ("vasa_ds", {"policy": "vasa_ds", "pm_enabled": False}),
        ("vasa_ds_pm", {"policy": "vasa_ds", "pm_enabled": True}),
    ],
    "way-nuca": [
        ("baseline", {"policy": "baseline", "pm_enabled": False}),
        ("vawa_ng", {"policy": "vawa_ng", "pm_enabled": False}),
        ("vawa_ng_pm", {"policy": "vawa_ng", "pm_enabled": True,
                        "pm_unified": False}),
        ("vawa_ng_upm", {"policy": "vawa_ng", "pm_enabled": True,
                         "pm_unified": True}),
    ],
}


def recipe_configs(base, recipe):
    if recipe not in RECIPES:
        raise ConfigError(f"unknown recipe {recipe!r}; choose from {sorted(RECIPES)}")
    expected_layout = "set_aligned" if recipe.startswith("set") else "way_aligned"
    want_nuca = recipe.endswith("nuca")
    configs = []
    for label, overrides in RECIPES[recipe]:
        cfg = base.copy_with(layout=expected_layout, nuca_enabled=want_nuca,
                             **overrides)
        configs.append((label, cfg))
    return configs


def cmd_compare(args):
    if args.recipe:
        base = _config_from_args(args)
        labelled = recipe_configs(base, args.recipe)
    else:
        if len(args.configs) < 2:
            raise ConfigError("compare needs --recipe or at least two config files")
        labelled = []
        for path in args.configs:
            keys = parse_config_file(path)
            for item in args.set or []:
                key, value = item.split("=", 1)
                keys[key.strip()] = _parse_value(value)
            labelled.append((path, ExperimentConfig.from_keys(keys)))
    sig = labelled[0][1].workload_signature()
    for label, cfg in labelled[1:]:
        if cfg.workload_signature() != sig:
            raise ConfigError(f"config {label!r} uses a different workload")

    records = load_records(labelled[0][1])
    rows = []
    baseline = None
    header = ["label", "policy", "pm", "mean_hit_latency", "amat", "miss_rate",
              "total_energy", "hit_latency_ratio", "amat_ratio", "energy_ratio"]
    for label, cfg in labelled:
        out = run_experiment(cfg, records=list(records))
        stats = out.stats
        static, dynamic = metrics.energy(stats, cfg.energy_params)
        rec = {
            "label": label,
            "policy": cfg.policy,
            "pm": ("upm" if cfg.pm_enabled and cfg.pm_unified and cfg.nuca_enabled
                   else "pm" if cfg.pm_enabled else "-"),
            "mean_hit_latency": stats.mean_hit_latency,
            "amat": metrics.amat(stats, cfg.energy_params),
            "miss_rate": stats.llc_miss_rate,
            "total_energy": static + dynamic,
        }
        if baseline is None:
            baseline = rec
        rec["hit_latency_ratio"] = (rec["mean_hit_latency"] / baseline["mean_hit_latency"]
                                    if baseline["mean_hit_latency"] else 1.0)
        rec["amat_ratio"] = rec["amat"] / baseline["amat"] if baseline["amat"] else 1.0
        rec["energy_ratio"] = (rec["total_energy"] / baseline["total_energy"]
                               if baseline["total_energy"] else 1.0)
        rows.append(rec)

    lines = [",".join(header)]
    for rec in rows:
        lines.append(",".join(
            rec[h] if isinstance(rec[h], str) else f"{rec[h]:.6f}"
            for h in header))
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    sys.stdout.write(text)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="cnfetcache",
        description="Trace-driven simulator for CNFET LLCs under process variation")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="flat key=value config file")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a config key")

    p = sub.add_parser("gen-variation", help="sample and serialize a latency map")
    common(p)
    p.add_argument("--out", required=True, help="latency map output path")
    p.add_argument("--summary", help="write the distribution summary here "
                                     "instead of stdout")
    p.set_defaults(func=cmd_gen_variation)

    p = sub.add_parser("simulate", help="run one experiment, write a stats CSV")
    common(p)
    p.add_argument("--out", required=True, help="stats CSV path "
                                                "(histogram goes to <out>.hist.csv)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("profile", help="dump per-page access counts")
    common(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("compare", help="run several configs on one workload "
                                       "and emit normalized columns")
    common(p)
    p.add_argument("--recipe", choices=sorted(RECIPES),
                   help="built-in policy sweep sharing the base config")
    p.add_argument("configs", nargs="*", help="config files (first is the baseline)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("gen-trace", help="write a synthetic trace file")
    common(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_trace)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
