import pytest

from cnfetcache import metrics
from cnfetcache.cli import (ConfigError, ExperimentConfig, main,
                            parse_config_file, recipe_configs, run_experiment)
from cnfetcache.workload import TraceRecord

SMALL_KEYS = {
    "cache.capacity_bytes": 64 * 1024,
    "cache.ways": 8,
    "cache.line_bytes": 64,
    "workload.length": 20_000,
    "workload.num_pages": 64,
    "workload.seed": 5,
    "cnt.seed": 12,
}


def _config(**extra):
    keys = dict(SMALL_KEYS)
    keys.update(extra)
    return ExperimentConfig.from_keys(keys)


def test_config_file_round_trip(tmp_path):
    path = tmp_path / "exp.cfg"
    path.write_text("# experiment\ncache.ways=8\nlayout=way_aligned\n"
                    "policy=vawa_ng\ngrouping.classes=6,7\nworkload.zipf=1.1\n")
    keys = parse_config_file(path)
    cfg = ExperimentConfig.from_keys(keys)
    assert cfg.num_ways == 8
    assert cfg.policy == "vawa_ng"
    assert cfg.classes == [6, 7]
    assert cfg.wl_zipf == 1.1


def test_unknown_key_rejected():
    with pytest.raises(ConfigError):
        ExperimentConfig.from_keys({"cache.wayz": 8})


@pytest.mark.parametrize("keys", [
    {"policy": "vasa", "layout": "way_aligned"},
    {"policy": "vasa_ds", "layout": "way_aligned"},
    {"policy": "vawa_ng", "layout": "set_aligned"},
    {"policy": "vawa_ug", "layout": "set_aligned"},
    {"policy": "baseline", "pagemap.enabled": True},
    {"policy": "vasa", "layout": "set_aligned", "pagemap.enabled": True},
    {"policy": "vawa_ng", "layout": "way_aligned",
     "grouping.classes": "7,6"},
    {"policy": "vawa_ng", "layout": "way_aligned",
     "grouping.classes": "6,10"},
    {"policy": "vawa_ug", "layout": "way_aligned", "grouping.num_groups": 7},
    {"policy": "vasa_ds", "vasa.way_groups": 3},
    {"cache.capacity_bytes": 5000},
    {"layout": "diagonal"},
    {"policy": "belady"},
    {"nuca.enabled": True, "workload.num_cores": 9},
])
def test_inconsistent_configs_rejected(keys):
    with pytest.raises(ConfigError):
        _config(**keys)


def test_valid_policy_layout_combinations():
    _config(policy="vasa", layout="set_aligned")
    _config(policy="vawa_ng", layout="way_aligned")
    _config(policy="vawa_ug", layout="way_aligned")
    _config(policy="vasa_ds", layout="set_aligned", **{"nuca.enabled": True,
            "workload.num_cores": 4, "pagemap.enabled": True,
            "pagemap.page_bytes": 512})


def test_baseline_and_vasa_same_miss_count():
    base = _config(policy="baseline", layout="set_aligned")
    vasa_cfg = _config(policy="vasa", layout="set_aligned")
    out_a = run_experiment(base)
    out_b = run_experiment(vasa_cfg)
    assert out_a.stats.misses == out_b.stats.misses
    assert out_a.stats.mean_hit_latency >= out_b.stats.mean_hit_latency


def test_shuffling_beats_plain_on_hot_trace():
    # A handful of lines hit over and over: shuffling drags them into the
    # fast ways, plain per-way latency leaves them where they landed.
    hot = [TraceRecord(0, "R", (i % 16) * 64 * 128) for i in range(4000)]
    vasa_cfg = _config(policy="vasa", layout="set_aligned")
    ds_cfg = _config(policy="vasa_ds", layout="set_aligned")
    out_plain = run_experiment(vasa_cfg, records=list(hot))
    out_ds = run_experiment(ds_cfg, records=list(hot))
    assert out_ds.stats.mean_hit_latency <= out_plain.stats.mean_hit_latency


def test_nuca_totals_obey_additivity():
    cfg = _config(policy="vawa_ng", layout="way_aligned",
                  **{"nuca.enabled": True, "workload.num_cores": 4,
                     "workload.length": 5000})
    out = run_experiment(cfg)
    assert out.stats.accesses == 5000
    assert any(note.startswith("bank_avg_hit_latency") for note in out.notes)


def test_run_determinism():
    cfg1 = _config(policy="vawa_ng", layout="way_aligned")
    cfg2 = _config(policy="vawa_ng", layout="way_aligned")
    a = run_experiment(cfg1)
    b = run_experiment(cfg2)
    assert a.stats_row() == b.stats_row()


def test_recipes_cover_published_sweeps():
    base = _config()
    way = recipe_configs(base, "way-uca")
    assert [label for label, _ in way] == [
        "baseline", "baseline_pd", "vawa_ug", "vawa_ng", "vawa_ug_pm",
        "vawa_ng_pm"]
    st = recipe_configs(base, "set-uca")
    assert [label for label, _ in st] == ["baseline", "baseline_pd", "vasa",
                                          "vasa_ds"]
    with pytest.raises(ConfigError):
        recipe_configs(base, "no-such")


def test_cli_gen_variation_deterministic(tmp_path):
    out1 = tmp_path / "map1.txt"
    out2 = tmp_path / "map2.txt"
    args = ["gen-variation", "--set", "cnt.seed=3",
            "--set", "cache.capacity_bytes=65536"]
    assert main(args + ["--out", str(out1),
                        "--summary", str(tmp_path / "s1.txt")]) == 0
    assert main(args + ["--out", str(out2),
                        "--summary", str(tmp_path / "s2.txt")]) == 0
    assert out1.read_bytes() == out2.read_bytes()
    assert (tmp_path / "s1.txt").read_bytes() == (tmp_path / "s2.txt").read_bytes()


def test_cli_gen_variation_degenerate_sigma(tmp_path):
    out = tmp_path / "map.txt"
    summary = tmp_path / "summary.txt"
    assert main(["gen-variation", "--set", "cnt.sigma=0",
                 "--set", "cnt.p_metallic=0",
                 "--set", "cnt.p_remove_metallic=0",
                 "--set", "cnt.p_remove_semiconducting=0",
                 "--set", "cache.capacity_bytes=65536",
                 "--out", str(out), "--summary", str(summary)]) == 0
    text = summary.read_text()
    assert "min=6" in text and "max=6" in text and "mode=6" in text


def test_cli_simulate_and_compare(tmp_path):
    csv = tmp_path / "stats.csv"
    rc = main(["simulate", "--set", "policy=vasa",
               "--set", "cache.capacity_bytes=65536",
               "--set", "workload.length=5000", "--out", str(csv)])
    assert rc == 0
    text = csv.read_text()
    assert text.startswith(",".join(metrics.CSV_FIELDS))
    assert (tmp_path / "stats.csv.hist.csv").exists()

    cmp_out = tmp_path / "cmp.csv"
    rc = main(["compare", "--recipe", "set-uca",
               "--set", "cache.capacity_bytes=65536",
               "--set", "workload.length=5000", "--out", str(cmp_out)])
    assert rc == 0
    lines = cmp_out.read_text().strip().split("\n")
    assert len(lines) == 5
    baseline = lines[1].split(",")
    assert baseline[0] == "baseline"
    assert float(baseline[-3]) == 1.0     # self-ratio


def test_cli_error_paths(tmp_path):
    assert main(["simulate", "--set", "policy=vasa",
                 "--set", "layout=way_aligned",
                 "--out", str(tmp_path / "x.csv")]) == 1
    assert main(["compare", "--out", str(tmp_path / "y.csv")]) == 1


def test_cli_gen_trace_and_profile(tmp_path):
    trace = tmp_path / "trace.txt"
    rc = main(["gen-trace", "--set", "workload.length=100",
               "--set", "workload.num_pages=8", "--out", str(trace)])
    assert rc == 0
    lines = trace.read_text().strip().split("\n")
    assert len(lines) == 100
    prof = tmp_path / "prof.csv"
    rc = main(["profile", "--set", f"workload.trace={trace}",
               "--out", str(prof)])
    assert rc == 0
    assert prof.read_text().count("\n") <= 8


def test_compare_rejects_mismatched_workloads(tmp_path):
    a = tmp_path / "a.cfg"
    b = tmp_path / "b.cfg"
    a.write_text("policy=baseline\nworkload.seed=1\n")
    b.write_text("policy=vasa\nworkload.seed=2\n")
    assert main(["compare", str(a), str(b)]) == 1


def test_simulate_accepts_pregenerated_map(tmp_path):
    map_path = tmp_path / "map.txt"
    argv = ["--set", "cache.capacity_bytes=65536", "--set", "cnt.seed=4"]
    assert main(["gen-variation"] + argv + ["--out", str(map_path),
                 "--summary", str(tmp_path / "s.txt")]) == 0
    out = tmp_path / "stats.csv"
    assert main(["simulate", "--set", "policy=vasa"] + argv +
                ["--set", f"timing.map_file={map_path}",
                 "--set", "workload.length=2000", "--out", str(out)]) == 0
    # Inline generation with the same seed produces the identical report.
    out2 = tmp_path / "stats2.csv"
    assert main(["simulate", "--set", "policy=vasa"] + argv +
                ["--set", "workload.length=2000", "--out", str(out2)]) == 0
    assert out.read_bytes() == out2.read_bytes()
    # Layout mismatch is rejected.
    assert main(["simulate", "--set", "policy=vawa_ng",
                 "--set", "layout=way_aligned"] + argv +
                ["--set", f"timing.map_file={map_path}",
                 "--out", str(tmp_path / "z.csv")]) == 1
