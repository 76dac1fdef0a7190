import csv
import json

import pytest

from pads.errors import ConfigError
from pads.harness.cli import main
from pads.harness.config import parse_config
from pads.harness.metrics import compare_runs, read_metrics, summarize, window_local_ratios, write_metrics
from pads.harness.runner import initial_placement, inject_background_load, run_experiment
from pads.kernel.engine import METRICS_COLUMNS

MINIMAL = {"model": {"kind": "community"}, "n_entities": 40, "seed": 1, "max_steps": 10}


def with_(doc, **changes):
    out = json.loads(json.dumps(doc))
    out.update(changes)
    return out


# config

def test_minimal_config_defaults():
    cfg = parse_config(json.dumps(MINIMAL))
    assert cfg.pool_size == 1
    assert cfg.gaia.enabled is False and cfg.gaia_params() is None
    assert cfg.initial_placement == "round-robin"
    assert cfg.output.metrics == "metrics.csv"


@pytest.mark.parametrize(
    "doc,path,fragment",
    [
        (with_(MINIMAL, pool_size=0), "$.pool_size", "greater than or equal to 1"),
        (with_(MINIMAL, extra=1), "$.extra", "unknown key"),
        (with_(MINIMAL, model={"kind": "community", "bogus": 1}), "$.model.bogus", "unknown key"),
        (with_(MINIMAL, model={"kind": "mesh"}), "$.model", "unknown model kind"),
        ({"model": {"kind": "community"}, "seed": 1, "max_steps": 5}, "$.n_entities", "required key missing"),
        (with_(MINIMAL, seed=-1), "$.seed", "greater than or equal to 0"),
        (with_(MINIMAL, seed=2**64), "$.seed", "less than or equal to"),
        (with_(MINIMAL, pool_size="4"), "$.pool_size", "valid integer"),
        (with_(MINIMAL, gaia={"window": 0}), "$.gaia.window", "greater than or equal to 1"),
        (with_(MINIMAL, processes=[{"lps": [5]}]), "$.processes[0].lps[0]", "out of range"),
    ],
)
def test_config_errors_name_the_path(doc, path, fragment):
    with pytest.raises(ConfigError) as exc:
        parse_config(doc)
    assert exc.value.path == path
    assert fragment in str(exc.value)
    assert str(exc.value).startswith(path + ": ")


def test_by_community_needs_community_metadata():
    doc = with_(MINIMAL, model={"kind": "wireless"}, initial_placement="by-community")
    with pytest.raises(ConfigError) as exc:
        parse_config(doc)
    assert exc.value.path == "$.initial_placement"


def test_processes_must_cover_every_lp():
    with pytest.raises(ConfigError) as exc:
        parse_config(with_(MINIMAL, pool_size=2, processes=[{"lps": [0]}]))
    assert exc.value.path == "$.processes"


def test_background_interval_must_fit_the_run():
    doc = with_(MINIMAL, pool_size=2, background_load={"lp": 1, "work_units": 5, "start": 4, "stop": 11})
    with pytest.raises(ConfigError) as exc:
        parse_config(doc)
    assert exc.value.path == "$.background_load.stop"


def test_communities_must_divide_entities():
    with pytest.raises(ConfigError) as exc:
        parse_config(with_(MINIMAL, n_entities=42))
    assert exc.value.path == "$.n_entities"


@pytest.mark.parametrize("text", ['{"a": NaN}', '{"a": 1, "a": 2}', "[1, 2]", "{", b"\xff"])
def test_not_strict_json(text):
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    assert exc.value.path == "$"


def test_gaia_section_maps_to_params():
    cfg = parse_config(with_(MINIMAL, gaia={"enabled": True, "window": 8, "balance_on_wall_time": True}))
    params = cfg.gaia_params()
    assert params.window == 8 and params.balance_on_wall_time and params.migration_fraction == 0.25


# placement

def test_initial_placements():
    assert initial_placement("round-robin", 6, 4, 1) == [0, 1, 2, 3, 0, 1]
    assert initial_placement("all-on-zero", 3, 4, 1) == [0, 0, 0]
    assert initial_placement("by-community", 4, 2, 1, [0, 0, 1, 1]) == [0, 0, 1, 1]
    rnd = initial_placement("random", 400, 4, 7)
    assert sorted(rnd.count(k) for k in range(4)) == [100] * 4
    assert rnd == initial_placement("random", 400, 4, 7) != initial_placement("random", 400, 4, 8)


def test_background_schedule():
    bg = inject_background_load(2, 50.0, 10, 20)
    assert [bg(2, t) for t in (9, 10, 19, 20)] == [0.0, 50.0, 50.0, 0.0]
    assert bg(1, 15) == 0.0


# runs

def test_all_on_zero_is_all_local(run):
    r = run(with_(MINIMAL, pool_size=4, initial_placement="all-on-zero", max_steps=20))
    assert all(m.msgs_remote == 0 for m in r.metrics)
    assert sum(m.msgs_local for m in r.metrics) == 40 * 20


def test_zero_background_work_changes_nothing(run):
    base = with_(MINIMAL, pool_size=4, max_steps=30)
    a = run(base, digest_steps=(10, 30))
    b = run(with_(base, background_load={"lp": 2, "work_units": 0, "start": 5, "stop": 25}), digest_steps=(10, 30))
    assert a.digests == b.digests
    assert [m.as_tuple()[:7] for m in a.metrics] == [m.as_tuple()[:7] for m in b.metrics]


def test_background_load_dominates_its_lp(run):
    doc = with_(MINIMAL, pool_size=4, max_steps=40,
                background_load={"lp": 2, "work_units": 3000, "start": 10, "stop": 30})
    r = run(doc)
    for t in range(10, 30):
        walls = {m.lp: m.step_wall_us for m in r.metrics if m.step == t}
        assert walls[2] > max(w for lp, w in walls.items() if lp != 2)


def test_two_processes_match_one(run):
    doc = with_(MINIMAL, n_entities=80, pool_size=4, max_steps=40, initial_placement="random",
                gaia={"enabled": True, "window": 8})
    a = run(doc, digest_steps=(20, 40))
    b = run(with_(doc, processes=[{"lps": [0, 3]}, {"lps": [1, 2]}]), digest_steps=(20, 40))
    assert a.digests == b.digests
    assert [(x.step, x.entity, x.from_lp, x.to_lp) for x in a.migrations] == [
        (x.step, x.entity, x.from_lp, x.to_lp) for x in b.migrations
    ]


def test_run_experiment_outputs(tmp_path):
    cfg = parse_config(with_(MINIMAL, pool_size=2, max_steps=32, initial_placement="random",
                             gaia={"enabled": True}))
    exp = run_experiment(cfg, tmp_path)
    with open(exp.metrics_path) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == list(METRICS_COLUMNS)
    assert len(rows) == 1 + 32 * 2
    log = exp.migrations_path.read_text().splitlines()
    assert len(log) == len(exp.result.migrations)
    for line in log:
        step, entity, src, dst, reason, nbytes, us = line.split()
        assert reason in {"cluster", "balance", "adapt", "exchange"} and int(nbytes) > 0 and float(us) >= 0
    summary = json.loads(exp.summary_path.read_text())
    assert summary["final_digest"] == f"{exp.result.final_digest:016x}"
    assert summary["steps"] == 32 and summary["migrations"] == len(log)
    assert {p.name for p in exp.figures} == {"metrics_locality.png", "metrics_entities.png", "metrics_wall.png"}
    assert all(p.stat().st_size > 0 for p in exp.figures)


def test_metrics_are_reproducible_except_timings(tmp_path):
    cfg = parse_config(with_(MINIMAL, pool_size=2, max_steps=20, output={"figures": False}))
    a = run_experiment(cfg, tmp_path / "a")
    b = run_experiment(cfg, tmp_path / "b")
    strip = lambda rows: [r.as_tuple()[:7] for r in rows]  # noqa: E731
    assert strip(read_metrics(a.metrics_path)) == strip(read_metrics(b.metrics_path))


def test_written_rows_read_back_identically(tmp_path):
    cfg = parse_config(with_(MINIMAL, pool_size=2, max_steps=5, output={"figures": False}))
    exp = run_experiment(cfg, tmp_path)
    rows = write_metrics(exp.result.metrics, tmp_path / "again.csv")
    assert read_metrics(tmp_path / "again.csv") == rows
    assert summarize(rows)["msgs_local"] == exp.summary["msgs_local"]


def test_window_local_ratios():
    from pads.kernel.engine import MetricsRow

    rows = [MetricsRow(t, 0, 1, 3, 1, 0, 0, 0.0, 0.0) for t in range(4)]
    rows[3].msgs_local = 1
    assert window_local_ratios(rows, 2) == [0.75, (3 + 1) / (4 + 2)]


# compare

def _experiment(tmp_path, name, **changes):
    doc = with_(MINIMAL, pool_size=2, max_steps=48, initial_placement="random", output={"figures": False})
    cfg = parse_config(with_(doc, **changes))
    return run_experiment(cfg, tmp_path / name)


def test_compare_file_with_itself(tmp_path):
    exp = _experiment(tmp_path, "a")
    cmp = compare_runs(exp.metrics_path, exp.metrics_path)
    assert cmp.digests_equal is True
    assert cmp.ratio_deltas == [0.0] * 3


def test_compare_flags_different_seeds(tmp_path):
    a = _experiment(tmp_path, "a")
    b = _experiment(tmp_path, "b", seed=2)
    cmp = compare_runs(a.metrics_path, b.metrics_path)
    assert cmp.digests_equal is False
    assert cmp.ratio_deltas is None
    assert "MISMATCH" in cmp.report()


def test_adaptive_beats_static(tmp_path):
    static = _experiment(tmp_path, "static", n_entities=400, max_steps=160, pool_size=4)
    adaptive = _experiment(tmp_path, "adaptive", n_entities=400, max_steps=160, pool_size=4, gaia={"enabled": True})
    cmp = compare_runs(static.metrics_path, adaptive.metrics_path)
    assert cmp.digests_equal is True
    assert cmp.ratios_b[-1] > cmp.ratios_a[-1]
    assert cmp.ratios_b[-1] > cmp.ratios_b[0]


def test_compare_refuses_different_lengths(tmp_path):
    a = _experiment(tmp_path, "a")
    b = _experiment(tmp_path, "b", max_steps=40)
    with pytest.raises(ConfigError):
        compare_runs(a.metrics_path, b.metrics_path)


# cli

def _write(path, doc):
    path.write_text(json.dumps(doc))
    return str(path)


def test_cli_run_and_compare(tmp_path, capsys):
    cfg = _write(tmp_path / "c.json", with_(MINIMAL, pool_size=2, max_steps=16))
    assert main(["run", cfg, "--out", str(tmp_path / "a")]) == 0
    out = capsys.readouterr().out
    assert "final_digest:" in out and "local_ratio:" in out
    assert main(["run", cfg, "--out", str(tmp_path / "b"), "--quiet"]) == 0
    assert capsys.readouterr().out == ""
    assert main(["compare", str(tmp_path / "a" / "metrics.csv"), str(tmp_path / "b" / "metrics.csv")]) == 0
    assert "final digests: equal" in capsys.readouterr().out


def test_cli_config_error_exit_code(tmp_path, capsys):
    cfg = _write(tmp_path / "c.json", with_(MINIMAL, pool_size=0))
    assert main(["run", cfg]) == 2
    assert "$.pool_size" in capsys.readouterr().err
    assert main(["run", str(tmp_path / "missing.json")]) == 2


def test_cli_gen_graph(tmp_path):
    out = tmp_path / "g.txt"
    assert main(["gen-graph", "small-world", "6", "k=2,beta=0", "1", "--out", str(out)]) == 0
    assert out.read_text().splitlines() == ["6 6", "0 1", "0 5", "1 2", "2 3", "3 4", "4 5"]
    assert main(["gen-graph", "random", "10", "pr=oops", "1", "--out", str(out)]) == 2


def test_cli_usage_error():
    assert main(["frobnicate"]) == 2


def test_cli_gossip_from_graph_file(tmp_path):
    graph = tmp_path / "g.txt"
    main(["gen-graph", "random", "50", "pr=0.2", "3", "--out", str(graph)])
    doc = {"model": {"kind": "gossip", "graph_file": str(graph), "p": 1.0}, "n_entities": 50, "pool_size": 2,
           "seed": 3, "max_steps": 10, "output": {"figures": False}}
    assert main(["run", _write(tmp_path / "c.json", doc), "--out", str(tmp_path / "o"), "--quiet"]) == 0
    bad = with_(doc, n_entities=40)
    assert main(["run", _write(tmp_path / "bad.json", bad), "--quiet"]) == 2
