"""Metrics CSV, migration log, run summary and run comparison."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from pads.errors import ConfigError
from pads.kernel.engine import METRICS_COLUMNS, MetricsRow, RunResult
from pads.kernel.types import MigrationRecord

WALL_COLUMNS = ("step_wall_us", "barrier_wait_us")
_WALL_DECIMALS = 3


def _rounded(row: MetricsRow) -> MetricsRow:
    return MetricsRow(
        row.step,
        row.lp,
        row.entities,
        row.msgs_local,
        row.msgs_remote,
        row.migrations_in,
        row.migrations_out,
        round(row.step_wall_us, _WALL_DECIMALS),
        round(row.barrier_wait_us, _WALL_DECIMALS),
    )


def write_metrics(rows: Iterable[MetricsRow], path: str | Path) -> list[MetricsRow]:
    """Write one CSV row per (step, lp); returns the rows exactly as written."""
    out = [_rounded(r) for r in sorted(rows, key=lambda r: (r.step, r.lp))]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(METRICS_COLUMNS)
        for r in out:
            w.writerow(
                (r.step, r.lp, r.entities, r.msgs_local, r.msgs_remote, r.migrations_in, r.migrations_out,
                 f"{r.step_wall_us:.{_WALL_DECIMALS}f}", f"{r.barrier_wait_us:.{_WALL_DECIMALS}f}")
            )
    return out


def read_metrics(path: str | Path) -> list[MetricsRow]:
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise ConfigError(f"cannot read metrics file {path}: {exc.strerror}", "$") from None
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != METRICS_COLUMNS:
            raise ConfigError(f"{path} does not start with the metrics header", "$")
        rows = []
        for lineno, rec in enumerate(reader, start=2):
            try:
                ints = [int(v) for v in rec[:7]]
                rows.append(MetricsRow(*ints, float(rec[7]), float(rec[8])))
            except (ValueError, IndexError):
                raise ConfigError(f"{path}:{lineno}: malformed metrics row", "$") from None
    return rows


def write_migration_log(records: Iterable[MigrationRecord], path: str | Path) -> None:
    with open(path, "w") as fh:
        for r in records:
            fh.write(r.log_line() + "\n")


def read_migration_log(path: str | Path) -> list[MigrationRecord]:
    out = []
    with open(path) as fh:
        for line in fh:
            step, entity, src, dst, reason, nbytes, us = line.split()
            out.append(MigrationRecord(int(step), int(entity), int(src), int(dst), reason, int(nbytes), float(us)))
    return out


def replay_placement(initial: Sequence[int], records: Iterable[MigrationRecord]) -> list[int]:
    place = list(initial)
    for r in records:
        if place[r.entity] != r.from_lp:
            raise ValueError(f"record moves entity {r.entity} from LP {r.from_lp} but it is on LP {place[r.entity]}")
        place[r.entity] = r.to_lp
    return place


def window_local_ratios(rows: Sequence[MetricsRow], window: int) -> list[float]:
    """Local share of the messages sent in each consecutive block of ``window`` steps."""
    local: dict[int, int] = {}
    total: dict[int, int] = {}
    for r in rows:
        w = r.step // window
        local[w] = local.get(w, 0) + r.msgs_local
        total[w] = total.get(w, 0) + r.msgs_local + r.msgs_remote
    return [local[w] / total[w] if total[w] else 1.0 for w in sorted(total)]


def summarize(rows: Sequence[MetricsRow], result: RunResult | None = None, cfg=None) -> dict:
    """Summary statistics, derived from the rows as written to the CSV."""
    local = sum(r.msgs_local for r in rows)
    remote = sum(r.msgs_remote for r in rows)
    steps = len({r.step for r in rows})
    out = {
        "steps": steps,
        "pool_size": len({r.lp for r in rows}),
        "msgs_local": local,
        "msgs_remote": remote,
        "local_ratio": local / (local + remote) if local + remote else 1.0,
        "mean_barrier_wait_us": sum(r.barrier_wait_us for r in rows) / len(rows) if rows else 0.0,
        "peak_lp_wall_us": max((r.step_wall_us for r in rows), default=0.0),
        "migrations": sum(r.migrations_in for r in rows),
    }
    if result is not None:
        out["final_digest"] = f"{result.final_digest:016x}"
        out["wall_time_s"] = round(result.wall_time_s, 3)
    if cfg is not None:
        out["model"] = cfg.model.kind
        out["seed"] = cfg.seed
        out["n_entities"] = cfg.n_entities
        out["gaia"] = cfg.gaia.enabled
    return out


def write_summary(summary: dict, path: str | Path) -> None:
    Path(path).write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")


def format_summary(summary: dict) -> str:
    keys = ("final_digest", "steps", "pool_size", "msgs_local", "msgs_remote", "local_ratio",
            "mean_barrier_wait_us", "peak_lp_wall_us", "migrations", "wall_time_s")
    lines = []
    for k in keys:
        if k not in summary:
            continue
        v = summary[k]
        lines.append(f"{k}: {v:.4f}" if isinstance(v, float) else f"{k}: {v}")
    return "\n".join(lines)


def _sidecar_digest(metrics_path: Path) -> str | None:
    """Final digest from the summary written next to a metrics file, if any."""
    for cand in (metrics_path.with_name("summary.json"), metrics_path.with_suffix(".summary.json")):
        if cand.exists():
            try:
                return json.loads(cand.read_text()).get("final_digest")
            except (OSError, ValueError):
                return None
    return None


@dataclass
class Comparison:
    ratios_a: list[float]
    ratios_b: list[float]
    digest_a: str | None
    digest_b: str | None
    wall_a_us: float
    wall_b_us: float

    @property
    def digests_equal(self) -> bool | None:
        if self.digest_a is None or self.digest_b is None:
            return None
        return self.digest_a == self.digest_b

    @property
    def ratio_deltas(self) -> list[float] | None:
        """Per-window ``b - a`` local ratio; withheld when the runs are known to differ."""
        if self.digests_equal is False:
            return None
        return [b - a for a, b in zip(self.ratios_a, self.ratios_b)]

    @property
    def wall_ratio(self) -> float:
        return self.wall_b_us / self.wall_a_us if self.wall_a_us else float("nan")

    def report(self) -> str:
        lines = ["window,local_ratio_a,local_ratio_b,delta"]
        deltas = self.ratio_deltas
        for i, (a, b) in enumerate(zip(self.ratios_a, self.ratios_b)):
            d = f"{deltas[i]:+.4f}" if deltas is not None else ""
            lines.append(f"{i},{a:.4f},{b:.4f},{d}")
        eq = self.digests_equal
        if eq is None:
            lines.append("final digests: unavailable (no summary next to a metrics file)")
        elif eq:
            lines.append(f"final digests: equal ({self.digest_a})")
        else:
            lines.append(f"final digests: MISMATCH ({self.digest_a} vs {self.digest_b}); ratio deltas withheld")
        lines.append(f"wall time b/a: {self.wall_ratio:.3f}")
        return "\n".join(lines)


def compare_runs(metrics_a: str | Path, metrics_b: str | Path, window: int = 16) -> Comparison:
    """Compare two metrics files from runs of the same model, seed and step count."""
    rows_a = read_metrics(metrics_a)
    rows_b = read_metrics(metrics_b)
    steps_a = len({r.step for r in rows_a})
    steps_b = len({r.step for r in rows_b})
    if steps_a != steps_b:
        raise ConfigError(f"step counts differ: {steps_a} vs {steps_b}", "$")
    return Comparison(
        window_local_ratios(rows_a, window),
        window_local_ratios(rows_b, window),
        _sidecar_digest(Path(metrics_a)),
        _sidecar_digest(Path(metrics_b)),
        sum(r.step_wall_us for r in rows_a),
        sum(r.step_wall_us for r in rows_b),
    )
