"""Run configuration: strict JSON in, validated :class:`Config` out."""

from __future__ import annotations

import json
import math
from dataclasses import fields
from pathlib import Path
from typing import Annotated, Any, Literal, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from pads.errors import ConfigError
from pads.gaia.params import GaiaParams

PLACEMENTS = ("round-robin", "random", "by-community", "all-on-zero")
U64_MAX = (1 << 64) - 1


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", strict=True, frozen=True)


class GraphSpec(_Strict):
    kind: Literal["random", "small-world", "scale-free"] = "random"
    params: dict[str, float] = Field(default_factory=dict)


class GossipModel(_Strict):
    kind: Literal["gossip"]
    graph: GraphSpec = Field(default_factory=GraphSpec)
    graph_file: str | None = None
    p: float = Field(0.6, ge=0.0, le=1.0)
    sources: list[Annotated[int, Field(ge=0)]] = Field(default_factory=lambda: [0])
    weight: float = Field(1.0, ge=0.0)


class WirelessModel(_Strict):
    kind: Literal["wireless"]
    width: int | None = Field(None, ge=1)
    height: int | None = Field(None, ge=1)
    radius: int = Field(1, ge=0)
    weight: float = Field(1.0, ge=0.0)


class CommunityModel(_Strict):
    kind: Literal["community"]
    communities: int = Field(4, ge=1)
    q: float = Field(0.9, ge=0.0, le=1.0)
    weight: float = Field(1.0, ge=0.0)


class SyntheticModel(_Strict):
    kind: Literal["synthetic"]
    groups: int = Field(1, ge=1)
    q: float = Field(1.0, ge=0.0, le=1.0)
    rate: float = Field(0.0, ge=0.0)
    weight_low: float = Field(1.0, ge=0.0)
    weight_high: float = Field(1.0, ge=0.0)
    burn: bool = False

    @model_validator(mode="after")
    def _weights_ordered(self):
        if self.weight_high < self.weight_low:
            raise ValueError("weight_high must be >= weight_low")
        return self


ModelSpec = Annotated[
    Union[GossipModel, WirelessModel, CommunityModel, SyntheticModel],
    Field(discriminator="kind"),
]
MODEL_KINDS = ("gossip", "wireless", "community", "synthetic")


class ProcessGroup(_Strict):
    lps: list[Annotated[int, Field(ge=0)]] = Field(min_length=1)
    host: str = "127.0.0.1"
    port: int = Field(0, ge=0, le=65535)


class GaiaSection(_Strict):
    enabled: bool = False
    balance_on_wall_time: bool = False
    window: int = Field(16, ge=1)
    migration_threshold: float = Field(0.7, gt=0.0, le=1.0)
    load_slack: float = Field(0.25, ge=0.0)
    max_migrations: int | None = Field(None, ge=0)
    migration_fraction: float = Field(0.25, ge=0.0, le=1.0)
    cost_horizon: int | None = Field(None, ge=1)
    shrink_threshold: float = 10.0
    grow_threshold: float = 1000.0
    hysteresis_evals: int = Field(3, ge=1)
    bytes_per_message_equivalent: float = Field(64.0, gt=0.0)
    make_room: bool = True
    refine_exchanges: bool = True
    capacities: list[Annotated[float, Field(gt=0.0)]] | None = None

    def params(self) -> GaiaParams:
        names = {f.name for f in fields(GaiaParams)}
        return GaiaParams(**{k: v for k, v in self.model_dump().items() if k in names})


class BackgroundLoad(_Strict):
    lp: int = Field(ge=0)
    work_units: float = Field(ge=0.0)
    start: int = Field(ge=0)
    stop: int = Field(ge=0)


class OutputPaths(_Strict):
    dir: str = "."
    metrics: str = "metrics.csv"
    migrations: str = "migrations.log"
    summary: str = "summary.json"
    figures: bool = True


class Config(_Strict):
    model: ModelSpec
    n_entities: int = Field(ge=1)
    pool_size: int = Field(1, ge=1)
    processes: list[ProcessGroup] | None = None
    seed: int = Field(ge=0, le=U64_MAX)
    max_steps: int = Field(ge=1)
    gaia: GaiaSection = Field(default_factory=GaiaSection)
    initial_placement: Literal["round-robin", "random", "by-community", "all-on-zero"] = "round-robin"
    background_load: BackgroundLoad | None = None
    output: OutputPaths = Field(default_factory=OutputPaths)

    def gaia_params(self) -> GaiaParams | None:
        return self.gaia.params() if self.gaia.enabled else None

    def output_dir(self, override: str | Path | None = None) -> Path:
        return Path(override) if override is not None else Path(self.output.dir)


def _cross_checks(cfg: Config) -> None:
    model = cfg.model
    if cfg.initial_placement == "by-community" and model.kind not in ("community", "synthetic"):
        raise ConfigError(
            f"by-community placement needs community metadata; model {model.kind!r} has none",
            "$.initial_placement",
        )
    if model.kind == "community":
        if cfg.n_entities % model.communities:
            raise ConfigError(
                f"n_entities={cfg.n_entities} does not split into {model.communities} equal communities",
                "$.n_entities",
            )
        if cfg.n_entities // model.communities < 2 and model.q > 0:
            raise ConfigError("communities need at least 2 members", "$.model.communities")
        if model.communities < 2 and model.q < 1:
            raise ConfigError("inter-community traffic needs at least 2 communities", "$.model.q")
    if model.kind == "synthetic":
        if cfg.n_entities % model.groups:
            raise ConfigError(
                f"n_entities={cfg.n_entities} does not split into {model.groups} equal groups", "$.n_entities"
            )
        if model.rate > 0 and cfg.n_entities // model.groups < 2:
            raise ConfigError("groups need at least 2 members when entities send messages", "$.model.groups")
    if model.kind == "gossip":
        if model.graph_file is None and cfg.n_entities < 2:
            raise ConfigError("a generated graph needs at least 2 nodes", "$.n_entities")
        for i, s in enumerate(model.sources):
            if s >= cfg.n_entities:
                raise ConfigError(f"source {s} is not an entity id (n_entities={cfg.n_entities})", f"$.model.sources[{i}]")
    if cfg.processes is not None:
        seen: dict[int, int] = {}
        for g, group in enumerate(cfg.processes):
            for i, lp in enumerate(group.lps):
                if lp >= cfg.pool_size:
                    raise ConfigError(f"lp {lp} out of range for pool_size {cfg.pool_size}", f"$.processes[{g}].lps[{i}]")
                if lp in seen:
                    raise ConfigError(f"lp {lp} already assigned to process {seen[lp]}", f"$.processes[{g}].lps[{i}]")
                seen[lp] = g
        missing = sorted(set(range(cfg.pool_size)) - set(seen))
        if missing:
            raise ConfigError(f"LPs {missing} are not assigned to any process", "$.processes")
    bg = cfg.background_load
    if bg is not None:
        if bg.lp >= cfg.pool_size:
            raise ConfigError(f"lp {bg.lp} out of range for pool_size {cfg.pool_size}", "$.background_load.lp")
        if not bg.start < bg.stop <= cfg.max_steps:
            raise ConfigError(
                f"need start < stop <= max_steps, got [{bg.start}, {bg.stop}) with max_steps={cfg.max_steps}",
                "$.background_load.stop",
            )
    caps = cfg.gaia.capacities
    if caps is not None and len(caps) != cfg.pool_size:
        raise ConfigError(f"expected {cfg.pool_size} capacities, got {len(caps)}", "$.gaia.capacities")
    if cfg.gaia.shrink_threshold > cfg.gaia.grow_threshold:
        raise ConfigError("shrink_threshold must not exceed grow_threshold", "$.gaia.shrink_threshold")


def _json_path(loc: tuple) -> str:
    parts = list(loc)
    # The discriminated union inserts the tag value after "model".
    if len(parts) > 1 and parts[0] == "model" and parts[1] in MODEL_KINDS:
        del parts[1]
    path = "$"
    for p in parts:
        path += f"[{p}]" if isinstance(p, int) else f".{p}"
    return path


def _message(err: dict) -> str:
    kind = err["type"]
    if kind == "extra_forbidden":
        return "unknown key"
    if kind == "missing":
        return "required key missing"
    if kind == "union_tag_invalid":
        return f"unknown model kind; expected one of {', '.join(MODEL_KINDS)}"
    return err["msg"]


def _reject_constant(name: str) -> float:
    raise ValueError(f"{name} is not valid JSON")


def _no_duplicates(pairs: list[tuple[str, Any]]) -> dict:
    out: dict = {}
    for k, v in pairs:
        if k in out:
            raise ValueError(f"duplicate key {k!r}")
        out[k] = v
    return out


def parse_config(data: bytes | str | dict) -> Config:
    """Validate a configuration document; errors name the offending JSON path."""
    if isinstance(data, dict):
        doc = data
    else:
        try:
            text = data.decode("utf-8") if isinstance(data, bytes) else data
            doc = json.loads(text, parse_constant=_reject_constant, object_pairs_hook=_no_duplicates)
        except (UnicodeDecodeError, ValueError) as exc:
            raise ConfigError(f"not a valid UTF-8 JSON document: {exc}", "$") from None
    if not isinstance(doc, dict):
        raise ConfigError("top level must be an object", "$")
    try:
        cfg = Config.model_validate(doc)
    except ValidationError as exc:
        err = exc.errors()[0]
        raise ConfigError(_message(err), _json_path(err["loc"])) from None
    _cross_checks(cfg)
    if cfg.gaia.enabled:
        cfg.gaia.params()
    return cfg


def load_config(path: str | Path) -> Config:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", "$") from None
    return parse_config(data)


def wireless_grid(cfg: Config) -> tuple[int, int]:
    """Grid size for the wireless model; a square of about one cell per node by default."""
    side = max(1, math.isqrt(cfg.n_entities - 1) + 1)
    return cfg.model.width or side, cfg.model.height or side
