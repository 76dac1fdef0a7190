"""Core records shared by the kernel, the transport and the adaptive layer."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, ClassVar, NamedTuple, Sequence


class Interaction(NamedTuple):
    """A message between two entities, delivered exactly one step after it is sent.

    Field order makes plain tuple ordering equal to the inbox order: inside one
    inbox ``dst`` and ``send_step`` are constant, so tuples sort by (src, seq).
    """

    src: int
    dst: int
    send_step: int
    seq: int
    payload: bytes = b""

    @property
    def deliver_step(self) -> int:
        return self.send_step + 1


class Behavior:
    """Base class for entity state.

    Subclasses hold the model-visible state of one entity and implement
    :meth:`step`. Behaviors must be pure functions of (state, sorted inbox,
    own random stream): they may not read globals, the clock or the placement.
    ``to_bytes``/``from_bytes`` must round-trip byte-identically.
    """

    __slots__ = ()

    kind: ClassVar[str] = ""
    uses_directory: ClassVar[bool] = False

    def step(self, inbox: Sequence[Interaction], ctx: "StepContext") -> None:
        raise NotImplementedError

    def to_bytes(self) -> bytes:
        raise NotImplementedError

    @classmethod
    def from_bytes(cls, data: bytes) -> "Behavior":
        raise NotImplementedError

    def publish(self) -> Any:
        """Directory record made visible to every entity at the next step."""
        return None

    @classmethod
    def index_directory(cls, records: dict[int, Any]) -> Any:
        return records


_BEHAVIORS: dict[str, type[Behavior]] = {}


def register_behavior(cls: type[Behavior]) -> type[Behavior]:
    if not cls.kind:
        raise ValueError(f"{cls.__name__} must set a non-empty kind")
    other = _BEHAVIORS.get(cls.kind)
    if other is not None and other is not cls:
        raise ValueError(f"behavior kind {cls.kind!r} already registered by {other.__name__}")
    _BEHAVIORS[cls.kind] = cls
    return cls


def behavior_class(kind: str) -> type[Behavior]:
    if kind not in _BEHAVIORS:
        import pads.models  # noqa: F401  registers the built-in behaviors
    try:
        return _BEHAVIORS[kind]
    except KeyError:
        raise KeyError(f"unknown behavior kind {kind!r}") from None


def registered_behaviors() -> list[str]:
    return sorted(_BEHAVIORS)


@dataclass(slots=True)
class SimEntity:
    id: int
    behavior: str
    state: Behavior
    weight: float
    rng_seed: int

    def serialize(self) -> bytes:
        return self.state.to_bytes()


class StepContext:
    """Handed to :meth:`Behavior.step`; collects emitted interactions."""

    __slots__ = ("entity", "step", "directory", "_out", "_seq", "_burn")

    def __init__(self, step: int, out: list, directory: Any = None, burn=None):
        self.step = step
        self.entity = -1
        self.directory = directory
        self._out = out
        self._seq = 0
        self._burn = burn

    def begin(self, entity: int) -> None:
        self.entity = entity
        self._seq = 0

    def send(self, dst: int, payload: bytes = b"") -> None:
        self._out.append(Interaction(self.entity, dst, self.step, self._seq, payload))
        self._seq += 1

    def burn(self, work_units: float) -> None:
        if self._burn is not None:
            self._burn(work_units)


@dataclass(slots=True)
class StepReport:
    lp_id: int
    step: int
    messages_sent_local: int = 0
    messages_sent_remote: int = 0
    entities_executed: int = 0
    wall_time_us: float = 0.0

    @property
    def messages_sent(self) -> int:
        return self.messages_sent_local + self.messages_sent_remote


@dataclass(slots=True)
class MigrationRecord:
    step: int
    entity: int
    from_lp: int
    to_lp: int
    reason: str
    bytes: int
    transfer_us: float

    def log_line(self) -> str:
        return (
            f"{self.step} {self.entity} {self.from_lp} {self.to_lp} "
            f"{self.reason} {self.bytes} {self.transfer_us:.1f}"
        )


@dataclass(slots=True)
class CommitRecord:
    step: int
    migrations: list = field(default_factory=list)
    step_wall_us: dict[int, float] = field(default_factory=dict)
    reports: list[StepReport] = field(default_factory=list)
