"""Full mesh of LP-to-LP channels.

Co-located LP pairs talk through in-memory queues that carry Python objects
directly. Pairs split across processes share one TCP stream; a reader thread
per stream decodes frames and hands them to the same per-direction queues, so
receivers never care which kind of link they are reading from.
"""

from __future__ import annotations

import logging
import queue
import socket
import struct
import threading
import time
from dataclasses import dataclass
from typing import Any, Callable

from pads.errors import ProtocolError, StartupError, TransportFault
from pads.transport.frames import (
    HEADER_SIZE,
    MAGIC,
    VERSION,
    FrameKind,
    decode_batch,
    decode_control,
    encode_batch,
    encode_control,
    encode_frame,
    parse_header,
)

log = logging.getLogger(__name__)

# Connection preamble sent by the connecting side: magic, version, reserved, from_lp, to_lp.
PREAMBLE = struct.Struct(">4sBxII")

_DISCONNECTED = object()


@dataclass(frozen=True)
class LpEndpoint:
    """Where an LP lives, seen from the current process. ``host=None`` means in-process."""

    lp_id: int
    host: str | None = None
    port: int | None = None

    @property
    def locality(self) -> str:
        return "in-process" if self.host is None else "remote"


def open_listener(host: str = "127.0.0.1", port: int = 0) -> socket.socket:
    sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    sock.bind((host, port))
    sock.listen(128)
    return sock


def _recv_exact(sock: socket.socket, n: int) -> bytes:
    buf = bytearray()
    while len(buf) < n:
        chunk = sock.recv(n - len(buf))
        if not chunk:
            raise ConnectionError("peer closed the connection")
        buf += chunk
    return bytes(buf)


def read_frame(sock: socket.socket) -> tuple[FrameKind, bytes]:
    kind, length = parse_header(_recv_exact(sock, HEADER_SIZE))
    return kind, _recv_exact(sock, length)


def _encode_body(kind: FrameKind, obj: Any) -> bytes:
    if kind is FrameKind.INTERACTION_BATCH:
        return encode_batch(obj)
    if kind is FrameKind.MIGRATION_PAYLOAD:
        return bytes(obj)
    return encode_control(obj)


def _decode_body(kind: FrameKind, body: bytes) -> Any:
    if kind is FrameKind.INTERACTION_BATCH:
        batch, end = decode_batch(body)
        if end != len(body):
            raise ProtocolError("trailing bytes after batch", end)
        return batch
    if kind is FrameKind.MIGRATION_PAYLOAD:
        return body
    return decode_control(body)


class _TcpLink:
    def __init__(self, sock: socket.socket, local_lp: int, remote_lp: int, inbound: queue.SimpleQueue):
        sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        self.sock = sock
        self.local_lp = local_lp
        self.remote_lp = remote_lp
        self.closed = False
        self.frames_sent = 0
        self.bytes_sent = 0
        self._inbound = inbound
        self._reader = threading.Thread(
            target=self._read_loop, name=f"pads-link-{remote_lp}->{local_lp}", daemon=True
        )
        self._reader.start()

    def _read_loop(self) -> None:
        try:
            while True:
                kind, body = read_frame(self.sock)
                self._inbound.put((kind, _decode_body(kind, body)))
        except Exception as exc:  # EOF, reset or malformed frame all end the link
            if not self.closed:
                self._inbound.put((_DISCONNECTED, exc))

    def send(self, kind: FrameKind, obj: Any) -> None:
        frame = encode_frame(kind, _encode_body(kind, obj))
        try:
            self.sock.sendall(frame)
        except OSError as exc:
            raise TransportFault(f"link {self.local_lp}->{self.remote_lp} broken: {exc}") from exc
        self.frames_sent += 1
        self.bytes_sent += len(frame)

    def close(self) -> None:
        self.closed = True
        try:
            self.sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self.sock.close()


class Mesh:
    """Channels between the LPs of this process and every other LP."""

    def __init__(self, endpoints: list[LpEndpoint], timeout: float | None = 300.0):
        self.endpoints = sorted(endpoints, key=lambda e: e.lp_id)
        self.pool_size = len(self.endpoints)
        self.local_lps = [e.lp_id for e in self.endpoints if e.host is None]
        self.timeout = timeout
        self._queues: dict[tuple[int, int], queue.SimpleQueue] = {}
        self._tcp: dict[tuple[int, int], _TcpLink] = {}
        self._sent_steps: dict[tuple[int, int], int] = {}
        local = set(self.local_lps)
        for a in range(self.pool_size):
            for b in range(self.pool_size):
                if a != b and b in local:
                    self._queues[(a, b)] = queue.SimpleQueue()

    @property
    def in_memory_links(self) -> int:
        """Bidirectional in-memory links (one per unordered co-located pair)."""
        k = len(self.local_lps)
        return k * (k - 1) // 2

    @property
    def sockets(self) -> int:
        return len({id(link.sock) for link in self._tcp.values()})

    def is_local(self, lp: int) -> bool:
        return lp in self.local_lps

    def _attach(self, sock: socket.socket, local_lp: int, remote_lp: int) -> None:
        link = _TcpLink(sock, local_lp, remote_lp, self._queues[(remote_lp, local_lp)])
        self._tcp[(local_lp, remote_lp)] = link

    def send(self, src: int, dst: int, kind: FrameKind, obj: Any) -> None:
        link = self._tcp.get((src, dst))
        if link is not None:
            link.send(kind, obj)
            return
        try:
            self._queues[(src, dst)].put((kind, obj))
        except KeyError:
            raise TransportFault(f"no link {src}->{dst} from this process") from None

    def recv(self, src: int, dst: int, kind: FrameKind) -> Any:
        try:
            q = self._queues[(src, dst)]
        except KeyError:
            raise TransportFault(f"no inbound link {src}->{dst} in this process") from None
        try:
            got, obj = q.get(timeout=self.timeout)
        except queue.Empty:
            raise TransportFault(f"timed out waiting for {kind.name} on link {src}->{dst}") from None
        if got is _DISCONNECTED:
            raise TransportFault(f"link {src}->{dst} lost: {obj}")
        if got != kind:
            raise ProtocolError(f"expected {kind.name} on link {src}->{dst}, got {FrameKind(got).name}", 5)
        return obj

    def close(self) -> None:
        for link in self._tcp.values():
            link.close()
        self._tcp.clear()


def establish_topology(
    endpoints: list[LpEndpoint],
    listener: socket.socket | None = None,
    retries: int = 50,
    retry_delay: float = 0.1,
    accept_timeout: float = 60.0,
    timeout: float | None = 300.0,
) -> Mesh:
    """Build the mesh and block until every link is up.

    For a cross-process pair (a, b) with a < b, the process hosting ``b``
    connects to the listener of the process hosting ``a``.
    """
    if not endpoints:
        raise ValueError("endpoint list must be non-empty")
    ids = sorted(e.lp_id for e in endpoints)
    if ids != list(range(len(ids))):
        raise ValueError(f"endpoint lp ids must be dense 0..{len(ids) - 1}, got {ids}")
    mesh = Mesh(endpoints, timeout=timeout)
    by_id = {e.lp_id: e for e in endpoints}
    local = mesh.local_lps
    remote = [e.lp_id for e in mesh.endpoints if e.host is not None]
    expected_accepts = sum(1 for a in local for b in remote if b > a)
    try:
        for a in local:
            for b in remote:
                if b < a:
                    ep = by_id[b]
                    sock = _connect(ep.host, ep.port, retries, retry_delay)
                    sock.sendall(PREAMBLE.pack(MAGIC, VERSION, a, b))
                    mesh._attach(sock, a, b)
        if expected_accepts:
            if listener is None:
                raise TransportFault("remote peers must connect here but no listener was provided")
            listener.settimeout(accept_timeout)
            for _ in range(expected_accepts):
                try:
                    sock, _addr = listener.accept()
                except socket.timeout:
                    raise TransportFault(
                        f"timed out after {accept_timeout}s waiting for peers to connect"
                    ) from None
                sock.settimeout(accept_timeout)
                magic, version, src, dst = PREAMBLE.unpack(_recv_exact(sock, PREAMBLE.size))
                if magic != MAGIC or version != VERSION:
                    raise ProtocolError("bad connection preamble", 0)
                if dst not in local or src not in remote:
                    raise ProtocolError(f"unexpected link {src}->{dst}", 5)
                sock.settimeout(None)
                mesh._attach(sock, dst, src)
    except BaseException:
        mesh.close()
        raise
    log.debug("mesh up: local=%s in-memory=%d sockets=%d", local, mesh.in_memory_links, mesh.sockets)
    return mesh


def _connect(host: str, port: int, retries: int, delay: float) -> socket.socket:
    last: BaseException | None = None
    for _ in range(max(1, retries)):
        try:
            return socket.create_connection((host, port), timeout=5.0)
        except OSError as exc:
            last = exc
            time.sleep(delay)
    raise StartupError(host, port, last)


def send_batch(mesh: Mesh, src: int, dst: int, interactions: list, step: int | None = None) -> None:
    """Send this step's interactions from ``src`` to ``dst`` as one batch (possibly empty)."""
    if step is not None:
        last = mesh._sent_steps.get((src, dst))
        if last is not None and last >= step:
            raise TransportFault(f"batch {src}->{dst} already sent for step {step}")
        mesh._sent_steps[(src, dst)] = step
    mesh.send(src, dst, FrameKind.INTERACTION_BATCH, interactions)


def recv_batch(mesh: Mesh, src: int, dst: int) -> list:
    return mesh.recv(src, dst, FrameKind.INTERACTION_BATCH)


def send_vote(mesh: Mesh, lp_id: int, t: int, vote: Any) -> None:
    mesh.send(lp_id, 0, FrameKind.BARRIER_VOTE, {"step": t, "vote": vote})


def collect_votes(mesh: Mesh, t: int, own_vote: Any) -> list:
    """Coordinator side: LP 0's own vote followed by every other LP's, by id."""
    votes = [own_vote]
    for k in range(1, mesh.pool_size):
        msg = mesh.recv(k, 0, FrameKind.BARRIER_VOTE)
        if msg["step"] != t:
            raise ProtocolError(f"vote for step {msg['step']} from LP {k} during step {t}", 0)
        votes.append(msg["vote"])
    return votes


def broadcast_release(mesh: Mesh, t: int, release: Any) -> None:
    for k in range(1, mesh.pool_size):
        mesh.send(0, k, FrameKind.BARRIER_RELEASE, {"step": t, "release": release})


def recv_release(mesh: Mesh, lp_id: int, t: int) -> Any:
    msg = mesh.recv(0, lp_id, FrameKind.BARRIER_RELEASE)
    if msg["step"] != t:
        raise ProtocolError(f"release for step {msg['step']} while waiting for step {t}", 0)
    return msg["release"]


def barrier_exchange(
    mesh: Mesh,
    lp_id: int,
    t: int,
    vote: Any = None,
    commit: Callable[[list], Any] | None = None,
) -> Any:
    """Rendezvous of all LPs for step ``t``; LP 0 coordinates.

    Every LP sends its vote to LP 0. LP 0 gathers all votes, calls ``commit``
    on them and broadcasts the result, which every caller gets back. Intended
    for callers running one thread per LP.
    """
    if mesh.pool_size == 1:
        return commit([vote]) if commit is not None else None
    if lp_id != 0:
        send_vote(mesh, lp_id, t, vote)
        return recv_release(mesh, lp_id, t)
    votes = collect_votes(mesh, t, vote)
    release = commit(votes) if commit is not None else None
    broadcast_release(mesh, t, release)
    return release
