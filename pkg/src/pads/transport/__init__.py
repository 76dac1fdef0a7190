from pads.transport.frames import (
    FrameKind,
    decode_batch,
    decode_frame,
    encode_batch,
    encode_frame,
)
from pads.transport.mesh import (
    LpEndpoint,
    Mesh,
    barrier_exchange,
    broadcast_release,
    collect_votes,
    establish_topology,
    open_listener,
    recv_batch,
    recv_release,
    send_batch,
    send_vote,
)

__all__ = [
    "FrameKind",
    "LpEndpoint",
    "Mesh",
    "barrier_exchange",
    "decode_batch",
    "decode_frame",
    "encode_batch",
    "encode_frame",
    "establish_topology",
    "open_listener",
    "recv_batch",
    "send_batch",
]
