"""Wire-level message records and their canonical byte encoding.

Every authentication tag in the protocol is computed over bytes produced
here, so the encoding is fixed-endian (big-endian), fixed-width, and
injective on well-formed messages. The byte layout is documented in
docs/wire_format.md.
"""

import struct
from dataclasses import dataclass, field

from .crypto import SECRET_LEN, TAG_LEN

RREQ_TYPE = 0x01
RREP_TYPE = 0x02
DATA_TYPE = 0x03

_U16 = struct.Struct(">H")
_U32 = struct.Struct(">I")
_F64 = struct.Struct(">d")

REQUEST_ID_LEN = 8


class EncodingError(ValueError):
    """A message violates its type invariants; names the offending field."""

    def __init__(self, fieldname: str, detail: str = ""):
        self.fieldname = fieldname
        super().__init__(f"{fieldname}: {detail}" if detail else fieldname)


@dataclass
class Rreq:
    """Route request, flooded source -> destination.

    hop_tags[k] is computed by node_list[k] over hop_digest(self, k) under
    the key it shares with the destination.
    """
    source_id: int
    dest_id: int
    request_id: bytes
    source_tag: bytes
    verifier: tuple[int, bytes]   # (chain index, revealed secret)
    node_list: list[int] = field(default_factory=list)
    hop_tags: list[bytes] = field(default_factory=list)

    def validate(self):
        if self.source_id == self.dest_id:
            raise EncodingError("dest_id", "equals source_id")
        if len(self.request_id) != REQUEST_ID_LEN:
            raise EncodingError("request_id", "must be 8 bytes")
        if len(self.source_tag) != TAG_LEN:
            raise EncodingError("source_tag", "must be 16 bytes")
        idx, secret = self.verifier
        if idx < 0:
            raise EncodingError("verifier", "negative index")
        if len(secret) != SECRET_LEN:
            raise EncodingError("verifier", "secret must be 16 bytes")
        if len(self.hop_tags) != len(self.node_list):
            raise EncodingError("hop_tags", "length differs from node_list")
        if len(set(self.node_list)) != len(self.node_list):
            raise EncodingError("node_list", "duplicate node id")
        for tag in self.hop_tags:
            if len(tag) != TAG_LEN:
                raise EncodingError("hop_tags", "tag must be 16 bytes")


@dataclass
class Rrep:
    """Route reply, unicast back along the reverse of the accumulated route.

    dest_tags holds one destination tag per verifier: dest_tags[0] is keyed
    to the source, dest_tags[1+i] to route[i]. reverse_hop_tags grows by one
    per reverse hop traversed, in traversal order (route[-1] first).
    """
    source_id: int
    dest_id: int
    request_id_tag: bytes
    route: list[int]
    dest_tags: list[bytes]
    reverse_hop_tags: list[bytes] = field(default_factory=list)

    def validate(self):
        if self.source_id == self.dest_id:
            raise EncodingError("dest_id", "equals source_id")
        if len(self.request_id_tag) != TAG_LEN:
            raise EncodingError("request_id_tag", "must be 16 bytes")
        if len(set(self.route)) != len(self.route):
            raise EncodingError("route", "duplicate node id")
        if len(self.dest_tags) != len(self.route) + 1:
            raise EncodingError("dest_tags", "need one tag per route node plus source")
        for tag in self.dest_tags:
            if len(tag) != TAG_LEN:
                raise EncodingError("dest_tags", "tag must be 16 bytes")
        if len(self.reverse_hop_tags) > len(self.route):
            raise EncodingError("reverse_hop_tags", "more tags than reverse hops")
        for tag in self.reverse_hop_tags:
            if len(tag) != TAG_LEN:
                raise EncodingError("reverse_hop_tags", "tag must be 16 bytes")


@dataclass
class DataPacket:
    """CBR payload carrier, source-routed along an accepted route."""
    flow_id: int
    seq: int
    source_id: int
    dest_id: int
    payload_size: int
    route: list[int]
    created_at: float

    def validate(self):
        if self.payload_size <= 0:
            raise EncodingError("payload_size", "must be positive")
        if self.source_id == self.dest_id:
            raise EncodingError("dest_id", "equals source_id")
        if len(set(self.route)) != len(self.route):
            raise EncodingError("route", "duplicate node id")


def _pack_ids(ids: list[int]) -> bytes:
    return _U16.pack(len(ids)) + b"".join(_U32.pack(i) for i in ids)


def _pack_tags(tags: list[bytes]) -> bytes:
    return _U16.pack(len(tags)) + b"".join(tags)


def rreq_header(r: Rreq) -> bytes:
    """Fixed prefix common to the full encoding and every hop digest."""
    idx, secret = r.verifier
    return (bytes([RREQ_TYPE]) + _U32.pack(r.source_id) + _U32.pack(r.dest_id)
            + r.request_id + r.source_tag + _U32.pack(idx) + secret)


def rrep_body(r: Rrep) -> bytes:
    """The bytes every destination tag covers: header plus the route."""
    return (bytes([RREP_TYPE]) + _U32.pack(r.source_id) + _U32.pack(r.dest_id)
            + r.request_id_tag + _pack_ids(r.route))


def reverse_tag_payload(r: Rrep, hop_id: int) -> bytes:
    """Bytes a reverse-path hop authenticates toward the source."""
    return rrep_body(r) + b"rev" + _U32.pack(hop_id)


def hop_digest(rreq: Rreq, k: int) -> bytes:
    """Bytes authenticated by the hop at position k: header plus the node
    list up to and including its own id. Prefix-stable: appending later
    hops never changes the digest for earlier positions."""
    if not 0 <= k < len(rreq.node_list):
        raise ValueError(f"hop position {k} out of range")
    return rreq_header(rreq) + b"".join(_U32.pack(i) for i in rreq.node_list[:k + 1])


def encode(message) -> bytes:
    """Canonical, deterministic encoding of any protocol message."""
    message.validate()
    if isinstance(message, Rreq):
        return (rreq_header(message) + _pack_ids(message.node_list)
                + _pack_tags(message.hop_tags))
    if isinstance(message, Rrep):
        return (rrep_body(message) + _pack_tags(message.dest_tags)
                + _pack_tags(message.reverse_hop_tags))
    if isinstance(message, DataPacket):
        return (bytes([DATA_TYPE]) + _U32.pack(message.flow_id)
                + _U32.pack(message.seq) + _U32.pack(message.source_id)
                + _U32.pack(message.dest_id) + _U32.pack(message.payload_size)
                + _pack_ids(message.route) + _F64.pack(message.created_at))
    raise EncodingError("type", f"unknown message {type(message).__name__}")


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise EncodingError("length", "truncated message")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def u16(self) -> int:
        return _U16.unpack(self.take(2))[0]

    def u32(self) -> int:
        return _U32.unpack(self.take(4))[0]

    def ids(self) -> list[int]:
        return [self.u32() for _ in range(self.u16())]

    def tags(self) -> list[bytes]:
        return [self.take(TAG_LEN) for _ in range(self.u16())]

    def done(self):
        if self.pos != len(self.data):
            raise EncodingError("length", "trailing bytes")


def decode(data: bytes):
    """Inverse of encode; validates the result."""
    if not data:
        raise EncodingError("type", "empty message")
    r = _Reader(data)
    kind = r.take(1)[0]
    if kind == RREQ_TYPE:
        msg = Rreq(source_id=r.u32(), dest_id=r.u32(),
                   request_id=r.take(REQUEST_ID_LEN), source_tag=r.take(TAG_LEN),
                   verifier=(r.u32(), r.take(SECRET_LEN)),
                   node_list=r.ids(), hop_tags=r.tags())
    elif kind == RREP_TYPE:
        msg = Rrep(source_id=r.u32(), dest_id=r.u32(),
                   request_id_tag=r.take(TAG_LEN), route=r.ids(),
                   dest_tags=r.tags(), reverse_hop_tags=r.tags())
    elif kind == DATA_TYPE:
        msg = DataPacket(flow_id=r.u32(), seq=r.u32(), source_id=r.u32(),
                         dest_id=r.u32(), payload_size=r.u32(), route=r.ids(),
                         created_at=_F64.unpack(r.take(8))[0])
    else:
        raise EncodingError("type", f"unknown type byte {kind:#x}")
    r.done()
    msg.validate()
    return msg


def wire_size(message) -> int:
    """Bytes occupying the channel: payload size for data, encoded length
    for control messages."""
    if isinstance(message, DataPacket):
        return message.payload_size
    return len(encode(message))
