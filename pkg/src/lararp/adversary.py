"""Attacker behaviors layered over an otherwise honest node.

Attackers are insiders: they hold valid shared keys and key chains, so
their misbehavior is only observable through the protocol's defenses.
They never crash a run.
"""

import copy
from dataclasses import dataclass

from .messages import DataPacket, Rrep, Rreq
from .protocol import Broadcast, HandlerResult, Unicast

BLACK_HOLE = "blackhole"
GRAY_HOLE = "grayhole"
TAMPER = "tamper"
REPLAY = "replay"
RUSHING = "rushing"
CONTROL_FLOOD = "controlflood"

KINDS = (BLACK_HOLE, GRAY_HOLE, TAMPER, REPLAY, RUSHING, CONTROL_FLOOD)


@dataclass
class AttackerProfile:
    kind: str
    drop_prob: float = 0.5          # gray hole selectivity
    tamper_field: str = "node_list"
    replay_buffer: int = 8
    replay_delay: float = 0.5       # seconds before re-injection
    flood_rate: float = 2.0         # spurious RREQs per second

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown attacker kind {self.kind!r}")
        if not 0.0 <= self.drop_prob <= 1.0:
            raise ValueError("drop_prob must be in [0,1]")
        if self.flood_rate <= 0:
            raise ValueError("flood_rate must be positive")


def mutate_field(message, fieldname: str, rng):
    """Corrupt one field in place without recomputing any tag."""

    def flip(data: bytes) -> bytes:
        bit = rng.randrange(len(data) * 8)
        out = bytearray(data)
        out[bit // 8] ^= 1 << (bit % 8)
        return bytes(out)

    if fieldname in ("source_id", "dest_id"):
        setattr(message, fieldname, getattr(message, fieldname) + 1)
    elif fieldname in ("request_id", "source_tag", "request_id_tag"):
        setattr(message, fieldname, flip(getattr(message, fieldname)))
    elif fieldname == "verifier_index":
        idx, secret = message.verifier
        message.verifier = (idx + 1, secret)
    elif fieldname == "verifier_secret":
        idx, secret = message.verifier
        message.verifier = (idx, flip(secret))
    elif fieldname in ("node_list", "route"):
        ids = getattr(message, fieldname)
        if ids:
            ids[rng.randrange(len(ids))] = 0x7FFF0000 + rng.randrange(1 << 15)
    elif fieldname in ("hop_tags", "dest_tags", "reverse_hop_tags"):
        tags = getattr(message, fieldname)
        if tags:
            i = rng.randrange(len(tags))
            tags[i] = flip(tags[i])
    else:
        raise ValueError(f"unknown tamper target {fieldname!r}")
    return message


class Attacker:
    """Wraps one node; the simulator routes events through this shim."""

    def __init__(self, profile: AttackerProfile, node, rng):
        self.profile = profile
        self.node = node
        self.rng = rng
        self._replayed: list = []   # messages captured for re-injection

    def processing_delay(self, default: float) -> float:
        if self.profile.kind == RUSHING:
            return 0.0
        return default

    def capture(self, message, now: float):
        """Replay attacker: remember control messages for later re-injection.

        Returns a list of (inject_at, message_copy) pairs.
        """
        if self.profile.kind != REPLAY:
            return []
        if not isinstance(message, (Rreq, Rrep)):
            return []
        if len(self._replayed) >= self.profile.replay_buffer:
            return []
        stored = copy.deepcopy(message)
        self._replayed.append(stored)
        return [(now + self.profile.replay_delay, copy.deepcopy(stored))]

    def transform(self, inbound, result: HandlerResult):
        """Rewrite an honest handler result according to the attack.

        Returns (result, dropped_data_packets); the simulator logs the
        drops under the attacker's kind.
        """
        kind = self.profile.kind
        dropped: list[DataPacket] = []
        if kind in (BLACK_HOLE, GRAY_HOLE) and isinstance(inbound, DataPacket):
            kept = []
            for action in result.actions:
                forwarding = (isinstance(action, Unicast)
                              and isinstance(action.message, DataPacket)
                              and self.node.id != action.message.source_id)
                if forwarding and (kind == BLACK_HOLE
                                   or self.rng.random() < self.profile.drop_prob):
                    dropped.append(action.message)
                else:
                    kept.append(action)
            result.actions = kept
        elif kind == TAMPER and isinstance(inbound, (Rreq, Rrep)):
            for action in result.actions:
                if isinstance(action, (Broadcast, Unicast)) and isinstance(
                        action.message, (Rreq, Rrep)):
                    try:
                        mutate_field(action.message, self.profile.tamper_field,
                                     self.rng)
                    except (ValueError, AttributeError):
                        pass   # field not present on this message type
        return result, dropped
