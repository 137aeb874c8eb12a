"""Per-node protocol logic.

Each node runs four pieces of machinery: an outbound enforcement point that
filters candidate destinations against the packet's policy (pep_out), an
inbound enforcement point that splits a received frame into payload and
policy and updates the local stores (pep_in), the decision primitive both
consult (pdp_decide), and the controller state itself (NodeState).
"""

import struct
from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple

from .errors import InvalidScenario, MalformedPolicy, UnknownMessage
from .policy import Decision, Policy, decode_policy, encode_policy, evaluate_policy, merge_policy

# Frame header, big-endian: message sequence (u32), originator (u32),
# sender (u32), creation time in microseconds (u64). A policy block follows
# when the message carries one; the rest of the frame is payload.
_FRAME_HEADER = struct.Struct(">IIIQ")
FRAME_HEADER_SIZE = _FRAME_HEADER.size


class MsgId(NamedTuple):
    """Stable message identity: originating node plus its sequence number."""

    orig: int
    seq: int

    def __str__(self):
        return f"{self.orig}:{self.seq}"


@dataclass(frozen=True)
class Packet:
    """One in-flight copy of a message.

    policy is None for baseline traffic that carries no policy block; such
    frames bypass enforcement entirely.
    """

    msg_id: MsgId
    originator: int
    sender: int
    created_at: float
    policy: Policy | None
    payload: bytes

    def __post_init__(self):
        if self.policy is not None and self.policy.originator != self.originator:
            raise ValueError("packet originator must match its policy's originator")


@dataclass
class NodeState:
    """A node's identity, radio footprint and controller stores."""

    id: int
    group: int
    position: tuple
    range: float
    default_policy: Policy | None = None
    policy_store: dict = field(default_factory=dict)
    message_store: dict = field(default_factory=dict)
    seen: set = field(default_factory=set)
    _created: dict = field(default_factory=dict)
    _next_seq: int = 0

    def __post_init__(self):
        if self.default_policy is None:
            self.default_policy = Policy(originator=self.id, permitted=frozenset())


class DeliveryKind(Enum):
    DELIVERED = "delivered"
    DUPLICATE = "duplicate"
    MALFORMED = "malformed"


@dataclass(frozen=True)
class DeliveryOutcome:
    kind: DeliveryKind
    packet: Packet | None = None


def encode_packet(packet: Packet) -> bytes:
    """Serialize a packet to its wire frame."""
    head = _FRAME_HEADER.pack(
        packet.msg_id.seq,
        packet.originator,
        packet.sender,
        round(packet.created_at * 1e6),
    )
    block = encode_policy(packet.policy) if packet.policy is not None else b""
    return head + block + packet.payload


def decode_packet(frame: bytes, has_policy: bool = True) -> Packet:
    """Parse a wire frame back into a Packet.

    has_policy is routing metadata: baseline frames embed no policy bytes, so
    the receiver must be told which framing applies.
    """
    if len(frame) < FRAME_HEADER_SIZE:
        raise MalformedPolicy(f"frame of {len(frame)} bytes is shorter than the packet header")
    seq, originator, sender, micros = _FRAME_HEADER.unpack_from(frame)
    if has_policy:
        if len(frame) < FRAME_HEADER_SIZE + 2:
            raise MalformedPolicy("frame truncated before the policy length prefix")
        (length,) = struct.unpack_from(">H", frame, FRAME_HEADER_SIZE)
        block = frame[FRAME_HEADER_SIZE : FRAME_HEADER_SIZE + length]
        if len(block) != length:
            raise MalformedPolicy("policy block overruns the frame")
        policy = decode_policy(block)
        payload = frame[FRAME_HEADER_SIZE + length :]
    else:
        policy = None
        payload = frame[FRAME_HEADER_SIZE:]
    return Packet(
        msg_id=MsgId(originator, seq),
        originator=originator,
        sender=sender,
        created_at=micros / 1e6,
        policy=policy,
        payload=payload,
    )


def pdp_decide(policy: Policy, dest: int, dest_group: int, originator: int) -> Decision:
    """Single decision primitive: group must be permitted and the originator
    is never a legal destination for its own message."""
    if dest == originator:
        return Decision.DENY
    return evaluate_policy(policy, dest_group)


def pep_out(node: NodeState, packet: Packet, neighbors: list) -> list:
    """Outbound enforcement: which neighbors may this packet be sent to.

    neighbors is a list of (node id, group id) pairs currently in radio
    range. Returns destination ids sorted ascending, duplicate-free. Packets
    without a policy are baseline traffic and go to every neighbor.
    """
    if packet.policy is None:
        ids = {nid for nid, _ in neighbors if nid != node.id}
    else:
        ids = {
            nid
            for nid, group in neighbors
            if nid != node.id
            and pdp_decide(packet.policy, nid, group, packet.originator) is Decision.ALLOW
        }
    return sorted(ids)


def pep_in(node: NodeState, frame: bytes, has_policy: bool = True) -> DeliveryOutcome:
    """Inbound enforcement: decode, split policy from payload, update stores.

    First receipt stores the payload, installs the merged policy and marks
    the message seen. Duplicates re-merge the policy (harmless, intersection
    is idempotent) but change nothing else. Undecodable frames are dropped
    without storing anything.
    """
    try:
        packet = decode_packet(frame, has_policy)
    except MalformedPolicy:
        return DeliveryOutcome(DeliveryKind.MALFORMED)
    m = packet.msg_id
    if m in node.seen:
        if packet.policy is not None and m in node.policy_store:
            node.policy_store[m] = merge_policy(node.policy_store[m], packet.policy)
        return DeliveryOutcome(DeliveryKind.DUPLICATE, packet)
    node.seen.add(m)
    node.message_store[m] = packet.payload
    node._created[m] = packet.created_at
    if packet.policy is not None:
        existing = node.policy_store.get(m, packet.policy)
        node.policy_store[m] = merge_policy(existing, packet.policy)
    return DeliveryOutcome(DeliveryKind.DELIVERED, packet)


def originate(node: NodeState, payload: bytes, policy: Policy | None, now: float) -> Packet:
    """Author a new message at this node; transmission is scheduled elsewhere."""
    if policy is not None and policy.originator != node.id:
        raise InvalidScenario(
            f"node {node.id} cannot originate with a policy authored by {policy.originator}"
        )
    m = MsgId(node.id, node._next_seq)
    node._next_seq += 1
    node.seen.add(m)
    return Packet(
        msg_id=m,
        originator=node.id,
        sender=node.id,
        created_at=now,
        policy=policy,
        payload=payload,
    )


def forward(node: NodeState, msg_id: MsgId, now: float) -> Packet:
    """Rebuild a stored message for retransmission with this node as sender.

    The originator, creation time and the locally merged policy are
    preserved; the node's own default policy never applies here.
    """
    if msg_id not in node.message_store:
        raise UnknownMessage(f"node {node.id} holds no message {msg_id}")
    return Packet(
        msg_id=msg_id,
        originator=msg_id.orig,
        sender=node.id,
        created_at=node._created[msg_id],
        policy=node.policy_store.get(msg_id),
        payload=node.message_store[msg_id],
    )
