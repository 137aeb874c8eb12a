"""Originator-attached dissemination policies.

A policy names its originator and the set of group ids allowed to receive
the message it travels with. Policies are immutable; merging two policies
intersects their permitted sets, so a policy can only ever become more
restrictive as it moves through the network.
"""

import struct
from dataclasses import dataclass
from enum import Enum

from .errors import CapacityExceeded, MalformedPolicy

# Wire layout, big-endian: total block length (u16, self-inclusive),
# originator (u32), version (u16), group count (u16), then one u16 per group.
_HEADER = struct.Struct(">HIHH")

MAX_GROUPS = 0xFFFF
_U16 = 0xFFFF
_U32 = 0xFFFFFFFF


class Decision(Enum):
    ALLOW = "allow"
    DENY = "deny"


@dataclass(frozen=True)
class Policy:
    """Who authored the policy and which groups may receive the message."""

    originator: int
    permitted: frozenset
    version: int = 0

    def __post_init__(self):
        object.__setattr__(self, "permitted", frozenset(self.permitted))
        if self.originator < 0:
            raise ValueError("originator must be non-negative")
        if self.version < 0:
            raise ValueError("version must be non-negative")
        if any(g < 0 for g in self.permitted):
            raise ValueError("group ids must be non-negative")


def evaluate_policy(policy: Policy, dest_group: int) -> Decision:
    """Allow exactly when the destination's group is in the permitted set."""
    return Decision.ALLOW if dest_group in policy.permitted else Decision.DENY


def merge_policy(local: Policy, received: Policy) -> Policy:
    """Combine a stored policy with a newly received one.

    The permitted set is the intersection (never widens what the originator
    allowed), the originator follows the received policy and the version
    ticks past both inputs so updates are observable.
    """
    return Policy(
        originator=received.originator,
        permitted=local.permitted & received.permitted,
        version=max(local.version, received.version) + 1,
    )


def encode_policy(policy: Policy) -> bytes:
    """Serialize a policy to its wire block."""
    groups = sorted(policy.permitted)
    if len(groups) > MAX_GROUPS:
        raise CapacityExceeded(f"{len(groups)} groups exceed the u16 count field")
    if policy.originator > _U32:
        raise CapacityExceeded("originator does not fit u32")
    if policy.version > _U16:
        raise CapacityExceeded("version does not fit u16")
    if groups and groups[-1] > _U16:
        raise CapacityExceeded(f"group id {groups[-1]} does not fit u16")
    length = _HEADER.size + 2 * len(groups)
    head = _HEADER.pack(length, policy.originator, policy.version, len(groups))
    return head + struct.pack(f">{len(groups)}H", *groups)


def decode_policy(data: bytes) -> Policy:
    """Inverse of encode_policy; raises MalformedPolicy on anything invalid."""
    if len(data) < _HEADER.size:
        raise MalformedPolicy(f"policy block of {len(data)} bytes is shorter than the header")
    length, originator, version, count = _HEADER.unpack_from(data)
    if length != len(data):
        raise MalformedPolicy(f"length prefix {length} disagrees with buffer of {len(data)} bytes")
    if length != _HEADER.size + 2 * count:
        raise MalformedPolicy(f"group count {count} does not match block length {length}")
    groups = struct.unpack_from(f">{count}H", data, _HEADER.size)
    return Policy(originator=originator, permitted=frozenset(groups), version=version)
