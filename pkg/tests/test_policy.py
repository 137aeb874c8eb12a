import pytest
from hypothesis import given
from hypothesis import strategies as st

from sticky_manet.errors import CapacityExceeded, MalformedPolicy
from sticky_manet.policy import (
    Decision,
    Policy,
    decode_policy,
    encode_policy,
    evaluate_policy,
    merge_policy,
)


def pol(permitted, originator=0, version=0):
    return Policy(originator=originator, permitted=frozenset(permitted), version=version)


@pytest.mark.parametrize(
    "permitted,dest,expected",
    [
        ({1}, 1, Decision.ALLOW),
        ({1}, 2, Decision.DENY),
        (set(), 0, Decision.DENY),
        (set(), 1, Decision.DENY),
        (set(), 99, Decision.DENY),
        ({1, 3}, 3, Decision.ALLOW),
    ],
)
def test_evaluate(permitted, dest, expected):
    assert evaluate_policy(pol(permitted), dest) is expected


def test_merge_intersects():
    merged = merge_policy(pol({1, 2}), pol({1}))
    assert merged.permitted == {1}


def test_merge_identity():
    p = pol({1, 2})
    assert merge_policy(p, p).permitted == p.permitted


def test_merge_disjoint_leaves_empty_set():
    # the node may keep the message but can forward it to nobody
    assert merge_policy(pol({2}), pol({1})).permitted == frozenset()


def test_merge_field_bookkeeping():
    local = pol({1}, originator=3, version=4)
    received = pol({1}, originator=9, version=2)
    merged = merge_policy(local, received)
    assert merged.originator == 9
    assert merged.version == 5


def test_policy_rejects_negative_fields():
    with pytest.raises(ValueError):
        Policy(originator=-1, permitted=frozenset())
    with pytest.raises(ValueError):
        Policy(originator=0, permitted=frozenset({-2}))
    with pytest.raises(ValueError):
        Policy(originator=0, permitted=frozenset(), version=-1)


def test_encode_singleton_block():
    assert encode_policy(pol({1})).hex() == "000c00000000000000010001"


def test_encode_empty_block():
    data = encode_policy(pol(set()))
    assert len(data) == 10
    assert data.hex() == "000a0000000000000000"


def test_encode_orders_groups_ascending():
    data = encode_policy(pol({3, 1, 2}))
    assert data[10:].hex() == "000100020003"


def test_encode_group_count_capacity():
    with pytest.raises(CapacityExceeded):
        encode_policy(pol(range(65536)))


@pytest.mark.parametrize(
    "policy",
    [
        pol({1}, originator=2**32),
        pol({1}, version=2**16),
        pol({2**16}),
    ],
)
def test_encode_field_width_capacity(policy):
    with pytest.raises(CapacityExceeded):
        encode_policy(policy)


def test_decode_known_block():
    assert decode_policy(bytes.fromhex("000c00000000000000010001")) == pol({1})


@pytest.mark.parametrize(
    "data",
    [
        b"",
        b"\x00",
        bytes.fromhex("000c000000000000000100"),  # truncated
        bytes.fromhex("000c0000000000000001000100"),  # trailing byte
        bytes.fromhex("000c00000000000000050001"),  # count overruns length
        bytes.fromhex("00ff00000000000000010001"),  # length prefix disagrees
    ],
)
def test_decode_rejects_malformed(data):
    with pytest.raises(MalformedPolicy):
        decode_policy(data)


policies = st.builds(
    Policy,
    originator=st.integers(0, 2**32 - 1),
    permitted=st.frozensets(st.integers(0, 0xFFFF), max_size=64),
    version=st.integers(0, 0xFFFF),
)


@given(policies)
def test_roundtrip(p):
    assert decode_policy(encode_policy(p)) == p


@given(policies, policies)
def test_merge_is_restrictive(a, b):
    merged = merge_policy(a, b)
    assert merged.permitted <= a.permitted
    assert merged.permitted <= b.permitted


@given(policies, policies)
def test_merge_permitted_commutes(a, b):
    assert merge_policy(a, b).permitted == merge_policy(b, a).permitted


@given(policies, policies, policies)
def test_merge_permitted_associates(a, b, c):
    left = merge_policy(merge_policy(a, b), c).permitted
    right = merge_policy(a, merge_policy(b, c)).permitted
    assert left == right


@given(policies)
def test_merge_idempotent_on_permitted(p):
    assert merge_policy(p, p).permitted == p.permitted


@given(policies, st.integers(0, 0xFFFF))
def test_evaluate_matches_membership(p, group):
    expected = Decision.ALLOW if group in p.permitted else Decision.DENY
    assert evaluate_policy(p, group) is expected
