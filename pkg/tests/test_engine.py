import math

import pytest

from sticky_manet.engine import (
    CbrFlow,
    NodeSpec,
    Origination,
    RadioModel,
    Scenario,
    hop_delay,
    install_cbr,
    load_scenario,
    neighbors_of,
    parse_scenario,
    run,
    tick_times,
)
from sticky_manet.errors import InvalidScenario
from sticky_manet.metrics import DELIVER, RECV, SEND, delay_report, write_trace
from sticky_manet.node import NodeState, encode_packet, originate
from sticky_manet.policy import Policy, encode_policy
from sticky_manet.scenarios import FIG5, SCENARIO3NODE


def fig5_scenario():
    return parse_scenario(FIG5)


# --- neighbors_of -------------------------------------------------------


def test_neighbors_of_golden_topology():
    scn = fig5_scenario()
    assert neighbors_of(0, scn.nodes) == [(1, 2), (2, 1)]
    assert neighbors_of(2, scn.nodes) == [(0, 1), (4, 1)]
    assert neighbors_of(5, scn.nodes) == [(4, 1)]


def test_neighbors_of_out_of_range():
    nodes = {
        0: NodeSpec(0, 1, 0.0, 0.0, 100.0),
        1: NodeSpec(1, 1, 10000.0, 0.0, 100.0),
    }
    assert neighbors_of(0, nodes) == []


def test_neighbors_of_boundary_is_closed():
    nodes = {
        0: NodeSpec(0, 1, 0.0, 0.0, 200.0),
        1: NodeSpec(1, 2, 200.0, 0.0, 200.0),
    }
    assert neighbors_of(0, nodes) == [(1, 2)]


def test_neighbors_of_asymmetric_links():
    # only the sender's range governs its send list
    nodes = {
        0: NodeSpec(0, 1, 0.0, 0.0, 100.0),
        1: NodeSpec(1, 1, 200.0, 0.0, 300.0),
    }
    assert neighbors_of(0, nodes) == []
    assert neighbors_of(1, nodes) == [(0, 1)]


# --- hop_delay ----------------------------------------------------------


def test_hop_delay_pure_serialization():
    model = RadioModel(bandwidth=1_000_000, propagation_speed=3e8, per_hop_processing=0.0)
    assert hop_delay(8000, 0.0, model) == 0.008


def test_hop_delay_pure_propagation():
    model = RadioModel(bandwidth=1_000_000, propagation_speed=3e8, per_hop_processing=0.0)
    assert hop_delay(0, 300.0, model) == 1e-6


def test_hop_delay_includes_processing():
    model = RadioModel(bandwidth=1_000_000, propagation_speed=3e8, per_hop_processing=0.5)
    assert hop_delay(0, 0.0, model) == 0.5


def test_hop_delay_policy_block_difference():
    # a policied frame and an otherwise identical plain frame differ by
    # exactly the encoded policy block's serialization time
    model = RadioModel()
    node = NodeState(
        id=0,
        group=1,
        position=(0.0, 0.0),
        range=250.0,
        default_policy=Policy(0, frozenset({1})),
    )
    policied = encode_packet(originate(node, bytes(256), node.default_policy, 0.0))
    plain = encode_packet(originate(node, bytes(256), None, 0.0))
    delta = hop_delay(len(policied) * 8, 100.0, model) - hop_delay(len(plain) * 8, 100.0, model)
    block_bits = len(encode_policy(node.default_policy)) * 8
    assert delta == pytest.approx(block_bits / model.bandwidth, abs=1e-15)


def test_radio_model_validation():
    with pytest.raises(InvalidScenario):
        RadioModel(bandwidth=0)
    with pytest.raises(InvalidScenario):
        RadioModel(propagation_speed=0)
    with pytest.raises(InvalidScenario):
        RadioModel(per_hop_processing=-1)


# --- CBR scheduling -----------------------------------------------------


def test_tick_times_inclusive_of_stop():
    flow = CbrFlow(src=0, dst=1, packet_size=100, interval=0.1, start=0.0, stop=1.0)
    assert len(tick_times(flow)) == 11


def test_tick_times_single_tick():
    flow = CbrFlow(src=0, dst=1, packet_size=100, interval=0.5, start=0.25, stop=0.25)
    assert tick_times(flow) == [0.25]


def test_install_cbr_appends():
    scn = fig5_scenario()
    flow = CbrFlow(src=0, dst=2, packet_size=64, interval=0.1, start=0.0, stop=0.2)
    install_cbr(scn, flow)
    assert scn.flows[-1] is flow


def test_install_cbr_rejects_dangling_nodes():
    scn = fig5_scenario()
    with pytest.raises(InvalidScenario):
        install_cbr(scn, CbrFlow(src=99, dst=0, packet_size=64, interval=0.1, start=0.0, stop=0.2))
    with pytest.raises(InvalidScenario):
        install_cbr(scn, CbrFlow(src=0, dst=99, packet_size=64, interval=0.1, start=0.0, stop=0.2))


def test_cbr_flow_validation():
    with pytest.raises(InvalidScenario):
        CbrFlow(src=0, dst=1, packet_size=64, interval=0.0, start=0.0, stop=1.0)
    with pytest.raises(InvalidScenario):
        CbrFlow(src=0, dst=1, packet_size=64, interval=0.1, start=2.0, stop=1.0)


# --- scenario parsing ---------------------------------------------------


def test_parse_full_scenario():
    scn = fig5_scenario()
    assert sorted(scn.nodes) == [0, 1, 2, 3, 4, 5]
    assert scn.radio.bandwidth == 2_000_000
    assert scn.policies[0] == {1}
    assert len(scn.originations) == 1
    assert scn.end_time == 1.0


def test_parse_ignores_comments_and_blanks():
    scn = parse_scenario("# comment\n\nnode 0 1 0 0 100  # trailing comment\n")
    assert list(scn.nodes) == [0]


@pytest.mark.parametrize(
    "text",
    [
        "node 0 1 0 0 100\nnode 0 1 5 5 100\n",  # duplicate id
        "node 0 1 0 0 0\n",  # zero range
        "node 0 1 0 0 -5\n",  # negative range
        "warp 9\n",  # unknown directive
        "node 0 1 0 0\n",  # missing field
        "node 0 1 0 0 ten\n",  # bad number
        "policy 5 permit 1\n",  # unknown node
        "originate 5 0.0 10\n",  # unknown node
        "node 0 1 0 0 100\ncbr 0 9 64 0.1 0 1 policied\n",  # dangling dst
        "node 0 1 0 0 100\ncbr 0 0 64 0.1 1 0 policied\n",  # start > stop
        "radio 2000000 3e8 0\nradio 1000000 3e8 0\n",  # duplicate radio
        "end 1\nend 2\n",  # duplicate end
        "node 0 1 0 0 100\npolicy 0 permit 1\npolicy 0 permit 2\n",  # duplicate policy
        "node 0 1 0 0 100\ncbr 0 0 64 0.1 0 1 maybe\n",  # bad flag
    ],
)
def test_parse_rejects_invalid(text):
    with pytest.raises(InvalidScenario):
        parse_scenario(text)


def test_load_scenario(tmp_path):
    path = tmp_path / "s.scn"
    path.write_text(FIG5, encoding="utf-8")
    assert sorted(load_scenario(path).nodes) == [0, 1, 2, 3, 4, 5]


# --- run ----------------------------------------------------------------


def test_run_fig5_delivery_set():
    trace = run(fig5_scenario())
    delivered = {r.node for r in trace.records if r.event == DELIVER}
    assert delivered == {2, 4, 5}
    touched = {r.node for r in trace.records if r.event in (RECV, DELIVER)}
    assert 1 not in touched
    assert 3 not in touched


def test_run_vacuous_scenario(tmp_path):
    scn = parse_scenario("node 0 1 0 0 100\nnode 1 1 50 0 100\n")
    trace = run(scn)
    assert trace.records == []
    out = tmp_path / "empty.trace"
    write_trace(trace, out)
    lines = out.read_text().splitlines()
    assert lines == [
        "# node 0 group 1 pos 0 0 range 100",
        "# node 1 group 1 pos 50 0 range 100",
    ]


def test_run_is_deterministic(tmp_path):
    scn_a = fig5_scenario()
    scn_b = fig5_scenario()
    first = tmp_path / "a.trace"
    second = tmp_path / "b.trace"
    write_trace(run(scn_a, seed=7), first)
    write_trace(run(scn_b, seed=7), second)
    assert first.read_bytes() == second.read_bytes()


def test_run_timestamps_non_decreasing():
    trace = run(fig5_scenario())
    times = [r.time for r in trace.records]
    assert times == sorted(times)


def test_run_causality():
    # every RECV matches an earlier SEND and arrives exactly one hop later
    scn = fig5_scenario()
    trace = run(scn)
    sends = {}
    for r in trace.records:
        if r.event == SEND:
            sends.setdefault((r.node, r.peer, r.msg_id), []).append(r)
    for r in trace.records:
        if r.event != RECV:
            continue
        candidates = sends[(r.peer, r.node, r.msg_id)]
        distance = math.dist(
            scn.nodes[r.peer].position, scn.nodes[r.node].position
        )
        expected = {s.time + hop_delay(s.size * 8, distance, scn.radio) for s in candidates}
        assert any(abs(r.time - t) < 1e-12 for t in expected)
        assert min(s.time for s in candidates) <= r.time


def test_run_each_copy_sent_at_most_once():
    trace = run(fig5_scenario())
    sends = [(r.node, r.peer, r.msg_id) for r in trace.records if r.event == SEND]
    assert len(sends) == len(set(sends))


def test_run_transmitter_serializes():
    # two flows from the same source ticking at the same instant must not
    # overlap on the transmitter
    text = (
        "node 0 1 0 0 300\n"
        "node 1 1 200 0 300\n"
        "node 2 1 0 200 300\n"
        "policy 0 permit 1\n"
        "cbr 0 1 512 0.1 0.0 0.2 policied\n"
        "cbr 0 2 512 0.1 0.0 0.2 policied\n"
    )
    scn = parse_scenario(text)
    trace = run(scn)
    by_node = {}
    for r in trace.records:
        if r.event == SEND:
            by_node.setdefault(r.node, []).append(r)
    assert by_node, "expected transmissions"
    for records in by_node.values():
        records.sort(key=lambda r: r.time)
        for prev, cur in zip(records, records[1:]):
            assert cur.time >= prev.time + prev.size * 8 / scn.radio.bandwidth - 1e-12


def test_run_end_time_cuts_off():
    scn = parse_scenario(SCENARIO3NODE.replace("end 1.0", "end 0.0001"))
    trace = run(scn)
    assert [r.event for r in trace.records] == [SEND]


def test_run_same_scenario_twice_from_one_object():
    # runs must not leak state into the scenario between invocations
    scn = fig5_scenario()
    first = run(scn)
    second = run(scn)
    assert len(first.records) == len(second.records)


def test_run_policied_delay_at_least_plain():
    base = (
        "node 0 1 0 0 300\n"
        "node 1 1 200 0 300\n"
        "policy 0 permit 1\n"
        "cbr 0 1 256 0.1 0.0 0.5 {kind}\n"
    )
    policied = delay_report(run(parse_scenario(base.format(kind="policied"))))
    plain = delay_report(run(parse_scenario(base.format(kind="plain"))))
    assert policied.aggregate.mean >= plain.aggregate.mean


def test_run_rejects_invalid_scenario():
    scn = Scenario(nodes={0: NodeSpec(0, 1, 0.0, 0.0, 100.0)})
    scn.originations.append(Origination(node=9, time=0.0, payload_size=1))
    with pytest.raises(InvalidScenario):
        run(scn)
