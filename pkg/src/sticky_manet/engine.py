"""Deterministic discrete-event engine.

Static unit-disk topologies, per-node transmitter serialization, constant
bit rate traffic sources and a single-threaded event loop whose output is a
pure function of the scenario. Simultaneous events run in scheduling order,
so a run never depends on randomness or dict iteration quirks.
"""

import heapq
import math
from dataclasses import dataclass, field
from enum import Enum

from .errors import InvalidScenario
from .metrics import (
    DROP_DUP,
    DROP_MALFORMED,
    DELIVER,
    RECV,
    SEND,
    MessageMeta,
    Trace,
    TraceRecord,
)
from .node import DeliveryKind, NodeState, Packet, encode_packet, forward, originate, pep_in, pep_out
from .policy import Policy


@dataclass(frozen=True)
class RadioModel:
    """Link timing: serialization, propagation and fixed per-hop processing."""

    bandwidth: float = 2_000_000.0  # bits/second
    propagation_speed: float = 3e8  # meters/second
    per_hop_processing: float = 0.0  # seconds

    def __post_init__(self):
        if self.bandwidth <= 0:
            raise InvalidScenario("radio bandwidth must be positive")
        if self.propagation_speed <= 0:
            raise InvalidScenario("radio propagation speed must be positive")
        if self.per_hop_processing < 0:
            raise InvalidScenario("radio per-hop processing must be non-negative")


@dataclass(frozen=True)
class NodeSpec:
    """Static description of one node in a scenario."""

    id: int
    group: int
    x: float
    y: float
    range: float

    def __post_init__(self):
        if self.id < 0:
            raise InvalidScenario(f"node id {self.id} must be non-negative")
        if self.group < 0:
            raise InvalidScenario(f"node {self.id}: group must be non-negative")
        if self.range <= 0:
            raise InvalidScenario(f"node {self.id}: range must be positive")

    @property
    def position(self):
        return (self.x, self.y)


@dataclass(frozen=True)
class CbrFlow:
    """Constant bit rate source: fixed-size packets at a fixed interval."""

    src: int
    dst: int
    packet_size: int
    interval: float
    start: float
    stop: float
    policied: bool = True

    def __post_init__(self):
        if self.packet_size < 0:
            raise InvalidScenario("cbr packet size must be non-negative")
        if self.interval <= 0:
            raise InvalidScenario("cbr interval must be positive")
        if self.start > self.stop:
            raise InvalidScenario("cbr start must not exceed stop")
        if self.start < 0:
            raise InvalidScenario("cbr start must be non-negative")


@dataclass(frozen=True)
class Origination:
    """A single scripted message origination."""

    node: int
    time: float
    payload_size: int


@dataclass
class Scenario:
    """Everything a run needs: topology, radio, policies and traffic."""

    nodes: dict = field(default_factory=dict)
    radio: RadioModel = field(default_factory=RadioModel)
    policies: dict = field(default_factory=dict)
    originations: list = field(default_factory=list)
    flows: list = field(default_factory=list)
    end_time: float | None = None
    forward_delay: float = 0.001


class EventKind(Enum):
    ORIGINATE = "originate"
    CBR_TICK = "cbr_tick"
    TRANSMIT = "transmit"
    RECEIVE = "receive"
    FORWARD_DUE = "forward_due"


@dataclass
class Event:
    """One scheduled action; seq is the tie-break assigned at scheduling."""

    time: float
    kind: EventKind
    node: int
    seq: int = -1
    packet: Packet | None = None
    frame: bytes | None = None
    peer: int | None = None
    msg_id: tuple | None = None
    flow: int | None = None
    payload_size: int = 0


def neighbors_of(node_id: int, nodes: dict) -> list:
    """All other nodes within the sender's radio range, as (id, group) pairs
    sorted by id. The ball is closed: distance equal to range counts."""
    me = nodes[node_id]
    found = []
    for nid in sorted(nodes):
        if nid == node_id:
            continue
        other = nodes[nid]
        if math.dist(me.position, other.position) <= me.range:
            found.append((nid, other.group))
    return found


def hop_delay(packet_bits: int, distance: float, model: RadioModel) -> float:
    """Serialization plus propagation plus fixed processing for one hop."""
    return (
        packet_bits / model.bandwidth
        + distance / model.propagation_speed
        + model.per_hop_processing
    )


def tick_times(flow: CbrFlow) -> list:
    """Emission times start, start+interval, ... up to and including stop."""
    times = []
    k = 0
    while (t := flow.start + k * flow.interval) <= flow.stop:
        times.append(t)
        k += 1
    return times


def install_cbr(scenario: Scenario, flow: CbrFlow) -> None:
    """Attach a flow to a scenario, rejecting dangling node references."""
    if flow.src not in scenario.nodes:
        raise InvalidScenario(f"cbr flow references unknown source node {flow.src}")
    if flow.dst not in scenario.nodes:
        raise InvalidScenario(f"cbr flow references unknown destination node {flow.dst}")
    scenario.flows.append(flow)


def validate_scenario(scenario: Scenario) -> None:
    """Reject scenarios that cannot run; the exception message says why."""
    for nid, spec in scenario.nodes.items():
        if nid != spec.id:
            raise InvalidScenario(f"node table key {nid} does not match spec id {spec.id}")
    for nid in scenario.policies:
        if nid not in scenario.nodes:
            raise InvalidScenario(f"policy references unknown node {nid}")
    for o in scenario.originations:
        if o.node not in scenario.nodes:
            raise InvalidScenario(f"origination references unknown node {o.node}")
        if o.time < 0:
            raise InvalidScenario(f"origination time {o.time} is negative")
        if o.payload_size < 0:
            raise InvalidScenario("origination payload size must be non-negative")
    for f in scenario.flows:
        if f.src not in scenario.nodes:
            raise InvalidScenario(f"cbr flow references unknown source node {f.src}")
        if f.dst not in scenario.nodes:
            raise InvalidScenario(f"cbr flow references unknown destination node {f.dst}")
    if scenario.end_time is not None and scenario.end_time < 0:
        raise InvalidScenario("end time must be non-negative")
    if scenario.forward_delay < 0:
        raise InvalidScenario("forward delay must be non-negative")


def parse_scenario(text: str) -> Scenario:
    """Parse the scenario file format: one directive per line, # comments.

    Directives:
      node <id> <group> <x> <y> <range>
      radio <bandwidth_bps> <prop_mps> <proc_s>
      policy <node_id> permit <g1>[,g2,...]
      originate <node_id> <time_s> <payload_bytes>
      cbr <src> <dst> <pkt_bytes> <interval_s> <start_s> <stop_s> <policied|plain>
      end <time_s>
    """
    scenario = Scenario()
    saw_radio = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        directive, args = tokens[0], tokens[1:]
        try:
            if directive == "node":
                if len(args) != 5:
                    raise InvalidScenario("node takes <id> <group> <x> <y> <range>")
                spec = NodeSpec(
                    id=int(args[0]),
                    group=int(args[1]),
                    x=float(args[2]),
                    y=float(args[3]),
                    range=float(args[4]),
                )
                if spec.id in scenario.nodes:
                    raise InvalidScenario(f"duplicate node id {spec.id}")
                scenario.nodes[spec.id] = spec
            elif directive == "radio":
                if len(args) != 3:
                    raise InvalidScenario("radio takes <bandwidth_bps> <prop_mps> <proc_s>")
                if saw_radio:
                    raise InvalidScenario("duplicate radio directive")
                scenario.radio = RadioModel(float(args[0]), float(args[1]), float(args[2]))
                saw_radio = True
            elif directive == "policy":
                if len(args) != 3 or args[1] != "permit":
                    raise InvalidScenario("policy takes <node_id> permit <g1>[,g2,...]")
                groups = frozenset(int(g) for g in args[2].split(",") if g != "")
                nid = int(args[0])
                if nid in scenario.policies:
                    raise InvalidScenario(f"duplicate policy for node {nid}")
                scenario.policies[nid] = groups
            elif directive == "originate":
                if len(args) != 3:
                    raise InvalidScenario("originate takes <node_id> <time_s> <payload_bytes>")
                scenario.originations.append(
                    Origination(node=int(args[0]), time=float(args[1]), payload_size=int(args[2]))
                )
            elif directive == "cbr":
                if len(args) != 7 or args[6] not in ("policied", "plain"):
                    raise InvalidScenario(
                        "cbr takes <src> <dst> <pkt_bytes> <interval_s> <start_s> <stop_s> "
                        "<policied|plain>"
                    )
                scenario.flows.append(
                    CbrFlow(
                        src=int(args[0]),
                        dst=int(args[1]),
                        packet_size=int(args[2]),
                        interval=float(args[3]),
                        start=float(args[4]),
                        stop=float(args[5]),
                        policied=args[6] == "policied",
                    )
                )
            elif directive == "end":
                if len(args) != 1:
                    raise InvalidScenario("end takes <time_s>")
                if scenario.end_time is not None:
                    raise InvalidScenario("duplicate end directive")
                scenario.end_time = float(args[0])
            else:
                raise InvalidScenario(f"unknown directive {directive!r}")
        except ValueError as exc:
            raise InvalidScenario(f"line {lineno}: {exc}") from exc
        except InvalidScenario as exc:
            raise InvalidScenario(f"line {lineno}: {exc}") from exc
    validate_scenario(scenario)
    return scenario


def load_scenario(path) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return parse_scenario(fh.read())


def default_policy_for(scenario: Scenario, node_id: int) -> Policy:
    """The policy a node attaches when it originates (empty set if unset)."""
    return Policy(
        originator=node_id,
        permitted=scenario.policies.get(node_id, frozenset()),
    )


class _Sim:
    """One run's mutable state: nodes, event heap and transmitter clocks."""

    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        self.nodes = {
            nid: NodeState(
                id=spec.id,
                group=spec.group,
                position=spec.position,
                range=spec.range,
                default_policy=default_policy_for(scenario, nid),
            )
            for nid, spec in scenario.nodes.items()
        }
        self.trace = Trace(nodes=dict(scenario.nodes))
        self.heap = []
        self.next_seq = 0
        self.tx_free = {}  # node id -> time its transmitter becomes free

    def schedule(self, event: Event) -> None:
        event.seq = self.next_seq
        self.next_seq += 1
        heapq.heappush(self.heap, (event.time, event.seq, event))

    def record(self, time, event, node, peer, msg_id, size):
        self.trace.records.append(
            TraceRecord(
                time=time,
                event=event,
                node=node,
                peer=peer,
                msg_id=msg_id,
                size=size,
                group=self.nodes[node].group,
            )
        )

    def transmit_all(self, node: NodeState, packet: Packet, now: float) -> None:
        """Run outbound enforcement and queue one unicast frame per target.

        The transmitter serializes: a frame may not start before the previous
        frame from this node has finished.
        """
        targets = pep_out(node, packet, neighbors_of(node.id, self.scenario.nodes))
        if not targets:
            return
        frame = encode_packet(packet)
        frame_time = len(frame) * 8 / self.scenario.radio.bandwidth
        start = max(now, self.tx_free.get(node.id, 0.0))
        for dest in targets:
            self.schedule(
                Event(
                    time=start,
                    kind=EventKind.TRANSMIT,
                    node=node.id,
                    peer=dest,
                    packet=packet,
                    frame=frame,
                )
            )
            start += frame_time
        self.tx_free[node.id] = start

    def handle_origination(self, event: Event) -> None:
        node = self.nodes[event.node]
        if event.flow is not None:
            flow = self.scenario.flows[event.flow]
            policy = node.default_policy if flow.policied else None
            size = flow.packet_size
        else:
            policy = node.default_policy
            size = event.payload_size
        packet = originate(node, bytes(size), policy, event.time)
        self.trace.messages[packet.msg_id] = MessageMeta(
            created_at=event.time,
            originator=node.id,
            policy=policy,
            flow=event.flow,
        )
        self.transmit_all(node, packet, event.time)

    def handle_transmit(self, event: Event) -> None:
        self.record(event.time, SEND, event.node, event.peer, event.packet.msg_id, len(event.frame))
        distance = math.dist(
            self.scenario.nodes[event.node].position,
            self.scenario.nodes[event.peer].position,
        )
        arrival = event.time + hop_delay(len(event.frame) * 8, distance, self.scenario.radio)
        self.schedule(
            Event(
                time=arrival,
                kind=EventKind.RECEIVE,
                node=event.peer,
                peer=event.node,
                packet=event.packet,
                frame=event.frame,
            )
        )

    def handle_receive(self, event: Event) -> None:
        node = self.nodes[event.node]
        msg_id = event.packet.msg_id
        self.record(event.time, RECV, event.node, event.peer, msg_id, len(event.frame))
        outcome = pep_in(node, event.frame, has_policy=event.packet.policy is not None)
        if outcome.kind is DeliveryKind.DELIVERED:
            self.record(
                event.time, DELIVER, event.node, event.peer, msg_id, len(outcome.packet.payload)
            )
            self.schedule(
                Event(
                    time=event.time + self.scenario.forward_delay,
                    kind=EventKind.FORWARD_DUE,
                    node=event.node,
                    msg_id=msg_id,
                )
            )
        elif outcome.kind is DeliveryKind.DUPLICATE:
            self.record(event.time, DROP_DUP, event.node, event.peer, msg_id, len(event.frame))
        else:
            self.record(event.time, DROP_MALFORMED, event.node, event.peer, msg_id, len(event.frame))

    def handle_forward_due(self, event: Event) -> None:
        node = self.nodes[event.node]
        packet = forward(node, event.msg_id, event.time)
        self.transmit_all(node, packet, event.time)

    def run(self) -> Trace:
        for o in self.scenario.originations:
            self.schedule(
                Event(time=o.time, kind=EventKind.ORIGINATE, node=o.node, payload_size=o.payload_size)
            )
        for idx, flow in enumerate(self.scenario.flows):
            for t in tick_times(flow):
                self.schedule(Event(time=t, kind=EventKind.CBR_TICK, node=flow.src, flow=idx))
        end = self.scenario.end_time
        while self.heap:
            _, _, event = heapq.heappop(self.heap)
            if end is not None and event.time > end:
                break
            if event.kind in (EventKind.ORIGINATE, EventKind.CBR_TICK):
                self.handle_origination(event)
            elif event.kind is EventKind.TRANSMIT:
                self.handle_transmit(event)
            elif event.kind is EventKind.RECEIVE:
                self.handle_receive(event)
            else:
                self.handle_forward_due(event)
        return self.trace


def run(scenario: Scenario, seed: int = 0) -> Trace:
    """Execute a scenario to completion (or its end time) and return the trace.

    The run is a pure function of the scenario; the seed is accepted for
    interface symmetry with the scenario-generation utilities and does not
    influence the dynamics.
    """
    validate_scenario(scenario)
    return _Sim(scenario).run()
