"""Trace recording, delay statistics, the confidentiality auditor and an
independent reachability oracle.

The oracle computes delivery sets by plain breadth-first search over the
geometry, touching none of the protocol machinery, so it can stand as an
independent check on simulation runs.
"""

import math
import statistics
from dataclasses import dataclass, field

from .node import MsgId
from .policy import Policy

SEND = "SEND"
RECV = "RECV"
DROP_DUP = "DROP_DUP"
DROP_MALFORMED = "DROP_MALFORMED"
DELIVER = "DELIVER"

_EVENTS = (SEND, RECV, DROP_DUP, DROP_MALFORMED, DELIVER)


@dataclass(frozen=True)
class TraceRecord:
    """One line of the simulation trace."""

    time: float
    event: str
    node: int
    peer: int | None
    msg_id: MsgId
    size: int
    group: int


@dataclass(frozen=True)
class MessageMeta:
    """Per-message bookkeeping kept alongside the trace records."""

    created_at: float
    originator: int
    policy: Policy | None
    flow: int | None


@dataclass
class Trace:
    """Trace records plus the message table and node registry behind them."""

    records: list = field(default_factory=list)
    messages: dict = field(default_factory=dict)
    nodes: dict = field(default_factory=dict)


def format_record(record: TraceRecord) -> str:
    peer = "-" if record.peer is None else str(record.peer)
    return (
        f"{record.time:.9f} {record.event} {record.node} {peer} "
        f"{record.msg_id} {record.size} {record.group}"
    )


def write_trace(trace: Trace, path) -> None:
    """Write the trace file: node registration header, then one record per line."""
    with open(path, "w", encoding="utf-8") as fh:
        for nid in sorted(trace.nodes):
            spec = trace.nodes[nid]
            fh.write(
                f"# node {nid} group {spec.group} pos {spec.x:g} {spec.y:g} range {spec.range:g}\n"
            )
        for record in trace.records:
            fh.write(format_record(record) + "\n")


def parse_trace_file(path) -> Trace:
    """Read a trace file back; registration comments are skipped."""
    trace = Trace()
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 7 or parts[1] not in _EVENTS:
                raise ValueError(f"{path}: line {lineno}: not a trace record")
            orig, _, seq = parts[4].partition(":")
            trace.records.append(
                TraceRecord(
                    time=float(parts[0]),
                    event=parts[1],
                    node=int(parts[2]),
                    peer=None if parts[3] == "-" else int(parts[3]),
                    msg_id=MsgId(int(orig), int(seq)),
                    size=int(parts[5]),
                    group=int(parts[6]),
                )
            )
    return trace


@dataclass(frozen=True)
class Violation:
    time: float
    node: int
    msg_id: MsgId
    reason: str


@dataclass
class AuditResult:
    violations: list

    @property
    def passed(self) -> bool:
        return not self.violations


def origination_table(scenario) -> dict:
    """Reconstruct the message table a run of this scenario would produce.

    Message sequence numbers follow the deterministic origination order
    (scripted originations first, then flow ticks, sorted by time with
    scheduling order breaking ties), so the table can be rebuilt from the
    scenario alone, without running anything.
    """
    from .engine import default_policy_for, tick_times

    entries = []
    for o in scenario.originations:
        entries.append((o.time, len(entries), o.node, True, None))
    for idx, flow in enumerate(scenario.flows):
        for t in tick_times(flow):
            entries.append((t, len(entries), flow.src, flow.policied, idx))
    entries.sort(key=lambda e: (e[0], e[1]))
    table = {}
    next_seq = {}
    for time, _, nid, policied, flow in entries:
        if scenario.end_time is not None and time > scenario.end_time:
            continue
        msg_id = MsgId(nid, next_seq.get(nid, 0))
        next_seq[nid] = msg_id.seq + 1
        policy = default_policy_for(scenario, nid) if policied else None
        table[msg_id] = MessageMeta(created_at=time, originator=nid, policy=policy, flow=flow)
    return table


def audit_confidentiality(trace: Trace, scenario) -> AuditResult:
    """Check every delivery against the originating policy.

    Passes when no payload was delivered outside the permitted groups and no
    transmission targeted a message's originator. Baseline messages (no
    policy attached) are exempt by construction. Works on live traces and on
    traces parsed back from files; for the latter the message table is
    rebuilt from the scenario.
    """
    table = trace.messages or origination_table(scenario)
    violations = []
    for r in trace.records:
        if r.event not in (DELIVER, SEND):
            continue
        meta = table.get(r.msg_id)
        if meta is None:
            violations.append(
                Violation(r.time, r.node, r.msg_id, "message does not belong to this scenario")
            )
            continue
        if meta.policy is None:
            continue
        if r.event == DELIVER and r.group not in meta.policy.permitted:
            violations.append(
                Violation(r.time, r.node, r.msg_id, f"delivered to group {r.group} not permitted")
            )
        elif r.event == SEND and r.peer == meta.originator:
            violations.append(
                Violation(r.time, r.node, r.msg_id, f"transmission targets originator {r.peer}")
            )
    return AuditResult(violations)


def oracle_delivery_set(scenario, originator: int, permitted) -> set:
    """Expected delivery set by breadth-first search over the geometry.

    An edge i -> j exists when j is within i's range, j's group is permitted
    and j is not the originator. Returns every node reached from the
    originator. Independent of the protocol code on purpose.
    """
    nodes = scenario.nodes
    reached = set()
    frontier = [originator]
    while frontier:
        i = frontier.pop()
        src = nodes[i]
        for j in nodes:
            if j == originator or j == i or j in reached:
                continue
            other = nodes[j]
            if other.group in permitted and math.dist(src.position, other.position) <= src.range:
                reached.add(j)
                frontier.append(j)
    return reached


@dataclass(frozen=True)
class FlowStats:
    originated: int
    delivered: int
    mean: float | None
    min: float | None
    max: float | None


@dataclass
class DelayReport:
    """End-to-end delay summary, per flow and overall."""

    aggregate: FlowStats
    per_flow: dict


def _stats(originated: int, delays: list) -> FlowStats:
    if not delays:
        return FlowStats(originated=originated, delivered=0, mean=None, min=None, max=None)
    return FlowStats(
        originated=originated,
        delivered=len(delays),
        mean=statistics.fmean(delays),
        min=min(delays),
        max=max(delays),
    )


def delay_report(trace: Trace) -> DelayReport:
    """Per-copy end-to-end delays: delivery time minus the message's creation
    time. Every delivered copy of a message contributes one sample."""
    originated = {}
    for meta in trace.messages.values():
        originated[meta.flow] = originated.get(meta.flow, 0) + 1
    delays = {key: [] for key in originated}
    all_delays = []
    for r in trace.records:
        if r.event != DELIVER:
            continue
        meta = trace.messages.get(r.msg_id)
        if meta is None:
            continue
        d = r.time - meta.created_at
        delays[meta.flow].append(d)
        all_delays.append(d)
    flow_order = sorted(originated, key=lambda k: (k is None, k if k is not None else 0))
    per_flow = {key: _stats(originated[key], delays[key]) for key in flow_order}
    return DelayReport(
        aggregate=_stats(sum(originated.values()), all_delays),
        per_flow=per_flow,
    )
