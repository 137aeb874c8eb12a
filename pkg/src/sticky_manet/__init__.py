"""Deterministic simulator of policy-carrying message flooding in static
wireless ad hoc networks.

Messages travel with their originator's dissemination policy; every node
enforces it before forwarding, so payloads only ever reach the permitted
groups. The package provides the policy algebra and wire codec, the
per-node enforcement logic, a discrete-event engine with constant bit rate
traffic, trace/delay/audit tooling and a command line front end.
"""

from .engine import (
    CbrFlow,
    Event,
    EventKind,
    NodeSpec,
    Origination,
    RadioModel,
    Scenario,
    default_policy_for,
    hop_delay,
    install_cbr,
    load_scenario,
    neighbors_of,
    parse_scenario,
    run,
    tick_times,
    validate_scenario,
)
from .errors import (
    CapacityExceeded,
    InvalidScenario,
    MalformedPolicy,
    StickyManetError,
    UnknownMessage,
)
from .metrics import (
    DELIVER,
    DROP_DUP,
    DROP_MALFORMED,
    RECV,
    SEND,
    AuditResult,
    DelayReport,
    FlowStats,
    MessageMeta,
    Trace,
    TraceRecord,
    Violation,
    audit_confidentiality,
    delay_report,
    format_record,
    oracle_delivery_set,
    origination_table,
    parse_trace_file,
    write_trace,
)
from .node import (
    DeliveryKind,
    DeliveryOutcome,
    MsgId,
    NodeState,
    Packet,
    decode_packet,
    encode_packet,
    forward,
    originate,
    pdp_decide,
    pep_in,
    pep_out,
)
from .policy import (
    Decision,
    Policy,
    decode_policy,
    encode_policy,
    evaluate_policy,
    merge_policy,
)

__version__ = "0.1.0"
