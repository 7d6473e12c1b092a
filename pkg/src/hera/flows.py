"""Bidirectional flow aggregation.

Packets are grouped under a canonical five-tuple key; the sender of the
first packet of a flow episode becomes the source and never swaps, no
matter how delayed the first response is. Records are cut by a slicing
interval anchored at the flow's first packet, by an idle timeout, and by
TCP lifecycle: any RST closes a flow, a FIN handshake closes it only once
both directions have sent a FIN and the second FIN has been acknowledged.
A lone FIN never closes a flow.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .pcap import DecodedPacket

STATE_REQ = "REQ"
STATE_CON = "CON"
STATE_FIN = "FIN"
STATE_RST = "RST"
STATE_INT = "INT"  # recognized on read; current rules never emit it

FLAG_ORDER = "SAFRPU"

MANAGEMENT_PROTO = "man"


def render_flags(flags) -> str:
    """Render a set of single-letter TCP flags in fixed SAFRPU order."""
    return "".join(letter for letter in FLAG_ORDER if letter in flags)


@dataclass(frozen=True)
class FlowKey:
    """Canonical bidirectional key: the lexicographically smaller
    (address, port) endpoint is always endpoint a."""

    addr_a: str
    port_a: int
    addr_b: str
    port_b: int
    proto: str

    def sort_tuple(self):
        return (self.addr_a, self.port_a, self.addr_b, self.port_b, self.proto)


MANAGEMENT_KEY = FlowKey("0.0.0.0", 0, "0.0.0.0", 0, MANAGEMENT_PROTO)


def flow_key(packet: DecodedPacket) -> tuple[FlowKey, str]:
    """Return the canonical key and which endpoint ('a' or 'b') sent this packet."""
    src = (packet.src_addr, packet.src_port)
    dst = (packet.dst_addr, packet.dst_port)
    if src <= dst:
        return FlowKey(src[0], src[1], dst[0], dst[1], packet.proto), "a"
    return FlowKey(dst[0], dst[1], src[0], src[1], packet.proto), "b"


@dataclass
class ExportConfig:
    """Knobs for the packet-to-flow stage. Times are integer microseconds."""

    interval_us: int = 60_000_000
    idle_timeout_us: int | None = None  # defaults to the interval
    emit_management: bool = True
    reorder_slack_us: int = 1_000_000

    def __post_init__(self):
        if self.interval_us <= 0:
            raise ValueError("interval must be a positive number of seconds")
        if self.idle_timeout_us is None:
            self.idle_timeout_us = self.interval_us
        if self.idle_timeout_us <= 0:
            raise ValueError("idle timeout must be a positive number of seconds")
        if self.reorder_slack_us < 0:
            raise ValueError("reorder slack must not be negative")


@dataclass
class EndpointStats:
    """Per-endpoint accumulators for one flow record.

    Timestamps follow packet arrival order, so inter-arrival gaps can be
    negative when a capture is slightly reordered within the slack.
    """

    pkts: int = 0
    bytes: int = 0  # sum of on-wire IP lengths
    appbytes: int = 0  # sum of transport payload lengths
    datapkts: int = 0  # packets carrying at least one payload byte
    sz_min: int | None = None
    sz_max: int | None = None
    sz_sumsq: int = 0
    app_min: int | None = None
    app_max: int | None = None
    app_sumsq: int = 0
    ttl_first: int | None = None
    ttl_min: int | None = None
    ttl_max: int | None = None
    tos_first: int | None = None
    win_first: int | None = None
    tcpb_first: int | None = None
    fin_cnt: int = 0
    syn_cnt: int = 0
    rst_cnt: int = 0
    psh_cnt: int = 0
    ack_cnt: int = 0
    urg_cnt: int = 0
    first_ts_us: int | None = None
    last_ts_us: int | None = None
    iat_sum_us: int = 0
    iat_sumsq: int = 0
    iat_min_us: int | None = None
    iat_max_us: int | None = None

    def update(self, packet: DecodedPacket) -> None:
        ts = packet.ts_us
        size = packet.ip_bytes
        payload = packet.payload_bytes
        self.pkts += 1
        self.bytes += size
        self.appbytes += payload
        if payload > 0:
            self.datapkts += 1
        self.sz_min = size if self.sz_min is None else min(self.sz_min, size)
        self.sz_max = size if self.sz_max is None else max(self.sz_max, size)
        self.sz_sumsq += size * size
        self.app_min = payload if self.app_min is None else min(self.app_min, payload)
        self.app_max = payload if self.app_max is None else max(self.app_max, payload)
        self.app_sumsq += payload * payload
        if self.ttl_first is None:
            self.ttl_first = packet.ttl
        self.ttl_min = packet.ttl if self.ttl_min is None else min(self.ttl_min, packet.ttl)
        self.ttl_max = packet.ttl if self.ttl_max is None else max(self.ttl_max, packet.ttl)
        if self.tos_first is None:
            self.tos_first = packet.tos
        if self.win_first is None and packet.tcp_window is not None:
            self.win_first = packet.tcp_window
        if self.tcpb_first is None and packet.tcp_seq is not None:
            self.tcpb_first = packet.tcp_seq
        if packet.tcp_flags:
            flags = packet.tcp_flags
            self.fin_cnt += "F" in flags
            self.syn_cnt += "S" in flags
            self.rst_cnt += "R" in flags
            self.psh_cnt += "P" in flags
            self.ack_cnt += "A" in flags
            self.urg_cnt += "U" in flags
        if self.last_ts_us is not None:
            gap = ts - self.last_ts_us
            self.iat_sum_us += gap
            self.iat_sumsq += gap * gap
            self.iat_min_us = gap if self.iat_min_us is None else min(self.iat_min_us, gap)
            self.iat_max_us = gap if self.iat_max_us is None else max(self.iat_max_us, gap)
        if self.first_ts_us is None:
            self.first_ts_us = ts
        self.last_ts_us = ts

    def merge(self, other: "EndpointStats") -> None:
        """Fold a later record's endpoint stats into this one (clustering)."""
        self.pkts += other.pkts
        self.bytes += other.bytes
        self.appbytes += other.appbytes
        self.datapkts += other.datapkts
        self.sz_sumsq += other.sz_sumsq
        self.app_sumsq += other.app_sumsq
        self.sz_min = _merge_min(self.sz_min, other.sz_min)
        self.sz_max = _merge_max(self.sz_max, other.sz_max)
        self.app_min = _merge_min(self.app_min, other.app_min)
        self.app_max = _merge_max(self.app_max, other.app_max)
        self.ttl_min = _merge_min(self.ttl_min, other.ttl_min)
        self.ttl_max = _merge_max(self.ttl_max, other.ttl_max)
        if self.ttl_first is None:
            self.ttl_first = other.ttl_first
        if self.tos_first is None:
            self.tos_first = other.tos_first
        if self.win_first is None:
            self.win_first = other.win_first
        if self.tcpb_first is None:
            self.tcpb_first = other.tcpb_first
        self.fin_cnt += other.fin_cnt
        self.syn_cnt += other.syn_cnt
        self.rst_cnt += other.rst_cnt
        self.psh_cnt += other.psh_cnt
        self.ack_cnt += other.ack_cnt
        self.urg_cnt += other.urg_cnt
        # Within-record gaps only; the record boundary gap is the
        # caller's to add (cluster() knows the constituent ordering).
        self.iat_sum_us += other.iat_sum_us
        self.iat_sumsq += other.iat_sumsq
        self.iat_min_us = _merge_min(self.iat_min_us, other.iat_min_us)
        self.iat_max_us = _merge_max(self.iat_max_us, other.iat_max_us)
        if other.first_ts_us is not None:
            self.first_ts_us = _merge_min(self.first_ts_us, other.first_ts_us)
            self.last_ts_us = _merge_max(self.last_ts_us, other.last_ts_us)

    @property
    def iat_count(self) -> int:
        return max(self.pkts - 1, 0)


def _merge_min(x, y):
    if x is None:
        return y
    if y is None:
        return x
    return min(x, y)


def _merge_max(x, y):
    if x is None:
        return y
    if y is None:
        return x
    return max(x, y)


@dataclass
class FlowRecord:
    """One emitted flow record: a slice of a flow episode, or a
    management summary when is_management is set."""

    key: FlowKey
    initiator: str  # 'a' or 'b': which endpoint is the flow source
    stime_us: int
    ltime_us: int
    slice_index: int = 0
    is_management: bool = False
    a: EndpointStats = field(default_factory=EndpointStats)
    b: EndpointStats = field(default_factory=EndpointStats)
    flgs: set[str] = field(default_factory=set)
    tcp_state: str | None = None
    synack_us: int | None = None
    ackdat_us: int | None = None
    iat_sum_us: int = 0
    iat_sumsq: int = 0
    iat_min_us: int | None = None
    iat_max_us: int | None = None
    vlan_id: int | None = None
    ip_version: int | None = None
    frag_count: int = 0
    runtime_us: int = 0
    idle_us: int = 0
    flows: int | None = None  # management records: episodes begun in window
    seq: int | None = None  # position in the flushed/parsed record stream
    trans: int = 1  # constituents merged into this record
    extra: dict[str, str] = field(default_factory=dict)  # unknown fields kept on read

    # -- orientation helpers ------------------------------------------

    @property
    def src(self) -> EndpointStats:
        return self.a if self.initiator == "a" else self.b

    @property
    def dst(self) -> EndpointStats:
        return self.b if self.initiator == "a" else self.a

    @property
    def saddr(self) -> str:
        return self.key.addr_a if self.initiator == "a" else self.key.addr_b

    @property
    def sport(self) -> int:
        return self.key.port_a if self.initiator == "a" else self.key.port_b

    @property
    def daddr(self) -> str:
        return self.key.addr_b if self.initiator == "a" else self.key.addr_a

    @property
    def dport(self) -> int:
        return self.key.port_b if self.initiator == "a" else self.key.port_a

    @property
    def pkts(self) -> int:
        return self.a.pkts + self.b.pkts

    @property
    def bytes(self) -> int:
        return self.a.bytes + self.b.bytes

    @property
    def spkts(self) -> int:
        return self.src.pkts

    @property
    def dpkts(self) -> int:
        return self.dst.pkts

    @property
    def sbytes(self) -> int:
        return self.src.bytes

    @property
    def dbytes(self) -> int:
        return self.dst.bytes

    @property
    def dur_us(self) -> int:
        return self.ltime_us - self.stime_us

    def sort_key(self):
        return (self.stime_us,) + self.key.sort_tuple() + (
            self.slice_index, self.is_management)

    def observe_overall_gap(self, gap_us: int) -> None:
        self.iat_sum_us += gap_us
        self.iat_sumsq += gap_us * gap_us
        self.iat_min_us = gap_us if self.iat_min_us is None else min(self.iat_min_us, gap_us)
        self.iat_max_us = gap_us if self.iat_max_us is None else max(self.iat_max_us, gap_us)


def make_management_record(
    window_start_us: int, window_end_us: int,
    packets: int, byte_count: int, flows: int,
) -> FlowRecord:
    """Build the per-window summary record with a zeroed key."""
    rec = FlowRecord(
        key=MANAGEMENT_KEY, initiator="a",
        stime_us=window_start_us, ltime_us=window_end_us,
        is_management=True, flows=flows,
    )
    rec.a.pkts = packets
    rec.a.bytes = byte_count
    rec.runtime_us = rec.dur_us
    return rec


@dataclass
class AssignOutcome:
    """What one packet did to the flow table."""

    kind: str  # new_flow | updated | sliced | tcp_closed | skipped
    record: FlowRecord | None = None  # the record now live for the key
    closed: FlowRecord | None = None  # a record this packet retired


class _LiveFlow:
    """Mutable per-episode state while a flow is open."""

    __slots__ = (
        "rec", "origin_us", "initiator", "state", "last_activity_us",
        "fin_a", "fin_b", "second_fin_end", "syn_ts_us", "synack_ts_us",
        "ackdat_done", "last_arrival_us",
    )

    def __init__(self, rec: FlowRecord, origin_us: int, initiator: str, state):
        self.rec = rec
        self.origin_us = origin_us
        self.initiator = initiator
        self.state = state
        self.last_activity_us = origin_us
        self.fin_a = False
        self.fin_b = False
        self.second_fin_end = None
        self.syn_ts_us = None
        self.synack_ts_us = None
        self.ackdat_done = False
        self.last_arrival_us = None  # within the current slice


class FlowTable:
    """Streaming aggregator from decoded packets to flow records."""

    def __init__(self, config: ExportConfig):
        self.config = config
        self._live: dict[FlowKey, _LiveFlow] = {}
        self._closed: list[FlowRecord] = []
        self.accepted_packets = 0
        self.accepted_bytes = 0
        self.flows_started = 0
        self.skipped_non_monotonic = 0
        self._prev_ts_us: int | None = None  # previous accepted packet
        self._first_ts_us: int | None = None
        self._last_ts_us: int | None = None  # max accepted timestamp
        self._windows: dict[int, list[int]] = {}  # idx -> [pkts, bytes, flows]
        self._flushed = False

    @property
    def first_ts_us(self) -> int | None:
        return self._first_ts_us

    @property
    def last_ts_us(self) -> int | None:
        return self._last_ts_us

    # -- packet intake -------------------------------------------------

    def assign(self, packet: DecodedPacket) -> AssignOutcome:
        ts = packet.ts_us
        if (
            self._prev_ts_us is not None
            and ts < self._prev_ts_us - self.config.reorder_slack_us
        ):
            self.skipped_non_monotonic += 1
            return AssignOutcome("skipped")
        self._prev_ts_us = ts
        self.accepted_packets += 1
        self.accepted_bytes += packet.ip_bytes
        if self._first_ts_us is None:
            self._first_ts_us = ts
        self._last_ts_us = ts if self._last_ts_us is None else max(self._last_ts_us, ts)
        window = self._window_counters(ts)
        window[0] += 1
        window[1] += packet.ip_bytes

        key, sender = flow_key(packet)
        live = self._live.get(key)
        closed = None
        if live is None:
            outcome_kind = "new_flow"
            live = self._open_episode(key, sender, packet, window)
        elif ts - live.last_activity_us > self.config.idle_timeout_us:
            closed = self._retire(live, idle_us=ts - live.rec.ltime_us)
            outcome_kind = "new_flow"
            live = self._open_episode(key, sender, packet, window)
        elif ts - live.origin_us >= (live.rec.slice_index + 1) * self.config.interval_us:
            closed = self._finalize_slice(live, trigger_ts_us=ts)
            live.rec = FlowRecord(
                key=key, initiator=live.initiator,
                stime_us=ts, ltime_us=ts,
                slice_index=(ts - live.origin_us) // self.config.interval_us,
                tcp_state=live.state,
            )
            live.last_arrival_us = None
            outcome_kind = "sliced"
        else:
            outcome_kind = "updated"

        self._count_packet(live, sender, packet)
        if packet.proto == "tcp":
            closed_by_tcp = self._tcp_lifecycle(live, sender, packet)
            if closed_by_tcp is not None:
                return AssignOutcome("tcp_closed", record=None, closed=closed_by_tcp)
        return AssignOutcome(outcome_kind, record=live.rec, closed=closed)

    def _window_counters(self, ts_us: int) -> list[int]:
        anchor = self._first_ts_us
        idx = max((ts_us - anchor) // self.config.interval_us, 0)
        counters = self._windows.get(idx)
        if counters is None:
            counters = self._windows[idx] = [0, 0, 0]
        return counters

    def _open_episode(self, key, sender, packet, window) -> _LiveFlow:
        ts = packet.ts_us
        state = None
        if packet.proto == "tcp":
            state = STATE_REQ if packet.tcp_flags and "S" in packet.tcp_flags else STATE_CON
        rec = FlowRecord(
            key=key, initiator=sender, stime_us=ts, ltime_us=ts,
            tcp_state=state, ip_version=packet.ip_version,
        )
        live = _LiveFlow(rec, ts, sender, state)
        self._live[key] = live
        self.flows_started += 1
        window[2] += 1
        return live

    def _count_packet(self, live: _LiveFlow, sender: str, packet: DecodedPacket) -> None:
        ts = packet.ts_us
        rec = live.rec
        rec.stime_us = min(rec.stime_us, ts)
        rec.ltime_us = max(rec.ltime_us, ts)
        live.last_activity_us = max(live.last_activity_us, ts)
        (rec.a if sender == "a" else rec.b).update(packet)
        if live.last_arrival_us is not None:
            rec.observe_overall_gap(ts - live.last_arrival_us)
        live.last_arrival_us = ts
        if rec.ip_version is None:
            rec.ip_version = packet.ip_version
        if rec.vlan_id is None and packet.vlan_id is not None:
            rec.vlan_id = packet.vlan_id
        if packet.is_fragment:
            rec.frag_count += 1
        if packet.tcp_flags:
            rec.flgs |= packet.tcp_flags
            self._track_handshake(live, packet)
        if (
            packet.proto == "tcp"
            and live.state == STATE_REQ
            and sender != live.initiator
        ):
            live.state = STATE_CON
        rec.tcp_state = live.state

    def _track_handshake(self, live: _LiveFlow, packet: DecodedPacket) -> None:
        ts = packet.ts_us
        flags = packet.tcp_flags
        if "S" in flags and "A" not in flags:
            if live.syn_ts_us is None:
                live.syn_ts_us = ts
        elif "S" in flags:  # SYN+ACK
            if live.synack_ts_us is None:
                live.synack_ts_us = ts
                if live.syn_ts_us is not None:
                    live.rec.synack_us = ts - live.syn_ts_us
        elif "A" in flags:
            if live.synack_ts_us is not None and not live.ackdat_done:
                live.ackdat_done = True
                live.rec.ackdat_us = ts - live.synack_ts_us

    def _tcp_lifecycle(self, live: _LiveFlow, sender: str, packet) -> FlowRecord | None:
        flags = packet.tcp_flags or frozenset()
        if "R" in flags:
            live.state = STATE_RST
            return self._retire(live, idle_us=0)
        if "F" in flags:
            if sender == "a":
                live.fin_a = True
            else:
                live.fin_b = True
            if live.fin_a and live.fin_b and live.second_fin_end is None:
                live.second_fin_end = sender
        if (
            live.second_fin_end is not None
            and sender != live.second_fin_end
            and "A" in flags
        ):
            live.state = STATE_FIN
            return self._retire(live, idle_us=0)
        return None

    def _finalize_slice(self, live: _LiveFlow, trigger_ts_us: int) -> FlowRecord:
        rec = live.rec
        rec.tcp_state = live.state
        rec.runtime_us = rec.dur_us
        rec.idle_us = max(trigger_ts_us - rec.ltime_us, 0)
        self._closed.append(rec)
        return rec

    def _retire(self, live: _LiveFlow, idle_us: int) -> FlowRecord:
        rec = live.rec
        rec.tcp_state = live.state
        rec.runtime_us = rec.dur_us
        rec.idle_us = max(idle_us, 0)
        self._closed.append(rec)
        del self._live[live.rec.key]
        return rec

    # -- end of capture --------------------------------------------------

    def flush(self) -> list[FlowRecord]:
        """Close everything still live, add management records, and return
        the full record list ordered by (stime, canonical key)."""
        if self._flushed:
            raise RuntimeError("flow table already flushed")
        self._flushed = True
        last = self._last_ts_us
        for live in list(self._live.values()):
            self._retire(live, idle_us=last - live.rec.ltime_us)
        records = self._closed
        if self.config.emit_management and self._first_ts_us is not None:
            records.extend(self._management_records())
        records.sort(key=FlowRecord.sort_key)
        for i, rec in enumerate(records):
            rec.seq = i
        return records

    def _management_records(self) -> list[FlowRecord]:
        interval = self.config.interval_us
        t0 = self._first_ts_us
        last_index = (self._last_ts_us - t0) // interval
        out = []
        for idx in range(last_index + 1):
            start = t0 + idx * interval
            end = self._last_ts_us if idx == last_index else start + interval
            pkts, nbytes, flows = self._windows.get(idx, (0, 0, 0))
            out.append(make_management_record(start, end, pkts, nbytes, flows))
        return out


def collect_flows(packets, config: ExportConfig) -> list[FlowRecord]:
    """One-shot aggregation: feed packets through a fresh table and flush."""
    table = FlowTable(config)
    for packet in packets:
        table.assign(packet)
    return table.flush()
