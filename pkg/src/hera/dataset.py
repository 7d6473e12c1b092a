"""Dataset generation from flow records.

`ra` mode emits one CSV row per record; `racluster` merges all records
sharing a canonical key into one row first. Rows follow the selected
feature columns in catalog order; a stats text file summarizes the same
record set the rows were built from.
"""

from __future__ import annotations

import csv
from collections import Counter, defaultdict, deque
from dataclasses import dataclass, field

from .features import RowContext, compute_row, service_of
from .flows import FlowRecord

MODES = ("ra", "racluster")

DEFAULT_COUNT_WINDOW = 100


def _inject_gap(stats, gap: int) -> None:
    stats.iat_sum_us += gap
    stats.iat_sumsq += gap * gap
    stats.iat_min_us = gap if stats.iat_min_us is None else min(stats.iat_min_us, gap)
    stats.iat_max_us = gap if stats.iat_max_us is None else max(stats.iat_max_us, gap)


def cluster(records: list[FlowRecord]) -> list[FlowRecord]:
    """Merge records per canonical key, racluster style.

    Counters and sums add up, stime/ltime span the constituents, flag
    sets union, and categorical fields follow the constituent with the
    latest ltime (ties broken by stream position). First-seen fields
    (TTL, TOS, window, base sequence) come from the earliest constituent
    that observed them. Gaps between consecutive constituents were real
    inter-arrival gaps that slicing happened to cut, so they are put back
    into the merged IAT statistics; a clustered flow therefore reports
    the same inter-packet timing as an unsliced aggregation would.
    """
    groups: dict = defaultdict(list)
    for rec in records:
        groups[rec.key].append(rec)
    merged_records = []
    for key, group in groups.items():
        by_stime = sorted(group, key=lambda r: (r.stime_us, r.seq or 0))
        latest = max(group, key=lambda r: (r.ltime_us, r.seq or 0))
        merged = FlowRecord(
            key=key,
            initiator=latest.initiator,
            stime_us=by_stime[0].stime_us,
            ltime_us=latest.ltime_us,
            slice_index=latest.slice_index,
            is_management=latest.is_management,
            tcp_state=latest.tcp_state,
            idle_us=latest.idle_us,
            seq=latest.seq,
            trans=0,
        )
        flows_total = 0
        prev = None
        for rec in by_stime:
            if prev is not None and not rec.is_management:
                _inject_gap(merged, rec.stime_us - prev.ltime_us)
                for merged_ep, rec_ep in ((merged.a, rec.a), (merged.b, rec.b)):
                    if merged_ep.last_ts_us is not None and rec_ep.first_ts_us is not None:
                        _inject_gap(merged_ep, rec_ep.first_ts_us - merged_ep.last_ts_us)
            merged.stime_us = min(merged.stime_us, rec.stime_us)
            merged.ltime_us = max(merged.ltime_us, rec.ltime_us)
            merged.a.merge(rec.a)
            merged.b.merge(rec.b)
            merged.flgs |= rec.flgs
            merged.runtime_us += rec.runtime_us
            merged.frag_count += rec.frag_count
            merged.trans += rec.trans
            merged.iat_sum_us += rec.iat_sum_us
            merged.iat_sumsq += rec.iat_sumsq
            if rec.iat_min_us is not None:
                merged.iat_min_us = (
                    rec.iat_min_us if merged.iat_min_us is None
                    else min(merged.iat_min_us, rec.iat_min_us)
                )
            if rec.iat_max_us is not None:
                merged.iat_max_us = (
                    rec.iat_max_us if merged.iat_max_us is None
                    else max(merged.iat_max_us, rec.iat_max_us)
                )
            if merged.synack_us is None:
                merged.synack_us = rec.synack_us
            if merged.ackdat_us is None:
                merged.ackdat_us = rec.ackdat_us
            if merged.vlan_id is None:
                merged.vlan_id = rec.vlan_id
            if merged.ip_version is None:
                merged.ip_version = rec.ip_version
            if rec.flows is not None:
                flows_total += rec.flows
            prev = rec
        if merged.is_management:
            merged.flows = flows_total
        merged_records.append(merged)
    merged_records.sort(key=FlowRecord.sort_key)
    return merged_records


def compute_connection_counts(records, window: int = DEFAULT_COUNT_WINDOW):
    """Windowed connection counts over the last `window` flows by ltime.

    For each non-management record, counts how many flows in the window
    (including the record itself) share its service together with its
    source address (Ssaddr) or destination address (Sdaddr). Returns a
    list of (ssaddr, sdaddr) aligned with `records`; management entries
    get (None, None) and do not occupy window slots.
    """
    if window < 1:
        raise ValueError("count window must be at least 1")
    results = [(None, None)] * len(records)
    order = sorted(
        (i for i, rec in enumerate(records) if not rec.is_management),
        key=lambda i: (records[i].ltime_us, i),
    )
    recent = deque()
    by_src = Counter()
    by_dst = Counter()
    for i in order:
        rec = records[i]
        service = service_of(rec.key.proto, rec.sport, rec.dport)
        src_key = (service, rec.saddr)
        dst_key = (service, rec.daddr)
        recent.append((src_key, dst_key))
        by_src[src_key] += 1
        by_dst[dst_key] += 1
        if len(recent) > window:
            old_src, old_dst = recent.popleft()
            by_src[old_src] -= 1
            by_dst[old_dst] -= 1
        results[i] = (by_src[src_key], by_dst[dst_key])
    return results


@dataclass
class StatsReport:
    """Totals over the record set a dataset was built from.

    Flow totals cover ordinary records; management records are counted
    on their own line and never inflate packet or byte totals."""

    flows: int = 0
    packets: int = 0
    bytes: int = 0
    management_records: int = 0
    per_proto: dict[str, list[int]] = field(default_factory=dict)  # flows/pkts/bytes

    def add(self, rec: FlowRecord) -> None:
        if rec.is_management:
            self.management_records += 1
            return
        self.flows += 1
        self.packets += rec.pkts
        self.bytes += rec.bytes
        row = self.per_proto.setdefault(rec.key.proto, [0, 0, 0])
        row[0] += 1
        row[1] += rec.pkts
        row[2] += rec.bytes


def compute_stats(records) -> StatsReport:
    stats = StatsReport()
    for rec in records:
        stats.add(rec)
    return stats


def format_stats(stats: StatsReport) -> str:
    lines = [
        f"total_flows: {stats.flows}",
        f"total_packets: {stats.packets}",
        f"total_bytes: {stats.bytes}",
        f"management_records: {stats.management_records}",
    ]
    for proto in sorted(stats.per_proto):
        flows, packets, nbytes = stats.per_proto[proto]
        lines.append(f"{proto}_flows: {flows}")
        lines.append(f"{proto}_packets: {packets}")
        lines.append(f"{proto}_bytes: {nbytes}")
    return "\n".join(lines) + "\n"


def write_stats(path, stats: StatsReport) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fp:
        fp.write(format_stats(stats))


def build_dataset(
    records: list[FlowRecord],
    feature_names: list[str],
    mode: str = "ra",
    keep_management: bool = False,
    count_window: int = DEFAULT_COUNT_WINDOW,
) -> tuple[list[str], list[list[str]], StatsReport]:
    """Turn flow records into (header, rows, stats).

    Rows keep record-stream order in ra mode and (stime, key) order
    after clustering; rank densely numbers the emitted rows.
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    selected = list(records)
    if not keep_management:
        selected = [rec for rec in selected if not rec.is_management]
    if mode == "racluster":
        selected = cluster(selected)
    if "Ssaddr" in feature_names or "Sdaddr" in feature_names:
        counts = compute_connection_counts(selected, count_window)
    else:
        counts = [(None, None)] * len(selected)
    rows = []
    for rank, rec in enumerate(selected):
        if rec.is_management:
            service = ""
        else:
            service = service_of(rec.key.proto, rec.sport, rec.dport)
        ctx = RowContext(
            rank=rank, service=service,
            ssaddr=counts[rank][0], sdaddr=counts[rank][1],
        )
        rows.append(compute_row(rec, feature_names, ctx))
    return list(feature_names), rows, compute_stats(selected)


def write_csv(path, header: list[str], rows) -> None:
    """RFC 4180 CSV, UTF-8, LF line endings, header row first."""
    with open(path, "w", encoding="utf-8", newline="") as fp:
        writer = csv.writer(fp, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    with open(path, "r", encoding="utf-8", newline="") as fp:
        reader = csv.reader(fp)
        try:
            header = next(reader)
        except StopIteration:
            return [], []
        return header, list(reader)
