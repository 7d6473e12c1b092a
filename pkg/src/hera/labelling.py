"""Ground-truth labelling of dataset rows.

A ground-truth CSV names attacks by five-tuple fragments and a time
window; only the Label column is mandatory, every other field is
optional and an absent field matches anything. Rows are labelled by the
first matching entry in file order, or with the benign label when
nothing matches. Matching is directional (entry source against flow
source) unless bidirectional matching is switched on.
"""

from __future__ import annotations

import csv
import ipaddress
from dataclasses import dataclass, field

from .errors import (
    EmptyLabelCell,
    MalformedField,
    MalformedTimestamp,
    MissingLabelColumn,
    MissingMatchField,
)
from .timefmt import text_to_us

DEFAULT_BENIGN_LABEL = "Benign"

# Recognized ground-truth headers, compared case-insensitively.
_GT_COLUMNS = {
    "starttime": "start",
    "lasttime": "last",
    "proto": "proto",
    "srcaddr": "src_addr",
    "sport": "sport",
    "dstaddr": "dst_addr",
    "dport": "dport",
    "label": "label",
}

MATCH_COLUMNS = ("stime", "ltime", "proto", "saddr", "daddr", "sport", "dport")


def _normalize_addr(text: str) -> str:
    try:
        return str(ipaddress.ip_address(text))
    except ValueError:
        return text


@dataclass(frozen=True)
class GroundTruthEntry:
    label: str
    row_number: int
    start_us: int | None = None
    last_us: int | None = None
    proto: str | None = None
    src_addr: str | None = None
    sport: int | None = None
    dst_addr: str | None = None
    dport: int | None = None


def parse_ground_truth(path) -> list[GroundTruthEntry]:
    with open(path, "r", encoding="utf-8", newline="") as fp:
        reader = csv.reader(fp)
        try:
            header = next(reader)
        except StopIteration:
            raise MissingLabelColumn(f"{path}: empty ground-truth file") from None
        mapping = {}
        for idx, name in enumerate(header):
            key = _GT_COLUMNS.get(name.strip().lower())
            if key is not None and key not in mapping:
                mapping[key] = idx
        if "label" not in mapping:
            raise MissingLabelColumn(f"{path}: no Label column in {header!r}")
        entries = []
        for row_number, row in enumerate(reader, start=2):
            if not row or all(cell.strip() == "" for cell in row):
                continue
            entries.append(_parse_entry(row, row_number, mapping))
    return entries


def _cell(row, mapping, key) -> str:
    idx = mapping.get(key)
    if idx is None or idx >= len(row):
        return ""
    return row[idx].strip()


def _parse_entry(row, row_number, mapping) -> GroundTruthEntry:
    label = _cell(row, mapping, "label")
    if label == "":
        raise EmptyLabelCell(row_number)
    values = {"label": label, "row_number": row_number}
    for key, attr in (("start", "start_us"), ("last", "last_us")):
        text = _cell(row, mapping, key)
        if text:
            try:
                values[attr] = text_to_us(text)
            except ValueError:
                raise MalformedTimestamp(row_number, text) from None
    for key, attr in (("sport", "sport"), ("dport", "dport")):
        text = _cell(row, mapping, key)
        if text:
            try:
                values[attr] = int(text)
            except ValueError:
                raise MalformedField(row_number, key, text) from None
    proto = _cell(row, mapping, "proto")
    if proto:
        values["proto"] = proto.lower()
    for key, attr in (("src_addr", "src_addr"), ("dst_addr", "dst_addr")):
        text = _cell(row, mapping, key)
        if text:
            values[attr] = _normalize_addr(text)
    return GroundTruthEntry(**values)


@dataclass
class LabelSummary:
    total: int = 0
    benign_label: str = DEFAULT_BENIGN_LABEL
    counts: dict[str, int] = field(default_factory=dict)

    @property
    def benign(self) -> int:
        return self.counts.get(self.benign_label, 0)

    @property
    def malicious(self) -> int:
        return self.total - self.benign


@dataclass(frozen=True)
class _RowView:
    stime_us: int
    ltime_us: int
    proto: str
    saddr: str
    sport: int
    daddr: str
    dport: int


def _row_views(header, rows) -> list[_RowView]:
    index = {}
    for col in MATCH_COLUMNS:
        try:
            index[col] = header.index(col)
        except ValueError:
            raise MissingMatchField(col) from None
    views = []
    for row in rows:
        views.append(_RowView(
            stime_us=text_to_us(row[index["stime"]]),
            ltime_us=text_to_us(row[index["ltime"]]),
            proto=row[index["proto"]].lower(),
            saddr=_normalize_addr(row[index["saddr"]]),
            sport=int(row[index["sport"]]),
            daddr=_normalize_addr(row[index["daddr"]]),
            dport=int(row[index["dport"]]),
        ))
    return views


def match_entry(view: _RowView, entry: GroundTruthEntry, bidirectional: bool) -> bool:
    """True when every field present on the entry matches the flow and
    the time windows overlap (absent bounds are open)."""
    if entry.start_us is not None and view.ltime_us < entry.start_us:
        return False
    if entry.last_us is not None and view.stime_us > entry.last_us:
        return False
    if entry.proto is not None and view.proto != entry.proto:
        return False
    forward = (
        (entry.src_addr is None or view.saddr == entry.src_addr)
        and (entry.sport is None or view.sport == entry.sport)
        and (entry.dst_addr is None or view.daddr == entry.dst_addr)
        and (entry.dport is None or view.dport == entry.dport)
    )
    if forward:
        return True
    if not bidirectional:
        return False
    return (
        (entry.src_addr is None or view.daddr == entry.src_addr)
        and (entry.sport is None or view.dport == entry.sport)
        and (entry.dst_addr is None or view.saddr == entry.dst_addr)
        and (entry.dport is None or view.sport == entry.dport)
    )


def prefilter_entries(entries, views) -> list[GroundTruthEntry]:
    """Drop entries whose time window cannot overlap the dataset's
    span. Output labels are identical with or without this step."""
    if not views:
        return list(entries)
    min_stime = min(view.stime_us for view in views)
    max_ltime = max(view.ltime_us for view in views)
    kept = []
    for entry in entries:
        if entry.start_us is not None and entry.start_us > max_ltime:
            continue
        if entry.last_us is not None and entry.last_us < min_stime:
            continue
        kept.append(entry)
    return kept


def label_rows(
    header: list[str],
    rows: list[list[str]],
    entries: list[GroundTruthEntry],
    benign_label: str = DEFAULT_BENIGN_LABEL,
    bidirectional: bool = False,
    prefilter: bool = True,
) -> tuple[list[str], LabelSummary]:
    """Return one label per row plus the summary."""
    views = _row_views(header, rows)
    candidates = prefilter_entries(entries, views) if prefilter else list(entries)
    summary = LabelSummary(benign_label=benign_label)
    labels = []
    for view in views:
        label = benign_label
        for entry in candidates:
            if match_entry(view, entry, bidirectional):
                label = entry.label
                break
        labels.append(label)
        summary.total += 1
        summary.counts[label] = summary.counts.get(label, 0) + 1
    return labels, summary


def label_dataset(header, rows, entries, **kwargs):
    """Labelled copy of a dataset: header + Label column appended."""
    labels, summary = label_rows(header, rows, entries, **kwargs)
    labelled_header = list(header) + ["Label"]
    labelled_rows = [row + [label] for row, label in zip(rows, labels)]
    return labelled_header, labelled_rows, summary


def format_label_summary(summary: LabelSummary) -> str:
    lines = [
        f"total_flows: {summary.total}",
        f"benign_flows: {summary.benign}",
        f"malicious_flows: {summary.malicious}",
        "",
    ]
    lines.append(f"{summary.benign_label}: {summary.benign}")
    others = [
        (label, count) for label, count in summary.counts.items()
        if label != summary.benign_label
    ]
    others.sort(key=lambda item: (-item[1], item[0]))
    for label, count in others:
        lines.append(f"{label}: {count}")
    return "\n".join(lines) + "\n"


def write_label_summary(path, summary: LabelSummary) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fp:
        fp.write(format_label_summary(summary))
