"""Corpus statistics and the generated Markdown status report."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .severity import Imputation, SeverityBucket, bucket

UNKNOWN_VENDOR = "Unknown"

# Report column order: most severe first, as in the usual severity bar charts.
REPORT_BUCKETS = (
    SeverityBucket.CRITICAL, SeverityBucket.HIGH, SeverityBucket.MEDIUM,
    SeverityBucket.LOW, SeverityBucket.NONE,
)


@dataclass(frozen=True)
class VendorCount:
    vendor: str
    count: int


@dataclass(frozen=True)
class SeverityHistogram:
    vendor: str
    counts: dict[SeverityBucket, int]
    imputation: Imputation

    @property
    def total(self) -> int:
        return sum(self.counts.values())


def vendor_name(record: Mapping) -> str:
    vendor = record.get("vendor")
    return vendor if vendor else UNKNOWN_VENDOR


def _records(corpus) -> Iterable[Mapping]:
    return corpus.values() if isinstance(corpus, Mapping) else corpus


def vendor_counts(corpus) -> list[VendorCount]:
    """Records per vendor, most first; equal counts ordered alphabetically."""
    counts = Counter(vendor_name(r) for r in _records(corpus))
    ordered = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0].casefold(), kv[0]))
    return [VendorCount(v, c) for v, c in ordered]


def record_score(record: Mapping) -> float | None:
    """cvss-score if numeric, else rvss-score if numeric, else None (unscored)."""
    sev = record.get("severity") or {}
    for key in ("cvss-score", "rvss-score"):
        value = sev.get(key)
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            return float(value)
    return None


def severity_histogram(corpus, imputation: Imputation | str) -> list[SeverityHistogram]:
    imputation = Imputation(imputation)
    if imputation is Imputation.NONE:
        raise ValueError("histograms need an imputation mode for unscored records")
    per_vendor: dict[str, Counter] = {}
    for r in _records(corpus):
        per_vendor.setdefault(vendor_name(r), Counter())[bucket(record_score(r), imputation)] += 1
    order = [vc.vendor for vc in vendor_counts(corpus)]
    return [
        SeverityHistogram(v, {b: per_vendor[v].get(b, 0) for b in SeverityBucket}, imputation)
        for v in order
    ]


def _table(header: Sequence[str], rows: Iterable[Sequence[object]]) -> list[str]:
    lines = ["| " + " | ".join(header) + " |",
             "|" + "|".join("---" if i == 0 else "---:" for i in range(len(header))) + "|"]
    lines += ["| " + " | ".join(str(c) for c in row) + " |" for row in rows]
    return lines


_MODE_TITLES = {
    Imputation.PESSIMISTIC: "unscored flaws counted as Critical",
    Imputation.OPTIMISTIC: "unscored flaws counted as Low",
}


def render_report(counts: Sequence[VendorCount], histograms: Sequence[SeverityHistogram],
                  total: int, modes: Sequence[Imputation | str] | None = None) -> str:
    """Deterministic Markdown: total, vendor table, one severity table per mode.

    ``modes`` defaults to those present in ``histograms``.
    """
    lines = [
        "# Robot Vulnerability Database",
        "",
        "This file is generated; do not edit it by hand.",
        "",
        f"Total flaws recorded: **{total}**",
        "",
        "## Flaws by vendor",
        "",
    ]
    lines += _table(("Vendor", "Count"), ((c.vendor, c.count) for c in counts))
    if modes is None:
        modes = [m for m in (Imputation.PESSIMISTIC, Imputation.OPTIMISTIC)
                 if any(h.imputation is m for h in histograms)]
    for mode in map(Imputation, modes):
        lines += ["", f"## Severity by vendor ({mode.value}: {_MODE_TITLES[mode]})", ""]
        lines += _table(
            ("Vendor", *(b.label for b in REPORT_BUCKETS), "Total"),
            ((h.vendor, *(h.counts.get(b, 0) for b in REPORT_BUCKETS), h.total)
             for h in histograms if h.imputation is mode),
        )
    return "\n".join(lines) + "\n"


def build_report(corpus, modes: Sequence[Imputation | str] = ("pessimistic", "optimistic")) -> str:
    records = list(_records(corpus))
    hists: list[SeverityHistogram] = []
    for m in modes:
        hists += severity_histogram(records, m)
    return render_report(vendor_counts(records), hists, len(records), modes)
