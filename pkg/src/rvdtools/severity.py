"""Severity vectors and CVSS v3.1 base scoring.

RVSS vectors share the wire format and are parsed and stored, but have no
scoring function here; ``RVSS_SCORERS`` is the hook for one.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Union

__all__ = [
    "BASE_METRICS",
    "Imputation",
    "MetricVector",
    "SeverityBucket",
    "UnscoredError",
    "VectorError",
    "bucket",
    "cvss_base_score",
    "parse_vector",
    "render_vector",
    "score_value",
    "validate_severity_block",
]

BASE_METRICS: dict[str, tuple[str, ...]] = {
    "AV": ("N", "A", "L", "P"),
    "AC": ("L", "H"),
    "PR": ("N", "L", "H"),
    "UI": ("N", "R"),
    "S": ("U", "C"),
    "C": ("H", "L", "N"),
    "I": ("H", "L", "N"),
    "A": ("H", "L", "N"),
}

_AV = {"N": 0.85, "A": 0.62, "L": 0.55, "P": 0.2}
_AC = {"L": 0.77, "H": 0.44}
_PR = {"U": {"N": 0.85, "L": 0.62, "H": 0.27}, "C": {"N": 0.85, "L": 0.68, "H": 0.5}}
_UI = {"N": 0.85, "R": 0.62}
_CIA = {"H": 0.56, "L": 0.22, "N": 0.0}

UNSCORED = "None"

# prefix family -> scorer; an RVSS entry can be registered once its equations are available.
RVSS_SCORERS: dict[str, Callable[["MetricVector"], float]] = {}


class VectorError(ValueError):
    pass


class UnscoredError(ValueError):
    pass


@dataclass(frozen=True)
class MetricVector:
    metrics: dict[str, str]
    extensions: dict[str, str] = field(default_factory=dict)
    prefix: str | None = None
    order: tuple[str, ...] = ()

    @property
    def family(self) -> str | None:
        return self.prefix.split(":", 1)[0] if self.prefix else None

    @property
    def is_complete(self) -> bool:
        return all(self.metrics.get(k) in v for k, v in BASE_METRICS.items())

    def get(self, key: str) -> str | None:
        return self.metrics.get(key, self.extensions.get(key))

    def __str__(self) -> str:
        return render_vector(self)


def parse_vector(text: str) -> MetricVector:
    """Parse ``[PREFIX/]KEY:VAL(/KEY:VAL)*``.

    CVSS base metrics go to ``metrics`` (values checked unless the prefix is
    RVSS, whose attack-vector alphabet differs); anything else goes to
    ``extensions`` in input order.
    """
    if not isinstance(text, str) or not text.strip():
        raise VectorError("empty vector")
    tokens = text.split("/")
    prefix = None
    if tokens[0].startswith(("CVSS:", "RVSS:")):
        prefix = tokens.pop(0)
        if not prefix.split(":", 1)[1]:
            raise VectorError(f"malformed prefix '{prefix}'")
    if not tokens:
        raise VectorError("vector has no metrics")
    check_values = prefix is None or not prefix.startswith("RVSS:")
    metrics: dict[str, str] = {}
    extensions: dict[str, str] = {}
    order: list[str] = []
    for tok in tokens:
        key, sep, val = tok.partition(":")
        if not sep or not key or not val or ":" in val:
            raise VectorError(f"malformed token '{tok}'")
        if key in metrics or key in extensions:
            raise VectorError(f"duplicate metric '{key}'")
        if key in BASE_METRICS:
            if check_values and val not in BASE_METRICS[key]:
                raise VectorError(
                    f"illegal value '{val}' for metric {key} "
                    f"(allowed: {', '.join(BASE_METRICS[key])})"
                )
            metrics[key] = val
        else:
            extensions[key] = val
        order.append(key)
    return MetricVector(metrics, extensions, prefix, tuple(order))


def render_vector(v: MetricVector) -> str:
    order = v.order or (*v.metrics, *v.extensions)
    parts = [f"{k}:{v.get(k)}" for k in order]
    if v.prefix:
        parts.insert(0, v.prefix)
    return "/".join(parts)


def roundup(x: float) -> float:
    """CVSS v3.1 Roundup: smallest one-decimal number >= x, float-noise safe."""
    i = int(round(x * 100000))
    if i % 10000 == 0:
        return i / 100000.0
    return (math.floor(i / 10000) + 1) / 10.0


def cvss_base_score(v: MetricVector) -> float:
    missing = [k for k in BASE_METRICS if k not in v.metrics]
    if missing:
        raise VectorError(f"missing base metric(s): {', '.join(missing)}")
    bad = [k for k, allowed in BASE_METRICS.items() if v.metrics[k] not in allowed]
    if bad:
        raise VectorError(f"non-CVSS value for metric(s): {', '.join(bad)}")
    m = v.metrics
    scope_changed = m["S"] == "C"
    iss = 1 - (1 - _CIA[m["C"]]) * (1 - _CIA[m["I"]]) * (1 - _CIA[m["A"]])
    if scope_changed:
        impact = 7.52 * (iss - 0.029) - 3.25 * (iss - 0.02) ** 15
    else:
        impact = 6.42 * iss
    exploitability = 8.22 * _AV[m["AV"]] * _AC[m["AC"]] * _PR[m["S"]][m["PR"]] * _UI[m["UI"]]
    if impact <= 0:
        return 0.0
    if scope_changed:
        return roundup(min(1.08 * (impact + exploitability), 10))
    return roundup(min(impact + exploitability, 10))


class SeverityBucket(enum.IntEnum):
    NONE = 0
    LOW = 1
    MEDIUM = 2
    HIGH = 3
    CRITICAL = 4

    @property
    def label(self) -> str:
        return self.name.capitalize()


class Imputation(str, enum.Enum):
    PESSIMISTIC = "pessimistic"
    OPTIMISTIC = "optimistic"
    NONE = "none"


Score = Union[float, int, str, None]


def score_value(score: Score) -> float | None:
    """Numeric score, or None for the unscored marker."""
    if score is None or score == UNSCORED:
        return None
    if isinstance(score, bool) or not isinstance(score, (int, float)):
        raise ValueError(f"not a score: {score!r}")
    if not 0 <= score <= 10:
        raise ValueError(f"score {score} outside [0, 10]")
    return float(score)


def bucket(score: Score, imputation: Imputation | str = Imputation.NONE) -> SeverityBucket:
    value = score_value(score)
    if value is None:
        imputation = Imputation(imputation)
        if imputation is Imputation.PESSIMISTIC:
            return SeverityBucket.CRITICAL
        if imputation is Imputation.OPTIMISTIC:
            return SeverityBucket.LOW
        raise UnscoredError("unscored flaw and no imputation mode given")
    if value == 0.0:
        return SeverityBucket.NONE
    if value < 4.0:
        return SeverityBucket.LOW
    if value < 7.0:
        return SeverityBucket.MEDIUM
    if value < 9.0:
        return SeverityBucket.HIGH
    return SeverityBucket.CRITICAL


_NO_VECTOR = ("", "None", "N/A")


def check_score_consistency(block: dict, path: str, report: Any) -> None:
    """Vector syntax and cvss-score/cvss-vector agreement (schema handles the rest)."""
    for key in ("rvss-vector", "cvss-vector"):
        text = block.get(key)
        if isinstance(text, str) and text not in _NO_VECTOR:
            try:
                parse_vector(text)
            except VectorError as exc:
                report.add(f"{path}.{key}", "vector", str(exc))
    text, score = block.get("cvss-vector"), block.get("cvss-score")
    if not isinstance(text, str) or text in _NO_VECTOR:
        return
    if isinstance(score, bool) or not isinstance(score, (int, float)):
        return
    try:
        vec = parse_vector(text)
    except VectorError:
        return
    if vec.family == "RVSS" or not vec.is_complete:
        return
    expected = cvss_base_score(vec)
    if round(float(score), 1) != expected:
        report.add(f"{path}.cvss-score", "consistency",
                   f"cvss-score {score} disagrees with vector score {expected}")


def validate_severity_block(block: Any):
    from .records import SEVERITY_SCHEMA, ValidationReport, _check_field

    report = ValidationReport()
    _check_field(block, {"types": ("dict",), "schema": SEVERITY_SCHEMA,
                         "check": check_score_consistency}, "severity", report)
    return report
