"""Flaw records: normalization, defaults, validation and flaw taxonomy.

A record is a plain nested ``dict`` as read from a ticket file. The pipeline is
``normalize_record`` -> ``apply_defaults`` -> ``validate_record``; every step is
pure and returns new objects.
"""

from __future__ import annotations

import copy
import datetime as dt
import enum
import re
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable

__all__ = [
    "CVE_PATTERN",
    "CWE_PATTERN",
    "FlawType",
    "RenameConflictError",
    "ValidationReport",
    "Violation",
    "apply_defaults",
    "classify_record",
    "prepare_record",
    "normalize_record",
    "taxonomy_classify",
    "validate_record",
]

CVE_PATTERN = r"^CVE-[0-9]*-[0-9]*$|^None$"
CWE_PATTERN = r"^CWE-[0-9]*.*$|^None$"
SUBSYSTEM_PATTERN = r"^(sensing|actuation|communication|cognition|UI|power).*$|^N/A$"
TITLE_MAXLENGTH = 100

RENAMES = {"bug": "flaw", "fix": "mitigation"}


class FlawType(str, enum.Enum):
    BUG = "bug"
    WEAKNESS = "weakness"
    VULNERABILITY = "vulnerability"
    EXPOSURE = "exposure"

    def equivalent(self, other: "FlawType | str") -> bool:
        """Taxonomy equality: ``bug`` and ``weakness`` name the same class."""
        other = FlawType(other)
        return _canonical_type(self) is _canonical_type(other)


def _canonical_type(t: FlawType) -> FlawType:
    return FlawType.BUG if t is FlawType.WEAKNESS else t


PHASES = (
    "programming-time", "build-time", "compile-time", "deployment-time",
    "runtime", "runtime-initialization", "runtime-operation", "testing",
    "unknown",
)
ARCHITECTURAL_LOCATIONS = (
    "application-specific code", "application-specific", "platform-code",
    "platform code", "ROS-specific", "third-party", "N/A",
)
LANGUAGES = (
    "Python", "python", "cmake", "CMake", "C", "C++", "package.xml",
    "launch XML", "URScript", "shell", "msg", "srv", "xacro", "urdf", "None",
    "rosparam YAML", "XML", "ASCII STL", "N/A", "YAML", "Package XML",
)
DETECTION_METHODS = (
    "build system", "compiler", "assertions", "runtime detection",
    "runtime crash", "testing violation", "testing static", "testing dynamic",
    "N/A",
)
REPORTER_RELATIONSHIPS = (
    "guest user", "contributor", "member developer", "automatic",
    "security researcher", "N/A",
)


class RenameConflictError(ValueError):
    def __init__(self, old: str, new: str):
        self.old, self.new = old, new
        super().__init__(f"both '{old}' and '{new}' present; cannot rename '{old}' to '{new}'")


@dataclass(frozen=True)
class Violation:
    path: str
    rule: str
    message: str

    def __str__(self) -> str:
        return f"{self.path}: [{self.rule}] {self.message}"


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)
    applied_defaults: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, path: str, rule: str, message: str) -> None:
        self.violations.append(Violation(path, rule, message))

    def extend(self, other: "ValidationReport", prefix: str = "") -> None:
        for v in other.violations:
            self.violations.append(Violation(prefix + v.path, v.rule, v.message))
        self.warnings.extend(other.warnings)


# --- schema -----------------------------------------------------------------
#
# Each field spec is a dict with keys:
#   types     tuple of accepted kinds: "string", "number", "integer", "list", "dict"
#   required  bool
#   nullable  bool
#   allowed   tuple of values (list members checked individually)
#   regex     full-match pattern, strings only
#   maxlength int, strings only
#   min/max   numeric bounds, numbers only
#   default   zero-arg callable
#   schema    nested dict of field specs
#   check     extra callable(value, path, report)

def _check_date(value: Any, path: str, report: ValidationReport) -> None:
    if isinstance(value, str) and value:
        try:
            dt.date.fromisoformat(value)
        except ValueError:
            report.add(path, "date", f"'{value}' is not an ISO 8601 date (YYYY-MM-DD)")
        else:
            if not re.fullmatch(r"\d{4}-\d{2}-\d{2}", value):
                report.add(path, "date", f"'{value}' is not an ISO 8601 date (YYYY-MM-DD)")


def _check_subsystem(value: Any, path: str, report: ValidationReport) -> None:
    if isinstance(value, str) and not re.match(SUBSYSTEM_PATTERN, value):
        report.warnings.append(
            f"{path}: '{value}' does not follow the subsystem naming policy"
        )


def _check_id(value: Any, path: str, report: ValidationReport) -> None:
    if isinstance(value, str) and not value.isdigit():
        report.add(path, "min", f"id '{value}' is not a non-negative integer")


def _check_severity(value: Any, path: str, report: ValidationReport) -> None:
    from .severity import check_score_consistency

    if isinstance(value, dict):
        check_score_consistency(value, path, report)


def _const(v: Any) -> Callable[[], Any]:
    return lambda: copy.copy(v)


_SCORE = {"types": ("string", "number"), "regex": r"^None$", "min": 0, "max": 10}

SEVERITY_SCHEMA: dict[str, dict] = {
    "rvss-score": {**_SCORE, "required": True},
    "rvss-vector": {"types": ("string",), "required": True},
    "severity-description": {"types": ("string",), "required": True},
    "cvss-score": {**_SCORE, "required": False},
    "cvss-vector": {"types": ("string",), "required": False},
}

FLAW_SCHEMA: dict[str, dict] = {
    "phase": {"types": ("string",), "required": True, "allowed": PHASES,
              "default": _const("unknown")},
    "specificity": {"types": ("string",), "required": True, "default": _const("N/A")},
    "architectural-location": {"types": ("string",), "required": True,
                               "allowed": ARCHITECTURAL_LOCATIONS,
                               "default": _const("N/A")},
    "application": {"types": ("string",), "required": True, "default": _const("N/A")},
    "subsystem": {"types": ("string",), "required": True, "default": _const("N/A"),
                  "check": _check_subsystem},
    "package": {"types": ("string", "list"), "required": False, "default": _const("N/A")},
    "languages": {"types": ("string", "list"), "required": True, "allowed": LANGUAGES,
                  "default": _const("None")},
    "date-detected": {"types": ("string",), "required": True, "default": _const(""),
                      "check": _check_date},
    "detected-by": {"types": ("string",), "required": True, "default": _const("")},
    "detected-by-method": {"types": ("string",), "required": True,
                           "allowed": DETECTION_METHODS, "default": _const("N/A")},
    "date-reported": {"types": ("string",), "required": True, "default": _const(""),
                      "check": _check_date},
    "reported-by": {"types": ("string",), "required": True, "default": _const("")},
    "reported-by-relationship": {"types": ("string",), "required": True,
                                 "allowed": REPORTER_RELATIONSHIPS,
                                 "default": _const("N/A")},
    "issue": {"types": ("string",), "required": False, "default": _const("")},
    "reproducibility": {"types": ("string",), "required": True, "default": _const("")},
    "trace": {"types": ("string",), "required": True, "default": _const("")},
    "reproduction": {"types": ("string",), "required": True, "default": _const("")},
    "reproduction-image": {"types": ("string",), "required": True, "default": _const("")},
}

EXPLOITATION_SCHEMA: dict[str, dict] = {
    "description": {"types": ("string",), "required": True, "default": _const("")},
    "exploitation-image": {"types": ("string",), "required": True, "default": _const("")},
    "exploitation-vector": {"types": ("string",), "required": True, "default": _const("")},
}

MITIGATION_SCHEMA: dict[str, dict] = {
    "description": {"types": ("string",), "required": True, "default": _const("")},
    "pull-request": {"types": ("string", "number"), "required": False, "default": _const("")},
}

SCHEMA: dict[str, dict] = {
    "id": {"types": ("string", "integer"), "required": True, "min": 0,
           "default": _const(0), "check": _check_id},
    "title": {"types": ("string",), "required": True, "maxlength": TITLE_MAXLENGTH},
    "type": {"types": ("string",), "required": True,
             "allowed": tuple(t.value for t in FlawType), "default": _const("bug")},
    "description": {"types": ("string",), "required": True},
    "cwe": {"types": ("string",), "required": True, "regex": CWE_PATTERN,
            "default": _const("None")},
    "cve": {"types": ("string",), "required": True, "regex": CVE_PATTERN,
            "default": _const("None")},
    "keywords": {"types": ("string", "list"), "required": True, "default": _const("")},
    "system": {"types": ("string",), "required": True, "default": _const("")},
    "vendor": {"types": ("string",), "required": True, "nullable": True,
               "default": _const(None)},
    "severity": {"types": ("dict",), "required": True, "schema": SEVERITY_SCHEMA,
                 "check": _check_severity},
    "links": {"types": ("string", "list"), "required": False, "default": _const("None")},
    "flaw": {"types": ("dict",), "required": True, "schema": FLAW_SCHEMA},
    "exploitation": {"types": ("dict",), "required": True, "schema": EXPLOITATION_SCHEMA,
                     "default": dict},
    "mitigation": {"types": ("dict",), "required": True, "schema": MITIGATION_SCHEMA},
}


# --- pipeline ---------------------------------------------------------------

def normalize_record(raw: dict) -> dict:
    """Rename legacy top-level keys (``bug`` -> ``flaw``, ``fix`` -> ``mitigation``).

    Key order is preserved; the renamed key takes the old key's position.
    Raises RenameConflictError when both the old and new key are present.
    """
    for old, new in RENAMES.items():
        if old in raw and new in raw:
            raise RenameConflictError(old, new)
    return {RENAMES.get(k, k): copy.deepcopy(v) for k, v in raw.items()}


def apply_defaults(doc: dict) -> dict:
    out, _ = _apply_defaults(doc)
    return out


def _apply_defaults(doc: dict) -> tuple[dict, list[str]]:
    out = copy.deepcopy(doc)
    applied: list[str] = []
    _fill(out, SCHEMA, "", applied)
    return out, applied


def _fill(doc: dict, schema: dict, prefix: str, applied: list[str]) -> None:
    for name, spec in schema.items():
        path = prefix + name
        if name not in doc and "default" in spec:
            doc[name] = spec["default"]()
            applied.append(path)
        sub = spec.get("schema")
        if sub is not None and isinstance(doc.get(name), dict):
            _fill(doc[name], sub, path + ".", applied)


def _kind_ok(value: Any, kind: str) -> bool:
    if kind == "string":
        return isinstance(value, str)
    if kind == "integer":
        return isinstance(value, int) and not isinstance(value, bool)
    if kind == "number":
        return isinstance(value, (int, float)) and not isinstance(value, bool)
    if kind == "list":
        return isinstance(value, list) and all(isinstance(x, str) for x in value)
    if kind == "dict":
        return isinstance(value, dict)
    raise ValueError(kind)


def _check_field(value: Any, spec: dict, path: str, report: ValidationReport) -> None:
    if value is None:
        if not spec.get("nullable"):
            report.add(path, "nullable", "null value not allowed")
        return
    kinds = spec["types"]
    kind = next((k for k in kinds if _kind_ok(value, k)), None)
    if kind is None:
        report.add(path, "type", f"expected {' or '.join(kinds)}, got {type(value).__name__}")
        return
    allowed = spec.get("allowed")
    if allowed is not None:
        members = value if kind == "list" else [value]
        for m in members:
            if m not in allowed:
                report.add(path, "allowed", f"unallowed value '{m}'")
    if kind == "string":
        if "regex" in spec and not re.match(spec["regex"], value):
            report.add(path, "regex", f"value '{value}' does not match '{spec['regex']}'")
        if "maxlength" in spec and len(value) > spec["maxlength"]:
            report.add(path, "maxlength",
                       f"length {len(value)} exceeds max length {spec['maxlength']}")
    if kind in ("number", "integer"):
        if "min" in spec and value < spec["min"]:
            report.add(path, "min", f"{value} is below the minimum {spec['min']}")
        if "max" in spec and value > spec["max"]:
            report.add(path, "max", f"{value} is above the maximum {spec['max']}")
    if kind == "dict" and "schema" in spec:
        _check_mapping(value, spec["schema"], path + ".", report)
    if "check" in spec:
        spec["check"](value, path, report)


def _check_mapping(doc: dict, schema: dict, prefix: str, report: ValidationReport) -> None:
    for name, spec in schema.items():
        path = prefix + name
        if name not in doc:
            if spec.get("required"):
                report.add(path, "required", "required field")
            continue
        _check_field(doc[name], spec, path, report)
    for name in doc:
        if name not in schema:
            report.add(prefix + str(name), "unknown", "unknown field")


def validate_record(doc: Any) -> ValidationReport:
    """Check a normalized, defaulted record against every schema rule.

    All violations are collected; nothing is raised for bad data.
    """
    report = ValidationReport()
    if not isinstance(doc, dict):
        report.add("", "type", f"record must be a mapping, got {type(doc).__name__}")
        return report
    _check_mapping(doc, SCHEMA, "", report)
    return report


def prepare_record(raw: dict) -> tuple[dict, ValidationReport]:
    """Run the full pipeline and return the completed document and its report."""
    doc, applied = _apply_defaults(normalize_record(raw))
    report = validate_record(doc)
    report.applied_defaults = applied
    return doc, report


# --- taxonomy ---------------------------------------------------------------

def taxonomy_classify(has_exploit: bool, is_config_error: bool) -> FlawType:
    if is_config_error:
        return FlawType.EXPOSURE
    if has_exploit:
        return FlawType.VULNERABILITY
    return FlawType.BUG


def classify_record(doc: dict, is_config_error: bool = False) -> FlawType:
    exploitation = doc.get("exploitation") or {}
    has_exploit = bool(str(exploitation.get("description", "")).strip())
    return taxonomy_classify(has_exploit, is_config_error)


def field_names(schema: dict = SCHEMA, prefix: str = "") -> Iterable[str]:
    """Yield every dotted field path the schema knows about."""
    for name, spec in schema.items():
        yield prefix + name
        if "schema" in spec:
            yield from field_names(spec["schema"], prefix + name + ".")
