import copy

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rvdtools.records import (
    FlawType,
    RenameConflictError,
    apply_defaults,
    classify_record,
    field_names,
    normalize_record,
    prepare_record,
    taxonomy_classify,
    validate_record,
)
from rvdtools.store import dump_record, parse_record_text

from conftest import minimal_record


def rules(report):
    return {(v.path, v.rule) for v in report.violations}


# --- normalize --------------------------------------------------------------

def test_bug_renamed_to_flaw():
    assert normalize_record({"bug": {"phase": "runtime"}}) == {"flaw": {"phase": "runtime"}}


def test_fix_renamed_to_mitigation_keeps_position():
    out = normalize_record({"title": "t", "fix": {"description": "d"}, "cve": "None"})
    assert list(out) == ["title", "mitigation", "cve"]


def test_flaw_unchanged():
    doc = {"flaw": {"phase": "testing"}, "title": "x"}
    assert normalize_record(doc) == doc


@pytest.mark.parametrize("old,new", [("fix", "mitigation"), ("bug", "flaw")])
def test_rename_conflict(old, new):
    with pytest.raises(RenameConflictError) as info:
        normalize_record({old: {}, new: {}})
    assert old in str(info.value) and new in str(info.value)


def test_normalize_does_not_mutate_input():
    raw = {"bug": {"phase": "runtime"}}
    normalize_record(raw)
    assert raw == {"bug": {"phase": "runtime"}}


def test_normalize_idempotent():
    raw = {"bug": {"phase": "runtime"}, "fix": {}}
    once = normalize_record(raw)
    assert normalize_record(once) == once


# --- defaults ---------------------------------------------------------------

def test_default_type_is_bug():
    assert apply_defaults({"title": "t", "description": "d"})["type"] == "bug"


def test_present_field_untouched():
    assert apply_defaults({"cve": "CVE-2019-13566"})["cve"] == "CVE-2019-13566"


def test_defaults_idempotent_on_empty():
    once = apply_defaults({})
    assert apply_defaults(once) == once


def test_top_level_defaults():
    out = apply_defaults({})
    assert out["type"] == "bug"
    assert out["cwe"] == "None" and out["cve"] == "None"
    assert out["id"] == 0
    assert out["keywords"] == "" and out["system"] == ""
    assert out["vendor"] is None
    assert out["links"] == "None"
    assert out["exploitation"] == {"description": "", "exploitation-image": "",
                                   "exploitation-vector": ""}
    # required blocks without a default setter stay missing
    for name in ("title", "description", "severity", "flaw", "mitigation"):
        assert name not in out


def test_flaw_defaults():
    flaw = apply_defaults({"flaw": {}})["flaw"]
    assert flaw == {
        "phase": "unknown", "specificity": "N/A", "architectural-location": "N/A",
        "application": "N/A", "subsystem": "N/A", "package": "N/A", "languages": "None",
        "date-detected": "", "detected-by": "", "detected-by-method": "N/A",
        "date-reported": "", "reported-by": "", "reported-by-relationship": "N/A",
        "issue": "", "reproducibility": "", "trace": "", "reproduction": "",
        "reproduction-image": "",
    }


def test_mitigation_defaults():
    assert apply_defaults({"mitigation": {}})["mitigation"] == {"description": "",
                                                               "pull-request": ""}


def test_null_vendor_not_overwritten():
    assert apply_defaults({"vendor": "ABB"})["vendor"] == "ABB"


# --- validate ---------------------------------------------------------------

def test_minimal_record_valid(minimal):
    doc, report = prepare_record(minimal)
    assert report.ok, report.violations
    assert "type" in report.applied_defaults
    assert "flaw.phase" in report.applied_defaults


def test_title_101_chars():
    _, report = prepare_record(minimal_record(title="x" * 101))
    assert ("title", "maxlength") in rules(report)


def test_title_100_chars_ok():
    assert prepare_record(minimal_record(title="x" * 100))[1].ok


def test_cve_from_discussion_is_valid():
    _, report = prepare_record(minimal_record(cve="CVE-2019-13445"))
    assert not any(v.path == "cve" for v in report.violations)


def test_exploit_is_not_a_type():
    _, report = prepare_record(minimal_record(type="exploit"))
    assert ("type", "allowed") in rules(report)


def test_all_violations_reported():
    _, report = prepare_record(minimal_record(
        title="x" * 120, type="exploit", cve="cve-1", cwe="79",
        flaw={"phase": "later", "date-detected": "03/02/2019"},
    ))
    assert {("title", "maxlength"), ("type", "allowed"), ("cve", "regex"),
            ("cwe", "regex"), ("flaw.phase", "allowed"),
            ("flaw.date-detected", "date")} <= rules(report)


def test_missing_required_blocks():
    _, report = prepare_record({})
    assert {("title", "required"), ("description", "required"), ("severity", "required"),
            ("flaw", "required"), ("mitigation", "required")} <= rules(report)


def test_detection_method_split_values():
    for method in ("runtime crash", "testing violation"):
        assert prepare_record(minimal_record(flaw={"detected-by-method": method}))[1].ok
    _, report = prepare_record(
        minimal_record(flaw={"detected-by-method": "runtime crashtesting violation"}))
    assert ("flaw.detected-by-method", "allowed") in rules(report)


def test_subsystem_outside_policy_warns_only():
    _, report = prepare_record(minimal_record(flaw={"subsystem": "navigation"}))
    assert report.ok
    assert any("subsystem" in w for w in report.warnings)
    _, report = prepare_record(minimal_record(flaw={"subsystem": "sensing/lidar"}))
    assert report.ok and not report.warnings


def test_languages_list_membership():
    assert prepare_record(minimal_record(flaw={"languages": ["C++", "Python"]}))[1].ok
    _, report = prepare_record(minimal_record(flaw={"languages": ["C++", "Rust"]}))
    assert ("flaw.languages", "allowed") in rules(report)


def test_unknown_field_rejected():
    _, report = prepare_record(minimal_record(author="me"))
    assert ("author", "unknown") in rules(report)


def test_negative_id():
    _, report = prepare_record(minimal_record(id=-1))
    assert ("id", "min") in rules(report)


def test_bool_is_not_a_number():
    _, report = prepare_record(minimal_record(id=True))
    assert ("id", "type") in rules(report)


def test_non_mapping_document():
    assert not validate_record(["not", "a", "record"]).ok


def test_report_ok_iff_no_violations(minimal):
    report = prepare_record(minimal)[1]
    assert report.ok == (report.violations == [])


# --- taxonomy ---------------------------------------------------------------

@pytest.mark.parametrize("exploit,config,expected", [
    (True, False, FlawType.VULNERABILITY),
    (False, False, FlawType.BUG),
    (True, True, FlawType.EXPOSURE),
    (False, True, FlawType.EXPOSURE),
])
def test_taxonomy_classify(exploit, config, expected):
    assert taxonomy_classify(exploit, config) is expected


def test_bug_and_weakness_equivalent():
    assert FlawType.BUG != FlawType.WEAKNESS
    assert FlawType.BUG.equivalent(FlawType.WEAKNESS)
    assert FlawType.WEAKNESS.equivalent("bug")
    assert not FlawType.BUG.equivalent(FlawType.VULNERABILITY)


def test_classify_record_uses_exploitation_description():
    doc = apply_defaults(minimal_record())
    assert classify_record(doc) is FlawType.BUG
    doc["exploitation"]["description"] = "Send the crafted packet twice."
    assert classify_record(doc) is FlawType.VULNERABILITY


# --- properties -------------------------------------------------------------

_text = st.text(max_size=12)
_values = st.one_of(st.none(), st.booleans(), st.integers(-5, 200), _text,
                    st.floats(-1, 12, allow_nan=False), st.lists(_text, max_size=3))
_field = st.sampled_from(["id", "title", "type", "description", "cwe", "cve", "keywords",
                          "system", "vendor", "links", "bug", "fix", "extra"])
_flaw_keys = st.sampled_from(["phase", "languages", "subsystem", "date-detected",
                              "detected-by-method", "reported-by-relationship",
                              "architectural-location", "package"])
_docs = st.fixed_dictionaries(
    {},
    optional={
        "title": st.one_of(_text, st.text(min_size=95, max_size=105)),
        "description": _text,
        "type": st.sampled_from(["bug", "weakness", "vulnerability", "exposure", "exploit"]),
        "cve": st.sampled_from(["None", "CVE-2019-1", "CVE-x", "None ", ""]),
        "cwe": st.sampled_from(["None", "CWE-79", "CWE-20 (input)", "79"]),
        "id": st.one_of(st.integers(-3, 10), st.sampled_from(["3", "x"])),
        "vendor": st.one_of(st.none(), _text),
        "severity": st.fixed_dictionaries({}, optional={
            "rvss-score": st.one_of(st.sampled_from(["None", "5"]), st.floats(-2, 12)),
            "rvss-vector": _text, "severity-description": _text,
        }),
        "flaw": st.dictionaries(_flaw_keys, _values, max_size=4),
        "mitigation": st.dictionaries(st.sampled_from(["description", "pull-request"]),
                                      _values, max_size=2),
    },
).flatmap(lambda d: st.dictionaries(_field, _values, max_size=2).map(lambda e: {**e, **d}))


def _invariants_hold(doc):
    import datetime as dt
    import re

    from rvdtools import records as R

    assert isinstance(doc["title"], str) and len(doc["title"]) <= 100
    assert doc["type"] in [t.value for t in FlawType]
    assert re.match(R.CVE_PATTERN, doc["cve"]) and re.match(R.CWE_PATTERN, doc["cwe"])
    assert int(doc["id"]) >= 0
    f = doc["flaw"]
    assert f["phase"] in R.PHASES
    assert f["architectural-location"] in R.ARCHITECTURAL_LOCATIONS
    assert f["detected-by-method"] in R.DETECTION_METHODS
    assert f["reported-by-relationship"] in R.REPORTER_RELATIONSHIPS
    for key in ("date-detected", "date-reported"):
        if f[key]:
            dt.date.fromisoformat(f[key])
    rvss = doc["severity"]["rvss-score"]
    assert rvss == "None" or 0 <= rvss <= 10


@settings(max_examples=300, deadline=None)
@given(_docs)
def test_valid_implies_invariants(raw):
    try:
        doc, report = prepare_record(raw)
    except RenameConflictError:
        return
    if report.ok:
        _invariants_hold(doc)


@settings(max_examples=200, deadline=None)
@given(_docs)
def test_pipeline_idempotent_and_deterministic(raw):
    try:
        doc1, rep1 = prepare_record(raw)
    except RenameConflictError:
        return
    doc2, rep2 = prepare_record(doc1)
    assert doc2 == doc1
    assert dump_record(doc2) == dump_record(doc1)
    assert rep2.violations == rep1.violations


@settings(max_examples=200, deadline=None)
@given(_docs)
def test_defaults_never_overwrite(raw):
    raw = {k: v for k, v in raw.items() if k not in ("bug", "fix")}
    _preserves(apply_defaults(raw), raw)


def _preserves(out, raw):
    for k, v in raw.items():
        if isinstance(v, dict) and isinstance(out[k], dict):
            _preserves(out[k], v)
        else:
            assert out[k] == v


def test_every_schema_field_roundtrips(minimal):
    doc, report = prepare_record(minimal_record(
        severity={"rvss-score": 7.1, "rvss-vector": "RVSS:1.0/AV:RN/AC:L/H:U",
                  "severity-description": "high", "cvss-score": 9.8,
                  "cvss-vector": "CVSS:3.1/AV:N/AC:L/PR:N/UI:N/S:U/C:H/I:H/A:H"},
        mitigation={"description": "patched", "pull-request": 42},
    ))
    assert report.ok, report.violations
    flat = set()

    def walk(d, prefix=""):
        for k, v in d.items():
            flat.add(prefix + k)
            if isinstance(v, dict):
                walk(v, prefix + k + ".")
    walk(doc)
    assert flat == set(field_names())
    assert parse_record_text(dump_record(doc)) == doc
    assert copy.deepcopy(doc) == doc
