"""Filesystem-backed corpus of flaw records.

Layout under a corpus root::

    records/<id>.<slug>.yml   one record per file
    labels.txt                id:label lines
    cases.txt                 disclosure cases
    history.txt               one line per mutation, with its author
    README.md                 generated report

Reads need no coordination. Mutations take an exclusive lock on
``<root>/.rvd.lock`` and write files by temp-file-then-rename.
"""

from __future__ import annotations

import contextlib
import os
import re
import tempfile
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterator

import yaml
from filelock import FileLock

from .records import SCHEMA, ValidationReport, prepare_record

RECORDS_DIR = "records"
LABELS_FILE = "labels.txt"
CASES_FILE = "cases.txt"
HISTORY_FILE = "history.txt"
REPORT_FILE = "README.md"
LOCK_FILE = ".rvd.lock"

TRIAGE = "triage"
DUPLICATE = "duplicate"


class StoreError(Exception):
    pass


class DuplicateIdError(StoreError):
    pass


class RecordRejected(StoreError):
    def __init__(self, report: ValidationReport):
        self.report = report
        super().__init__("record failed validation:\n" +
                         "\n".join(f"  {v}" for v in report.violations))


# --- serialization ----------------------------------------------------------

# libyaml bindings when present; same results, several times faster.
_BaseLoader = getattr(yaml, "CSafeLoader", yaml.SafeLoader)
_Dumper = getattr(yaml, "CSafeDumper", yaml.SafeDumper)


class _Loader(_BaseLoader):
    """Safe loader that keeps dates as strings; the schema types them as text."""


_Loader.yaml_implicit_resolvers = {
    ch: [(tag, rx) for tag, rx in resolvers if tag != "tag:yaml.org,2002:timestamp"]
    for ch, resolvers in yaml.SafeLoader.yaml_implicit_resolvers.items()
}


def parse_record_text(text: str):
    return yaml.load(text, Loader=_Loader)


def _ordered(doc: dict, schema: dict) -> dict:
    out = {}
    for name, spec in schema.items():
        if name in doc:
            v = doc[name]
            out[name] = _ordered(v, spec["schema"]) if "schema" in spec and isinstance(v, dict) else v
    for name, v in doc.items():
        out.setdefault(name, v)
    return out


def dump_record(doc: dict) -> str:
    return yaml.dump(_ordered(doc, SCHEMA), Dumper=_Dumper, sort_keys=False,
                     allow_unicode=True, default_flow_style=False, width=4096)


def slugify(title: str, limit: int = 48) -> str:
    slug = re.sub(r"[^a-z0-9]+", "-", title.lower()).strip("-")
    return slug[:limit].rstrip("-") or "untitled"


def record_filename(doc: dict) -> str:
    return f"{int(doc['id'])}.{slugify(str(doc.get('title', '')))}.yml"


def atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        with contextlib.suppress(FileNotFoundError):
            os.unlink(tmp)
        raise


# --- corpus -----------------------------------------------------------------

@dataclass
class Corpus:
    root: Path = field(compare=False)
    records: dict[int, dict] = field(default_factory=dict)
    labels: dict[int, set[str]] = field(default_factory=dict)
    files: dict[int, Path] = field(default_factory=dict, compare=False, repr=False)
    rejected: list[tuple[Path, ValidationReport]] = field(default_factory=list, compare=False,
                                                          repr=False)

    def __len__(self) -> int:
        return len(self.records)


@contextlib.contextmanager
def writer_lock(root: str | Path, timeout: float = 30.0) -> Iterator[None]:
    with FileLock(str(Path(root) / LOCK_FILE), timeout=timeout):
        yield


def read_labels(path: Path) -> dict[int, set[str]]:
    labels: dict[int, set[str]] = {}
    if not path.exists():
        return labels
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        rid, sep, label = line.partition(":")
        if not sep or not rid.strip().isdigit() or not label.strip():
            raise StoreError(f"{path}:{lineno}: expected 'id:label', got {line!r}")
        labels.setdefault(int(rid), set()).add(label.strip())
    return labels


def dump_labels(labels: dict[int, set[str]]) -> str:
    return "".join(f"{rid}:{label}\n" for rid in sorted(labels) for label in sorted(labels[rid]))


def load_corpus(root: str | Path) -> Corpus:
    """Parse, normalize, default and validate every record file under ``root``.

    Files that fail are kept out of the corpus and listed in ``rejected``.
    """
    root = Path(root)
    if not root.is_dir():
        raise StoreError(f"corpus root {root} is not a readable directory")
    corpus = Corpus(root)
    rec_dir = root / RECORDS_DIR
    paths = sorted(p for p in rec_dir.glob("*.yml") if not p.name.startswith(".")) \
        if rec_dir.is_dir() else []
    for path in paths:
        try:
            raw = parse_record_text(path.read_text(encoding="utf-8"))
        except (OSError, UnicodeDecodeError, yaml.YAMLError) as exc:
            report = ValidationReport()
            report.add("", "parse", str(exc).splitlines()[0])
            corpus.rejected.append((path, report))
            continue
        doc, report = check_document(raw)
        if not report.ok:
            corpus.rejected.append((path, report))
            continue
        rid = int(doc["id"])
        if rid in corpus.records:
            raise DuplicateIdError(
                f"id {rid} used by both {corpus.files[rid].name} and {path.name}"
            )
        corpus.records[rid] = doc
        corpus.files[rid] = path
    corpus.labels = read_labels(root / LABELS_FILE)
    return corpus


def check_document(raw) -> tuple[dict | None, ValidationReport]:
    """Full record pipeline on an arbitrary parsed document; never raises for bad data."""
    from .records import RenameConflictError

    if not isinstance(raw, dict):
        report = ValidationReport()
        report.add("", "type", f"record must be a mapping, got {type(raw).__name__}")
        return None, report
    try:
        return prepare_record(raw)
    except RenameConflictError as exc:
        report = ValidationReport()
        report.add(exc.old, "rename", str(exc))
        return None, report


def assign_id(corpus: Corpus) -> int:
    return max(corpus.records, default=-1) + 1


def _log(root: Path, line: str) -> None:
    with (root / HISTORY_FILE).open("a", encoding="utf-8") as fh:
        fh.write(line + "\n")


def add_record(corpus: Corpus, doc: dict, author: str = "") -> tuple[Corpus, int]:
    """Validate ``doc``, give it the next id, tag it ``triage`` and write it.

    Callers mutating a shared root should hold ``writer_lock``.
    """
    prepared, report = check_document(doc)
    if prepared is None or not report.ok:
        raise RecordRejected(report)
    rid = assign_id(corpus)
    prepared["id"] = rid
    path = corpus.root / RECORDS_DIR / record_filename(prepared)
    atomic_write(path, dump_record(prepared))
    labels = {k: set(v) for k, v in corpus.labels.items()}
    labels.setdefault(rid, set()).add(TRIAGE)
    atomic_write(corpus.root / LABELS_FILE, dump_labels(labels))
    _log(corpus.root, f"add\t{rid}\t{author}")
    new = replace(corpus, records={**corpus.records, rid: prepared}, labels=labels,
                  files={**corpus.files, rid: path}, rejected=list(corpus.rejected))
    return new, rid


def add_labels(corpus: Corpus, ids, label: str, author: str = "") -> Corpus:
    labels = {k: set(v) for k, v in corpus.labels.items()}
    for rid in ids:
        if rid not in corpus.records:
            raise StoreError(f"no record with id {rid}")
        labels.setdefault(rid, set()).add(label)
    atomic_write(corpus.root / LABELS_FILE, dump_labels(labels))
    _log(corpus.root, f"label:{label}\t{','.join(map(str, sorted(ids)))}\t{author}")
    return replace(corpus, labels=labels)


def export_corpus(corpus: Corpus, target: str | Path) -> int:
    """Write a complete standalone copy of the corpus under ``target``."""
    target = Path(target)
    try:
        (target / RECORDS_DIR).mkdir(parents=True, exist_ok=True)
        for rid in sorted(corpus.records):
            doc = corpus.records[rid]
            atomic_write(target / RECORDS_DIR / record_filename(doc), dump_record(doc))
        atomic_write(target / LABELS_FILE, dump_labels(corpus.labels))
        cases = corpus.root / CASES_FILE
        if cases.exists():
            atomic_write(target / CASES_FILE, cases.read_text(encoding="utf-8"))
    except OSError as exc:
        raise StoreError(f"cannot export to {target}: {exc}") from exc
    return len(corpus.records)
