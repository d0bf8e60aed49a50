"""``rvd`` command-line interface.

Exit codes: 0 ok, 1 violations/findings, 2 usage error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import datetime as dt
import os
import sys
import textwrap
from pathlib import Path
from typing import IO, Sequence

import yaml

from . import analytics, dedup, disclosure, store
from .records import ValidationReport
from .severity import VectorError, bucket, cvss_base_score, parse_vector

EXIT_OK, EXIT_FINDINGS, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3

MODEL_FILE = "dedup-model.yml"
LABEL_LOG = "dedup-labels.log"

PROMPT = "Duplicate? [d]uplicate / [n]ot duplicate / [s]kip: "
ANSWERS = {"d": dedup.DUPLICATE, "n": dedup.DISTINCT, "s": None}


class UsageError(Exception):
    pass


class Console:
    def __init__(self, stdin: IO[str] | None = None, stdout: IO[str] | None = None,
                 stderr: IO[str] | None = None):
        self.stdin = stdin or sys.stdin
        self.stdout = stdout or sys.stdout
        self.stderr = stderr or sys.stderr

    def out(self, *parts) -> None:
        print(*parts, file=self.stdout)

    def err(self, *parts) -> None:
        print(*parts, file=self.stderr)


# --- validate ---------------------------------------------------------------

def _record_files(paths: Sequence[str]) -> list[Path]:
    files: list[Path] = []
    for p in map(Path, paths):
        if p.is_dir():
            files += sorted(f for f in p.rglob("*.yml") if not f.name.startswith("."))
        elif p.is_file():
            files.append(p)
        else:
            raise UsageError(f"no such file or directory: {p}")
    return files


def _check_file(path: Path) -> ValidationReport:
    try:
        raw = store.parse_record_text(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        report = ValidationReport()
        report.add("", "parse", str(exc).splitlines()[0])
        return report
    return store.check_document(raw)[1]


def cmd_validate(args, con: Console) -> int:
    files = _record_files(args.paths)
    failed = 0
    for path in files:
        report = _check_file(path)
        for w in report.warnings:
            con.err(f"{path}: warning: {w}")
        if report.ok:
            con.out(f"{path}: ok")
        else:
            failed += 1
            for v in report.violations:
                con.out(f"{path}: {v}")
    con.out(f"{len(files)} file(s) checked, {failed} invalid")
    return EXIT_FINDINGS if failed else EXIT_OK


# --- add / score / export ---------------------------------------------------

def cmd_add(args, con: Console) -> int:
    path = Path(args.file)
    if not path.is_file():
        raise UsageError(f"no such file: {path}")
    try:
        raw = store.parse_record_text(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        con.out(f"{path}: : [parse] {str(exc).splitlines()[0]}")
        return EXIT_FINDINGS
    with store.writer_lock(args.root):
        corpus = store.load_corpus(args.root)
        try:
            corpus, rid = store.add_record(corpus, raw if isinstance(raw, dict) else {},
                                           author=args.author)
        except store.RecordRejected as exc:
            for v in exc.report.violations:
                con.out(f"{path}: {v}")
            return EXIT_FINDINGS
    con.out(f"added record {rid} ({corpus.files[rid].name}), labelled '{store.TRIAGE}'")
    return EXIT_OK


def _score_vector(text: str, con: Console) -> float:
    vec = parse_vector(text)
    score = cvss_base_score(vec)
    con.out(f"vector: {vec}")
    con.out(f"base score: {score:.1f} ({bucket(score).label})")
    if vec.extensions:
        con.out("extensions: " + "/".join(f"{k}:{v}" for k, v in vec.extensions.items()))
    return score


def cmd_score(args, con: Console) -> int:
    try:
        if args.vector:
            _score_vector(args.vector, con)
            return EXIT_OK
        corpus = store.load_corpus(args.root)
        if args.id not in corpus.records:
            raise UsageError(f"no record with id {args.id}")
        sev = corpus.records[args.id]["severity"]
        text = sev.get("cvss-vector")
        if not text or text in ("None", "N/A"):
            con.out(f"record {args.id}: no CVSS vector (cvss-score {sev.get('cvss-score', 'None')})")
            return EXIT_OK
        computed = _score_vector(text, con)
    except VectorError as exc:
        con.err(f"invalid vector: {exc}")
        return EXIT_FINDINGS
    stored = sev.get("cvss-score")
    if isinstance(stored, (int, float)) and not isinstance(stored, bool):
        if round(float(stored), 1) != computed:
            con.out(f"record {args.id}: stored cvss-score {stored} disagrees with {computed:.1f}")
            return EXIT_FINDINGS
        con.out(f"record {args.id}: stored cvss-score {stored} consistent")
    return EXIT_OK


def cmd_export(args, con: Console) -> int:
    corpus = store.load_corpus(args.root)
    n = store.export_corpus(corpus, args.target)
    con.out(f"exported {n} record(s) to {args.target}")
    return EXIT_OK


# --- report -----------------------------------------------------------------

def cmd_report(args, con: Console) -> int:
    corpus = store.load_corpus(args.root)
    modes = ("pessimistic", "optimistic") if args.imputation == "both" else (args.imputation,)
    text = analytics.build_report(corpus.records, modes)
    out = Path(args.output) if args.output else Path(args.root) / store.REPORT_FILE
    store.atomic_write(out, text)
    con.out(f"total: {len(corpus.records)}")
    con.out(f"report written to {out}")
    return EXIT_OK


# --- deadlines --------------------------------------------------------------

def cmd_deadlines(args, con: Console) -> int:
    today = disclosure.parse_date(args.today) if args.today else dt.date.today()
    cases = disclosure.load_cases(Path(args.root) / store.CASES_FILE)
    late = {c.record_id for c in disclosure.overdue_cases(cases, today)}
    for c in sorted(cases, key=lambda c: (c.deadline or dt.date.max, c.record_id)):
        deadline = c.deadline.isoformat() if c.deadline else "-"
        flag = "  OVERDUE" if c.record_id in late else ""
        con.out(f"record {c.record_id}: state={c.state.value} deadline={deadline}{flag}")
    con.out(f"{len(cases)} case(s), {len(late)} overdue as of {today.isoformat()}")
    return EXIT_FINDINGS if late else EXIT_OK


def cmd_case(args, con: Console) -> int:
    path = Path(args.root) / store.CASES_FILE
    with store.writer_lock(args.root):
        corpus = store.load_corpus(args.root)
        if args.record_id not in corpus.records:
            raise UsageError(f"no record with id {args.record_id}")
        cases = disclosure.load_cases(path)
        current = next((c for c in cases if c.record_id == args.record_id),
                       disclosure.DisclosureCase(args.record_id))
        try:
            updated = disclosure.transition(current, args.event, args.on)
        except (disclosure.TransitionError, ValueError) as exc:
            con.err(str(exc))
            return EXIT_FINDINGS
        cases = [c for c in cases if c.record_id != args.record_id] + [updated]
        store.atomic_write(path, disclosure.dump_cases(sorted(cases, key=lambda c: c.record_id)))
    con.out(f"record {updated.record_id}: {updated.state.value}, deadline "
            f"{updated.deadline.isoformat() if updated.deadline else '-'}")
    return EXIT_OK


# --- dedup ------------------------------------------------------------------

def _load_model(root: str) -> dedup.DedupModel | None:
    path = Path(root) / MODEL_FILE
    return dedup.DedupModel.load(path) if path.exists() else None


def _side_by_side(a: dict, b: dict, width: int = 36) -> list[str]:
    rows = [("id", a["id"], b["id"]), ("title", a["title"], b["title"]),
            ("vendor", a.get("vendor"), b.get("vendor")),
            ("system", a.get("system"), b.get("system")),
            ("cve", a.get("cve"), b.get("cve")), ("cwe", a.get("cwe"), b.get("cwe")),
            ("description", a.get("description"), b.get("description"))]
    lines = []
    for name, va, vb in rows:
        wa = textwrap.wrap(str(va), width) or [""]
        wb = textwrap.wrap(str(vb), width) or [""]
        if name == "description":
            wa, wb = wa[:4], wb[:4]
        for i in range(max(len(wa), len(wb))):
            left = wa[i] if i < len(wa) else ""
            right = wb[i] if i < len(wb) else ""
            lines.append(f"  {name if i == 0 else '':<12}| {left:<{width}} | {right}".rstrip())
    return lines


def label_session(queries: Sequence[dedup.CandidatePair], records: dict, model,
                  con: Console, labeler: str) -> list[dedup.LabeledPair]:
    """Ask about each queued pair on the console; stops early at end of input."""
    labels = []
    for n, q in enumerate(queries, 1):
        p = dedup.predict(model or dedup.DedupModel.prior(), q.features)
        con.out(f"[{n}/{len(queries)}] records {q.id_a} and {q.id_b} (p={p:.3f})")
        for line in _side_by_side(records[q.id_a], records[q.id_b]):
            con.out(line)
        while True:
            con.stdout.write(PROMPT)
            con.stdout.flush()
            reply = con.stdin.readline()
            if not reply:
                con.out("")
                return labels
            key = reply.strip().lower()[:1]
            if key in ANSWERS:
                break
            con.out("please answer d, n or s")
        if ANSWERS[key] is not None:
            labels.append(dedup.LabeledPair(q.id_a, q.id_b, q.features, ANSWERS[key], labeler))
    return labels


def cmd_dedup(args, con: Console) -> int:
    root = Path(args.root)
    log_path = root / LABEL_LOG
    if args.action == "train":
        labels = dedup.read_label_log(log_path)
        hyper = dedup.Hyperparameters(args.lam, args.learning_rate, args.epochs, args.seed)
        try:
            model = dedup.train(labels, hyper)
        except dedup.DegenerateDataError as exc:
            con.err(f"cannot train: {exc}")
            return EXIT_FINDINGS
        model.save(root / MODEL_FILE)
        con.out(f"trained on {len(labels)} label(s); final loss "
                f"{model.loss_history[-1]:.6f}; model written to {root / MODEL_FILE}")
        return EXIT_OK

    model = _load_model(args.root)
    if args.action == "apply" and model is None:
        raise UsageError(f"no model at {root / MODEL_FILE}; run 'dedup train' first")
    corpus = store.load_corpus(root)
    pairs = dedup.candidate_pairs(corpus.records, all_pairs=args.all_pairs)

    if args.action == "scan":
        probs = dedup.predict_many(model or dedup.DedupModel.prior(), pairs)
        for p, pr in zip(pairs, probs):
            con.out(f"{p.id_a}\t{p.id_b}\t{pr:.3f}")
        con.out(f"{len(pairs)} candidate pair(s) among {len(corpus.records)} record(s)")
        return EXIT_OK

    if args.action == "label":
        labels = dedup.read_label_log(log_path)
        done = {lp.key for lp in labels}
        unlabeled = [p for p in pairs if p.key not in done]
        queries = dedup.next_queries(model, unlabeled, labels, args.k)
        if args.list:
            for q in queries:
                p = dedup.predict(model or dedup.DedupModel.prior(), q.features)
                con.out(f"{q.id_a}\t{q.id_b}\t{p:.3f}")
            return EXIT_OK
        new = label_session(queries, corpus.records, model, con, args.labeler)
        dedup.append_label_log(log_path, new)
        con.out(f"{len(new)} label(s) appended to {log_path}")
        return EXIT_OK

    clusters = [c for c in dedup.find_duplicates(corpus.records, model, args.threshold,
                                                 pairs=pairs) if len(c.members) > 1]
    for c in clusters:
        con.out(f"cluster {c.canonical}: " + ", ".join(map(str, c.members)))
    con.out(f"{len(clusters)} duplicate cluster(s)")
    if args.label and clusters:
        with store.writer_lock(root):
            extra = [m for c in clusters for m in c.members if m != c.canonical]
            store.add_labels(store.load_corpus(root), extra, store.DUPLICATE, args.author)
        con.out(f"labelled {len(extra)} record(s) '{store.DUPLICATE}'")
    return EXIT_OK


# --- entry point ------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rvd", description="Robot vulnerability database tools")
    parser.add_argument("--root", default=os.environ.get("RVD_ROOT", "."),
                        help="corpus root (default: $RVD_ROOT or the current directory)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check record files against the schema")
    p.add_argument("paths", nargs="+")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("add", help="add a record to the corpus")
    p.add_argument("file")
    p.add_argument("--author", default=os.environ.get("USER", ""))
    p.set_defaults(func=cmd_add)

    p = sub.add_parser("score", help="parse a CVSS vector and compute its base score")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--vector")
    g.add_argument("--id", type=int)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("dedup", help="duplicate detection")
    p.add_argument("action", choices=("scan", "label", "train", "apply"))
    p.add_argument("--all-pairs", action="store_true", help="skip blocking")
    p.add_argument("-k", type=int, default=10, help="pairs per labeling session")
    p.add_argument("--labeler", default=os.environ.get("USER", ""))
    p.add_argument("--list", action="store_true", help="print the label queue and exit")
    p.add_argument("--lambda", dest="lam", type=float, default=0.01)
    p.add_argument("--learning-rate", type=float, default=0.1)
    p.add_argument("--epochs", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--label", action="store_true", help="tag non-canonical members 'duplicate'")
    p.add_argument("--author", default=os.environ.get("USER", ""))
    p.set_defaults(func=cmd_dedup)

    p = sub.add_parser("report", help="regenerate README.md statistics")
    p.add_argument("--imputation", choices=("pessimistic", "optimistic", "both"), default="both")
    p.add_argument("--output")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("deadlines", help="list disclosure deadlines, flag overdue cases")
    p.add_argument("--today")
    p.set_defaults(func=cmd_deadlines)

    p = sub.add_parser("case", help="advance a record's disclosure case")
    p.add_argument("record_id", type=int)
    p.add_argument("event", choices=("report", "fix", "disclose"))
    p.add_argument("--on", default=dt.date.today().isoformat())
    p.set_defaults(func=cmd_case)

    p = sub.add_parser("export", help="write a full copy of the corpus")
    p.add_argument("target")
    p.set_defaults(func=cmd_export)
    return parser


def main(argv: Sequence[str] | None = None, stdin: IO[str] | None = None,
         stdout: IO[str] | None = None, stderr: IO[str] | None = None) -> int:
    con = Console(stdin, stdout, stderr)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args, con)
    except (UsageError, ValueError) as exc:
        con.err(f"rvd: error: {exc}")
        return EXIT_USAGE
    except (store.StoreError, OSError) as exc:
        con.err(f"rvd: {exc}")
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
