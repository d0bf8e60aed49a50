import os
import shutil
import threading

import pytest

from rvdtools import store
from rvdtools.store import (
    DuplicateIdError,
    RecordRejected,
    StoreError,
    add_record,
    assign_id,
    dump_record,
    export_corpus,
    load_corpus,
    writer_lock,
)

from conftest import TABLE1_ROOT, minimal_record


def write(root, name, doc):
    path = root / "records" / name
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dump_record(doc), encoding="utf-8")
    return path


@pytest.fixture
def root(tmp_path):
    r = tmp_path / "rvd"
    r.mkdir()
    return r


def test_two_valid_files(root):
    write(root, "0.a.yml", minimal_record(id=0))
    write(root, "1.b.yml", minimal_record(id=1, title="Other"))
    assert len(load_corpus(root)) == 2


def test_duplicate_id_names_both_files(root):
    write(root, "7.a.yml", minimal_record(id=7))
    write(root, "7.b.yml", minimal_record(id=7, title="Other"))
    with pytest.raises(DuplicateIdError) as info:
        load_corpus(root)
    assert "7.a.yml" in str(info.value) and "7.b.yml" in str(info.value)


def test_invalid_file_excluded_and_reported(root):
    write(root, "0.a.yml", minimal_record(id=0))
    bad = write(root, "1.long.yml", minimal_record(id=1, title="x" * 101))
    (root / "records" / "2.broken.yml").write_text("title: [unclosed\n")
    corpus = load_corpus(root)
    assert list(corpus.records) == [0]
    rejected = {p.name: r for p, r in corpus.rejected}
    assert ("title", "maxlength") in {(v.path, v.rule) for v in rejected[bad.name].violations}
    assert rejected["2.broken.yml"].violations[0].rule == "parse"


def test_missing_root(tmp_path):
    with pytest.raises(StoreError):
        load_corpus(tmp_path / "nope")


def test_dates_stay_strings(root):
    write(root, "0.a.yml", minimal_record(id=0, flaw={"date-detected": "2019-07-01"}))
    text = (root / "records" / "0.a.yml").read_text()
    assert "'2019-07-01'" in text
    (root / "records" / "0.a.yml").write_text(text.replace("'2019-07-01'", "2019-07-01"))
    assert load_corpus(root).records[0]["flaw"]["date-detected"] == "2019-07-01"


@pytest.mark.parametrize("ids,expected", [((0, 1, 5), 6), ((), 0), ((3,), 4)])
def test_assign_id(root, ids, expected):
    for i in ids:
        write(root, f"{i}.r.yml", minimal_record(id=i, title=f"r{i}"))
    assert assign_id(load_corpus(root)) == expected


def test_add_record(root):
    corpus = load_corpus(root)
    expected = assign_id(corpus)
    corpus, rid = add_record(corpus, minimal_record(), author="alice")
    assert rid == expected == 0
    assert "triage" in corpus.labels[rid]
    assert load_corpus(root) == corpus
    assert (root / "history.txt").read_text() == "add\t0\talice\n"
    assert corpus.files[0].name == "0.heap-overflow-in-joint-state-parser.yml"


def test_add_twice_distinct_increasing_ids(root):
    corpus = load_corpus(root)
    corpus, a = add_record(corpus, minimal_record())
    before = assign_id(corpus)
    corpus, b = add_record(corpus, minimal_record(title="Second"))
    assert a != b and b == before and assign_id(corpus) > before


def test_add_ignores_supplied_id(root):
    write(root, "4.x.yml", minimal_record(id=4))
    _, rid = add_record(load_corpus(root), minimal_record(id=1))
    assert rid == 5


def test_invalid_doc_writes_nothing(root):
    write(root, "0.a.yml", minimal_record(id=0))
    before = sorted(p.name for p in root.rglob("*"))
    with pytest.raises(RecordRejected) as info:
        add_record(load_corpus(root), minimal_record(title="x" * 101))
    assert "maxlength" in str(info.value)
    assert sorted(p.name for p in root.rglob("*")) == before


def test_crash_between_temp_write_and_rename(root, monkeypatch):
    corpus, _ = add_record(load_corpus(root), minimal_record())
    snapshot = load_corpus(root)

    def boom(src, dst):
        raise OSError("simulated crash")
    monkeypatch.setattr(store.os, "replace", boom)
    with pytest.raises(OSError):
        add_record(corpus, minimal_record(title="Never lands"))
    monkeypatch.undo()
    assert load_corpus(root) == snapshot
    assert not [p for p in root.rglob("*.tmp")]


def test_crash_leaving_stray_temp_file(root):
    add_record(load_corpus(root), minimal_record())
    (root / "records" / ".1.partial.yml.abc.tmp").write_text("title: [half")
    assert len(load_corpus(root)) == 1


def test_concurrent_adds_unique_ids(root):
    errors = []

    def worker(n):
        try:
            for i in range(5):
                with writer_lock(root):
                    add_record(load_corpus(root), minimal_record(title=f"w{n} r{i}"))
        except Exception as exc:  # pragma: no cover
            errors.append(exc)
    threads = [threading.Thread(target=worker, args=(n,)) for n in range(4)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert not errors
    assert sorted(load_corpus(root).records) == list(range(20))


def test_export_roundtrip(tmp_path):
    corpus = load_corpus(TABLE1_ROOT)
    assert export_corpus(corpus, tmp_path / "copy") == 110
    assert len(list((tmp_path / "copy" / "records").glob("*.yml"))) == 110
    assert load_corpus(tmp_path / "copy") == corpus


def test_export_empty(tmp_path, root):
    assert export_corpus(load_corpus(root), tmp_path / "out") == 0
    assert list((tmp_path / "out" / "records").iterdir()) == []


def test_export_copies_cases(tmp_path, root):
    (root / "cases.txt").write_text("record_id,vendor_contacted_on,state,deadline,disclosed_on\n")
    export_corpus(load_corpus(root), tmp_path / "out")
    assert (tmp_path / "out" / "cases.txt").exists()


@pytest.mark.skipif(os.geteuid() == 0, reason="root ignores permissions")
def test_export_unwritable(tmp_path, root):
    target = tmp_path / "ro"
    target.mkdir()
    target.chmod(0o500)
    with pytest.raises(StoreError):
        export_corpus(load_corpus(TABLE1_ROOT), target / "x")


def test_export_target_is_file(tmp_path):
    target = tmp_path / "file"
    target.write_text("")
    with pytest.raises(StoreError):
        export_corpus(load_corpus(TABLE1_ROOT), target)


def test_labels_file_format(root):
    corpus, rid = add_record(load_corpus(root), minimal_record())
    store.add_labels(corpus, [rid], "duplicate", "bob")
    assert (root / "labels.txt").read_text() == "0:duplicate\n0:triage\n"
    (root / "labels.txt").write_text("zero:triage\n")
    with pytest.raises(StoreError):
        load_corpus(root)


def test_fixture_matches_generator(tmp_path):
    import subprocess
    import sys
    gen = tmp_path / "gen"
    shutil.copy(TABLE1_ROOT.parent / "make_table1.py", gen.with_suffix(".py"))
    subprocess.run([sys.executable, str(gen.with_suffix(".py"))], check=True)
    assert load_corpus(tmp_path / "table1") == load_corpus(TABLE1_ROOT)
