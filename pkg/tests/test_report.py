import json
import os

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import DATA
from refdoc.classify import Category
from refdoc.corpus import CommitRecord, RefactoringCommit, RefactoringOperation, kind_levels
from refdoc.errors import UnclassifiedPath
from refdoc.report import (
    category_distribution,
    emit,
    label_split_report,
    pattern_test_report,
    prod_test_matrix,
)
from refdoc.sarpatterns import compile_pattern
from refdoc.stats import mann_whitney_u
from refdoc.testdetect import FileKind

LEVELS = kind_levels()


def refc(i, ops):
    c = CommitRecord("p", f"{i:040x}", "a", 0, "m")
    return RefactoringCommit(c, tuple(RefactoringOperation(k, "", LEVELS[k], tuple(paths)) for k, paths in ops))


def test_category_distribution_examples():
    single = category_distribution([Category.BugFix])
    assert single.per_category[Category.BugFix] == (1, 100.0) and single.total == 1
    even = category_distribution(list(Category))
    assert all(p == 20.0 for _, p in even.per_category.values())


def test_golden_categories_csv(tmp_path):
    path = emit(category_distribution(list(Category)), "csv", tmp_path)
    with open(os.path.join(DATA, "categories_5x20.csv"), "rb") as fh:
        assert open(path, "rb").read() == fh.read()


@settings(max_examples=100, deadline=None)
@given(st.lists(st.sampled_from(list(Category)), min_size=1, max_size=200))
def test_distribution_sums(labels):
    d = category_distribution(labels)
    assert sum(n for n, _ in d.per_category.values()) == d.total == len(labels)
    assert abs(sum(p for _, p in d.per_category.values()) - 100.0) <= 0.1


def fixture():
    commits = [
        refc(1, [("Extract Method", ["src/A.java"]), ("Move Class", ["src/A.java", "test/ATest.java"])]),
        refc(2, [("Extract Method", ["test/ATest.java"])]),
        refc(3, [("Rename Method", ["src/B.java", "Broken.java"]), ("Rename Method", ["Broken.java"])]),
    ]
    labels = {commits[0].commit.sha: Category.InternalQA, commits[1].commit.sha: "BugFix",
              commits[2].commit.sha: Category.InternalQA}
    kinds = {"src/A.java": FileKind.production, "test/ATest.java": "test", "src/B.java": FileKind.production,
             "Broken.java": FileKind.unparseable}
    return commits, labels, kinds


def test_prod_test_matrix_hand_tally():
    m = prod_test_matrix(*fixture())
    I, B = Category.InternalQA, Category.BugFix
    prod, test = FileKind.production, FileKind.test
    assert m.cells[("Extract Method", I, prod)] == (1, 50.0)
    assert m.cells[("Rename Method", I, prod)] == (1, 50.0)
    assert m.cells[("Move Class", I, test)] == (1, 100.0)
    assert m.cells[("Extract Method", B, test)] == (1, 100.0)
    assert m.cells[("Move Class", I, prod)] == (0, 0.0)
    assert m.total() == 4 and m.skipped == 1  # the unparseable-only operation
    assert m.kinds() == ["Extract Method", "Move Class", "Rename Method"]


def test_majority_attribution():
    commits, labels, kinds = fixture()
    kinds = dict(kinds, **{"src/C.java": FileKind.production})
    commits.append(refc(4, [("Move Class", ["src/A.java", "src/C.java", "test/ATest.java"])]))
    labels[commits[-1].commit.sha] = Category.CodeSmell
    m = prod_test_matrix(commits, labels, kinds, attribution="majority")
    assert m.cells[("Move Class", Category.CodeSmell, FileKind.production)][0] == 1
    assert m.cells[("Move Class", Category.InternalQA, FileKind.test)][0] == 1  # 1 of 2 counts as test
    with pytest.raises(ValueError):
        prod_test_matrix(commits, labels, kinds, attribution="all")


def test_prod_test_matrix_errors_and_no_tests():
    commits, labels, kinds = fixture()
    with pytest.raises(UnclassifiedPath):
        prod_test_matrix(commits, labels, {})
    with pytest.raises(ValueError):
        prod_test_matrix(commits, {}, kinds)
    only_prod = {p: FileKind.production for p in kinds}
    m = prod_test_matrix(commits, labels, only_prod)
    assert all(n == 0 for (_, _, f), (n, _) in m.cells.items() if f is FileKind.test)


op_st = st.tuples(st.sampled_from(sorted(LEVELS)), st.lists(st.sampled_from(["a.java", "b.java", "c.java", "d.java"]), max_size=3))


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.lists(op_st, min_size=1, max_size=4), st.sampled_from(list(Category))), max_size=12),
       st.fixed_dictionaries({p: st.sampled_from(list(FileKind)) for p in ["a.java", "b.java", "c.java", "d.java"]}),
       st.sampled_from(["any", "majority"]))
def test_matrix_conservation_and_columns(rows, kinds, attribution):
    commits = [refc(i, ops) for i, (ops, _) in enumerate(rows)]
    labels = {c.commit.sha: cat for c, (_, cat) in zip(commits, rows)}
    m = prod_test_matrix(commits, labels, kinds, attribution)
    total_ops = sum(len(c.operations) for c in commits)
    classifiable = sum(1 for c in commits for o in c.operations
                       if any(kinds[p] is not FileKind.unparseable for p in o.involved_paths))
    assert m.total() == classifiable and m.total() + m.skipped == total_ops
    for c in Category:
        for f in (FileKind.production, FileKind.test):
            col = [p for (_, cc, ff), (_, p) in m.cells.items() if cc == c and ff == f]
            if m.column_total(c, f):
                assert abs(sum(col) - 100.0) <= 0.1


def test_empty_matrix_is_header_only(tmp_path):
    m = prod_test_matrix([], {}, {})
    path = emit(m, "csv", tmp_path)
    assert open(path).read() == "refactoring_kind,category,file_kind,count,percentage\n"


@pytest.mark.parametrize("fmt", ["csv", "json", "plot"])
def test_emission_is_byte_stable(tmp_path, fmt):
    reports = [category_distribution([Category.BugFix, Category.CodeSmell, Category.BugFix]),
               prod_test_matrix(*fixture()),
               label_split_report({"Move Class": (3, 1), "Extract Method": (0, 2)}, "refactor*")]
    if fmt != "plot":
        p = compile_pattern("refactor*", id=0)
        reports.append(pattern_test_report({p: mann_whitney_u([3, 4], [1, 2])}))
    for r in reports:
        a = open(emit(r, fmt, tmp_path / "a"), "rb").read()
        b = open(emit(r, fmt, tmp_path / "b"), "rb").read()
        assert a == b and len(a) > 0


def test_json_and_label_split_content(tmp_path):
    r = label_split_report({"Move Class": (3, 1), "Extract Method": (0, 0)}, "refactor*")
    data = json.loads(open(emit(r, "json", tmp_path)).read())
    assert data["per_kind"]["Move Class"] == {"labeled": 3, "unlabeled": 1, "labeled_percentage": 75.0,
                                             "unlabeled_percentage": 25.0}
    rows = open(emit(r, "csv", tmp_path)).read().splitlines()
    assert rows[1:] == ["Extract Method,0,0,0.00,0.00", "Move Class,3,1,75.00,25.00"]


def test_pattern_report_keeps_full_precision(tmp_path):
    p = compile_pattern("refactor*", id=3)
    res = mann_whitney_u([5, 6, 7], [1, 2, 3])
    r = pattern_test_report({p: res})
    line = open(emit(r, "csv", tmp_path)).read().splitlines()[1]
    assert line == f"3,generic,refactor*,9.0,{res.p_value!r},false"  # p == alpha is not below it
    with pytest.raises(ValueError):
        emit(r, "plot", tmp_path)
    with pytest.raises(ValueError):
        emit(r, "xml", tmp_path)


def test_plot_files_are_png(tmp_path):
    path = emit(category_distribution([Category.BugFix]), "plot", tmp_path)
    assert path.endswith("categories.png")
    assert open(path, "rb").read(8) == b"\x89PNG\r\n\x1a\n"
