"""Summary tables and figures: category shares, production/test matrix,
labeled/unlabeled split and pattern significance.

All emitters are byte-stable: rows and keys are sorted, percentages carry
two decimals and p-values keep full float precision.
"""

from __future__ import annotations

import csv
import io
import json
import os
from collections import Counter, defaultdict
from dataclasses import dataclass, field

from .classify.core import Category, parse_category
from .errors import UnclassifiedPath
from .testdetect import FileKind

__all__ = [
    "CategoryDistribution",
    "ProdTestMatrix",
    "LabelSplitReport",
    "PatternTestReport",
    "category_distribution",
    "prod_test_matrix",
    "label_split_report",
    "pattern_test_report",
    "emit",
    "FORMATS",
]

FORMATS = ("csv", "json", "plot")
FILE_KINDS = (FileKind.production, FileKind.test)


def _pct(part, whole) -> float:
    return 100.0 * part / whole if whole else 0.0


def _fmt_pct(x: float) -> str:
    return f"{x:.2f}"


@dataclass
class CategoryDistribution:
    per_category: dict  # Category -> (count, percentage)
    total: int
    name: str = "categories"

    def header(self):
        return ["category", "count", "percentage"]

    def rows(self):
        return [[c.name, n, _fmt_pct(p)] for c, (n, p) in self.per_category.items()]

    def to_json(self):
        return {
            "total": self.total,
            "per_category": {c.name: {"count": n, "percentage": round(p, 2)} for c, (n, p) in self.per_category.items()},
        }


@dataclass
class ProdTestMatrix:
    cells: dict  # (kind, Category, FileKind) -> (count, column percentage)
    attribution: str = "any"
    skipped: int = 0  # operations without any classifiable path
    name: str = "prodtest"

    def column_total(self, category, file_kind) -> int:
        return sum(n for (k, c, f), (n, _) in self.cells.items() if c == category and f == file_kind)

    def total(self) -> int:
        return sum(n for n, _ in self.cells.values())

    def kinds(self):
        return sorted({k for k, _, _ in self.cells})

    def header(self):
        return ["refactoring_kind", "category", "file_kind", "count", "percentage"]

    def rows(self):
        keys = sorted(self.cells, key=lambda t: (t[0], int(t[1]), t[2].value))
        return [[k, c.name, f.value, *self._cell(k, c, f)] for k, c, f in keys]

    def _cell(self, k, c, f):
        n, p = self.cells[(k, c, f)]
        return [n, _fmt_pct(p)]

    def to_json(self):
        out = defaultdict(dict)
        for k, c, f in self.cells:
            n, p = self.cells[(k, c, f)]
            out[f"{c.name}/{f.value}"][k] = {"count": n, "percentage": round(p, 2)}
        return {"attribution": self.attribution, "skipped": self.skipped, "columns": dict(out)}


@dataclass
class LabelSplitReport:
    per_kind: dict  # kind -> (labeled, unlabeled)
    patterns: str = ""
    name: str = "labelsplit"

    def header(self):
        return ["refactoring_kind", "labeled", "unlabeled", "labeled_percentage", "unlabeled_percentage"]

    def rows(self):
        rows = []
        for kind in sorted(self.per_kind):
            a, b = self.per_kind[kind]
            rows.append([kind, a, b, _fmt_pct(_pct(a, a + b)), _fmt_pct(_pct(b, a + b))])
        return rows

    def to_json(self):
        return {
            "patterns": self.patterns,
            "per_kind": {
                k: {
                    "labeled": a,
                    "unlabeled": b,
                    "labeled_percentage": round(_pct(a, a + b), 2),
                    "unlabeled_percentage": round(_pct(b, a + b), 2),
                }
                for k, (a, b) in sorted(self.per_kind.items())
            },
        }


@dataclass
class PatternTestReport:
    rows_: list = field(default_factory=list)  # (id, scope, template, u, p, significant)
    alpha: float = 0.05
    name: str = "sarsignificance"

    def header(self):
        return ["pattern_id", "scope", "template", "u_statistic", "p_value", "significant"]

    def rows(self):
        return [[i, s, t, repr(float(u)), repr(float(p)), str(bool(sig)).lower()] for i, s, t, u, p, sig in sorted(self.rows_)]

    def to_json(self):
        return {
            "alpha": self.alpha,
            "patterns": [
                {"id": i, "scope": s, "template": t, "u_statistic": float(u), "p_value": float(p), "significant": bool(sig)}
                for i, s, t, u, p, sig in sorted(self.rows_)
            ],
        }


def _label_of(item) -> Category:
    return parse_category(getattr(item, "label", item))


def category_distribution(classified) -> CategoryDistribution:
    """Counts and percentages per category (all five always present)."""
    counts = Counter(_label_of(x) for x in classified)
    total = sum(counts.values())
    return CategoryDistribution({c: (counts[c], _pct(counts[c], total)) for c in Category}, total)


def _op_file_kind(paths, file_kinds, attribution):
    kinds = []
    for path in paths:
        if path not in file_kinds:
            raise UnclassifiedPath(f"no file kind for {path!r}")
        fk = FileKind(file_kinds[path])
        if fk is not FileKind.unparseable:
            kinds.append(fk)
    if not kinds:
        return None
    n_test = sum(k is FileKind.test for k in kinds)
    if attribution == "any":
        return FileKind.test if n_test else FileKind.production
    # majority of involved paths; an even split counts as test
    return FileKind.test if 2 * n_test >= len(kinds) else FileKind.production


def prod_test_matrix(refcommits, labels, file_kinds, attribution: str = "any") -> ProdTestMatrix:
    """Tally operations by (kind, commit category, file kind).

    ``labels`` maps commit sha to category; ``file_kinds`` maps every
    involved path to a FileKind.  Under ``any`` an operation counts as test
    when at least one involved path is a test file; ``majority`` uses the
    more common kind.  Percentages are per (category, file kind) column.
    """
    if attribution not in ("any", "majority"):
        raise ValueError("attribution must be 'any' or 'majority'")
    tally = Counter()
    kinds = set()
    skipped = 0
    for rc in refcommits:
        sha = rc.commit.sha
        if sha not in labels:
            raise ValueError(f"commit {sha} has no category label")
        cat = parse_category(labels[sha])
        for op in rc.operations:
            kinds.add(op.kind)
            fk = _op_file_kind(op.involved_paths, file_kinds, attribution)
            if fk is None:
                skipped += 1
                continue
            tally[(op.kind, cat, fk)] += 1
    columns = Counter()
    for (k, c, f), n in tally.items():
        columns[(c, f)] += n
    cells = {}
    for k in sorted(kinds):
        for c in Category:
            for f in FILE_KINDS:
                n = tally[(k, c, f)]
                cells[(k, c, f)] = (n, _pct(n, columns[(c, f)]))
    return ProdTestMatrix(cells, attribution, skipped)


def label_split_report(split: dict, patterns: str = "") -> LabelSplitReport:
    return LabelSplitReport(dict(split), patterns)


def pattern_test_report(results: dict, alpha: float = 0.05) -> PatternTestReport:
    """Build from ``{SarPattern: RankTestResult}`` as returned by ``pattern_pvalues``."""
    rows = [(p.id, p.scope, p.text, r.u_statistic, r.p_value, r.p_value < alpha) for p, r in results.items()]
    return PatternTestReport(rows, alpha)


# --- emission -----------------------------------------------------------------

def _csv_bytes(report) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(report.header())
    writer.writerows(report.rows())
    return buf.getvalue().encode("utf-8")


def _json_bytes(report) -> bytes:
    return (json.dumps(report.to_json(), sort_keys=True, indent=2, ensure_ascii=False) + "\n").encode("utf-8")


def _plot(report, path):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    if isinstance(report, CategoryDistribution):
        fig, ax = plt.subplots(figsize=(6, 6))
        items = [(c.name, n) for c, (n, _) in report.per_category.items() if n > 0]
        if items:
            ax.pie([n for _, n in items], labels=[name for name, _ in items], autopct="%1.1f%%", startangle=90, counterclock=False)
        ax.set_title("Commits per category")
        ax.axis("equal")
    elif isinstance(report, LabelSplitReport):
        kinds = sorted(report.per_kind)
        lab = [_pct(*report.per_kind[k]) if sum(report.per_kind[k]) else 0.0 for k in kinds]
        fig, ax = plt.subplots(figsize=(8, max(2.0, 0.3 * len(kinds) + 1)))
        ax.barh(kinds, lab, label="labeled")
        ax.barh(kinds, [100.0 - v if sum(report.per_kind[k]) else 0.0 for k, v in zip(kinds, lab)], left=lab, label="unlabeled")
        ax.set_xlim(0, 100)
        ax.set_xlabel("% of operations")
        ax.legend(loc="lower right")
    elif isinstance(report, ProdTestMatrix):
        kinds = report.kinds()
        cols = [(c, f) for c in Category for f in FILE_KINDS]
        grid = [[report.cells[(k, c, f)][1] for c, f in cols] for k in kinds] or [[0.0] * len(cols)]
        fig, ax = plt.subplots(figsize=(10, max(2.0, 0.3 * len(kinds) + 1.5)))
        im = ax.imshow(grid, aspect="auto", cmap="Blues", vmin=0, vmax=100)
        ax.set_xticks(range(len(cols)))
        ax.set_xticklabels([f"{c.name}\n{f.value}" for c, f in cols], fontsize=7)
        ax.set_yticks(range(len(kinds)))
        ax.set_yticklabels(kinds, fontsize=7)
        fig.colorbar(im, ax=ax, label="% of column")
    else:
        raise ValueError(f"no plot for {type(report).__name__}")
    fig.tight_layout()
    fig.savefig(path, format="png", metadata={"Software": None})
    plt.close(fig)


def emit(report, fmt: str, out_dir, stem: str | None = None) -> str:
    """Write ``report`` into ``out_dir`` and return the file path."""
    if fmt not in FORMATS:
        raise ValueError(f"format must be one of {FORMATS}")
    os.makedirs(out_dir, exist_ok=True)
    stem = stem or report.name
    ext = {"csv": "csv", "json": "json", "plot": "png"}[fmt]
    path = os.path.join(out_dir, f"{stem}.{ext}")
    if fmt == "plot":
        _plot(report, path)
        return path
    data = _csv_bytes(report) if fmt == "csv" else _json_bytes(report)
    with open(path, "wb") as fh:
        fh.write(data)
    return path
