"""Command-line entry point: ``refdoc <command> ...``.

Every flag can also come from a ``key = value`` config file given with
``--config``; command-line flags take precedence.  ``REFDOC_SEED`` sets the
default seed (42 otherwise).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys

from .corpus import DEFAULT_SAMPLE_SIZE

log = logging.getLogger("refdoc")


def default_seed() -> int:
    return int(os.environ.get("REFDOC_SEED", "42"))


def read_config(path) -> dict:
    """Parse ``key = value`` lines; '#' starts a comment, quotes are stripped."""
    cfg = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line or (line.startswith("[") and line.endswith("]")):
                continue
            if "=" not in line:
                raise SystemExit(f"{path}:{lineno}: expected key = value")
            key, value = (part.strip() for part in line.split("=", 1))
            if len(value) >= 2 and value[0] == value[-1] and value[0] in "\"'":
                value = value[1:-1]
            cfg[key.replace("-", "_")] = value
    return cfg


def _apply_config(parser: argparse.ArgumentParser, cfg: dict) -> None:
    """Turn config entries into parser defaults so explicit flags still win."""
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            for sub in action.choices.values():
                _apply_config(sub, cfg)
            continue
        if action.dest not in cfg or not action.option_strings:
            continue
        value = cfg[action.dest]
        if isinstance(action, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
            value = value.lower() in ("1", "true", "yes", "on")
        elif action.nargs in ("+", "*"):
            value = [action.type(v) if action.type else v for v in value.replace(",", " ").split()]
        action.default = value
        action.required = False


# --- commands -------------------------------------------------------------------

def cmd_mine(args) -> int:
    from .corpus import (
        ProjectRef,
        compute_corpus_stats,
        ingest_repository,
        join_refactorings,
        parse_refminer_json,
        sample_nonrefactoring,
        write_ndjson,
    )
    from .errors import InsufficientCandidates

    os.makedirs(args.out, exist_ok=True)
    projects, commits, refcommits, orphans = [], [], [], []
    for origin in args.repos:
        pid = os.path.basename(os.path.normpath(origin.rstrip("/")))
        pid = pid[:-4] if pid.endswith(".git") else pid
        ref = ProjectRef(pid, origin, args.branch)
        projects.append(ref)
        mined = list(ingest_repository(ref))
        commits += mined
        ops = {}
        if args.refminer_json:
            path = os.path.join(args.refminer_json, pid + ".json")
            if os.path.exists(path):
                with open(path, "rb") as fh:
                    ops = parse_refminer_json(fh.read())
            else:
                log.warning("no Refactoring Miner output for %s at %s", pid, path)
        joined, missing = join_refactorings(mined, ops)
        refcommits += joined
        orphans += missing
        log.info("%s: %d commits, %d refactoring commits", pid, len(mined), len(joined))
    write_ndjson(commits, os.path.join(args.out, "commits.ndjson"))
    write_ndjson(refcommits, os.path.join(args.out, "refactoring_commits.ndjson"))
    stats = compute_corpus_stats(projects, commits, refcommits)
    with open(os.path.join(args.out, "corpus_stats.json"), "w", encoding="utf-8") as fh:
        fh.write(stats.to_json())
    if orphans:
        log.warning("%d Refactoring Miner commits not found in history", len(orphans))
    if args.sample_size:
        try:
            sample = sample_nonrefactoring(commits, refcommits, args.seed, args.sample_size)
        except InsufficientCandidates as exc:
            # the mined corpus is still valid; only the comparison sample is missing
            log.warning("no non-refactoring sample written: %s", exc)
        else:
            write_ndjson(sample, os.path.join(args.out, "nonrefactoring_sample.ndjson"))
    print(stats.to_json())
    return 0


def _ngram_config(args):
    from .features import NgramConfig

    lo, hi = (int(x) for x in args.ngram.split(","))
    return NgramConfig(lo, hi, args.max_features or None)


def cmd_train(args) -> int:
    from .classify import Hyperparams, evaluate, grid_search_cv, stratified_split, train
    from .pipeline import TextClassifier, load_grid, read_labeled_csv, vectorize

    kind = args.model.upper()
    labeled = read_labeled_csv(args.data)
    if args.test_frac > 0:
        train_raw, test_raw = stratified_split(labeled, args.test_frac, args.seed)
    else:
        train_raw, test_raw = labeled, []
    tfidf, train_set = vectorize(train_raw, _ngram_config(args))
    result = {"kind": kind, "seed": args.seed, "train_size": len(train_set), "test_size": len(test_raw)}
    if args.grid:
        best, score = grid_search_cv(kind, load_grid(args.grid, kind), train_set, args.folds, args.seed, n_features=len(tfidf))
        result["cv_micro_f1"] = score
    else:
        best = Hyperparams(kind)
    result["params"] = best.as_dict()
    model = train(kind, best, train_set, args.seed, n_features=len(tfidf))
    if test_raw:
        _, test_set = vectorize(test_raw, tfidf=tfidf)
        result["test"] = evaluate(model, test_set).to_dict()
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(TextClassifier(tfidf, model).dumps())
    print(json.dumps(result, sort_keys=True, indent=2))
    return 0


def _read_messages(path):
    """(sha, project_id, message) from commit NDJSON or labeled CSV."""
    if path.endswith(".csv"):
        with open(path, newline="", encoding="utf-8") as fh:
            return [(r["sha"], r.get("project_id", ""), r["message"]) for r in csv.DictReader(fh)]
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                d = json.loads(line)
                d = d.get("commit", d)
                rows.append((d["sha"], d.get("project_id", ""), d.get("message", "")))
    return rows


def _open_out(path):
    return open(path, "w", newline="", encoding="utf-8") if path and path != "-" else sys.stdout


def cmd_classify(args) -> int:
    from .pipeline import TextClassifier

    with open(args.model, encoding="utf-8") as fh:
        clf = TextClassifier.loads(fh.read())
    rows = _read_messages(args.commits)
    labels = clf.classify_many([m for _, _, m in rows])
    out = _open_out(args.out)
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["sha", "project_id", "label"])
    for (sha, pid, _), lab in zip(rows, labels):
        writer.writerow([sha, pid, lab.name])
    if out is not sys.stdout:
        out.close()
    return 0


def _catalog(args):
    from .sarpatterns import PatternCatalog, compile_pattern, load_catalog

    if getattr(args, "patterns", "sar") == "refactor":
        return PatternCatalog([compile_pattern("refactor*", id=0)], "keyword")
    return load_catalog(args.catalog)


def cmd_sar_scan(args) -> int:
    from .report import emit, pattern_test_report
    from .sarpatterns import message_words, occurrence_vectors, pattern_pvalues

    catalog = _catalog(args)
    rows = _read_messages(args.commits)
    out = _open_out(args.out)
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["sha", "project_id", "pattern_ids", "templates"])
    for sha, pid, msg in rows:
        hits = sorted(catalog.scan_words(message_words(msg)), key=lambda p: p.id)
        writer.writerow([sha, pid, " ".join(str(p.id) for p in hits), " | ".join(p.text for p in hits)])
    if out is not sys.stdout:
        out.close()
    if args.nonrefactoring:
        from .corpus import CommitRecord

        def records(path):
            return [CommitRecord(pid, sha, "", 0, msg) for sha, pid, msg in _read_messages(path)]

        pairs = occurrence_vectors(catalog, records(args.commits), records(args.nonrefactoring))
        report = pattern_test_report(pattern_pvalues(pairs), args.alpha)
        path = emit(report, "csv" if args.format == "plot" else args.format, args.report_dir)
        log.info("wrote %s", path)
    return 0


def cmd_stats(args) -> int:
    if args.test == "mcnemar":
        from .classify import mcnemar_counts

        if args.b is None or args.c is None:
            raise SystemExit("mcnemar needs --b and --c")
        r = mcnemar_counts(args.b, args.c)
        print(json.dumps({"b": r.b, "c": r.c, "method": r.method, "statistic": r.statistic, "p_value": r.p_value},
                         sort_keys=True))
    else:
        from .stats import mann_whitney_u

        x = [float(v) for v in args.x.replace(",", " ").split()]
        y = [float(v) for v in args.y.replace(",", " ").split()]
        r = mann_whitney_u(x, y, args.alternative.replace("-", "_"), args.method)
        print(json.dumps(r.__dict__, sort_keys=True))
    return 0


def _labels_csv(path) -> dict:
    with open(path, newline="", encoding="utf-8") as fh:
        return {r["sha"]: r["label"] for r in csv.DictReader(fh)}


def _file_kinds(args, refcommits) -> dict:
    from .testdetect import FileKind, classify_file

    if args.file_kinds:
        with open(args.file_kinds, newline="", encoding="utf-8") as fh:
            return {r["path"]: FileKind(r["kind"]) for r in csv.DictReader(fh)}
    if not args.source_root:
        raise SystemExit("prodtest needs --file-kinds or --source-root")
    kinds = {}
    for rc in refcommits:
        for op in rc.operations:
            for p in op.involved_paths:
                if p in kinds:
                    continue
                full = os.path.join(args.source_root, p)
                if p.endswith(".java") and os.path.exists(full):
                    with open(full, "rb") as fh:
                        kinds[p] = classify_file(p, fh.read())
                else:
                    kinds[p] = FileKind.unparseable
    return kinds


def cmd_report(args) -> int:
    from . import report as rep
    from .corpus import read_refactoring_commits

    if args.which == "categories":
        if not args.labels:
            raise SystemExit("categories needs --labels")
        result = rep.category_distribution(_labels_csv(args.labels).values())
    elif args.which == "prodtest":
        if not (args.refactoring and args.labels):
            raise SystemExit("prodtest needs --refactoring and --labels")
        refcommits = read_refactoring_commits(args.refactoring)
        result = rep.prod_test_matrix(refcommits, _labels_csv(args.labels), _file_kinds(args, refcommits), args.attribution)
    else:
        from .sarpatterns import label_split

        if not args.refactoring:
            raise SystemExit("labelsplit needs --refactoring")
        refcommits = read_refactoring_commits(args.refactoring)
        result = rep.label_split_report(label_split(refcommits, _catalog(args)), args.patterns)
    print(rep.emit(result, args.format, args.out))
    return 0


def cmd_test_scan(args) -> int:
    from .testdetect import classify_file, scan_java_for_tests

    out = _open_out(args.out)
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["path", "kind", "evidence"])
    for path in args.paths:
        with open(path, "rb") as fh:
            source = fh.read()
        kind = classify_file(path, source)
        evidence = scan_java_for_tests(source).evidence
        writer.writerow([path, kind.value, "; ".join(f"{reason}@{line}" for reason, line in evidence)])
    if out is not sys.stdout:
        out.close()
    return 0


# --- parser -----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="refdoc", description="Refactoring documentation mining toolkit.")
    p.add_argument("--config", help="key = value file mirroring the flags")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def seed_arg(sp):
        sp.add_argument("--seed", type=int, default=default_seed())

    m = sub.add_parser("mine", help="ingest git history and join Refactoring Miner output")
    m.add_argument("repos", nargs="+")
    m.add_argument("--refminer-json", help="directory with <project>.json files")
    m.add_argument("--out", default="mined")
    m.add_argument("--branch", default=None)
    m.add_argument("--sample-size", type=int, default=DEFAULT_SAMPLE_SIZE,
                   help="size of the non-refactoring comparison sample (0 skips it)")
    seed_arg(m)
    m.set_defaults(func=cmd_mine)

    t = sub.add_parser("train", help="fit TF-IDF and a classifier on labeled commits")
    t.add_argument("--data", required=True, help="CSV with sha, project_id, message, label")
    t.add_argument("--model", default="RF", help="RF, DT, LR, MNB or KNN")
    t.add_argument("--grid", help="JSON grid for cross-validated search")
    t.add_argument("--folds", type=int, default=10)
    t.add_argument("--test-frac", type=float, default=0.25)
    t.add_argument("--ngram", default="1,2", help="min,max n-gram length")
    t.add_argument("--max-features", type=int, default=5000)
    t.add_argument("--out", default="model.json")
    seed_arg(t)
    t.set_defaults(func=cmd_train)

    c = sub.add_parser("classify", help="label commit messages with a trained model")
    c.add_argument("--model", required=True)
    c.add_argument("--commits", required=True, help="commit NDJSON or CSV with a message column")
    c.add_argument("--out", default="-")
    c.set_defaults(func=cmd_classify)

    s = sub.add_parser("sar-scan", help="match SAR patterns in commit messages")
    s.add_argument("--commits", required=True)
    s.add_argument("--catalog", default=None, help="defaults to the shipped catalog")
    s.add_argument("--patterns", choices=("sar", "refactor"), default="sar")
    s.add_argument("--nonrefactoring", help="second corpus for the significance test")
    s.add_argument("--alpha", type=float, default=0.05)
    s.add_argument("--report-dir", default=".")
    s.add_argument("--format", choices=("csv", "json", "plot"), default="csv")
    s.add_argument("--out", default="-")
    s.set_defaults(func=cmd_sar_scan)

    st = sub.add_parser("stats", help="McNemar or Mann-Whitney tests")
    st.add_argument("test", choices=("mcnemar", "mwu"))
    st.add_argument("--b", type=int)
    st.add_argument("--c", type=int)
    st.add_argument("--x", default="")
    st.add_argument("--y", default="")
    st.add_argument("--alternative", default="greater", choices=("greater", "two_sided", "two-sided"))
    st.add_argument("--method", default=None, choices=("exact", "normal_approx"))
    st.set_defaults(func=cmd_stats)

    r = sub.add_parser("report", help="summary tables and figures")
    r.add_argument("which", choices=("categories", "prodtest", "labelsplit"))
    r.add_argument("--out", default="reports")
    r.add_argument("--format", choices=("csv", "json", "plot"), default="csv")
    r.add_argument("--labels", help="CSV with sha and label columns")
    r.add_argument("--refactoring", help="refactoring commit NDJSON")
    r.add_argument("--file-kinds", help="CSV with path and kind columns")
    r.add_argument("--source-root", help="checkout used to classify involved paths")
    r.add_argument("--attribution", choices=("any", "majority"), default="any")
    r.add_argument("--patterns", choices=("sar", "refactor"), default="sar")
    r.add_argument("--catalog", default=None)
    r.set_defaults(func=cmd_report)

    ts = sub.add_parser("test-scan", help="classify Java files as production or test")
    ts.add_argument("paths", nargs="+")
    ts.add_argument("--out", default="-")
    ts.set_defaults(func=cmd_test_scan)
    return p


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    pre = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if known.config:
        _apply_config(parser, read_config(known.config))
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    from .errors import RefdocError

    try:
        return args.func(args)
    except RefdocError as exc:
        print(f"refdoc: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
