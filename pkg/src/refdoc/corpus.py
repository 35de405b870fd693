"""Commit ingestion, Refactoring Miner output parsing and corpus statistics."""

from __future__ import annotations

import bisect
import json
import os
import random
import re
import statistics
import subprocess
import tempfile
from collections import Counter
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Iterable, Iterator

from .errors import InsufficientCandidates, MalformedJson, UnknownRefactoringKind, UnreadableRepo

__all__ = [
    "ELEMENT_LEVELS",
    "ProjectRef",
    "CommitRecord",
    "RefactoringOperation",
    "RefactoringCommit",
    "CorpusStats",
    "kind_levels",
    "normalize_author",
    "ingest_repository",
    "parse_refminer_json",
    "join_refactorings",
    "compute_corpus_stats",
    "sample_nonrefactoring",
    "DEFAULT_SAMPLE_SIZE",
    "write_ndjson",
    "read_commits",
    "read_refactoring_commits",
]

ELEMENT_LEVELS = ("method", "attribute", "class", "variable", "parameter", "package", "interface")
_SHA = re.compile(r"^[0-9a-f]{40}$")


@lru_cache(maxsize=None)
def _default_kind_levels() -> dict:
    text = resources.files("refdoc.data").joinpath("refactoring_kinds.tsv").read_text(encoding="utf-8")
    return _parse_kind_table(text)


def _parse_kind_table(text: str) -> dict:
    table = {}
    for line in text.splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        kind, level = (part.strip() for part in line.split("\t"))
        if level not in ELEMENT_LEVELS:
            raise ValueError(f"unknown element level {level!r} for {kind!r}")
        table[kind] = level
    return table


def kind_levels(path: str | None = None) -> dict:
    """The kind -> element-level table, from ``path`` or the shipped default."""
    if path is None:
        return dict(_default_kind_levels())
    with open(path, encoding="utf-8") as fh:
        return _parse_kind_table(fh.read())


def normalize_author(name: str, email: str) -> str:
    return f"{name.strip()} <{email.strip()}>".lower()


@dataclass(frozen=True)
class ProjectRef:
    project_id: str
    origin: str
    default_branch: str | None = None

    def __post_init__(self):
        if not self.origin:
            raise ValueError("origin must be non-empty")


@dataclass(frozen=True)
class CommitRecord:
    project_id: str
    sha: str
    author_id: str
    timestamp: int
    message: str
    changed_paths: tuple = ()

    def __post_init__(self):
        if not _SHA.match(self.sha):
            raise ValueError(f"not a 40-char lowercase hex sha: {self.sha!r}")
        if self.timestamp < 0:
            raise ValueError("timestamp must be non-negative")
        object.__setattr__(self, "changed_paths", tuple(self.changed_paths))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["changed_paths"] = list(self.changed_paths)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "CommitRecord":
        return cls(
            project_id=d["project_id"],
            sha=d["sha"],
            author_id=d.get("author_id", ""),
            timestamp=int(d.get("timestamp", 0)),
            message=d.get("message", ""),
            changed_paths=tuple(d.get("changed_paths", ())),
        )


@dataclass(frozen=True)
class RefactoringOperation:
    kind: str
    description: str = ""
    element_level: str = ""
    involved_paths: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "involved_paths", tuple(self.involved_paths))

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "description": self.description,
            "element_level": self.element_level,
            "involved_paths": list(self.involved_paths),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RefactoringOperation":
        return cls(d["kind"], d.get("description", ""), d.get("element_level", ""), tuple(d.get("involved_paths", ())))


@dataclass(frozen=True)
class RefactoringCommit:
    commit: CommitRecord
    operations: tuple

    def __post_init__(self):
        object.__setattr__(self, "operations", tuple(self.operations))
        if not self.operations:
            raise ValueError("a refactoring commit needs at least one operation")

    def to_dict(self) -> dict:
        return {"commit": self.commit.to_dict(), "operations": [op.to_dict() for op in self.operations]}

    @classmethod
    def from_dict(cls, d: dict) -> "RefactoringCommit":
        return cls(CommitRecord.from_dict(d["commit"]), tuple(RefactoringOperation.from_dict(o) for o in d["operations"]))


@dataclass
class CorpusStats:
    project_count: int = 0
    total_commits: int = 0
    refactoring_commits: int = 0
    refactoring_operations: int = 0
    per_element_counts: dict = field(default_factory=lambda: {lvl: 0 for lvl in ELEMENT_LEVELS})
    per_kind_counts: dict = field(default_factory=dict)
    per_project_stddevs: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=2)


# --- git ingestion ----------------------------------------------------------

_LOG_FORMAT = "%x1e%H%x00%an%x00%ae%x00%at%x00%B%x00"


def _git(args, cwd):
    return subprocess.run(["git", *args], cwd=cwd, capture_output=True)


def _is_remote(origin: str) -> bool:
    return "://" in origin or (re.match(r"^[\w.-]+@[\w.-]+:", origin) is not None)


def _parse_log(raw: bytes, project_id: str) -> Iterator[CommitRecord]:
    for chunk in raw.split(b"\x1e")[1:]:
        parts = chunk.split(b"\x00", 5)
        if len(parts) < 6:
            continue
        sha, name, email, ts, message, rest = parts
        paths = [p.decode("utf-8", "replace") for p in rest.split(b"\x00")]
        paths = [p.strip("\n") for p in paths]
        yield CommitRecord(
            project_id=project_id,
            sha=sha.decode("ascii"),
            author_id=normalize_author(name.decode("utf-8", "replace"), email.decode("utf-8", "replace")),
            timestamp=int(ts or 0),
            message=message.decode("utf-8", "replace"),
            changed_paths=tuple(p for p in paths if p),
        )


def ingest_repository(ref: ProjectRef) -> Iterator[CommitRecord]:
    """Yield every commit reachable from the project's branch, parents first.

    Remote origins are cloned into a temporary directory first.  An empty
    repository yields nothing.
    """
    if _is_remote(ref.origin):
        with tempfile.TemporaryDirectory(prefix="refdoc-") as tmp:
            clone = _git(["clone", "--quiet", "--no-checkout", ref.origin, tmp], cwd=None)
            if clone.returncode != 0:
                raise UnreadableRepo(f"{ref.origin}: {clone.stderr.decode(errors='replace').strip()}")
            yield from _ingest_local(ref, tmp)
    else:
        yield from _ingest_local(ref, ref.origin)


def _ingest_local(ref: ProjectRef, path: str) -> Iterator[CommitRecord]:
    if not os.path.isdir(path):
        raise UnreadableRepo(f"{path}: no such directory")
    bare = _git(["rev-parse", "--is-bare-repository"], cwd=path)
    if bare.returncode != 0:
        raise UnreadableRepo(f"{path}: not a git repository")
    if bare.stdout.strip() != b"true":
        top = _git(["rev-parse", "--show-toplevel"], cwd=path).stdout.decode(errors="replace").strip()
        if os.path.realpath(top) != os.path.realpath(path):
            raise UnreadableRepo(f"{path}: not the top level of a git repository")
    rev = ref.default_branch or "HEAD"
    if _git(["rev-parse", "--verify", "--quiet", rev + "^{commit}"], cwd=path).returncode != 0:
        if ref.default_branch and _git(["rev-parse", "--verify", "--quiet", "HEAD"], cwd=path).returncode == 0:
            raise UnreadableRepo(f"{path}: unknown branch {ref.default_branch!r}")
        return  # no commits yet
    log = _git(["log", "--topo-order", "--reverse", "--no-renames", "--format=" + _LOG_FORMAT,
                "--name-only", "-z", rev], cwd=path)
    if log.returncode != 0:
        raise UnreadableRepo(f"{path}: {log.stderr.decode(errors='replace').strip()}")
    yield from _parse_log(log.stdout, ref.project_id)


# --- Refactoring Miner output -----------------------------------------------

_PATH_KEYS = ("leftSideLocations", "rightSideLocations")


def _canonical_kind(name: str, table: dict) -> str:
    cleaned = " ".join(name.replace("&", " And ").split())
    for kind in table:
        if kind.lower() == cleaned.lower():
            return kind
    raise UnknownRefactoringKind(name)


def parse_refminer_json(payload: bytes | str, levels: dict | None = None) -> dict:
    """Map each commit sha to its refactoring operations.

    Reads the ``commits[].sha1`` / ``commits[].refactorings[]`` layout.
    Commits without refactorings are omitted.
    """
    table = levels or _default_kind_levels()
    if isinstance(payload, bytes):
        try:
            payload = payload.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedJson(f"payload is not UTF-8: {exc}") from exc
    try:
        doc = json.loads(payload)
    except json.JSONDecodeError as exc:
        raise MalformedJson(str(exc)) from exc
    if not isinstance(doc, dict) or not isinstance(doc.get("commits"), list):
        raise MalformedJson("expected an object with a 'commits' list")
    out = {}
    for entry in doc["commits"]:
        try:
            sha = entry["sha1"].lower()
            refactorings = entry.get("refactorings") or []
        except (KeyError, TypeError, AttributeError) as exc:
            raise MalformedJson(f"bad commit entry: {entry!r}") from exc
        ops = []
        for r in refactorings:
            if not isinstance(r, dict) or "type" not in r:
                raise MalformedJson(f"bad refactoring entry in {sha}: {r!r}")
            kind = _canonical_kind(r["type"], table)
            paths = []
            for key in _PATH_KEYS:
                for loc in r.get(key) or []:
                    p = loc.get("filePath") if isinstance(loc, dict) else None
                    if p and p not in paths:
                        paths.append(p)
            ops.append(RefactoringOperation(kind, r.get("description", ""), table[kind], tuple(paths)))
        if ops:
            out.setdefault(sha, []).extend(ops)
    return out


def join_refactorings(commits: Iterable[CommitRecord], ops: dict) -> tuple[list, list]:
    """Pair commits with their operations.

    Returns ``(refactoring_commits, orphans)`` where orphans are the shas of
    ``ops`` that match no commit.
    """
    commits = list(commits)
    seen = set()
    joined = []
    for c in commits:
        if c.sha in ops and ops[c.sha] and c.sha not in seen:
            joined.append(RefactoringCommit(c, tuple(ops[c.sha])))
            seen.add(c.sha)
    known = {c.sha for c in commits}
    orphans = [sha for sha in ops if sha not in known]
    return joined, orphans


# --- statistics -------------------------------------------------------------

def compute_corpus_stats(projects, commits, refcommits) -> CorpusStats:
    """Totals plus per-project population standard deviations."""
    projects = list(projects)
    commits = list(commits)
    refcommits = list(refcommits)
    ids = [p.project_id if isinstance(p, ProjectRef) else p for p in projects]
    stats = CorpusStats(project_count=len(ids), total_commits=len(commits), refactoring_commits=len(refcommits))

    per_project = {pid: Counter() for pid in ids}
    for c in commits:
        per_project.setdefault(c.project_id, Counter())["total_commits"] += 1
    for rc in refcommits:
        bucket = per_project.setdefault(rc.commit.project_id, Counter())
        bucket["refactoring_commits"] += 1
        for op in rc.operations:
            stats.refactoring_operations += 1
            stats.per_element_counts[op.element_level] = stats.per_element_counts.get(op.element_level, 0) + 1
            stats.per_kind_counts[op.kind] = stats.per_kind_counts.get(op.kind, 0) + 1
            bucket["refactoring_operations"] += 1
            bucket[op.element_level] += 1

    metrics = ("total_commits", "refactoring_commits", "refactoring_operations") + ELEMENT_LEVELS
    rows = list(per_project.values())
    for m in metrics:
        values = [row[m] for row in rows]
        stats.per_project_stddevs[m] = statistics.pstdev(values) if values else 0.0
    stats.per_kind_counts = dict(sorted(stats.per_kind_counts.items()))
    return stats


# --- non-refactoring sample -------------------------------------------------

def _mean_length(commits) -> float:
    return sum(len(c.message) for c in commits) / len(commits)


# a 95% confidence / 5% margin sample for a large population
DEFAULT_SAMPLE_SIZE = 384


def sample_nonrefactoring(commits, refcommits, seed: int, target_size: int = DEFAULT_SAMPLE_SIZE,
                          tolerance: float = 0.10) -> list:
    """Draw commits without refactorings that resemble the refactoring corpus.

    Candidates come from the refactoring projects and lie inside the
    refactoring timestamp window.  Authors of refactoring commits are
    preferred when there are enough of their commits.  After the random
    draw, commits are swapped greedily until the mean message length is
    within ``tolerance`` of the refactoring corpus mean.
    """
    if target_size <= 0:
        return []
    refcommits = list(refcommits)
    if not refcommits:
        raise InsufficientCandidates("refactoring corpus", 0, target_size)
    ref_keys = {(rc.commit.project_id, rc.commit.sha) for rc in refcommits}
    ref_projects = {rc.commit.project_id for rc in refcommits}
    ref_authors = {rc.commit.author_id for rc in refcommits}
    lo = min(rc.commit.timestamp for rc in refcommits)
    hi = max(rc.commit.timestamp for rc in refcommits)

    pool = {}
    for c in commits:
        if (c.project_id, c.sha) not in ref_keys:
            pool.setdefault((c.project_id, c.sha), c)
    stages = [("non-refactoring", list(pool.values()))]
    stages.append(("project", [c for c in stages[-1][1] if c.project_id in ref_projects]))
    stages.append(("time window", [c for c in stages[-1][1] if lo <= c.timestamp <= hi]))
    for name, candidates in stages:
        if len(candidates) < target_size:
            raise InsufficientCandidates(name, len(candidates), target_size)
    candidates = stages[-1][1]
    same_author = [c for c in candidates if c.author_id in ref_authors]
    if len(same_author) >= target_size:
        candidates = same_author

    candidates.sort(key=lambda c: (c.project_id, c.sha))
    rng = random.Random(seed)
    picked_idx = sorted(rng.sample(range(len(candidates)), target_size))
    chosen = set(picked_idx)
    picked = [candidates[i] for i in picked_idx]
    rest = [c for i, c in enumerate(candidates) if i not in chosen]

    target = _mean_length([rc.commit for rc in refcommits])
    picked = _rebalance(picked, rest, target, tolerance)
    if abs(_mean_length(picked) - target) > tolerance * target:
        raise InsufficientCandidates("message length", len(candidates), target_size)
    return picked


def _rebalance(picked, rest, target, tolerance):
    picked = list(picked)
    rest = sorted(rest, key=lambda c: (len(c.message), c.project_id, c.sha))
    rest_len = [len(c.message) for c in rest]
    n = len(picked)
    total = sum(len(c.message) for c in picked)
    while abs(total / n - target) > tolerance * target and rest:
        want = target * n - total  # total change that would hit the target exactly
        best = None
        for i, out in enumerate(picked):
            ideal = want + len(out.message)
            k = bisect.bisect_left(rest_len, ideal)
            for j in (k - 1, k):
                if 0 <= j < len(rest):
                    gap = abs(want - (rest_len[j] - len(out.message)))
                    if best is None or gap < best[0]:
                        best = (gap, i, j)
        gap, i, j = best
        if gap >= abs(want):
            break  # no swap improves the mean
        inn = rest.pop(j)
        rest_len.pop(j)
        out = picked[i]
        picked[i] = inn
        total += len(inn.message) - len(out.message)
        k = bisect.bisect_left(rest_len, len(out.message))
        rest.insert(k, out)
        rest_len.insert(k, len(out.message))
    return sorted(picked, key=lambda c: (c.project_id, c.timestamp, c.sha))


# --- NDJSON ------------------------------------------------------------------

def write_ndjson(records, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            fh.write(json.dumps(r.to_dict(), sort_keys=True, ensure_ascii=False))
            fh.write("\n")


def _read_ndjson(path):
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                yield json.loads(line)


def read_commits(path) -> list:
    return [CommitRecord.from_dict(d) for d in _read_ndjson(path)]


def read_refactoring_commits(path) -> list:
    return [RefactoringCommit.from_dict(d) for d in _read_ndjson(path)]
