"""Mine a throwaway git repository and look for self-affirmed refactorings.

The script builds a small repository in a temporary directory, pretends a
refactoring detector reported operations for some commits, then runs the
corpus statistics, the SAR pattern scan and the labeled/unlabeled split.
Requires ``git`` on the PATH.
"""

import json
import os
import subprocess
import tempfile

from refdoc.corpus import ProjectRef, compute_corpus_stats, ingest_repository, join_refactorings, parse_refminer_json
from refdoc.sarpatterns import label_split, load_catalog, scan_message

MESSAGES = [
    "Initial import",
    "Refactor the reader: extract method for header parsing",
    "Fix off-by-one in pagination",
    "Clean up unused imports",
    "Add JSON export",
    "Renamed fields to match the schema",
    "Pull up shared validation into the base class",
]


def git(cwd, *args):
    env = dict(os.environ, GIT_AUTHOR_NAME="Demo", GIT_AUTHOR_EMAIL="demo@example.org",
               GIT_COMMITTER_NAME="Demo", GIT_COMMITTER_EMAIL="demo@example.org")
    return subprocess.run(["git", *args], cwd=cwd, env=env, check=True, capture_output=True, text=True).stdout


def build_repo(path):
    git(path, "init", "-q", "-b", "main")
    for i, message in enumerate(MESSAGES):
        with open(os.path.join(path, f"File{i}.java"), "w") as fh:
            fh.write(f"class File{i} {{}}\n")
        git(path, "add", ".")
        git(path, "commit", "-q", "-m", message)
    return git(path, "log", "--reverse", "--format=%H").split()


def detector_output(shas):
    # what a refactoring detector might report for commits 1, 3, 5 and 6
    found = {1: ["Extract Method"], 3: ["Move Class"], 5: ["Rename Attribute", "Rename Attribute"], 6: ["Pull Up Method"]}
    return json.dumps({"commits": [
        {"sha1": shas[i], "refactorings": [{"type": k, "leftSideLocations": [{"filePath": f"File{i}.java"}]} for k in kinds]}
        for i, kinds in found.items()
    ]}).encode()


def main():
    with tempfile.TemporaryDirectory() as tmp:
        shas = build_repo(tmp)
        project = ProjectRef("demo", tmp)
        commits = list(ingest_repository(project))
        refcommits, orphans = join_refactorings(commits, parse_refminer_json(detector_output(shas)))

    stats = compute_corpus_stats([project], commits, refcommits)
    print("corpus:", stats.to_json())

    catalog = load_catalog()
    print(f"\ncatalog {catalog.version}: {len(catalog)} patterns")
    for rc in refcommits:
        hits = sorted(p.text for p in scan_message(rc.commit.message, catalog))
        print(f"  {rc.commit.message.strip()!r:<58} -> {hits}")

    print("\noperations in labeled / unlabeled commits")
    for name, patterns in (("keyword refactor*", ["refactor*"]), ("full SAR catalog", catalog)):
        print(f"  {name}: {label_split(refcommits, patterns)}")


if __name__ == "__main__":
    main()
