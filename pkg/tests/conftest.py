import os
import subprocess
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

DATA = os.path.join(os.path.dirname(__file__), "data")

GIT_ENV = {
    "GIT_AUTHOR_NAME": "Ada",
    "GIT_AUTHOR_EMAIL": "ada@example.org",
    "GIT_COMMITTER_NAME": "Ada",
    "GIT_COMMITTER_EMAIL": "ada@example.org",
    "GIT_CONFIG_NOSYSTEM": "1",
    "HOME": "/nonexistent",
}


def git(cwd, *args, date=None):
    env = dict(os.environ, **GIT_ENV)
    if date is not None:
        env["GIT_AUTHOR_DATE"] = env["GIT_COMMITTER_DATE"] = f"{date} +0000"
    out = subprocess.run(["git", *args], cwd=cwd, env=env, capture_output=True, check=True)
    return out.stdout.decode()


class RepoBuilder:
    def __init__(self, path):
        self.path = str(path)
        os.makedirs(self.path, exist_ok=True)
        git(self.path, "init", "-q", "-b", "main")
        self.clock = 1_600_000_000

    def commit(self, message, files=None):
        files = files or {f"f{self.clock}.txt": message}
        for name, content in files.items():
            full = os.path.join(self.path, name)
            os.makedirs(os.path.dirname(full), exist_ok=True)
            with open(full, "w") as fh:
                fh.write(content)
            git(self.path, "add", name)
        self.clock += 60
        git(self.path, "commit", "-q", "--allow-empty", "-m", message, date=self.clock)
        return git(self.path, "rev-parse", "HEAD").strip()


@pytest.fixture
def repo(tmp_path):
    return RepoBuilder(tmp_path / "proj")


@pytest.fixture(scope="session")
def synthetic_vectors():
    """(tfidf, train_set, test_set) for the 1,000-message synthetic corpus."""
    from refdoc.classify import stratified_split
    from refdoc.pipeline import vectorize
    from refdoc.synthetic import synthetic_corpus

    train_raw, test_raw = stratified_split(synthetic_corpus(), 0.25, 42)
    tfidf, train_set = vectorize(train_raw)
    _, test_set = vectorize(test_raw, tfidf=tfidf)
    return tfidf, train_set, test_set


# --- acceptance reporting ---------------------------------------------------------

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.when not in ("setup", "call"):
        return
    number, title = marker.args
    if report.when == "setup" and report.passed:
        return
    _CRITERIA[number] = (title, "PASS" if report.passed else "FAIL", report.duration)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, status, seconds = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number:2d} {status}  {title}  ({seconds:.1f}s)")
