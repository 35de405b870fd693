"""Production vs JUnit test file detection for Java sources.

A file is a test file when its name starts or ends with "test" and its
source declares at least one public JUnit-style test method (annotated
``@Test`` or named ``test...``).  The scan is lexical: comments and
literals are blanked, then a token walk tracks type bodies and method
declarations.
"""

from __future__ import annotations

import enum
import ntpath
import posixpath
import re
from dataclasses import dataclass

from .errors import NotJavaFile

__all__ = [
    "FileKind",
    "TestScanResult",
    "is_test_filename",
    "blank_source",
    "scan_java_for_tests",
    "classify_file",
]


class FileKind(str, enum.Enum):
    production = "production"
    test = "test"
    unparseable = "unparseable"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class TestScanResult:
    kind: FileKind
    evidence: tuple = ()  # (reason, line) pairs

    __test__ = False  # keep pytest from collecting this class


def is_test_filename(path: str) -> bool:
    if not path.lower().endswith(".java"):
        raise NotJavaFile(f"not a .java file: {path!r}")
    base = ntpath.basename(posixpath.basename(path))
    stem = base[: -len(".java")].lower()
    return stem.startswith("test") or stem.endswith("test")


def blank_source(source: str) -> tuple[str, bool]:
    """Replace comments and string/char literals with spaces, keeping newlines.

    Returns ``(text, terminated)``; ``terminated`` is False when a comment
    or literal runs off the end of the file.
    """
    out = list(source)
    n = len(source)
    i = 0

    def wipe(a, b):
        for k in range(a, b):
            if out[k] != "\n":
                out[k] = " "

    while i < n:
        ch = source[i]
        nxt = source[i + 1] if i + 1 < n else ""
        if ch == "/" and nxt == "/":
            end = source.find("\n", i)
            end = n if end < 0 else end
            wipe(i, end)
            i = end
        elif ch == "/" and nxt == "*":
            end = source.find("*/", i + 2)
            if end < 0:
                wipe(i, n)
                return "".join(out), False
            wipe(i, end + 2)
            i = end + 2
        elif source.startswith('"""', i):
            end = i + 3
            while True:
                end = source.find('"""', end)
                if end < 0:
                    wipe(i, n)
                    return "".join(out), False
                # a quote preceded by an odd run of backslashes is escaped
                bs = 0
                while source[end - 1 - bs] == "\\":
                    bs += 1
                if bs % 2 == 0:
                    break
                end += 1
            wipe(i, end + 3)
            i = end + 3
        elif ch in "\"'":
            j = i + 1
            while j < n and source[j] != ch and source[j] != "\n":
                j += 2 if source[j] == "\\" else 1
            if j >= n or source[j] != ch:
                wipe(i, min(j, n))
                return "".join(out), False
            wipe(i, j + 1)
            i = j + 1
        else:
            i += 1
    return "".join(out), True


_TOKEN = re.compile(r"[A-Za-z_$][A-Za-z0-9_$]*|\d[\w.]*|\.\.\.|\S")
_TYPE_KEYWORDS = {"class", "interface", "enum", "record"}
_MODIFIERS = {
    "public", "protected", "private", "static", "final", "abstract", "synchronized",
    "native", "strictfp", "default", "transient", "volatile",
}
_NOT_TYPES = {
    "new", "return", "throw", "else", "case", "assert", "if", "for", "while", "switch",
    "catch", "synchronized", "do", "try", "this", "super", "extends", "implements", "throws",
} | (_MODIFIERS - {"synchronized"})


def _tokens(text: str):
    line = 1
    pos = 0
    for m in _TOKEN.finditer(text):
        line += text.count("\n", pos, m.start())
        pos = m.start()
        yield m.group(), line


def _balanced(text: str) -> bool:
    depth = 0
    for ch in text:
        if ch == "{":
            depth += 1
        elif ch == "}":
            depth -= 1
            if depth < 0:
                return False
    return depth == 0


def scan_java_for_tests(source) -> TestScanResult:
    if isinstance(source, bytes):
        source = source.decode("utf-8", errors="replace")
    text, terminated = blank_source(source)
    if not terminated or not _balanced(text):
        return TestScanResult(FileKind.unparseable)

    toks = list(_tokens(text))
    evidence = []
    depth = 0
    types = []  # (name, body depth)
    pending_type = None
    buf = []  # declaration tokens since the last ; { }
    annotations = []
    i = 0
    while i < len(toks):
        tok, line = toks[i]
        if tok == "@" and i + 1 < len(toks) and toks[i + 1][0] != "interface":
            # annotation: qualified name plus optional argument list
            j = i + 1
            name = toks[j][0] if j < len(toks) else ""
            while j + 2 < len(toks) and toks[j + 1][0] == ".":
                j += 2
                name = toks[j][0]
            j += 1
            if j < len(toks) and toks[j][0] == "(":
                level = 0
                while j < len(toks):
                    if toks[j][0] == "(":
                        level += 1
                    elif toks[j][0] == ")":
                        level -= 1
                        if level == 0:
                            break
                    j += 1
                j += 1
            annotations.append(name)
            i = j
            continue
        if tok in _TYPE_KEYWORDS and not (buf and buf[-1] == ".") and i + 1 < len(toks):
            pending_type = toks[i + 1][0]
        if tok == "{":
            depth += 1
            if pending_type is not None:
                types.append((pending_type, depth))
                pending_type = None
            buf, annotations = [], []
        elif tok == "}":
            if types and types[-1][1] == depth:
                types.pop()
            depth -= 1
            buf, annotations = [], []
        elif tok == ";":
            buf, annotations = [], []
            pending_type = None
        elif tok == "(" and types and types[-1][1] == depth and pending_type is None and len(buf) >= 2:
            name, before = buf[-1], buf[-2]
            name_line = toks[i - 1][1]
            is_decl = (
                re.fullmatch(r"[A-Za-z_$][\w$]*", name) is not None
                and name not in _NOT_TYPES
                and (before in (">", "]") or (re.fullmatch(r"[A-Za-z_$][\w$]*", before) and before not in _NOT_TYPES))
                and name != types[-1][0]
            )
            if is_decl and "public" in buf:
                if any(a == "Test" for a in annotations):
                    evidence.append(("annotation @Test", name_line))
                elif name.startswith("test"):
                    evidence.append(("method name test*", name_line))
            buf.append(tok)
        else:
            buf.append(tok)
        i += 1

    kind = FileKind.test if evidence else FileKind.production
    return TestScanResult(kind, tuple(evidence))


def classify_file(path: str, source) -> FileKind:
    """Both gates must agree for ``test``; unparseable sources stay unparseable."""
    name_ok = is_test_filename(path)
    result = scan_java_for_tests(source)
    if result.kind is FileKind.unparseable:
        return FileKind.unparseable
    if name_ok and result.kind is FileKind.test:
        return FileKind.test
    return FileKind.production
