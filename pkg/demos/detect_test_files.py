"""Classify the Java files of a directory as production or test code.

Usage: ``python3 demos/detect_test_files.py [DIR]``; defaults to the
golden corpus shipped with the test suite.
"""

import os
import sys

from refdoc.testdetect import classify_file, is_test_filename, scan_java_for_tests

HERE = os.path.dirname(os.path.abspath(__file__))


def main(root):
    for name in sorted(os.listdir(root)):
        if not name.endswith(".java"):
            continue
        with open(os.path.join(root, name), "rb") as fh:
            source = fh.read()
        scan = scan_java_for_tests(source)
        evidence = ", ".join(f"{reason} (line {line})" for reason, line in scan.evidence) or "-"
        gate = "name ok" if is_test_filename(name) else "name no"
        print(f"{classify_file(name, source).value:<12} {gate:<8} {name:<32} {evidence}")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else os.path.join(HERE, "..", "tests", "data", "java_golden"))
