#!/usr/bin/env python3
"""Run the default verification battery and print the JSON report.

Exit code mirrors the library convention: 0 all checks hold, 1 any check
fails, 2 any check is inconclusive, 3 on error.
"""

import argparse
import sys

from boxlab.instances import emit_json
from boxlab.suite import default_suite, exit_code, run_suite


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--threads", type=int, default=None, help="worker threads")
    ap.add_argument(
        "--stable",
        action="store_true",
        help="zero out timings so repeated runs are byte-identical",
    )
    ap.add_argument("--out", default=None, help="also write the report here")
    args = ap.parse_args()

    report = run_suite(default_suite(), threads=args.threads, stable=args.stable)
    text = emit_json(report)
    print(text)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    return exit_code(report)


if __name__ == "__main__":
    sys.exit(main())
