"""Script entry point: ``render <traj.csv> <problem> <out.png>``.

Exit codes: 0 success, 64 usage error, 65 schema mismatch (with row and
column diagnostics on stderr), 74 file I/O error.
"""

from __future__ import annotations

import sys

from .render import PROBLEMS, SchemaError, render

_EXIT_OK = 0
_EXIT_USAGE = 64
_EXIT_DATA = 65
_EXIT_IO = 74


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    if len(argv) != 3:
        print("usage: render <traj.csv> <problem> <out.png>", file=sys.stderr)
        return _EXIT_USAGE
    traj_file, problem, out_image = argv
    if problem not in PROBLEMS:
        print(
            f"error: unknown problem {problem!r}; expected one of "
            f"{', '.join(PROBLEMS)}",
            file=sys.stderr,
        )
        return _EXIT_USAGE
    try:
        render(traj_file, problem, out_image)
    except SchemaError as exc:
        print(f"schema mismatch in {traj_file}: {exc}", file=sys.stderr)
        return _EXIT_DATA
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return _EXIT_IO
    return _EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
