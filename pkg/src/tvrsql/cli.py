"""Command-line entry point.

    tvr [--schema FILE] [--log NAME=FILE]... [--script FILE [--expect FILE]]
        [--at H:MM]

Without --script: an interactive prompt. With --script and --expect: golden
checking (exit 0 on a byte-identical transcript, 1 on mismatch). With
--script alone: print the transcript (handy for recording goldens).
Exit status 2 flags usage or I/O errors.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import TvrError
from .repl import Session, read_script, run_command, run_script, transcript
from .times import Timestamp


def _build_arg_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tvr", description="streaming SQL over event logs")
    p.add_argument("--schema", metavar="FILE", help="schema DDL to load at startup")
    p.add_argument(
        "--log",
        metavar="NAME=FILE",
        action="append",
        default=[],
        help="attach an event log to a declared source (repeatable)",
    )
    p.add_argument("--script", metavar="FILE", help="run commands from FILE instead of stdin")
    p.add_argument("--expect", metavar="FILE", help="golden transcript to compare against")
    p.add_argument("--at", metavar="H:MM", help="initial processing-time cursor")
    return p


def _preload(session: Session, args) -> None:
    if args.schema is None:
        if args.log:
            raise TvrError("--log requires --schema")
        return
    run = run_command(session, " ".join([".load", args.schema, *args.log]))
    if run.error is not None:
        raise TvrError(run.error.removeprefix("error: "))


def main(argv: list[str] | None = None) -> int:
    args = _build_arg_parser().parse_args(argv)
    if args.expect and not args.script:
        print("error: --expect requires --script", file=sys.stderr)
        return 2

    session = Session(base_dir=Path.cwd())
    try:
        _preload(session, args)
        if args.at:
            session.cursor = Timestamp.parse(args.at)
    except TvrError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    if args.script:
        script_path = Path(args.script)
        if args.expect:
            code, report = run_script(script_path, Path(args.expect))
            if code != 0:
                print(report, file=sys.stderr)
            return code
        if not script_path.is_file():
            print(f"error: no such script {script_path}", file=sys.stderr)
            return 2
        session.base_dir = script_path.resolve().parent
        text = transcript(session, read_script(script_path.read_text(encoding="utf-8")))
        sys.stdout.write(text)
        return 0

    return _interactive(session)


def _interactive(session: Session) -> int:
    while not session.done:
        sys.stdout.write(session.prompt)
        sys.stdout.flush()
        line = sys.stdin.readline()
        if not line:
            break
        command = line
        # SQL continues across lines until the terminating semicolon.
        while not command.strip().startswith((".", "#")) and command.strip() and not command.strip().endswith(";"):
            more = sys.stdin.readline()
            if not more:
                break
            command += more
        result = run_command(session, command)
        if result.output:
            sys.stdout.write(result.output)
        if result.error is not None:
            print(result.error, file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
