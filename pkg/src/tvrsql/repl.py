"""Interactive session: a processing-time cursor over loaded logs, SQL
evaluation per EMIT mode, stream tailing, and golden-script checking.

A session survives every error; commands validate fully before they mutate
any state, so a failed command leaves catalog and cursor untouched.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .errors import TvrError
from .eventlog import Catalog, parse_schema_ddl, serialize_changelog
from .executor import EvalContext, eval_stream, eval_table
from .format import format_changelog, format_table
from .model import ChangelogRow, Schema
from .parser import parse_sql
from .times import BOTTOM, Timestamp
from .validate import validate


@dataclass
class Session:
    catalog: Catalog = field(default_factory=Catalog)
    cursor: Timestamp = BOTTOM
    base_dir: Path = field(default_factory=Path.cwd)
    # Full rows of the last EMIT STREAM query (for .tail) and the rows most
    # recently displayed (for .capture).
    last_stream: tuple[list[ChangelogRow], Schema] | None = None
    last_changelog: tuple[list[ChangelogRow], Schema] | None = None
    done: bool = False

    @property
    def prompt(self) -> str:
        return "tvr> " if self.cursor.is_bottom else f"{self.cursor}> "


@dataclass
class CommandResult:
    output: str = ""
    error: str | None = None


def run_command(session: Session, line: str) -> CommandResult:
    """Execute one dot-command or `;`-terminated SQL statement."""
    try:
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            return CommandResult()
        if stripped.startswith("."):
            return _dot_command(session, stripped)
        return _sql_command(session, line)
    except TvrError as exc:
        return CommandResult(error=f"error: {exc}")


# ---------------------------------------------------------------------------
# Dot commands
# ---------------------------------------------------------------------------


def _dot_command(session: Session, line: str) -> CommandResult:
    parts = line.split()
    cmd, args = parts[0], parts[1:]
    if cmd == ".quit":
        session.done = True
        return CommandResult()
    if cmd == ".at":
        if len(args) != 1:
            raise TvrError("usage: .at H:MM")
        session.cursor = Timestamp.parse(args[0])
        return CommandResult()
    if cmd == ".load":
        return _load(session, args)
    if cmd == ".tail":
        if len(args) != 2:
            raise TvrError("usage: .tail <from> <to>")
        return _tail(session, Timestamp.parse(args[0]), Timestamp.parse(args[1]))
    if cmd == ".capture":
        if len(args) != 1:
            raise TvrError("usage: .capture <file>")
        return _capture(session, args[0])
    raise TvrError(f"unknown command {cmd}")


def _load(session: Session, args: list[str]) -> CommandResult:
    if not args:
        raise TvrError("usage: .load <schema.sql> [<name>=<file.log> ...]")
    schema_path = session.base_dir / args[0]
    if not schema_path.is_file():
        raise TvrError(f"no such file {args[0]}")
    loaded = parse_schema_ddl(schema_path.read_text(encoding="utf-8"))
    lines = []
    for spec in args[1:]:
        name, sep, filename = spec.partition("=")
        if not sep:
            raise TvrError(f"bad log argument {spec!r}, expected name=file")
        log_path = session.base_dir / filename
        if not log_path.is_file():
            raise TvrError(f"no such file {filename}")
        log = loaded.attach_log(name, log_path.read_text(encoding="utf-8"))
        lines.append(f"loaded {log.name} ({len(log.entries)} entries)")
    # All parsing succeeded; now commit to the session.
    for key in loaded.sources:
        if key in session.catalog.sources:
            raise TvrError(f"duplicate source name {loaded.sources[key].name!r}")
    session.catalog.sources.update(loaded.sources)
    top = session.catalog.max_ptime()
    if not top.is_bottom:
        session.cursor = top
    return CommandResult(output="".join(f"{ln}\n" for ln in lines))


def _tail(session: Session, from_: Timestamp, to: Timestamp) -> CommandResult:
    if session.last_stream is None:
        raise TvrError("no stream query to tail; run an EMIT STREAM query first")
    rows, schema = session.last_stream
    selected = [cr for cr in rows if from_ <= cr.ptime and cr.ptime <= to]
    session.last_changelog = (selected, schema)
    return CommandResult(output=format_changelog(selected, schema, open_ended=True))


def _capture(session: Session, filename: str) -> CommandResult:
    if session.last_changelog is None:
        raise TvrError("no changelog to capture; run an EMIT STREAM query first")
    rows, schema = session.last_changelog
    path = session.base_dir / filename
    path.write_text(serialize_changelog(rows, schema), encoding="utf-8")
    return CommandResult(output=f"captured {len(rows)} rows to {filename}\n")


# ---------------------------------------------------------------------------
# SQL
# ---------------------------------------------------------------------------


def _sql_command(session: Session, text: str) -> CommandResult:
    query = parse_sql(text)
    plan, emit = validate(query, session.catalog)
    if session.cursor.is_bottom:
        raise TvrError("no logs loaded; use .load first")
    ctx = EvalContext.at(session.catalog, session.cursor)
    if emit.stream:
        rows = eval_stream(plan, ctx, emit)
        schema = plan.schema.to_schema()
        session.last_stream = (rows, schema)
        session.last_changelog = (rows, schema)
        return CommandResult(output=format_changelog(rows, schema, open_ended=True))
    result = eval_table(plan, ctx, emit)
    return CommandResult(output=format_table(result))


# ---------------------------------------------------------------------------
# Scripts and golden checking
# ---------------------------------------------------------------------------


def read_script(text: str) -> list[str]:
    """Split script text into logical commands (SQL may span lines until `;`)."""
    commands: list[str] = []
    pending: list[str] = []
    for raw in text.splitlines():
        stripped = raw.strip()
        if pending:
            pending.append(raw)
            if stripped.endswith(";"):
                commands.append("\n".join(pending))
                pending = []
            continue
        if not stripped or stripped.startswith("#"):
            continue
        if stripped.startswith(".") or stripped.endswith(";"):
            commands.append(raw)
        else:
            pending = [raw]
    if pending:
        commands.append("\n".join(pending))
    return commands


def transcript(session: Session, commands: list[str]) -> str:
    """Execute commands, echoing each under the current prompt."""
    out: list[str] = []
    for command in commands:
        first, *rest = command.splitlines() or [""]
        out.append(f"{session.prompt}{first.strip()}\n")
        out.extend(f"{line}\n" for line in rest)
        result = run_command(session, command)
        if result.output:
            out.append(result.output)
        if result.error is not None:
            out.append(result.error + "\n")
        if session.done:
            break
    return "".join(out)


def run_script(script_path: str | Path, expected_path: str | Path, base_dir: Path | None = None):
    """Execute a script and byte-compare its transcript against `expected`.

    Returns (exit_code, report): 0 identical, 1 first-divergence report,
    2 missing input files.
    """
    script_path = Path(script_path)
    expected_path = Path(expected_path)
    if not script_path.is_file():
        return 2, f"error: no such script {script_path}"
    if not expected_path.is_file():
        return 2, f"error: no such expected file {expected_path}"
    session = Session(base_dir=base_dir or script_path.resolve().parent)
    actual = transcript(session, read_script(script_path.read_text(encoding="utf-8")))
    expected = expected_path.read_text(encoding="utf-8")
    if actual == expected:
        return 0, "ok"
    return 1, _first_divergence(expected, actual)


def _first_divergence(expected: str, actual: str) -> str:
    exp_lines = expected.splitlines()
    act_lines = actual.splitlines()
    for i, (e, a) in enumerate(zip(exp_lines, act_lines), start=1):
        if e != a:
            return f"mismatch at line {i}:\n  expected: {e}\n  actual:   {a}"
    if len(exp_lines) != len(act_lines):
        longer = "actual" if len(act_lines) > len(exp_lines) else "expected"
        return f"mismatch at line {min(len(exp_lines), len(act_lines)) + 1}: extra lines in {longer}"
    return "mismatch in line endings"
