"""Command-line front end: interactive REPL and script runner."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .engine import Engine, Result
from .errors import SemaQueryError
from .values import ValueType, format_value


def _scan(sql: str) -> tuple[list[str], str]:
    """Split on top-level semicolons, honoring quotes and comments so
    prompt strings may contain ';' freely.  Returns the complete
    statements plus any unterminated tail."""
    parts: list[str] = []
    start = 0
    i = 0
    n = len(sql)
    while i < n:
        ch = sql[i]
        if ch == "'":
            i += 1
            while i < n:
                if sql[i] == "'":
                    if i + 1 < n and sql[i + 1] == "'":
                        i += 2
                        continue
                    break
                i += 1
        elif ch == '"':
            i += 1
            while i < n and sql[i] != '"':
                i += 1
        elif sql.startswith("--", i):
            while i < n and sql[i] != "\n":
                i += 1
        elif sql.startswith("/*", i):
            end = sql.find("*/", i + 2)
            i = n if end < 0 else end + 1
        elif ch == ";":
            piece = sql[start:i].strip()
            if piece:
                parts.append(piece)
            start = i + 1
        i += 1
    return parts, sql[start:].strip()


def split_statements(sql: str) -> list[str]:
    parts, tail = _scan(sql)
    if tail:
        parts.append(tail)
    return parts


def statement_complete(buffer: str) -> bool:
    """True when the buffer ends with a top-level semicolon."""
    parts, tail = _scan(buffer)
    return bool(parts) and not tail


# --- output formatting ------------------------------------------------------

def _cell(value) -> str:
    if value is None:
        return "NULL"
    return format_value(value)


def format_table(result: Result) -> str:
    if not result.schema:
        return ""
    headers = result.columns
    rows = [[_cell(v) for v in row] for row in result.rows]
    widths = [len(h) for h in headers]
    for row in rows:
        for i, text in enumerate(row):
            widths[i] = max(widths[i], len(text))
    header = " | ".join(h.ljust(w) for h, w in zip(headers, widths))
    rule = "-+-".join("-" * w for w in widths)
    body = [" | ".join(t.ljust(w) for t, w in zip(row, widths))
            for row in rows]
    count = f"({len(rows)} row{'s' if len(rows) != 1 else ''})"
    return "\n".join([header, rule] + body + [count])


def format_csv(result: Result) -> str:
    import csv
    import io
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(result.columns)
    for row in result.rows:
        writer.writerow([format_value(v) for v in row])
    return out.getvalue().rstrip("\n")


def format_json(result: Result) -> str:
    records = []
    for row in result.rows:
        record = {}
        for col, value in zip(result.schema, row):
            if col.type == ValueType.DATETIME and value is not None:
                value = format_value(value)
            record[col.name] = value
        records.append(record)
    return json.dumps(records, indent=2)


_FORMATTERS = {"table": format_table, "csv": format_csv, "json": format_json}


def render_result(result: Result, fmt: str, show_stats: bool,
                  timing: bool = False) -> str:
    lines: list[str] = []
    for notice in result.notices:
        lines.append(f"notice: {notice}")
    for warning in result.warnings:
        lines.append(f"warning: {warning}")
    if result.plan_text is not None:
        lines.append(result.plan_text)
    elif result.schema:
        lines.append(_FORMATTERS[fmt](result))
    if result.message:
        lines.append(result.message)
    if show_stats and result.predict_runs:
        counters = result.stats.counters()
        pairs = ", ".join(f"{k}={v}" for k, v in counters.items())
        lines.append(f"stats: {pairs}")
    if timing:
        lines.append(f"time: {result.elapsed_s * 1000:.1f} ms")
    return "\n".join(lines)


# --- script runner ----------------------------------------------------------

def run_script(engine: Engine, path: str | Path, fmt: str = "table",
               show_stats: bool = False, stop_on_error: bool = False,
               out=None) -> int:
    out = out or sys.stdout
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        print(f"error: cannot read script: {exc}", file=out)
        return 1
    failed = False
    for statement in split_statements(text):
        try:
            result = engine.execute(statement)
        except SemaQueryError as exc:
            failed = True
            print(f"error: {exc}", file=out)
            print(f"  in statement: {statement}", file=out)
            if stop_on_error:
                return 1
            continue
        rendered = render_result(result, fmt, show_stats)
        if rendered:
            print(rendered, file=out)
    return 1 if failed else 0


# --- REPL --------------------------------------------------------------------

_HELP = """meta commands:
  \\import <file.csv> [name]   load a CSV file as a table
  \\models                     list catalog models
  \\explain <select ...>       show the logical plan
  \\stats                      call statistics of the last query
  \\timing on|off              toggle per-statement timing
  \\q                          quit
"""


class Repl:
    def __init__(self, engine: Engine, stdin=None, stdout=None):
        self.engine = engine
        self.stdin = stdin or sys.stdin
        self.stdout = stdout or sys.stdout
        self.timing = False
        self.last: Result | None = None

    def _print(self, text: str) -> None:
        print(text, file=self.stdout)

    def run(self) -> int:
        buffer = ""
        while True:
            prompt = "semaquery> " if not buffer else "        -> "
            if self.stdin is sys.stdin and sys.stdin.isatty():
                try:
                    line = input(prompt)
                except EOFError:
                    break
            else:
                line = self.stdin.readline()
                if not line:
                    break
                line = line.rstrip("\n")
            if not buffer and line.strip().startswith("\\"):
                if not self.meta(line.strip()):
                    break
                continue
            buffer = f"{buffer}\n{line}" if buffer else line
            if statement_complete(buffer):
                for statement in split_statements(buffer):
                    self.execute(statement)
                buffer = ""
        self.engine.save_catalog()
        return 0

    def execute(self, statement: str) -> None:
        try:
            result = self.engine.execute(statement)
        except SemaQueryError as exc:
            self._print(f"error: {exc}")
            return
        self.last = result
        rendered = render_result(result, "table", False, self.timing)
        if rendered:
            self._print(rendered)

    def meta(self, line: str) -> bool:
        parts = line.split()
        command, args = parts[0], parts[1:]
        if command in ("\\q", "\\quit"):
            return False
        if command == "\\help":
            self._print(_HELP)
        elif command == "\\import":
            if not args:
                self._print("usage: \\import <file.csv> [name]")
            else:
                name = args[1] if len(args) > 1 else Path(args[0]).stem
                try:
                    table = self.engine.import_csv(args[0], name)
                    self._print(f"{table.row_count} rows into {name}")
                except SemaQueryError as exc:
                    self._print(f"error: {exc}")
        elif command == "\\models":
            names = self.engine.models.names()
            if not names:
                self._print("(no models)")
            for name in names:
                entry = self.engine.models.get(name)
                api = f" api={entry.api}" if entry.api else ""
                self._print(f"{entry.name}  {entry.kind}  "
                            f"path={entry.path}{api}")
        elif command == "\\explain":
            self.execute("EXPLAIN " + line[len("\\explain"):].strip())
        elif command == "\\stats":
            if self.last is None:
                self._print("(no previous query)")
            else:
                counters = self.last.stats.counters()
                for key, value in counters.items():
                    self._print(f"{key}: {value}")
        elif command == "\\timing":
            mode = args[0].lower() if args else ""
            if mode in ("on", "off"):
                self.timing = mode == "on"
                self._print(f"timing {mode}")
            else:
                self._print("usage: \\timing on|off")
        else:
            self._print(f"unknown command {command}; try \\help")
        return True


# --- entry point --------------------------------------------------------------

def _coerce_setting(text: str):
    lowered = text.lower()
    if lowered == "true":
        return True
    if lowered == "false":
        return False
    try:
        return int(text, 10)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        pass
    return text


def build_arg_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="semaquery",
        description="SQL engine with first-class model inference")
    parser.add_argument("--db", metavar="DIR",
                        help="catalog directory (models, secrets, tables)")
    parser.add_argument("--script", metavar="FILE",
                        help="run a SQL script instead of the REPL")
    parser.add_argument("--set", metavar="K=V", action="append", default=[],
                        dest="settings", help="session setting (repeatable)")
    parser.add_argument("--backend", choices=("mock", "remote"),
                        default="mock", help="default model backend")
    parser.add_argument("--fixtures", metavar="FILE",
                        help="mock backend fixture file")
    parser.add_argument("--format", choices=("table", "csv", "json"),
                        default="table", help="script output format")
    parser.add_argument("--stats", action="store_true",
                        help="print call statistics per query")
    parser.add_argument("--stop-on-error", action="store_true",
                        help="abort a script at the first failure")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_arg_parser().parse_args(argv)
    session = {}
    for item in args.settings:
        if "=" not in item:
            print(f"error: --set needs K=V, got {item!r}", file=sys.stderr)
            return 2
        key, _, value = item.partition("=")
        session[key.strip().lower()] = _coerce_setting(value.strip())
    try:
        engine = Engine(db_dir=args.db, session=session,
                        backend=args.backend, fixtures=args.fixtures)
    except SemaQueryError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if args.script:
        code = run_script(engine, args.script, fmt=args.format,
                          show_stats=args.stats,
                          stop_on_error=args.stop_on_error)
        engine.save_catalog()
        return code
    return Repl(engine).run()


if __name__ == "__main__":
    sys.exit(main())
