"""``dashforge`` command-line interface.

Exit status: 0 on success, 1 on semantic failures (validation errors, unknown
target, model not enriched), 2 on I/O, usage and parse failures.
"""

from __future__ import annotations

import argparse
import contextlib
import dataclasses
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Optional, Sequence

from dashforge import __version__
from dashforge.dsl import dump_canonical, load_canonical, parse_model, serialize_model
from dashforge.emit import registry
from dashforge.enrich import enrich
from dashforge.errors import NotEnriched, ParseError, SchemaError, UnknownTarget
from dashforge.model import DashboardModel, Datasource, validate_model

EXIT_OK = 0
EXIT_SEMANTIC = 1
EXIT_ENVIRONMENT = 2

TARGET_ENV = "DASHFORGE_TARGET"


@dataclass
class CliConfig:
    command: str
    input: Optional[str] = None
    out: Optional[str] = None
    target: Optional[str] = None
    datasource_uid: Optional[str] = None
    datasource_type: Optional[str] = None
    auto_enrich: bool = True
    input_format: Optional[str] = None
    emit_format: Optional[str] = None
    verbose: bool = False


class _Abort(Exception):
    def __init__(self, status: int):
        self.status = status


class _Session:
    def __init__(self, config: CliConfig, stdin: IO, stdout: IO, stderr: IO):
        self.config = config
        self.stdin = stdin
        self.stdout = stdout
        self.stderr = stderr

    def diag(self, line: str) -> None:
        try:
            print(line, file=self.stderr)
        except (OSError, ValueError):
            pass

    def write(self, data: bytes) -> None:
        try:
            if self.config.out:
                Path(self.config.out).write_bytes(data)
                return
            buffer = getattr(self.stdout, "buffer", None)
            if buffer is not None:
                buffer.write(data)
                buffer.flush()
            else:
                self.stdout.write(data.decode("utf-8"))
                self.stdout.flush()
        except (OSError, ValueError) as exc:
            self.diag(f"ERROR IO {self.config.out or '<stdout>'} {exc}")
            raise _Abort(EXIT_ENVIRONMENT) from None

    def read_model(self) -> tuple[DashboardModel, str]:
        """Load the input model; returns it with its format (dsl or canonical)."""
        path = self.config.input
        try:
            if path == "-":
                buffer = getattr(self.stdin, "buffer", None)
                data = buffer.read() if buffer is not None else self.stdin.read().encode("utf-8")
            else:
                data = Path(path).read_bytes()
        except OSError as exc:
            self.diag(f"ERROR IO {path} {exc.strerror or exc}")
            raise _Abort(EXIT_ENVIRONMENT) from None

        fmt = self.config.input_format or _infer_format(path, data)
        try:
            model = load_canonical(data) if fmt == "canonical" else parse_model(data)
        except ParseError as exc:
            loc = exc.location
            self.diag(f"ERROR PARSE {loc.line}:{loc.column} expected {exc.expected} found {exc.found}")
            raise _Abort(EXIT_ENVIRONMENT) from None
        except SchemaError as exc:
            self.diag(f"ERROR SCHEMA {exc.path} {exc.message}")
            raise _Abort(EXIT_ENVIRONMENT) from None
        return model, fmt

    def check(self, model: DashboardModel) -> None:
        report = validate_model(model)
        for level, items in (("ERROR", report.errors), ("WARNING", report.warnings)):
            for d in items:
                self.diag(f"{level} {d.code} {d.location} {d.message}")
        if report.errors:
            raise _Abort(EXIT_SEMANTIC)


def _infer_format(path: str, data: bytes) -> str:
    if path != "-":
        return "canonical" if path.lower().endswith(".json") else "dsl"
    return "canonical" if data.lstrip().startswith(b"{") else "dsl"


def cmd_validate(session: _Session) -> int:
    model, _ = session.read_model()
    session.check(model)
    return EXIT_OK


def cmd_enrich(session: _Session) -> int:
    model, fmt = session.read_model()
    session.check(model)
    enriched = enrich(model)
    out_format = session.config.emit_format or fmt
    if out_format == "canonical":
        session.write(dump_canonical(enriched))
    else:
        session.write(serialize_model(enriched).encode("utf-8"))
    return EXIT_OK


def cmd_generate(session: _Session) -> int:
    config = session.config
    target = config.target or os.environ.get(TARGET_ENV)
    if not target:
        session.diag(f"ERROR USAGE no target given; use --target or set {TARGET_ENV}")
        return EXIT_ENVIRONMENT
    if target not in registry.names():
        session.diag(f"ERROR UNKNOWN_TARGET {UnknownTarget(target, registry.names())}")
        return EXIT_SEMANTIC

    model, _ = session.read_model()
    if config.datasource_uid is not None or config.datasource_type is not None:
        model = dataclasses.replace(model, datasource=Datasource(
            config.datasource_uid if config.datasource_uid is not None else model.datasource.uid,
            config.datasource_type if config.datasource_type is not None else model.datasource.kind,
        ))
    session.check(model)
    if config.auto_enrich:
        model = enrich(model)
    try:
        result = registry.emit(model, target)
    except NotEnriched as exc:
        session.diag(f"ERROR NOT_ENRICHED {exc}")
        return EXIT_SEMANTIC
    for warning in result.warnings:
        session.diag(f"WARNING {warning}")
    session.write(result.document)
    return EXIT_OK


def cmd_targets(session: _Session) -> int:
    lines = []
    for target in registry.list_targets():
        lines.append(f"{target.name}\t{target.description}" if session.config.verbose else target.name)
    session.write(("\n".join(lines) + "\n").encode("utf-8"))
    default = os.environ.get(TARGET_ENV)
    if default and default not in registry.names():
        session.diag(f"ERROR UNKNOWN_TARGET {TARGET_ENV}={default!r} is not a registered target")
        return EXIT_SEMANTIC
    return EXIT_OK


_COMMANDS = {
    "validate": cmd_validate,
    "enrich": cmd_enrich,
    "generate": cmd_generate,
    "targets": cmd_targets,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dashforge",
        description="Compile KPI definitions into dashboard models and platform dashboards.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def add_input(p: argparse.ArgumentParser) -> None:
        p.add_argument("input", help="model file (.dash or canonical .json); '-' reads stdin")
        p.add_argument("--input-format", choices=("dsl", "canonical"),
                       help="override format detection (default: from the file extension)")

    p = sub.add_parser("validate", help="check a model against the metamodel")
    add_input(p)

    p = sub.add_parser("enrich", help="add generated visualizations to a model")
    add_input(p)
    p.add_argument("--out", help="output file (default: stdout)")
    p.add_argument("--emit-format", choices=("dsl", "canonical"),
                   help="output format (default: same as the input)")

    p = sub.add_parser("generate", help="emit a dashboard document for a target platform")
    add_input(p)
    p.add_argument("--target", help=f"emitter name (default: ${TARGET_ENV})")
    p.add_argument("--out", help="output file (default: stdout)")
    p.add_argument("--no-enrich", dest="auto_enrich", action="store_false",
                   help="emit the model as-is; fails if some KPI has no visualization")
    p.add_argument("--datasource-uid", help="replace the model's datasource uid")
    p.add_argument("--datasource-type", help="replace the model's datasource type")

    p = sub.add_parser("targets", help="list registered emitters")
    p.add_argument("--verbose", action="store_true", help="also print descriptions")
    return parser


def main(
    argv: Optional[Sequence[str]] = None,
    stdin: Optional[IO] = None,
    stdout: Optional[IO] = None,
    stderr: Optional[IO] = None,
) -> int:
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout
    stderr = stderr if stderr is not None else sys.stderr

    parser = build_parser()
    try:
        with contextlib.redirect_stdout(stdout), contextlib.redirect_stderr(stderr):
            args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_ENVIRONMENT

    fields = {f.name for f in dataclasses.fields(CliConfig)}
    config = CliConfig(**{k: v for k, v in vars(args).items() if k in fields})
    session = _Session(config, stdin, stdout, stderr)
    try:
        return _COMMANDS[config.command](session)
    except _Abort as exc:
        return exc.status


def run() -> None:
    status = main()
    try:
        sys.stdout.flush()
    except BrokenPipeError:
        # downstream closed the pipe; keep interpreter shutdown quiet
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        status = status or EXIT_ENVIRONMENT
    sys.exit(status)


if __name__ == "__main__":
    run()
