"""Command-line entry point: ingest -> engine -> render with stable exit codes.

Exit codes are part of the contract so CI pipelines can gate on them:
0 success, 1 validation findings (validate only), 2 input or parse
failure, 64 usage error. Reports go to stdout, diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import dataclasses
import io
import json
import os
import sys
from contextlib import redirect_stderr, redirect_stdout
from enum import IntEnum
from pathlib import Path

from . import ingest, render
from .errors import ExportParseError, MissingReference
from .model import AssetState, Model, ProcessClass, Severity, sort_diagnostics, validate
from .prioritizer import WhatIfOverrides, apply_whatif, impact_of, prioritize, rank_to_json

__all__ = ["ExitCode", "main", "run"]


class ExitCode(IntEnum):
    OK = 0
    FINDINGS = 1
    INPUT_ERROR = 2
    USAGE = 64


class _UsageError(Exception):
    pass


class _InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise _UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def build_parser() -> _Parser:
    parser = _Parser(prog="tracy", description="Business-driven technical debt prioritization.")
    sub = parser.add_subparsers(dest="command", metavar="<command>", required=True)

    p = sub.add_parser("validate", help="check a model document and report diagnostics")
    p.add_argument("model", type=Path)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("prioritize", help="rank debt items and print the priority table")
    p.add_argument("model", type=Path)
    p.add_argument("--format", choices=("table", "json", "csv"), default="table")
    p.add_argument("--impact", action="store_true", help="add one metric column per horizon")
    p.set_defaults(func=cmd_prioritize)

    p = sub.add_parser("impact", help="show the business impact of one debt item")
    p.add_argument("model", type=Path)
    p.add_argument("--item", required=True)
    p.set_defaults(func=cmd_impact)

    p = sub.add_parser("canvas", help="render the prioritization or business-value canvas")
    p.add_argument("model", type=Path)
    p.add_argument("--kind", required=True, choices=("prioritization", "business-value"))
    p.add_argument("--entity", help="business-value canvas: restrict to one process or asset")
    p.add_argument("--format", choices=("text", "dot", "json"), default="text")
    p.set_defaults(func=cmd_canvas)

    p = sub.add_parser("import-issues", help="import debt items from an issue-tracker export")
    p.add_argument("model", type=Path)
    p.add_argument("export", type=Path)
    p.add_argument("--mapping", required=True, type=Path)
    p.add_argument("--write", action="store_true", help="update the model file instead of printing")
    p.set_defaults(func=cmd_import_issues)

    p = sub.add_parser("whatif", help="preview priorities under non-persisted overrides")
    p.add_argument("model", type=Path)
    p.add_argument("--asset", action="append", default=[], metavar="ID=STATE")
    p.add_argument("--bp", action="append", default=[], metavar="ID=CLASS")
    p.add_argument("--rule", type=Path, help="JSON file with a replacement rule table")
    p.set_defaults(func=cmd_whatif)

    p = sub.add_parser("serve", help="serve the HTTP API and the what-if UI")
    p.add_argument("model", type=Path)
    p.add_argument("--port", required=True, type=int)
    p.set_defaults(func=cmd_serve)

    return parser


def _read_bytes(path: Path) -> bytes:
    try:
        return path.read_bytes()
    except OSError as exc:
        raise _InputError(f"cannot read {path}: {exc}") from exc


def _print_diagnostics(diags) -> None:
    for diag in diags:
        print(diag, file=sys.stderr)


def _read_valid_model(path: Path) -> Model:
    """Parse and validate, printing diagnostics; errors abort with exit 2."""
    result = ingest.parse_model(_read_bytes(path))
    _print_diagnostics(result.diagnostics)
    if not result.ok:
        raise _InputError(f"{path}: model document failed to parse")
    diags = validate(result.model)
    _print_diagnostics(diags)
    if any(d.severity is Severity.ERROR for d in diags):
        raise _InputError(f"{path}: model is invalid")
    return result.model


def _color_enabled() -> bool:
    if os.environ.get("TRACY_NO_COLOR"):
        return False
    return bool(getattr(sys.stdout, "isatty", lambda: False)())


def _emit(data: bytes, *, styled_header: bool = False) -> None:
    text = data.decode("utf-8")
    if styled_header and _color_enabled() and "\n" in text:
        head, rest = text.split("\n", 1)
        text = f"\x1b[1m{head}\x1b[0m\n{rest}"
    sys.stdout.write(text)


def cmd_validate(args: argparse.Namespace) -> int:
    result = ingest.parse_model(_read_bytes(args.model))
    if not result.ok:
        _print_diagnostics(result.diagnostics)
        print(f"{args.model}: parse failed", file=sys.stderr)
        return ExitCode.INPUT_ERROR
    diags = sort_diagnostics(list(result.diagnostics) + validate(result.model))
    _print_diagnostics(diags)
    errors = sum(1 for d in diags if d.severity is Severity.ERROR)
    warnings = len(diags) - errors
    print(f"{args.model}: {errors} error(s), {warnings} warning(s)")
    return ExitCode.FINDINGS if errors else ExitCode.OK


_FORMAT_MAP = {"table": "text", "json": "structured", "csv": "csv", "text": "text", "dot": "dot"}


def cmd_prioritize(args: argparse.Namespace) -> int:
    model = _read_valid_model(args.model)
    report = prioritize(model)
    impacts = None
    if args.impact:
        impacts = [impact_of(model, entry.item_id) for group in report.groups for entry in group.entries]
    data = render.render_priority_table(report, impacts, _FORMAT_MAP[args.format], model)
    _emit(data, styled_header=args.format == "table")
    return ExitCode.OK


def cmd_impact(args: argparse.Namespace) -> int:
    model = _read_valid_model(args.model)
    try:
        report = impact_of(model, args.item)
    except MissingReference as exc:
        raise _InputError(str(exc)) from exc
    names = {m.id: m.name for m in model.metrics}
    print(f"item: {report.item_id}")
    print(f"reachable assets: {', '.join(report.assets)}")
    print(f"reachable processes: {', '.join(report.processes)}")
    for horizon, pairs in report.metrics_by_horizon:
        cells = ", ".join(f"{names[mid]} ({owner})" for mid, owner in pairs)
        print(f"{horizon}: {cells}")
    return ExitCode.OK


def cmd_canvas(args: argparse.Namespace) -> int:
    fmt = _FORMAT_MAP[args.format]
    if args.kind == "prioritization":
        if args.entity:
            raise _UsageError("--entity applies only to the business-value canvas")
        model = _read_valid_model(args.model)
        layout = render.layout_prioritization_canvas(model)
        _emit(render.render_canvas(layout, "structured" if fmt == "structured" else fmt))
        return ExitCode.OK
    if fmt == "dot":
        raise _UsageError("--format dot is not available for the business-value canvas")
    model = _read_valid_model(args.model)
    try:
        data = render.render_business_value_canvas(model, args.entity, fmt)
    except MissingReference as exc:
        raise _InputError(str(exc)) from exc
    _emit(data)
    return ExitCode.OK


def cmd_import_issues(args: argparse.Namespace) -> int:
    model = _read_valid_model(args.model)
    try:
        mapping = ingest.ImportMapping.from_json(json.loads(_read_bytes(args.mapping)))
    except (json.JSONDecodeError, ValueError) as exc:
        raise _InputError(f"{args.mapping}: bad mapping file: {exc}") from exc
    try:
        items, diags = ingest.import_issues(_read_bytes(args.export), mapping, model)
    except ExportParseError as exc:
        raise _InputError(f"{args.export}: {exc}") from exc
    _print_diagnostics(diags)
    merged = dataclasses.replace(model, debt_items=model.debt_items + tuple(items))
    document = ingest.serialize_model(merged)
    if args.write:
        args.model.write_bytes(document)
        print(f"imported {len(items)} item(s) into {args.model}")
    else:
        _emit(document)
    return ExitCode.OK


def _parse_override(raw: str, enum_cls, flag: str) -> tuple[str, object]:
    entity, sep, value = raw.partition("=")
    if not sep or not entity:
        raise _UsageError(f"{flag} expects ID=VALUE, got {raw!r}")
    try:
        return entity, enum_cls(value)
    except ValueError:
        allowed = ", ".join(member.value for member in enum_cls)
        raise _UsageError(f"{flag}: {value!r} is not one of: {allowed}") from None


def cmd_whatif(args: argparse.Namespace) -> int:
    model = _read_valid_model(args.model)
    asset_changes = dict(_parse_override(raw, AssetState, "--asset") for raw in args.asset)
    class_changes = dict(_parse_override(raw, ProcessClass, "--bp") for raw in args.bp)
    rule = None
    if args.rule is not None:
        rule, diags = ingest.parse_rule_bytes(_read_bytes(args.rule))
        _print_diagnostics(diags)
        if rule is None:
            raise _InputError(f"{args.rule}: bad rule file")
    overrides = WhatIfOverrides(
        asset_state_changes=asset_changes, process_class_changes=class_changes, rule_replacement=rule
    )
    try:
        report, delta = apply_whatif(model, overrides)
    except MissingReference as exc:
        raise _InputError(str(exc)) from exc
    # stdout carries exactly what `prioritize` would print for the
    # overridden model; the delta is commentary and goes to stderr.
    _emit(render.render_priority_table(report, None, "text", model), styled_header=True)
    for item_id, old, new in delta:
        print(f"delta: {item_id} {rank_to_json(old)} -> {rank_to_json(new)}", file=sys.stderr)
    return ExitCode.OK


def cmd_serve(args: argparse.Namespace) -> int:
    _read_valid_model(args.model)
    import uvicorn

    from .service import create_app

    static_dir = Path("frontend/dist")
    app = create_app(args.model, static_dir if static_dir.is_dir() else None)
    uvicorn.run(app, host="127.0.0.1", port=args.port)
    return ExitCode.OK


def _dispatch(argv: list[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(str(exc), file=sys.stderr)
        return ExitCode.USAGE
    except SystemExit as exc:  # --help exits through argparse
        return ExitCode.OK if exc.code in (0, None) else ExitCode.USAGE
    try:
        return args.func(args)
    except _UsageError as exc:
        print(str(exc), file=sys.stderr)
        return ExitCode.USAGE
    except _InputError as exc:
        print(str(exc), file=sys.stderr)
        return ExitCode.INPUT_ERROR


def run(argv: list[str]) -> tuple[int, bytes, bytes]:
    """Run one command; returns (exit code, stdout bytes, stderr bytes)."""
    out, err = io.StringIO(), io.StringIO()
    with redirect_stdout(out), redirect_stderr(err):
        code = _dispatch(list(argv))
    return int(code), out.getvalue().encode("utf-8"), err.getvalue().encode("utf-8")


def main(argv: "list[str] | None" = None) -> None:
    code, out, err = run(sys.argv[1:] if argv is None else argv)
    sys.stdout.write(out.decode("utf-8"))
    sys.stderr.write(err.decode("utf-8"))
    sys.stdout.flush()
    sys.stderr.flush()
    raise SystemExit(code)
