"""HTTP facade over the engine, powering the what-if UI.

One model document per process instance. Writes go through optimistic
concurrency: the revision token is a content hash of the canonical model
bytes, so equal models always carry equal tokens and updates are
clock-free. What-if evaluation never persists anything; it exists for
exploration during decision meetings.
"""

from __future__ import annotations

import hashlib
import os
import tempfile
import threading
from pathlib import Path
from typing import Any

from fastapi import FastAPI, Header, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from .errors import InvalidModel, MissingReference
from .ingest import model_to_doc, parse_model, parse_rule_value, serialize_model
from .model import AssetState, Diagnostic, Model, ProcessClass, Severity, sort_diagnostics, validate
from .prioritizer import WhatIfOverrides, apply_whatif, impact_of, prioritize, rank_to_json
from .render import business_value_rows, layout_prioritization_canvas

__all__ = ["ModelStore", "RevisionConflict", "UpdateRejected", "create_app", "revision_of"]


def revision_of(model: Model) -> str:
    return hashlib.sha256(serialize_model(model)).hexdigest()


class RevisionConflict(Exception):
    def __init__(self, current: str):
        super().__init__("revision mismatch")
        self.current = current


class UpdateRejected(Exception):
    def __init__(self, diagnostics: list[Diagnostic]):
        super().__init__("document rejected")
        self.diagnostics = diagnostics


class ModelStore:
    """Single mutation point over one model file.

    Reads hand out immutable snapshots; replace() is a compare-and-swap on
    the revision token and persists canonical bytes atomically.
    """

    def __init__(self, path: Path):
        self.path = Path(path)
        result = parse_model(self.path.read_bytes())
        if not result.ok:
            raise InvalidModel(f"{path}: model document failed to parse", result.errors())
        errors = [d for d in validate(result.model) if d.severity is Severity.ERROR]
        if errors:
            raise InvalidModel(f"{path}: model is invalid", errors)
        self._lock = threading.Lock()
        self._model = result.model
        self._revision = revision_of(result.model)

    def snapshot(self) -> tuple[Model, str]:
        with self._lock:
            return self._model, self._revision

    def replace(self, document: bytes, expected_revision: str | None) -> str:
        result = parse_model(document)
        if not result.ok:
            raise UpdateRejected(result.diagnostics)
        diags = sort_diagnostics(list(result.diagnostics) + validate(result.model))
        if any(d.severity is Severity.ERROR for d in diags):
            raise UpdateRejected(diags)
        canonical = serialize_model(result.model)
        with self._lock:
            if expected_revision != self._revision:
                raise RevisionConflict(self._revision)
            self._write_atomic(canonical)
            self._model = result.model
            self._revision = hashlib.sha256(canonical).hexdigest()
            return self._revision

    def _write_atomic(self, data: bytes) -> None:
        fd, tmp_name = tempfile.mkstemp(dir=str(self.path.parent), prefix=self.path.name, suffix=".tmp")
        try:
            with os.fdopen(fd, "wb") as tmp:
                tmp.write(data)
            os.replace(tmp_name, self.path)
        except BaseException:
            if os.path.exists(tmp_name):
                os.unlink(tmp_name)
            raise


def _diagnostics_json(diags: list[Diagnostic]) -> list[dict]:
    return [
        {"severity": d.severity.value, "code": d.code, "subject": d.subject, "message": d.message} for d in diags
    ]


def _missing_ref_diags(exc: MissingReference) -> list[Diagnostic]:
    subjects = exc.subjects or ("?",)
    return [Diagnostic(Severity.ERROR, "MISSING_REF", subject, str(exc)) for subject in subjects]


def _parse_overrides(raw: Any) -> tuple[WhatIfOverrides | None, list[Diagnostic]]:
    diags: list[Diagnostic] = []

    def bad(subject: str, message: str) -> None:
        diags.append(Diagnostic(Severity.ERROR, "BAD_VALUE", subject, message))

    if raw is None:
        return WhatIfOverrides(), []
    if not isinstance(raw, dict):
        bad("$.overrides", "overrides must be an object")
        return None, diags
    unknown = set(raw) - {"asset_state_changes", "process_class_changes", "rule_replacement"}
    for key in sorted(unknown):
        bad(f"$.overrides.{key}", f"unknown override field {key!r}")

    def enum_map(key: str, enum_cls) -> dict:
        value = raw.get(key)
        if value is None:
            return {}
        if not isinstance(value, dict):
            bad(f"$.overrides.{key}", "expected an object of id -> value")
            return {}
        out = {}
        for entity, member in value.items():
            try:
                out[str(entity)] = enum_cls(member)
            except ValueError:
                allowed = ", ".join(m.value for m in enum_cls)
                bad(f"$.overrides.{key}.{entity}", f"{member!r} is not one of: {allowed}")
        return out

    asset_changes = enum_map("asset_state_changes", AssetState)
    class_changes = enum_map("process_class_changes", ProcessClass)
    rule = None
    if raw.get("rule_replacement") is not None:
        rule, rule_diags = parse_rule_value(raw["rule_replacement"], "$.overrides.rule_replacement")
        diags.extend(rule_diags)
    if any(d.severity is Severity.ERROR for d in diags):
        return None, sort_diagnostics(diags)
    return (
        WhatIfOverrides(
            asset_state_changes=asset_changes, process_class_changes=class_changes, rule_replacement=rule
        ),
        sort_diagnostics(diags),
    )


def create_app(model_path: Path, static_dir: "Path | None" = None) -> FastAPI:
    """Build the API server around one model file."""
    app = FastAPI(title="tracy", docs_url=None, redoc_url=None)
    store = ModelStore(Path(model_path))
    app.state.store = store

    @app.get("/api/state")
    def get_state() -> JSONResponse:
        model, revision = store.snapshot()
        return JSONResponse(
            {
                "model": model_to_doc(model),
                "revision": revision,
                "report": prioritize(model).to_json(),
                "canvas": layout_prioritization_canvas(model).to_json(),
            }
        )

    @app.put("/api/model")
    async def put_model(request: Request, if_match: "str | None" = Header(default=None)) -> JSONResponse:
        document = await request.body()
        try:
            revision = store.replace(document, if_match)
        except RevisionConflict as conflict:
            return JSONResponse(
                {"error": "revision mismatch", "current_revision": conflict.current}, status_code=409
            )
        except UpdateRejected as rejected:
            return JSONResponse({"diagnostics": _diagnostics_json(rejected.diagnostics)}, status_code=422)
        return JSONResponse({"revision": revision})

    @app.post("/api/whatif")
    async def post_whatif(request: Request) -> JSONResponse:
        try:
            payload = await request.json()
        except Exception:
            return JSONResponse(
                {
                    "diagnostics": _diagnostics_json(
                        [Diagnostic(Severity.ERROR, "PARSE_SYNTAX", "$", "request body is not valid JSON")]
                    )
                },
                status_code=422,
            )
        if not isinstance(payload, dict):
            payload = {}
        model, revision = store.snapshot()
        if payload.get("base_revision") != revision:
            return JSONResponse({"error": "revision mismatch", "current_revision": revision}, status_code=409)
        overrides, diags = _parse_overrides(payload.get("overrides"))
        if overrides is None:
            return JSONResponse({"diagnostics": _diagnostics_json(diags)}, status_code=422)
        try:
            report, delta = apply_whatif(model, overrides)
        except MissingReference as exc:
            return JSONResponse({"diagnostics": _diagnostics_json(_missing_ref_diags(exc))}, status_code=422)
        return JSONResponse(
            {
                "revision": revision,
                "report": report.to_json(),
                "delta": [
                    {"item": item_id, "old": rank_to_json(old), "new": rank_to_json(new)}
                    for item_id, old, new in delta
                ],
            }
        )

    @app.get("/api/items/{item_id}/impact")
    def get_impact(item_id: str) -> JSONResponse:
        model, _ = store.snapshot()
        try:
            report = impact_of(model, item_id)
        except MissingReference as exc:
            return JSONResponse({"diagnostics": _diagnostics_json(_missing_ref_diags(exc))}, status_code=404)
        return JSONResponse(report.to_json())

    @app.get("/api/canvas/prioritization")
    def get_prioritization_canvas() -> JSONResponse:
        model, _ = store.snapshot()
        return JSONResponse(layout_prioritization_canvas(model).to_json())

    @app.get("/api/canvas/business-value")
    def get_business_value_canvas(entity: "str | None" = None) -> JSONResponse:
        model, _ = store.snapshot()
        try:
            return JSONResponse(business_value_rows(model, entity))
        except MissingReference as exc:
            return JSONResponse({"diagnostics": _diagnostics_json(_missing_ref_diags(exc))}, status_code=404)

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")

    return app
