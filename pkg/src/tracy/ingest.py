"""Model document parsing, canonical serialization, and issue import.

The model document is one UTF-8 JSON file: the canvases, the rule, and
the debt list form a single decision artifact. Parsing is strict by
default (unknown fields are errors) because decision documents should
not silently carry typos; a lenient flag downgrades them to warnings.
Canonical serialization fixes key order, sorts entities by id, and ends
with a newline, so equal models produce identical bytes.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import Any

from .errors import ExportParseError
from .model import (
    DEFAULT_HORIZONS,
    AssetState,
    BusinessProcess,
    ConfigurationItem,
    DebtItem,
    Diagnostic,
    EdgeSet,
    ITAsset,
    Metric,
    Model,
    PrioritizationRule,
    ProcessClass,
    RULE_CELLS,
    Severity,
    default_rule,
    sort_diagnostics,
)

__all__ = [
    "ImportMapping",
    "ParseResult",
    "canonical_json_bytes",
    "import_issues",
    "model_to_doc",
    "parse_model",
    "parse_rule_bytes",
    "parse_rule_value",
    "serialize_model",
]

FORMAT_VERSION = "1"

_TOP_KEYS = (
    "version",
    "horizons",
    "business_processes",
    "it_assets",
    "configuration_items",
    "debt_items",
    "metrics",
    "edges",
    "rule",
)
_EDGE_KEYS = ("ci_depends_on", "ci_supports_asset", "asset_supports_bp")
RULE_KEYS = tuple(f"{group.value}.{state.value}" for group, state in RULE_CELLS)


def canonical_json_bytes(obj: Any) -> bytes:
    return (json.dumps(obj, indent=2, ensure_ascii=False) + "\n").encode("utf-8")


def _err(code: str, subject: str, message: str) -> Diagnostic:
    return Diagnostic(Severity.ERROR, code, subject, message)


def _warn(code: str, subject: str, message: str) -> Diagnostic:
    return Diagnostic(Severity.WARNING, code, subject, message)


@dataclass
class ParseResult:
    """Outcome of parse_model: a model plus diagnostics, or only diagnostics."""

    model: Model | None
    diagnostics: list[Diagnostic]

    @property
    def ok(self) -> bool:
        return self.model is not None

    def errors(self) -> list[Diagnostic]:
        return [d for d in self.diagnostics if d.severity is Severity.ERROR]


class _Doc:
    """Cursor over the decoded document collecting diagnostics."""

    def __init__(self, strict: bool):
        self.strict = strict
        self.diags: list[Diagnostic] = []

    def unknown_field(self, location: str, key: str) -> None:
        severity = Severity.ERROR if self.strict else Severity.WARNING
        self.diags.append(Diagnostic(severity, "UNKNOWN_FIELD", location, f"unknown field {key!r}"))

    def check_keys(self, obj: dict, allowed: tuple[str, ...], location: str) -> None:
        for key in obj:
            if key not in allowed:
                self.unknown_field(f"{location}.{key}", key)

    def req_str(self, obj: dict, key: str, location: str) -> str | None:
        if key not in obj:
            self.diags.append(_err("MISSING_FIELD", location, f"required field {key!r} is missing"))
            return None
        return self.as_str(obj[key], f"{location}.{key}")

    def opt_str(self, obj: dict, key: str, location: str) -> str | None:
        if key not in obj or obj[key] is None:
            return None
        return self.as_str(obj[key], f"{location}.{key}")

    def as_str(self, value: Any, location: str) -> str | None:
        if not isinstance(value, str):
            self.diags.append(_err("BAD_TYPE", location, f"expected a string, got {type(value).__name__}"))
            return None
        return value

    def str_list(self, value: Any, location: str) -> list[str]:
        if not isinstance(value, list):
            self.diags.append(_err("BAD_TYPE", location, f"expected an array, got {type(value).__name__}"))
            return []
        out = []
        for i, element in enumerate(value):
            text = self.as_str(element, f"{location}[{i}]")
            if text is not None:
                out.append(text)
        return out

    def enum(self, value: str | None, enum_cls: type, location: str) -> Any:
        if value is None:
            return None
        try:
            return enum_cls(value)
        except ValueError:
            allowed = ", ".join(member.value for member in enum_cls)
            self.diags.append(_err("BAD_VALUE", location, f"{value!r} is not one of: {allowed}"))
            return None


def _parse_entity_list(doc: _Doc, raw: Any, key: str, parse_one) -> list:
    location = f"$.{key}"
    if raw is None:
        return []
    if not isinstance(raw, list):
        doc.diags.append(_err("BAD_TYPE", location, f"expected an array, got {type(raw).__name__}"))
        return []
    out = []
    for i, element in enumerate(raw):
        entity_loc = f"{location}[{i}]"
        if not isinstance(element, dict):
            doc.diags.append(_err("BAD_TYPE", entity_loc, f"expected an object, got {type(element).__name__}"))
            continue
        entity = parse_one(doc, element, entity_loc)
        if entity is not None:
            out.append(entity)
    return out


def _parse_process(doc: _Doc, obj: dict, loc: str) -> BusinessProcess | None:
    doc.check_keys(obj, ("id", "name", "class"), loc)
    id_ = doc.req_str(obj, "id", loc)
    name = doc.req_str(obj, "name", loc)
    cls = doc.enum(doc.req_str(obj, "class", loc), ProcessClass, f"{loc}.class")
    if id_ is None or name is None or cls is None:
        return None
    return BusinessProcess(id=id_, name=name, process_class=cls)


def _parse_asset(doc: _Doc, obj: dict, loc: str) -> ITAsset | None:
    doc.check_keys(obj, ("id", "name", "state"), loc)
    id_ = doc.req_str(obj, "id", loc)
    name = doc.req_str(obj, "name", loc)
    state = doc.enum(doc.req_str(obj, "state", loc), AssetState, f"{loc}.state")
    if id_ is None or name is None or state is None:
        return None
    return ITAsset(id=id_, name=name, state=state)


def _parse_ci(doc: _Doc, obj: dict, loc: str) -> ConfigurationItem | None:
    doc.check_keys(obj, ("id", "name", "kind"), loc)
    id_ = doc.req_str(obj, "id", loc)
    name = doc.req_str(obj, "name", loc)
    if id_ is None or name is None:
        return None
    return ConfigurationItem(id=id_, name=name, kind=doc.opt_str(obj, "kind", loc))


def _parse_debt_item(doc: _Doc, obj: dict, loc: str) -> DebtItem | None:
    doc.check_keys(obj, ("id", "title", "debt_type", "affected_cis", "source"), loc)
    id_ = doc.req_str(obj, "id", loc)
    title = doc.req_str(obj, "title", loc)
    if "affected_cis" not in obj:
        doc.diags.append(_err("MISSING_FIELD", loc, "required field 'affected_cis' is missing"))
        affected: list[str] = []
    else:
        affected = doc.str_list(obj["affected_cis"], f"{loc}.affected_cis")
    if id_ is None or title is None:
        return None
    return DebtItem(
        id=id_,
        title=title,
        affected_cis=tuple(affected),
        debt_type=doc.opt_str(obj, "debt_type", loc),
        source=doc.opt_str(obj, "source", loc),
    )


def _parse_metric(doc: _Doc, obj: dict, loc: str) -> Metric | None:
    doc.check_keys(obj, ("id", "name", "owner", "horizon"), loc)
    id_ = doc.req_str(obj, "id", loc)
    name = doc.req_str(obj, "name", loc)
    owner = doc.req_str(obj, "owner", loc)
    horizon = doc.req_str(obj, "horizon", loc)
    if None in (id_, name, owner, horizon):
        return None
    return Metric(id=id_, name=name, owner=owner, horizon=horizon)


def _parse_edges(doc: _Doc, raw: Any) -> EdgeSet:
    if raw is None:
        return EdgeSet()
    if not isinstance(raw, dict):
        doc.diags.append(_err("BAD_TYPE", "$.edges", f"expected an object, got {type(raw).__name__}"))
        return EdgeSet()
    doc.check_keys(raw, _EDGE_KEYS, "$.edges")
    collected: dict[str, list[tuple[str, str]]] = {}
    for key in _EDGE_KEYS:
        pairs: list[tuple[str, str]] = []
        location = f"$.edges.{key}"
        value = raw.get(key)
        if value is None:
            collected[key] = pairs
            continue
        if not isinstance(value, list):
            doc.diags.append(_err("BAD_TYPE", location, f"expected an array, got {type(value).__name__}"))
            collected[key] = pairs
            continue
        for i, element in enumerate(value):
            pair_loc = f"{location}[{i}]"
            if not isinstance(element, list) or len(element) != 2:
                doc.diags.append(_err("BAD_TYPE", pair_loc, "expected a 2-element array of ids"))
                continue
            a = doc.as_str(element[0], f"{pair_loc}[0]")
            b = doc.as_str(element[1], f"{pair_loc}[1]")
            if a is not None and b is not None:
                pairs.append((a, b))
        collected[key] = pairs
    return EdgeSet(
        ci_depends_on=tuple(collected["ci_depends_on"]),
        ci_supports_asset=tuple(collected["ci_supports_asset"]),
        asset_supports_bp=tuple(collected["asset_supports_bp"]),
    )


def parse_rule_object(doc: _Doc, raw: Any, location: str = "$.rule") -> PrioritizationRule | None:
    """Parse a rule section; returns None when the section has errors."""
    if not isinstance(raw, dict):
        doc.diags.append(_err("BAD_TYPE", location, f"expected an object, got {type(raw).__name__}"))
        return None
    doc.check_keys(raw, RULE_KEYS, location)
    ranks = []
    for key in RULE_KEYS:
        if key not in raw:
            doc.diags.append(_err("MISSING_FIELD", location, f"rule cell {key!r} is missing"))
            continue
        value = raw[key]
        if isinstance(value, bool) or not isinstance(value, int) or value < 0:
            doc.diags.append(_err("BAD_VALUE", f"{location}.{key}", f"rank must be a non-negative integer, got {value!r}"))
            continue
        ranks.append(value)
    if len(ranks) != len(RULE_KEYS):
        return None
    return PrioritizationRule(tuple(ranks))


def parse_rule_value(raw: Any, location: str = "$") -> tuple[PrioritizationRule | None, list[Diagnostic]]:
    """Parse an already-decoded rule object (what-if payloads, rule files)."""
    doc = _Doc(strict=True)
    rule = parse_rule_object(doc, raw, location)
    return rule, sort_diagnostics(doc.diags)


def parse_rule_bytes(data: bytes | str) -> tuple[PrioritizationRule | None, list[Diagnostic]]:
    """Parse a standalone rule table document."""
    if isinstance(data, (bytes, bytearray)):
        try:
            data = bytes(data).decode("utf-8")
        except UnicodeDecodeError as exc:
            return None, [_err("PARSE_SYNTAX", "$", f"rule file is not valid UTF-8: {exc}")]
    try:
        raw = json.loads(data)
    except json.JSONDecodeError as exc:
        return None, [_err("PARSE_SYNTAX", "$", f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}")]
    return parse_rule_value(raw)


def parse_model(document: bytes | str, *, strict: bool = True) -> ParseResult:
    """Strict parse of the model document; never raises on bad input.

    Structural problems come back as diagnostics with document locations.
    A successful parse still needs validate() for referential checks.
    """
    if isinstance(document, (bytes, bytearray)):
        try:
            text = bytes(document).decode("utf-8")
        except UnicodeDecodeError as exc:
            return ParseResult(None, [_err("PARSE_SYNTAX", "$", f"document is not valid UTF-8: {exc}")])
    else:
        text = document
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        return ParseResult(
            None, [_err("PARSE_SYNTAX", "$", f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}")]
        )
    if not isinstance(raw, dict):
        return ParseResult(None, [_err("PARSE_SYNTAX", "$", "document root must be an object")])

    doc = _Doc(strict)
    doc.check_keys(raw, _TOP_KEYS, "$")

    version = raw.get("version")
    if version is None:
        doc.diags.append(_err("UNKNOWN_VERSION", "$.version", "required field 'version' is missing"))
    elif version != FORMAT_VERSION:
        doc.diags.append(_err("UNKNOWN_VERSION", "$.version", f"unsupported format version {version!r}"))

    if "horizons" in raw:
        horizons = tuple(doc.str_list(raw["horizons"], "$.horizons"))
    else:
        horizons = DEFAULT_HORIZONS
        doc.diags.append(_warn("HORIZONS_DEFAULTED", "$.horizons", "no horizons declared; using the default three"))

    processes = _parse_entity_list(doc, raw.get("business_processes"), "business_processes", _parse_process)
    assets = _parse_entity_list(doc, raw.get("it_assets"), "it_assets", _parse_asset)
    cis = _parse_entity_list(doc, raw.get("configuration_items"), "configuration_items", _parse_ci)
    debt_items = _parse_entity_list(doc, raw.get("debt_items"), "debt_items", _parse_debt_item)
    metrics = _parse_entity_list(doc, raw.get("metrics"), "metrics", _parse_metric)
    edges = _parse_edges(doc, raw.get("edges"))

    if "rule" in raw:
        rule = parse_rule_object(doc, raw["rule"])
    else:
        rule = default_rule()
        doc.diags.append(_warn("RULE_DEFAULTED", "$.rule", "no rule section; using the default rule table"))

    diagnostics = sort_diagnostics(doc.diags)
    if any(d.severity is Severity.ERROR for d in diagnostics):
        return ParseResult(None, diagnostics)

    model = Model(
        version=FORMAT_VERSION,
        horizons=horizons,
        processes=tuple(processes),
        assets=tuple(assets),
        configuration_items=tuple(cis),
        debt_items=tuple(debt_items),
        metrics=tuple(metrics),
        edges=edges,
        rule=rule if rule is not None else default_rule(),
    )
    return ParseResult(model, diagnostics)


def model_to_doc(model: Model) -> dict:
    """The document form of a model, keys and entities in canonical order."""
    doc: dict[str, Any] = {
        "version": model.version,
        "horizons": list(model.horizons),
        "business_processes": [
            {"id": p.id, "name": p.name, "class": p.process_class.value} for p in model.processes
        ],
        "it_assets": [{"id": a.id, "name": a.name, "state": a.state.value} for a in model.assets],
        "configuration_items": [],
        "debt_items": [],
        "metrics": [
            {"id": m.id, "name": m.name, "owner": m.owner, "horizon": m.horizon} for m in model.metrics
        ],
        "edges": {
            key: [list(pair) for pair in getattr(model.edges, key)] for key in _EDGE_KEYS
        },
        "rule": dict(zip(RULE_KEYS, model.rule.ranks)),
    }
    for ci in model.configuration_items:
        entry: dict[str, Any] = {"id": ci.id, "name": ci.name}
        if ci.kind is not None:
            entry["kind"] = ci.kind
        doc["configuration_items"].append(entry)
    for item in model.debt_items:
        entry = {"id": item.id, "title": item.title}
        if item.debt_type is not None:
            entry["debt_type"] = item.debt_type
        entry["affected_cis"] = list(item.affected_cis)
        if item.source is not None:
            entry["source"] = item.source
        doc["debt_items"].append(entry)
    return doc


def serialize_model(model: Model) -> bytes:
    """Canonical bytes: parse_model(serialize_model(m)) reconstructs m."""
    return canonical_json_bytes(model_to_doc(model))


@dataclass(frozen=True)
class ImportMapping:
    """How an issue-tracker export maps onto debt items.

    label_filter marks which issues are debt; ci_label_prefix turns labels
    like "ci:sales-api" into affected CI ids; field_map routes export
    fields onto the item's title, source, or debt_type.
    """

    label_filter: frozenset[str]
    ci_label_prefix: str
    field_map: tuple[tuple[str, str], ...] = (("id", "source"), ("title", "title"))

    _TARGETS = ("title", "source", "debt_type")

    def __post_init__(self) -> None:
        object.__setattr__(self, "label_filter", frozenset(self.label_filter))
        object.__setattr__(self, "field_map", tuple((str(k), str(v)) for k, v in dict(self.field_map).items()))
        if not self.label_filter:
            raise ValueError("label_filter must not be empty")
        if not self.ci_label_prefix:
            raise ValueError("ci_label_prefix must not be empty")
        for _, target in self.field_map:
            if target not in self._TARGETS:
                raise ValueError(f"field_map target must be one of {self._TARGETS}, got {target!r}")

    @classmethod
    def from_json(cls, raw: Any) -> "ImportMapping":
        if not isinstance(raw, dict):
            raise ValueError("mapping must be a JSON object")
        unknown = set(raw) - {"label_filter", "ci_label_prefix", "field_map"}
        if unknown:
            raise ValueError(f"unknown mapping fields: {', '.join(sorted(unknown))}")
        labels = raw.get("label_filter")
        if not isinstance(labels, list) or not all(isinstance(v, str) for v in labels):
            raise ValueError("label_filter must be an array of strings")
        prefix = raw.get("ci_label_prefix")
        if not isinstance(prefix, str):
            raise ValueError("ci_label_prefix must be a string")
        kwargs: dict[str, Any] = {"label_filter": frozenset(labels), "ci_label_prefix": prefix}
        if "field_map" in raw:
            fm = raw["field_map"]
            if not isinstance(fm, dict) or not all(isinstance(k, str) and isinstance(v, str) for k, v in fm.items()):
                raise ValueError("field_map must be an object of string -> string")
            kwargs["field_map"] = tuple(fm.items())
        return cls(**kwargs)


def _mint_item_id(source: str, taken: set[str]) -> str:
    base = re.sub(r"[^A-Za-z0-9_.\-]+", "-", source).strip("-.") or "item"
    candidate = base
    suffix = 2
    while candidate in taken:
        candidate = f"{base}-{suffix}"
        suffix += 1
    return candidate


def _parse_export(export: bytes | str) -> list[dict]:
    if isinstance(export, (bytes, bytearray)):
        try:
            export = bytes(export).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ExportParseError(f"export is not valid UTF-8: {exc}") from exc
    try:
        raw = json.loads(export)
    except json.JSONDecodeError as exc:
        raise ExportParseError(f"export is not valid JSON: {exc.msg} (line {exc.lineno})") from exc
    if not isinstance(raw, list):
        raise ExportParseError("export must be a JSON array of issues")
    issues = []
    for i, entry in enumerate(raw):
        if not isinstance(entry, dict):
            raise ExportParseError(f"issue #{i} is not an object")
        if "id" not in entry or isinstance(entry["id"], (dict, list, bool)) or entry["id"] is None:
            raise ExportParseError(f"issue #{i} has no usable 'id'")
        labels = entry.get("labels", [])
        if not isinstance(labels, list) or not all(isinstance(v, str) for v in labels):
            raise ExportParseError(f"issue #{i} has malformed 'labels'")
        issues.append(entry)
    return issues


def import_issues(
    export: bytes | str, mapping: ImportMapping, model: Model
) -> tuple[list[DebtItem], list[Diagnostic]]:
    """Turn filter-labelled issues into debt items against the model's CIs.

    Issues whose filter label matches but where no CI label resolves are
    excluded with an UNMAPPED_ISSUE warning. Dedup is by source id, both
    within the export and against items already in the model, so importing
    the same export twice adds nothing. The model itself is not changed.
    """
    issues = _parse_export(export)
    ci_ids = model.ci_ids()
    existing_sources = {item.source for item in model.debt_items if item.source is not None}
    taken_ids = {item.id for item in model.debt_items}
    field_map = dict(mapping.field_map)

    items: list[DebtItem] = []
    diags: list[Diagnostic] = []
    seen_sources: set[str] = set()

    for issue in issues:
        labels = issue.get("labels", [])
        if not mapping.label_filter.intersection(labels):
            continue

        mapped = {target: str(issue[field]) for field, target in field_map.items() if field in issue}
        source = mapped.get("source", str(issue["id"]))
        if source in existing_sources or source in seen_sources:
            continue

        resolved: list[str] = []
        ignored: list[str] = []
        for label in labels:
            if not label.startswith(mapping.ci_label_prefix):
                continue
            ci = label[len(mapping.ci_label_prefix):]
            (resolved if ci in ci_ids else ignored).append(label)
        if not resolved:
            diags.append(
                _warn("UNMAPPED_ISSUE", source, f"issue {source!r} matched the filter but no CI label resolves")
            )
            continue
        if ignored:
            diags.append(
                _warn(
                    "UNMAPPED_ISSUE",
                    source,
                    f"issue {source!r}: ignored unresolvable CI labels: {', '.join(sorted(ignored))}",
                )
            )

        seen_sources.add(source)
        item_id = _mint_item_id(source, taken_ids)
        taken_ids.add(item_id)
        items.append(
            DebtItem(
                id=item_id,
                title=mapped.get("title", source),
                affected_cis=tuple(label[len(mapping.ci_label_prefix):] for label in resolved),
                debt_type=mapped.get("debt_type"),
                source=source,
            )
        )
    return items, sort_diagnostics(diags)
