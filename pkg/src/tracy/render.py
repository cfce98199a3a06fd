"""Canvas and table renderers: text, DOT, CSV, and structured JSON.

All renderers are pure functions from values to bytes; identical input
gives identical output, so everything here is golden-file testable.
"""

from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass

from .errors import MissingReference
from .ingest import canonical_json_bytes
from .model import AssetState, Metric, Model, ProcessGroup, group_of
from .prioritizer import ImpactReport, PrioritizedReport, _require_valid, rank_to_json

__all__ = [
    "CanvasLayout",
    "business_value_rows",
    "layout_prioritization_canvas",
    "render_business_value_canvas",
    "render_canvas",
    "render_priority_table",
]

CANVAS_FORMATS = ("text", "dot", "structured")
TABLE_FORMATS = ("text", "structured", "csv")
VALUE_CANVAS_FORMATS = ("text", "structured")


@dataclass(frozen=True)
class CanvasLayout:
    """Four-quadrant board: process groups left, asset states right.
    Edges are the (process, asset) support dependencies drawn across."""

    core_support: tuple[str, ...]
    other: tuple[str, ...]
    operational: tuple[str, ...]
    to_be_operational: tuple[str, ...]
    edges: tuple[tuple[str, str], ...]

    def to_json(self) -> dict:
        return {
            "quadrants": {
                "core_support": list(self.core_support),
                "other": list(self.other),
                "operational": list(self.operational),
                "to_be_operational": list(self.to_be_operational),
            },
            "edges": [{"process": process, "asset": asset} for process, asset in self.edges],
        }


def layout_prioritization_canvas(model: Model) -> CanvasLayout:
    """Deterministic canvas placement; cells sorted by id."""
    _require_valid(model)
    return CanvasLayout(
        core_support=tuple(
            sorted(p.id for p in model.processes if group_of(p.process_class) is ProcessGroup.CORE_SUPPORT)
        ),
        other=tuple(sorted(p.id for p in model.processes if group_of(p.process_class) is ProcessGroup.OTHER)),
        operational=tuple(sorted(a.id for a in model.assets if a.state is AssetState.OPERATIONAL)),
        to_be_operational=tuple(
            sorted(a.id for a in model.assets if a.state is AssetState.TO_BE_OPERATIONAL)
        ),
        edges=tuple(sorted((bp, asset) for asset, bp in model.edges.asset_supports_bp)),
    )


def _two_column_grid(rows: list[tuple[list[str], list[str]]], left_header: str, right_header: str) -> str:
    all_left = [left_header] + [line for left, _ in rows for line in left]
    all_right = [right_header] + [line for _, right in rows for line in right]
    left_width = max(len(line) for line in all_left)
    right_width = max(len(line) for line in all_right)

    out = [f"{left_header.ljust(left_width)} | {right_header}".rstrip()]
    rule = f"{'-' * left_width}-+-{'-' * right_width}"
    for left, right in rows:
        out.append(rule)
        height = max(len(left), len(right))
        for i in range(height):
            left_cell = left[i] if i < len(left) else ""
            right_cell = right[i] if i < len(right) else ""
            out.append(f"{left_cell.ljust(left_width)} | {right_cell}".rstrip())
    out.append(rule)
    return "\n".join(out) + "\n"


def _canvas_text(layout: CanvasLayout) -> str:
    def cell(title: str, ids: tuple[str, ...]) -> list[str]:
        return [f"[{title}]"] + [f"  {entity}" for entity in ids]

    grid = _two_column_grid(
        [
            (cell("core/support", layout.core_support), cell("operational", layout.operational)),
            (cell("other", layout.other), cell("to-be-operational", layout.to_be_operational)),
        ],
        "Business processes",
        "IT assets",
    )
    if not layout.edges:
        return grid
    lines = ["supports:"] + [f"  {process} <- {asset}" for process, asset in layout.edges]
    return grid + "\n".join(lines) + "\n"


def _dot_escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"')


def _dot_ids(raw_ids: list[str]) -> dict[str, str]:
    """Mangle ids into bare DOT identifiers, deterministically and without
    collisions."""
    mapping: dict[str, str] = {}
    taken: set[str] = set()
    for raw in raw_ids:
        base = re.sub(r"[^A-Za-z0-9_]", "_", raw) or "_"
        if base[0].isdigit():
            base = "_" + base
        candidate = base
        suffix = 2
        while candidate in taken:
            candidate = f"{base}_{suffix}"
            suffix += 1
        taken.add(candidate)
        mapping[raw] = candidate
    return mapping


def _canvas_dot(layout: CanvasLayout) -> str:
    names = _dot_ids(
        list(layout.core_support) + list(layout.other) + list(layout.operational) + list(layout.to_be_operational)
    )
    clusters = (
        ("core_support", "core/support business processes", layout.core_support),
        ("other", "other business processes", layout.other),
        ("operational", "operational IT assets", layout.operational),
        ("to_be_operational", "to-be-operational IT assets", layout.to_be_operational),
    )
    lines = ["digraph prioritization_canvas {", '  rankdir="LR";']
    for key, label, ids in clusters:
        lines.append(f"  subgraph cluster_{key} {{")
        lines.append(f'    label="{_dot_escape(label)}";')
        for entity in ids:
            lines.append(f'    {names[entity]} [label="{_dot_escape(entity)}"];')
        lines.append("  }")
    for process, asset in layout.edges:
        lines.append(f"  {names[asset]} -> {names[process]};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def render_canvas(layout: CanvasLayout, fmt: str) -> bytes:
    if fmt == "text":
        return _canvas_text(layout).encode("utf-8")
    if fmt == "dot":
        return _canvas_dot(layout).encode("utf-8")
    if fmt == "structured":
        return canonical_json_bytes(layout.to_json())
    raise ValueError(f"unknown canvas format {fmt!r}; expected one of {CANVAS_FORMATS}")


def _metrics_of(model: Model, owner: str) -> list[Metric]:
    return sorted((m for m in model.metrics if m.owner == owner), key=lambda m: m.id)


def business_value_rows(model: Model, selector: str | None = None) -> dict:
    """Structured business-value canvas: entities x horizons -> metrics."""
    entities: list[tuple[str, str]] = []
    if selector is None or selector == "all":
        entities += [(p.id, "business_process") for p in model.processes]
        entities += [(a.id, "it_asset") for a in model.assets]
    elif selector in model.process_ids():
        entities.append((selector, "business_process"))
    elif selector in model.asset_ids():
        entities.append((selector, "it_asset"))
    else:
        raise MissingReference(f"unknown business process or IT asset {selector!r}", (selector,))

    rows = []
    for entity_id, entity_type in entities:
        cells: dict[str, list[dict]] = {h: [] for h in model.horizons}
        for metric in _metrics_of(model, entity_id):
            if metric.horizon in cells:
                cells[metric.horizon].append({"id": metric.id, "name": metric.name})
        rows.append({"entity": entity_id, "entity_type": entity_type, "metrics": cells})
    return {"horizons": list(model.horizons), "rows": rows}


def _plain_table(headers: list[str], rows: list[list[str]]) -> str:
    widths = [len(h) for h in headers]
    for row in rows:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))
    lines = [" | ".join(h.ljust(widths[i]) for i, h in enumerate(headers)).rstrip()]
    lines.append("-+-".join("-" * w for w in widths))
    for row in rows:
        lines.append(" | ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip())
    return "\n".join(lines) + "\n"


def render_business_value_canvas(model: Model, selector: str | None, fmt: str) -> bytes:
    data = business_value_rows(model, selector)
    if fmt == "structured":
        return canonical_json_bytes(data)
    if fmt == "text":
        headers = ["entity"] + list(data["horizons"])
        rows = [
            [row["entity"]] + [", ".join(m["name"] for m in row["metrics"][h]) for h in data["horizons"]]
            for row in data["rows"]
        ]
        return _plain_table(headers, rows).encode("utf-8")
    raise ValueError(f"unknown business-value format {fmt!r}; expected one of {VALUE_CANVAS_FORMATS}")


def _distinct_pairs(entry_json: dict) -> list[str]:
    seen: list[str] = []
    for witness in entry_json["witnesses"]:
        pair = f"{witness['asset']}->{witness['bp']}"
        if pair not in seen:
            seen.append(pair)
    return seen


def _structured_table(report: PrioritizedReport, impacts: "list[ImpactReport] | None", model: Model | None) -> dict:
    doc = report.to_json()
    if impacts is None:
        return doc
    by_item = {impact.item_id: impact for impact in impacts}
    report_items = {entry.item_id for group in report.groups for entry in group.entries}
    if set(by_item) != report_items:
        raise ValueError("impacts must cover exactly the report's items")
    names = {m.id: m.name for m in model.metrics} if model is not None else {}
    horizons = list(impacts[0].horizon_metrics()) if impacts else []
    for group in doc["groups"]:
        for item in group["items"]:
            impact = by_item[item["item"]]
            item["metrics"] = {
                horizon: [{"id": metric_id, "name": names.get(metric_id, metric_id)} for metric_id, _ in pairs]
                for horizon, pairs in impact.metrics_by_horizon
            }
    doc["horizons"] = horizons
    return doc


def _table_cells(doc: dict) -> tuple[list[str], list[list[str]]]:
    horizons = doc.get("horizons", [])
    headers = ["item", "rank", "witnesses"] + list(horizons)
    rows = []
    for group in doc["groups"]:
        for item in group["items"]:
            row = [item["item"], str(group["rank"]), "; ".join(_distinct_pairs(item))]
            for horizon in horizons:
                row.append("; ".join(m["name"] for m in item["metrics"][horizon]))
            rows.append(row)
    return headers, rows


def render_priority_table(
    report: PrioritizedReport,
    impacts: "list[ImpactReport] | None" = None,
    fmt: str = "text",
    model: Model | None = None,
) -> bytes:
    """The grouped priority table; ranks ascend and UNLINKED comes last.

    With impacts supplied, one column per horizon lists the metric names
    (ids when no model is given to resolve names against).
    """
    doc = _structured_table(report, impacts, model)
    if fmt == "structured":
        return canonical_json_bytes(doc)
    headers, rows = _table_cells(doc)
    if fmt == "text":
        return _plain_table(headers, rows).encode("utf-8")
    if fmt == "csv":
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\r\n")
        writer.writerow(headers)
        writer.writerows(rows)
        return buffer.getvalue().encode("utf-8")
    raise ValueError(f"unknown table format {fmt!r}; expected one of {TABLE_FORMATS}")
