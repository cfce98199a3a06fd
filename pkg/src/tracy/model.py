"""Domain model: processes, assets, configuration items, debt, rules.

The model ties three layers of an organization together: configuration
items (where technical debt lives), the IT assets they directly or
indirectly support, and the business processes those assets serve.
A 2x2 rule table maps (process group, asset state) combinations to
urgency ranks; lower rank means more urgent.

Diagnostic codes form a closed set:

============== ======== =====================================================
code           severity meaning
============== ======== =====================================================
DUPLICATE_ID   error    id declared more than once within its entity class
MISSING_REF    error    a reference points at an undeclared id
EMPTY_AFFECTS  error    debt item with an empty affected_cis set
INVALID_ID     error    id violates the identifier syntax
SELF_LOOP      error    configuration item depends on itself
DUPLICATE_EDGE error    the same edge pair declared twice
EMPTY_HORIZONS error    model declares no horizon labels
CYCLE          warning  dependency cycle among configuration items
UNLINKED_CI    warning  no asset reachable from this configuration item
UNLINKED_ASSET warning  asset supports no business process
PARSE_SYNTAX   error    document is not well-formed (ingest)
UNKNOWN_VERSION error   missing or unsupported format version (ingest)
UNKNOWN_FIELD  error*   field not in the document schema (ingest; warning in
                        lenient mode)
MISSING_FIELD  error    required field absent (ingest)
BAD_TYPE       error    field has the wrong JSON type (ingest)
BAD_VALUE      error    field value outside its domain (ingest)
RULE_DEFAULTED warning  document had no rule section; default applied (ingest)
HORIZONS_DEFAULTED warning  document had no horizons; defaults applied (ingest)
UNMAPPED_ISSUE warning  issue matched the filter but no CI label resolved
                        (import)
============== ======== =====================================================
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, fields
from enum import Enum
from typing import Iterable, Mapping

from . import graph

__all__ = [
    "AssetState",
    "BusinessProcess",
    "ConfigurationItem",
    "DEFAULT_HORIZONS",
    "DebtItem",
    "Diagnostic",
    "DIAGNOSTIC_CODES",
    "EdgeSet",
    "ITAsset",
    "Metric",
    "Model",
    "PrioritizationRule",
    "ProcessClass",
    "ProcessGroup",
    "RULE_CELLS",
    "Severity",
    "default_rule",
    "group_of",
    "is_valid_id",
    "validate",
]

# Safe in file formats, URLs, and DOT output.
ID_PATTERN = re.compile(r"^[A-Za-z0-9_.\-]+$")

DEFAULT_HORIZONS: tuple[str, ...] = ("immediate", "short_term", "long_term")


def is_valid_id(value: str) -> bool:
    return isinstance(value, str) and bool(ID_PATTERN.match(value))


class ProcessClass(str, Enum):
    CORE = "core"
    SUPPORT = "support"
    OTHER = "other"


class ProcessGroup(str, Enum):
    """Rule-table row: core and support processes share one group."""

    CORE_SUPPORT = "core_support"
    OTHER = "other"


class AssetState(str, Enum):
    OPERATIONAL = "operational"
    TO_BE_OPERATIONAL = "to_be_operational"


class Severity(str, Enum):
    ERROR = "error"
    WARNING = "warning"


DIAGNOSTIC_CODES: frozenset[str] = frozenset(
    {
        "DUPLICATE_ID",
        "MISSING_REF",
        "EMPTY_AFFECTS",
        "INVALID_ID",
        "SELF_LOOP",
        "DUPLICATE_EDGE",
        "EMPTY_HORIZONS",
        "CYCLE",
        "UNLINKED_CI",
        "UNLINKED_ASSET",
        "PARSE_SYNTAX",
        "UNKNOWN_VERSION",
        "UNKNOWN_FIELD",
        "MISSING_FIELD",
        "BAD_TYPE",
        "BAD_VALUE",
        "RULE_DEFAULTED",
        "HORIZONS_DEFAULTED",
        "UNMAPPED_ISSUE",
    }
)


@dataclass(frozen=True)
class Diagnostic:
    """One finding about a model or document; never an exception."""

    severity: Severity
    code: str
    subject: str
    message: str

    def __post_init__(self) -> None:
        if self.code not in DIAGNOSTIC_CODES:
            raise ValueError(f"unknown diagnostic code: {self.code}")

    def __str__(self) -> str:
        return f"{self.severity.value} {self.code} {self.subject}: {self.message}"


def sort_diagnostics(diags: Iterable[Diagnostic]) -> list[Diagnostic]:
    """Canonical order: errors first, then by code, subject, message."""
    rank = {Severity.ERROR: 0, Severity.WARNING: 1}
    return sorted(diags, key=lambda d: (rank[d.severity], d.code, d.subject, d.message))


@dataclass(frozen=True)
class BusinessProcess:
    id: str
    name: str
    process_class: ProcessClass


@dataclass(frozen=True)
class ITAsset:
    id: str
    name: str
    state: AssetState


@dataclass(frozen=True)
class ConfigurationItem:
    id: str
    name: str
    kind: str | None = None


@dataclass(frozen=True)
class DebtItem:
    """A technical debt record tied to the configuration items it affects."""

    id: str
    title: str
    affected_cis: tuple[str, ...] = ()
    debt_type: str | None = None
    source: str | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "affected_cis", tuple(sorted(set(self.affected_cis))))


@dataclass(frozen=True)
class Metric:
    """A business metric owned by exactly one process or asset."""

    id: str
    name: str
    owner: str
    horizon: str


@dataclass(frozen=True)
class EdgeSet:
    """All graph edges. (x, y) in ci_depends_on means x depends on y,
    so debt in y propagates to x."""

    ci_depends_on: tuple[tuple[str, str], ...] = ()
    ci_supports_asset: tuple[tuple[str, str], ...] = ()
    asset_supports_bp: tuple[tuple[str, str], ...] = ()

    def __post_init__(self) -> None:
        for f in fields(self):
            pairs = tuple(sorted((str(a), str(b)) for a, b in getattr(self, f.name)))
            object.__setattr__(self, f.name, pairs)


# Fixed cell order of the 2x2 rule table: core/support row first,
# operational column first.
RULE_CELLS: tuple[tuple[ProcessGroup, AssetState], ...] = (
    (ProcessGroup.CORE_SUPPORT, AssetState.OPERATIONAL),
    (ProcessGroup.CORE_SUPPORT, AssetState.TO_BE_OPERATIONAL),
    (ProcessGroup.OTHER, AssetState.OPERATIONAL),
    (ProcessGroup.OTHER, AssetState.TO_BE_OPERATIONAL),
)


@dataclass(frozen=True)
class PrioritizationRule:
    """Total map (process group, asset state) -> rank; lower is more urgent.

    Ranks are small non-negative integers, not scores. Equal ranks in
    different cells are allowed and merge their groups.
    """

    ranks: tuple[int, int, int, int]

    def __post_init__(self) -> None:
        ranks = tuple(self.ranks)
        if len(ranks) != len(RULE_CELLS):
            raise ValueError("rule must define exactly 4 cells")
        for r in ranks:
            if isinstance(r, bool) or not isinstance(r, int) or r < 0:
                raise ValueError(f"rank must be a non-negative integer, got {r!r}")
        object.__setattr__(self, "ranks", ranks)

    def rank(self, group: ProcessGroup, state: AssetState) -> int:
        return self.ranks[RULE_CELLS.index((group, state))]

    @property
    def entries(self) -> dict[tuple[ProcessGroup, AssetState], int]:
        return dict(zip(RULE_CELLS, self.ranks))

    @classmethod
    def from_entries(cls, entries: Mapping[tuple[ProcessGroup, AssetState], int]) -> "PrioritizationRule":
        missing = [cell for cell in RULE_CELLS if cell not in entries]
        if missing or len(entries) != len(RULE_CELLS):
            raise ValueError("rule must define exactly the 4 (group, state) cells")
        return cls(tuple(entries[cell] for cell in RULE_CELLS))


def group_of(process_class: ProcessClass) -> ProcessGroup:
    """Collapse the three process classes onto the rule table's two rows."""
    if process_class in (ProcessClass.CORE, ProcessClass.SUPPORT):
        return ProcessGroup.CORE_SUPPORT
    return ProcessGroup.OTHER


def default_rule() -> PrioritizationRule:
    """Core/support rows outrank the others row; operational column first.

    The only hard constraint is that every core/support rank is strictly
    below every other-group rank; the 0/1/2/3 numbering is the default
    reading order and is overridable per model.
    """
    return PrioritizationRule((0, 1, 2, 3))


@dataclass(frozen=True)
class Model:
    """The complete organization world. Immutable; collections are kept
    sorted by id so equal content compares equal regardless of input order."""

    version: str = "1"
    horizons: tuple[str, ...] = DEFAULT_HORIZONS
    processes: tuple[BusinessProcess, ...] = ()
    assets: tuple[ITAsset, ...] = ()
    configuration_items: tuple[ConfigurationItem, ...] = ()
    debt_items: tuple[DebtItem, ...] = ()
    metrics: tuple[Metric, ...] = ()
    edges: EdgeSet = EdgeSet()
    rule: PrioritizationRule = field(default_factory=default_rule)

    def __post_init__(self) -> None:
        object.__setattr__(self, "horizons", tuple(self.horizons))
        for name in ("processes", "assets", "configuration_items", "debt_items", "metrics"):
            entities = tuple(sorted(getattr(self, name), key=lambda e: e.id))
            object.__setattr__(self, name, entities)

    def process_ids(self) -> set[str]:
        return {p.id for p in self.processes}

    def asset_ids(self) -> set[str]:
        return {a.id for a in self.assets}

    def ci_ids(self) -> set[str]:
        return {c.id for c in self.configuration_items}

    def debt_item(self, item_id: str) -> DebtItem | None:
        for item in self.debt_items:
            if item.id == item_id:
                return item
        return None


def _check_ids(model: Model, diags: list[Diagnostic]) -> None:
    for label, entities in (
        ("business process", model.processes),
        ("IT asset", model.assets),
        ("configuration item", model.configuration_items),
        ("debt item", model.debt_items),
        ("metric", model.metrics),
    ):
        seen: dict[str, int] = {}
        for entity in entities:
            seen[entity.id] = seen.get(entity.id, 0) + 1
            if not is_valid_id(entity.id):
                diags.append(
                    Diagnostic(
                        Severity.ERROR,
                        "INVALID_ID",
                        entity.id,
                        f"{label} id {entity.id!r} is not a valid identifier",
                    )
                )
        for dup_id, count in seen.items():
            if count > 1:
                diags.append(
                    Diagnostic(
                        Severity.ERROR,
                        "DUPLICATE_ID",
                        dup_id,
                        f"{label} id {dup_id!r} declared {count} times",
                    )
                )

    if not model.horizons:
        diags.append(Diagnostic(Severity.ERROR, "EMPTY_HORIZONS", "horizons", "model declares no horizon labels"))
    seen_horizons: dict[str, int] = {}
    for label_ in model.horizons:
        seen_horizons[label_] = seen_horizons.get(label_, 0) + 1
        if not is_valid_id(label_):
            diags.append(
                Diagnostic(Severity.ERROR, "INVALID_ID", label_, f"horizon label {label_!r} is not a valid identifier")
            )
    for dup, count in seen_horizons.items():
        if count > 1:
            diags.append(
                Diagnostic(Severity.ERROR, "DUPLICATE_ID", dup, f"horizon label {dup!r} declared {count} times")
            )


def _check_references(model: Model, diags: list[Diagnostic]) -> None:
    cis = model.ci_ids()
    assets = model.asset_ids()
    processes = model.process_ids()
    horizons = set(model.horizons)

    def missing(ref: str, context: str) -> None:
        diags.append(Diagnostic(Severity.ERROR, "MISSING_REF", ref, f"{context} references undeclared id {ref!r}"))

    for item in model.debt_items:
        if not item.affected_cis:
            diags.append(
                Diagnostic(
                    Severity.ERROR, "EMPTY_AFFECTS", item.id, f"debt item {item.id!r} affects no configuration items"
                )
            )
        for ci in item.affected_cis:
            if ci not in cis:
                missing(ci, f"debt item {item.id!r}")

    for metric in model.metrics:
        if metric.owner not in assets and metric.owner not in processes:
            missing(metric.owner, f"metric {metric.id!r} owner")
        if metric.horizon not in horizons:
            missing(metric.horizon, f"metric {metric.id!r} horizon")

    edge_specs = (
        ("ci_depends_on", model.edges.ci_depends_on, cis, cis),
        ("ci_supports_asset", model.edges.ci_supports_asset, cis, assets),
        ("asset_supports_bp", model.edges.asset_supports_bp, assets, processes),
    )
    for edge_name, pairs, from_pool, to_pool in edge_specs:
        seen_pairs: dict[tuple[str, str], int] = {}
        for a, b in pairs:
            seen_pairs[(a, b)] = seen_pairs.get((a, b), 0) + 1
            if a not in from_pool:
                missing(a, f"edge {edge_name} ({a!r} -> {b!r})")
            if b not in to_pool:
                missing(b, f"edge {edge_name} ({a!r} -> {b!r})")
            if edge_name == "ci_depends_on" and a == b:
                diags.append(
                    Diagnostic(Severity.ERROR, "SELF_LOOP", a, f"configuration item {a!r} depends on itself")
                )
        for (a, b), count in seen_pairs.items():
            if count > 1:
                diags.append(
                    Diagnostic(
                        Severity.ERROR, "DUPLICATE_EDGE", a, f"edge {edge_name} ({a!r} -> {b!r}) declared {count} times"
                    )
                )


def _check_graph(model: Model, diags: list[Diagnostic]) -> None:
    for cycle in graph.detect_cycles(model):
        diags.append(
            Diagnostic(
                Severity.WARNING,
                "CYCLE",
                cycle[0],
                "dependency cycle among configuration items: " + " -> ".join(cycle + (cycle[0],)),
            )
        )

    cis = model.ci_ids()
    supported = {ci for ci, _ in model.edges.ci_supports_asset if ci in cis}
    # Debt in a CI impacts its transitive dependents, so a CI is linked iff
    # some dependent (or itself) supports an asset: walk depends_on edges
    # forward from every supporting CI.
    forward: dict[str, list[str]] = {}
    for frm, to in model.edges.ci_depends_on:
        if frm in cis and to in cis:
            forward.setdefault(frm, []).append(to)
    linked = set(supported)
    stack = list(supported)
    while stack:
        current = stack.pop()
        for dependency in forward.get(current, ()):
            if dependency not in linked:
                linked.add(dependency)
                stack.append(dependency)
    for ci in sorted(cis - linked):
        diags.append(
            Diagnostic(
                Severity.WARNING, "UNLINKED_CI", ci, f"no IT asset is reachable from configuration item {ci!r}"
            )
        )

    supporting_assets = {asset for asset, _ in model.edges.asset_supports_bp}
    for asset in model.assets:
        if asset.id not in supporting_assets:
            diags.append(
                Diagnostic(
                    Severity.WARNING, "UNLINKED_ASSET", asset.id, f"IT asset {asset.id!r} supports no business process"
                )
            )


def validate(model: Model) -> list[Diagnostic]:
    """Whole-model validation.

    Returns all diagnostics in canonical order; the model is valid iff
    none has error severity. Cycles and unlinked entities are warnings:
    real systems have them and the engine tolerates them.
    """
    diags: list[Diagnostic] = []
    _check_ids(model, diags)
    _check_references(model, diags)
    _check_graph(model, diags)
    return sort_diagnostics(diags)
