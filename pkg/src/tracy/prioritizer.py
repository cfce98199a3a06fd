"""Rank debt items through the rule table and aggregate business impact.

An item's effective rank is the minimum rule rank over every (asset,
process) pair its debt reaches: the most urgent consequence wins. Items
reaching nothing rank UNLINKED, which sorts after every number and is
reported rather than dropped.
"""

from __future__ import annotations

import dataclasses
import functools
from dataclasses import dataclass
from typing import Iterable, Mapping, Union

from .errors import InvalidModel, MissingReference
from .graph import PairWitness, ordered_witnesses, reachable_pairs
from .model import (
    AssetState,
    DebtItem,
    Model,
    PrioritizationRule,
    ProcessClass,
    Severity,
    group_of,
    validate,
)

__all__ = [
    "UNLINKED",
    "EffectiveRank",
    "ImpactReport",
    "ItemEntry",
    "PrioritizedReport",
    "RankGroup",
    "WhatIfOverrides",
    "apply_whatif",
    "impact_of",
    "prioritize",
    "rank_of",
    "rank_from_json",
    "rank_to_json",
]


@functools.total_ordering
class _Unlinked:
    """Sentinel rank for items whose debt reaches no pair; orders after
    every integer."""

    _instance: "_Unlinked | None" = None

    def __new__(cls) -> "_Unlinked":
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "UNLINKED"

    def __eq__(self, other: object) -> bool:
        return isinstance(other, _Unlinked)

    def __lt__(self, other: object) -> bool:
        return False

    def __hash__(self) -> int:
        return hash("UNLINKED")


UNLINKED = _Unlinked()
EffectiveRank = Union[int, _Unlinked]


def rank_to_json(rank: EffectiveRank) -> "int | str":
    return "unlinked" if isinstance(rank, _Unlinked) else rank


def rank_from_json(value: "int | str") -> EffectiveRank:
    if value == "unlinked":
        return UNLINKED
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValueError(f"not a rank: {value!r}")
    return value


def _witness_json(witness: PairWitness) -> dict:
    return {"asset": witness.asset, "bp": witness.bp, "via_ci": witness.via_ci, "origin_ci": witness.origin_ci}


@dataclass(frozen=True)
class ItemEntry:
    item_id: str
    witnesses: tuple[PairWitness, ...]
    all_pairs_count: int

    def to_json(self) -> dict:
        return {
            "item": self.item_id,
            "witnesses": [_witness_json(w) for w in self.witnesses],
            "all_pairs_count": self.all_pairs_count,
        }


@dataclass(frozen=True)
class RankGroup:
    rank: EffectiveRank
    entries: tuple[ItemEntry, ...]

    def to_json(self) -> dict:
        return {"rank": rank_to_json(self.rank), "items": [e.to_json() for e in self.entries]}


@dataclass(frozen=True)
class PrioritizedReport:
    """Debt items grouped by effective rank, ascending, UNLINKED last."""

    groups: tuple[RankGroup, ...]

    def to_json(self) -> dict:
        return {"groups": [g.to_json() for g in self.groups]}

    def rank_by_item(self) -> dict[str, EffectiveRank]:
        return {entry.item_id: group.rank for group in self.groups for entry in group.entries}


@dataclass(frozen=True)
class ImpactReport:
    """Reachable entities of one item and their metrics per time horizon."""

    item_id: str
    assets: tuple[str, ...]
    processes: tuple[str, ...]
    metrics_by_horizon: tuple[tuple[str, tuple[tuple[str, str], ...]], ...]

    def horizon_metrics(self) -> dict[str, tuple[tuple[str, str], ...]]:
        return dict(self.metrics_by_horizon)

    def to_json(self) -> dict:
        return {
            "item": self.item_id,
            "assets": list(self.assets),
            "processes": list(self.processes),
            "metrics_by_horizon": {
                horizon: [{"metric": metric_id, "owner": owner} for metric_id, owner in pairs]
                for horizon, pairs in self.metrics_by_horizon
            },
        }


@dataclass(frozen=True)
class WhatIfOverrides:
    """A non-persisted model edit: asset states, process classes, rule."""

    asset_state_changes: tuple[tuple[str, AssetState], ...] = ()
    process_class_changes: tuple[tuple[str, ProcessClass], ...] = ()
    rule_replacement: PrioritizationRule | None = None

    def __post_init__(self) -> None:
        object.__setattr__(
            self,
            "asset_state_changes",
            tuple(sorted((str(k), AssetState(v)) for k, v in _as_pairs(self.asset_state_changes))),
        )
        object.__setattr__(
            self,
            "process_class_changes",
            tuple(sorted((str(k), ProcessClass(v)) for k, v in _as_pairs(self.process_class_changes))),
        )

    def is_empty(self) -> bool:
        return not self.asset_state_changes and not self.process_class_changes and self.rule_replacement is None


def _as_pairs(value: "Mapping | Iterable") -> Iterable[tuple]:
    if isinstance(value, Mapping):
        return value.items()
    return value


def _require_valid(model: Model) -> None:
    errors = [d for d in validate(model) if d.severity is Severity.ERROR]
    if errors:
        raise InvalidModel(f"model has {len(errors)} validation error(s)", errors)


def _rank_of_pairs(model: Model, pairs: Iterable[PairWitness]) -> EffectiveRank:
    state_of = {a.id: a.state for a in model.assets}
    class_of = {p.id: p.process_class for p in model.processes}
    ranks = [model.rule.rank(group_of(class_of[w.bp]), state_of[w.asset]) for w in pairs]
    return min(ranks) if ranks else UNLINKED


def rank_of(model: Model, item: DebtItem) -> EffectiveRank:
    """Minimum rule rank over the item's reachable pairs; UNLINKED if none."""
    _require_valid(model)
    return _rank_of_pairs(model, reachable_pairs(model, item))


def prioritize(model: Model) -> PrioritizedReport:
    """Rank every debt item and group by effective rank.

    Witnesses record only the pairs achieving the minimal rank; within a
    group items are ordered by id alone, because choosing among equals is
    deliberately left to the stakeholders.
    """
    _require_valid(model)
    state_of = {a.id: a.state for a in model.assets}
    class_of = {p.id: p.process_class for p in model.processes}

    grouped: dict[EffectiveRank, list[ItemEntry]] = {}
    for item in model.debt_items:
        pairs = reachable_pairs(model, item)
        if pairs:
            by_rank = {
                witness: model.rule.rank(group_of(class_of[witness.bp]), state_of[witness.asset])
                for witness in pairs
            }
            best = min(by_rank.values())
            witnesses = tuple(ordered_witnesses(w for w, r in by_rank.items() if r == best))
            entry = ItemEntry(item_id=item.id, witnesses=witnesses, all_pairs_count=len(pairs))
            grouped.setdefault(best, []).append(entry)
        else:
            grouped.setdefault(UNLINKED, []).append(ItemEntry(item_id=item.id, witnesses=(), all_pairs_count=0))

    ordered_ranks = sorted(grouped)
    groups = tuple(
        RankGroup(rank=rank, entries=tuple(sorted(grouped[rank], key=lambda e: e.item_id))) for rank in ordered_ranks
    )
    return PrioritizedReport(groups=groups)


def impact_of(model: Model, item_id: str) -> ImpactReport:
    """Reachable assets/processes of one item and their metrics, grouped
    under the model's horizons in declared order."""
    _require_valid(model)
    item = model.debt_item(item_id)
    if item is None:
        raise MissingReference(f"unknown debt item {item_id!r}", (item_id,))

    pairs = reachable_pairs(model, item)
    assets = tuple(sorted({w.asset for w in pairs}))
    processes = tuple(sorted({w.bp for w in pairs}))
    reachable = set(assets) | set(processes)

    by_horizon: dict[str, list[tuple[str, str]]] = {h: [] for h in model.horizons}
    for metric in model.metrics:
        if metric.owner in reachable:
            by_horizon[metric.horizon].append((metric.id, metric.owner))
    metrics = tuple(
        (horizon, tuple(sorted(by_horizon[horizon], key=lambda pair: (pair[1], pair[0]))))
        for horizon in model.horizons
    )
    return ImpactReport(item_id=item_id, assets=assets, processes=processes, metrics_by_horizon=metrics)


def _overridden_model(model: Model, overrides: WhatIfOverrides) -> Model:
    asset_ids = model.asset_ids()
    process_ids = model.process_ids()
    unknown = tuple(
        [a for a, _ in overrides.asset_state_changes if a not in asset_ids]
        + [p for p, _ in overrides.process_class_changes if p not in process_ids]
    )
    if unknown:
        raise MissingReference(f"override references unknown ids: {', '.join(unknown)}", unknown)

    new_states = dict(overrides.asset_state_changes)
    new_classes = dict(overrides.process_class_changes)
    assets = tuple(
        dataclasses.replace(a, state=new_states[a.id]) if a.id in new_states else a for a in model.assets
    )
    processes = tuple(
        dataclasses.replace(p, process_class=new_classes[p.id]) if p.id in new_classes else p
        for p in model.processes
    )
    rule = overrides.rule_replacement if overrides.rule_replacement is not None else model.rule
    return dataclasses.replace(model, assets=assets, processes=processes, rule=rule)


def apply_whatif(
    model: Model, overrides: WhatIfOverrides
) -> tuple[PrioritizedReport, list[tuple[str, EffectiveRank, EffectiveRank]]]:
    """Evaluate prioritize on an overridden copy; the input stays untouched.

    The delta lists only items whose rank changed, by item id, including
    UNLINKED <-> numeric transitions.
    """
    _require_valid(model)
    overridden = _overridden_model(model, overrides)
    before = prioritize(model).rank_by_item()
    report = prioritize(overridden)
    after = report.rank_by_item()
    delta = [(item_id, before[item_id], after[item_id]) for item_id in sorted(before) if before[item_id] != after[item_id]]
    return report, delta
