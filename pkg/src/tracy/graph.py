"""Impact propagation over the dependency graph.

Debt sits in configuration items; impact flows against the dependency
arrows (debt in y hurts every x that depends on y), then across support
edges to assets and on to business processes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable

from .errors import MissingReference

if TYPE_CHECKING:
    from .model import DebtItem, Model

__all__ = ["PairWitness", "detect_cycles", "ordered_witnesses", "reachable_pairs", "upstream_closure"]


@dataclass(frozen=True)
class PairWitness:
    """One (asset, process) pair a debt item reaches, with the path ends:
    the affected CI the path started from and the CI that supports the asset."""

    asset: str
    bp: str
    via_ci: str
    origin_ci: str


def ordered_witnesses(witnesses: Iterable[PairWitness]) -> list[PairWitness]:
    return sorted(witnesses, key=lambda w: (w.asset, w.bp, w.origin_ci, w.via_ci))


def upstream_closure(model: Model, ci_id: str) -> set[str]:
    """The CI itself plus everything that transitively depends on it.

    Terminates on cyclic graphs; edges with undeclared endpoints are ignored.
    """
    known = model.ci_ids()
    if ci_id not in known:
        raise MissingReference(f"unknown configuration item {ci_id!r}", (ci_id,))
    dependents: dict[str, list[str]] = {}
    for frm, to in model.edges.ci_depends_on:
        if frm in known and to in known:
            dependents.setdefault(to, []).append(frm)
    closure = {ci_id}
    stack = [ci_id]
    while stack:
        for dependent in dependents.get(stack.pop(), ()):
            if dependent not in closure:
                closure.add(dependent)
                stack.append(dependent)
    return closure


def reachable_pairs(model: Model, item: DebtItem) -> set[PairWitness]:
    """Every (asset, process) pair the item's debt can reach, one witness
    per distinct (asset, process, via, origin) path shape."""
    assets = model.asset_ids()
    processes = model.process_ids()
    cis = model.ci_ids()
    supports: dict[str, list[str]] = {}
    for ci, asset in model.edges.ci_supports_asset:
        if ci in cis and asset in assets:
            supports.setdefault(ci, []).append(asset)
    serves: dict[str, list[str]] = {}
    for asset, bp in model.edges.asset_supports_bp:
        if asset in assets and bp in processes:
            serves.setdefault(asset, []).append(bp)

    witnesses: set[PairWitness] = set()
    for origin in item.affected_cis:
        for via in upstream_closure(model, origin):
            for asset in supports.get(via, ()):
                for bp in serves.get(asset, ()):
                    witnesses.add(PairWitness(asset=asset, bp=bp, via_ci=via, origin_ci=origin))
    return witnesses


def _strongly_connected_components(nodes: list[str], adjacency: dict[str, list[str]]) -> list[list[str]]:
    # Iterative Tarjan; recursion would overflow on long dependency chains.
    index_of: dict[str, int] = {}
    lowlink: dict[str, int] = {}
    on_stack: set[str] = set()
    stack: list[str] = []
    components: list[list[str]] = []
    counter = 0

    for root in nodes:
        if root in index_of:
            continue
        work: list[tuple[str, int]] = [(root, 0)]
        while work:
            node, edge_index = work.pop()
            if edge_index == 0:
                index_of[node] = lowlink[node] = counter
                counter += 1
                stack.append(node)
                on_stack.add(node)
            advanced = False
            neighbours = adjacency.get(node, [])
            while edge_index < len(neighbours):
                successor = neighbours[edge_index]
                edge_index += 1
                if successor not in index_of:
                    work.append((node, edge_index))
                    work.append((successor, 0))
                    advanced = True
                    break
                if successor in on_stack:
                    lowlink[node] = min(lowlink[node], index_of[successor])
            if advanced:
                continue
            if lowlink[node] == index_of[node]:
                component = []
                while True:
                    member = stack.pop()
                    on_stack.discard(member)
                    component.append(member)
                    if member == node:
                        break
                components.append(component)
            if work:
                parent = work[-1][0]
                lowlink[parent] = min(lowlink[parent], lowlink[node])
    return components


def _canonical_cycle(members: list[str], adjacency: dict[str, list[str]]) -> tuple[str, ...]:
    """Rotate a pure cycle to start at its smallest id; for components with
    chords (no single cycle order exists) fall back to sorted members."""
    member_set = set(members)
    successors = {m: [n for n in adjacency.get(m, ()) if n in member_set and n != m] for m in members}
    if all(len(next_) == 1 for next_ in successors.values()) and len(members) > 1:
        start = min(members)
        order = [start]
        current = successors[start][0]
        while current != start and len(order) <= len(members):
            order.append(current)
            current = successors[current][0]
        if current == start and len(order) == len(members):
            return tuple(order)
    return tuple(sorted(members))


def detect_cycles(model: Model) -> list[tuple[str, ...]]:
    """Dependency cycles among CIs: one entry per strongly-connected
    component of size >= 2 or self-looping node, smallest id first."""
    nodes = sorted(model.ci_ids())
    node_set = set(nodes)
    adjacency: dict[str, list[str]] = {}
    self_loops: set[str] = set()
    for frm, to in model.edges.ci_depends_on:
        if frm in node_set and to in node_set:
            adjacency.setdefault(frm, []).append(to)
            if frm == to:
                self_loops.add(frm)

    cycles: list[tuple[str, ...]] = []
    for component in _strongly_connected_components(nodes, adjacency):
        if len(component) >= 2:
            cycles.append(_canonical_cycle(component, adjacency))
        elif component[0] in self_loops:
            cycles.append((component[0],))
    cycles.sort()
    return cycles
