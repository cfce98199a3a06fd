"""Independent brute-force oracles for the engine under test.

Everything here works by exhaustive enumeration of simple paths (or full
reachability matrices), deliberately sharing no code with the package's
closure/SCC implementations. Exponential is fine: oracle models stay tiny.
"""

from __future__ import annotations

from tracy.model import Model, ProcessClass

# Cell order of the 2x2 rule table as data, mirroring the documented
# document keys, not the engine's lookup code.
RULE_ORDER = (
    ("core_support", "operational"),
    ("core_support", "to_be_operational"),
    ("other", "operational"),
    ("other", "to_be_operational"),
)


def closure_by_paths(model: Model, ci_id: str) -> set[str]:
    """Nodes with a simple depends-on path to ci_id, plus ci_id itself."""
    known = {c.id for c in model.configuration_items}
    edges = [(frm, to) for frm, to in model.edges.ci_depends_on if frm in known and to in known]
    nodes = {ci_id}

    def walk(path: list[str]) -> None:
        for frm, to in edges:
            if to == path[-1] and frm not in path:
                nodes.add(frm)
                walk(path + [frm])

    walk([ci_id])
    return nodes


def pairs_by_paths(model: Model, item) -> set[tuple[str, str, str, str]]:
    """All (asset, bp, via, origin) tuples found by path enumeration."""
    asset_ids = {a.id for a in model.assets}
    bp_ids = {p.id for p in model.processes}
    found = set()
    for origin in item.affected_cis:
        for via in closure_by_paths(model, origin):
            for ci, asset in model.edges.ci_supports_asset:
                if ci != via or asset not in asset_ids:
                    continue
                for asset2, bp in model.edges.asset_supports_bp:
                    if asset2 == asset and bp in bp_ids:
                        found.add((asset, bp, via, origin))
    return found


def rank_by_paths(model: Model, item) -> "int | None":
    """Minimum rule rank over enumerated pairs; None when nothing reached."""
    table = dict(zip(RULE_ORDER, model.rule.ranks))
    class_of = {p.id: p.process_class for p in model.processes}
    state_of = {a.id: a.state for a in model.assets}
    ranks = []
    for asset, bp, _, _ in pairs_by_paths(model, item):
        group = "core_support" if class_of[bp] in (ProcessClass.CORE, ProcessClass.SUPPORT) else "other"
        ranks.append(table[(group, state_of[asset].value)])
    return min(ranks) if ranks else None


def impact_by_paths(model: Model, item_id: str) -> dict:
    """Reachable entity sets and per-horizon metric sets by enumeration."""
    item = next(i for i in model.debt_items if i.id == item_id)
    pairs = pairs_by_paths(model, item)
    assets = {asset for asset, _, _, _ in pairs}
    bps = {bp for _, bp, _, _ in pairs}
    metrics = {h: set() for h in model.horizons}
    for metric in model.metrics:
        if metric.owner in assets or metric.owner in bps:
            metrics[metric.horizon].add((metric.id, metric.owner))
    return {"assets": assets, "processes": bps, "metrics": metrics}


def sccs_by_reachability(model: Model) -> set[frozenset]:
    """Cyclic components via a full reachability matrix (Floyd-Warshall)."""
    nodes = sorted(c.id for c in model.configuration_items)
    index = {n: i for i, n in enumerate(nodes)}
    n = len(nodes)
    reach = [[False] * n for _ in range(n)]
    self_loop = set()
    for frm, to in model.edges.ci_depends_on:
        if frm in index and to in index:
            reach[index[frm]][index[to]] = True
            if frm == to:
                self_loop.add(frm)
    for k in range(n):
        for i in range(n):
            if reach[i][k]:
                for j in range(n):
                    if reach[k][j]:
                        reach[i][j] = True
    components = set()
    for i, a in enumerate(nodes):
        members = {b for j, b in enumerate(nodes) if i == j or (reach[i][j] and reach[j][i])}
        if len(members) >= 2 or a in self_loop:
            components.add(frozenset(members))
    return components


def walk_document_references(doc: dict) -> list[str]:
    """Referential checks straight off the raw document dict.

    A schema/reference walker independent of the Model types: reports
    duplicate ids, dangling references, and empty affects sets.
    """
    problems: list[str] = []

    def ids_of(key: str) -> list[str]:
        return [entry["id"] for entry in doc.get(key, [])]

    pools = {}
    for key in ("business_processes", "it_assets", "configuration_items", "debt_items", "metrics"):
        declared = ids_of(key)
        for entity_id in sorted({i for i in declared if declared.count(i) > 1}):
            problems.append(f"duplicate id in {key}: {entity_id}")
        pools[key] = set(declared)

    for item in doc.get("debt_items", []):
        if not item.get("affected_cis"):
            problems.append(f"debt item {item['id']} affects nothing")
        for ci in item.get("affected_cis", []):
            if ci not in pools["configuration_items"]:
                problems.append(f"debt item {item['id']} references missing CI {ci}")

    horizons = set(doc.get("horizons", []))
    for metric in doc.get("metrics", []):
        if metric["owner"] not in pools["business_processes"] | pools["it_assets"]:
            problems.append(f"metric {metric['id']} has unresolvable owner {metric['owner']}")
        if metric["horizon"] not in horizons:
            problems.append(f"metric {metric['id']} has undeclared horizon {metric['horizon']}")

    edges = doc.get("edges", {})
    edge_pools = {
        "ci_depends_on": (pools["configuration_items"], pools["configuration_items"]),
        "ci_supports_asset": (pools["configuration_items"], pools["it_assets"]),
        "asset_supports_bp": (pools["it_assets"], pools["business_processes"]),
    }
    for key, (from_pool, to_pool) in edge_pools.items():
        for frm, to in edges.get(key, []):
            if frm not in from_pool:
                problems.append(f"edge {key} has unresolvable endpoint {frm}")
            if to not in to_pool:
                problems.append(f"edge {key} has unresolvable endpoint {to}")
    return problems
