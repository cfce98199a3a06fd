"""Business-driven technical debt prioritization.

Debt items affect configuration items; impact propagates through the
dependency graph to IT assets and the business processes they support;
a configurable 2x2 rule table turns each reached (process group, asset
state) pair into an urgency rank.
"""

from .graph import PairWitness, detect_cycles, reachable_pairs, upstream_closure
from .model import (
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
    ProcessGroup,
    Severity,
    default_rule,
    group_of,
    validate,
)
from .prioritizer import (
    UNLINKED,
    ImpactReport,
    PrioritizedReport,
    WhatIfOverrides,
    apply_whatif,
    impact_of,
    prioritize,
    rank_of,
)

__version__ = "0.1.0"

__all__ = [
    "AssetState",
    "BusinessProcess",
    "ConfigurationItem",
    "DebtItem",
    "Diagnostic",
    "EdgeSet",
    "ImpactReport",
    "ITAsset",
    "Metric",
    "Model",
    "PairWitness",
    "PrioritizationRule",
    "PrioritizedReport",
    "ProcessClass",
    "ProcessGroup",
    "Severity",
    "UNLINKED",
    "WhatIfOverrides",
    "apply_whatif",
    "default_rule",
    "detect_cycles",
    "group_of",
    "impact_of",
    "prioritize",
    "rank_of",
    "reachable_pairs",
    "upstream_closure",
    "validate",
]
