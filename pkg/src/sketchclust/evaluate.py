"""Clustering quality and throughput metrics.

Purity of one cluster is the fraction of its members carrying the
dominant label; the headline score averages over nonempty clusters
without size weighting (a size-weighted figure is reported alongside).
``purity_from_events`` applies generation semantics to an event log: a
replacement restarts that cluster slot's membership, so the score always
describes the live clusters.

``assignment_agreement`` compares two event logs over the same stream.
Cluster indices are matched by maximum-overlap assignment between the two
runs before comparing per-graph routing, so runs that only permute cluster
slots still agree perfectly.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .engine import ACTION_ASSIGNED, ACTION_INITIALIZED, ACTION_REPLACED, AssignmentEvent


@dataclass
class PurityReport:
    per_cluster_purity: list[float]
    average_purity: float
    size_weighted_purity: float
    cluster_sizes: list[int]
    dominant_labels: list[str | None]

    def to_dict(self) -> dict:
        return {
            "average_purity": self.average_purity,
            "size_weighted_purity": self.size_weighted_purity,
            "per_cluster_purity": self.per_cluster_purity,
            "cluster_sizes": self.cluster_sizes,
            "dominant_labels": self.dominant_labels,
        }


def _report_from_counters(counters: Sequence[Counter]) -> PurityReport:
    per_cluster: list[float] = []
    sizes: list[int] = []
    dominant: list[str | None] = []
    weighted_hits = 0
    total = 0
    for counter in counters:
        size = sum(counter.values())
        sizes.append(size)
        if size == 0:
            per_cluster.append(0.0)
            dominant.append(None)
            continue
        label, hits = counter.most_common(1)[0]
        per_cluster.append(hits / size)
        dominant.append(label)
        weighted_hits += hits
        total += size
    nonempty = [p for p, s in zip(per_cluster, sizes) if s > 0]
    if not nonempty:
        raise ValueError("purity needs at least one nonempty cluster")
    return PurityReport(
        per_cluster_purity=per_cluster,
        average_purity=float(sum(nonempty) / len(nonempty)),
        size_weighted_purity=float(weighted_hits / total),
        cluster_sizes=sizes,
        dominant_labels=dominant,
    )


def purity(assignments: Mapping, labels: Mapping) -> PurityReport:
    """Purity over an explicit item -> cluster index map."""
    if not assignments:
        raise ValueError("purity needs at least one assignment")
    n_clusters = max(assignments.values()) + 1
    counters = [Counter() for _ in range(n_clusters)]
    for item, cluster in assignments.items():
        if cluster < 0:
            raise ValueError("cluster indices must be nonnegative")
        if item not in labels:
            raise ValueError(f"missing label for item {item!r}")
        counters[cluster][labels[item]] += 1
    return _report_from_counters(counters)


def purity_from_events(
    events: Sequence[AssignmentEvent],
    labels: Mapping[str, str],
    every: int = 0,
) -> tuple[PurityReport, list[tuple[int, float]]]:
    """Purity of the live clustering described by an event log.

    Returns the final report plus a (processed, average_purity) series
    sampled every ``every`` events (empty series when ``every`` is 0).
    """
    if not events:
        raise ValueError("purity needs at least one event")
    counters: dict[int, Counter] = {}
    series: list[tuple[int, float]] = []
    for processed, ev in enumerate(events, start=1):
        if ev.graph_id not in labels:
            raise ValueError(f"missing label for graph {ev.graph_id!r}")
        label = labels[ev.graph_id]
        if ev.action in (ACTION_INITIALIZED, ACTION_REPLACED):
            counters[ev.cluster_index] = Counter({label: 1})
        elif ev.action == ACTION_ASSIGNED:
            counters.setdefault(ev.cluster_index, Counter())[label] += 1
        else:
            raise ValueError(f"unknown event action {ev.action!r}")
        if every > 0 and processed % every == 0:
            report = _report_from_counters(_dense(counters))
            series.append((processed, report.average_purity))
    return _report_from_counters(_dense(counters)), series


def _dense(counters: dict[int, Counter]) -> list[Counter]:
    size = max(counters) + 1
    return [counters.get(i, Counter()) for i in range(size)]


def throughput(
    marks: Sequence[tuple[float, int]], window_s: float = 1.0
) -> list[tuple[float, float]]:
    """Windowed edge rates from (elapsed_seconds, cumulative_edges) marks.

    Marks must be monotone in both fields. The cumulative count is
    linearly interpolated at window boundaries; each complete window
    yields one (window_end_seconds, edges_per_second) sample. A span too
    short to hold a complete window yields no samples rather than an
    undefined rate.
    """
    if window_s <= 0:
        raise ValueError("window_s must be positive")
    if len(marks) < 2:
        return []
    times = np.asarray([m[0] for m in marks], dtype=np.float64)
    edges = np.asarray([m[1] for m in marks], dtype=np.float64)
    if np.any(np.diff(times) < 0) or np.any(np.diff(edges) < 0):
        raise ValueError("timing marks must be monotone")
    rel = times - times[0]
    n_windows = int(rel[-1] // window_s)
    if n_windows < 1:
        return []
    bounds = np.arange(n_windows + 1, dtype=np.float64) * window_s
    cum = np.interp(bounds, rel, edges)
    rates = np.diff(cum) / window_s
    return [(float(bounds[i + 1]), float(rates[i])) for i in range(n_windows)]


def overall_rate(marks: Sequence[tuple[float, int]]) -> float | None:
    """Total edges over total elapsed time, None when the span is zero."""
    if len(marks) < 2:
        return None
    span = marks[-1][0] - marks[0][0]
    if span <= 0:
        return None
    return (marks[-1][1] - marks[0][1]) / span


def assignment_agreement(
    events_a: Sequence[AssignmentEvent], events_b: Sequence[AssignmentEvent]
) -> float:
    """Fraction of graphs routed equivalently by two runs of one stream.

    Equivalent means the same action, and for initializations/assignments
    the same cluster slot after best-overlap matching of slot indices
    between the runs. Raises ValueError when the logs describe different
    streams.
    """
    if len(events_a) != len(events_b):
        raise ValueError("event logs have different lengths")
    if any(ea.graph_id != eb.graph_id for ea, eb in zip(events_a, events_b)):
        raise ValueError("event logs describe different streams")
    if not events_a:
        raise ValueError("agreement needs at least one event")

    ka = max(ev.cluster_index for ev in events_a) + 1
    kb = max(ev.cluster_index for ev in events_b) + 1
    size = max(ka, kb)
    overlap = np.zeros((size, size), dtype=np.int64)
    for ea, eb in zip(events_a, events_b):
        overlap[ea.cluster_index, eb.cluster_index] += 1
    row, col = linear_sum_assignment(-overlap)
    mapping = {int(r): int(c) for r, c in zip(row, col)}

    same = 0
    for ea, eb in zip(events_a, events_b):
        if ea.action != eb.action:
            continue
        if ea.action == ACTION_REPLACED:
            same += 1
        elif mapping.get(ea.cluster_index) == eb.cluster_index:
            same += 1
    return same / len(events_a)
