"""Separation queries on colored graphs and their Gaussian consequences.

Two kinds of separation are distinguished on a :class:`~cmrf.model.CmrfGraph`:

* graph separation: after deleting a conditioning set S, no path in the
  union of both link colors joins set A to set B.  For the Gaussian edge
  signal this implies conditional independence of A and B given S.
* color separation: no single-colored path joins A to B, checked per
  color on the full graph.  This is weaker than graph separation with
  S empty (a path may alternate colors), yet it already implies marginal
  independence, because the coupling factors split by color and each
  factor's inverse respects its own color's connectivity.

The verify_* functions check the implied statement numerically on the
model covariance: zero cross-covariance for marginal independence, zero
conditional cross-covariance (Schur complement) for conditional
independence.  Tolerances scale with the mean marginal variance
trace(cov)/num_edges.
"""

from __future__ import annotations

import warnings
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import NotColorSeparated, NotSeparated, OverlappingSets
from .model import CmrfGraph, EdgePrecision, covariance

__all__ = [
    "SeparationQuery",
    "IndependenceReport",
    "is_graph_separated",
    "is_color_separated",
    "verify_marginal_independence",
    "verify_conditional_independence",
    "color_separated_singleton_pairs",
]

# Residual tolerances, relative to trace(cov)/num_edges.
MARGINAL_RTOL = 1e-9
CONDITIONAL_RTOL = 1e-8


@dataclass(frozen=True)
class SeparationQuery:
    """Disjoint node index sets (A, B) and an optional conditioning set S."""

    set_a: tuple[int, ...]
    set_b: tuple[int, ...]
    given: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "set_a", tuple(int(i) for i in self.set_a))
        object.__setattr__(self, "set_b", tuple(int(i) for i in self.set_b))
        object.__setattr__(self, "given", tuple(int(i) for i in self.given))
        a, b, s = set(self.set_a), set(self.set_b), set(self.given)
        if a & b or a & s or b & s:
            raise OverlappingSets(
                f"query sets must be disjoint, got A={sorted(a)}, "
                f"B={sorted(b)}, S={sorted(s)}"
            )


@dataclass(frozen=True)
class IndependenceReport:
    """Outcome of a numerical independence check."""

    kind: str  # "marginal" or "conditional"
    passed: bool
    residual: float
    tolerance: float
    query: SeparationQuery


def _check_nodes(graph: CmrfGraph, nodes: Iterable[int]) -> None:
    for i in nodes:
        if not 0 <= i < graph.num_nodes:
            raise ValueError(f"node index {i} outside 0..{graph.num_nodes - 1}")


def _adjacency(
    num_nodes: int, links: Iterable[tuple[int, int]]
) -> list[set[int]]:
    adj: list[set[int]] = [set() for _ in range(num_nodes)]
    for i, j in links:
        adj[i].add(j)
        adj[j].add(i)
    return adj


def _reaches(
    adj: list[set[int]],
    sources: Sequence[int],
    targets: set[int],
    blocked: set[int],
) -> bool:
    """Breadth-first search; True when some target is reachable."""
    seen = set(blocked)
    queue = deque(s for s in sources if s not in seen)
    seen.update(queue)
    while queue:
        node = queue.popleft()
        if node in targets:
            return True
        for nxt in adj[node]:
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    return False


def _warn_if_empty(set_a: Sequence[int], set_b: Sequence[int]) -> bool:
    if len(set_a) == 0 or len(set_b) == 0:
        warnings.warn(
            "empty query set: separation holds vacuously", stacklevel=3
        )
        return True
    return False


def is_graph_separated(graph: CmrfGraph, query: SeparationQuery) -> bool:
    """True when deleting S leaves no path from A to B in the union graph."""
    _check_nodes(graph, [*query.set_a, *query.set_b, *query.given])
    if _warn_if_empty(query.set_a, query.set_b):
        return True
    adj = _adjacency(graph.num_nodes, graph.links)
    return not _reaches(adj, query.set_a, set(query.set_b), set(query.given))


def is_color_separated(
    graph: CmrfGraph, set_a: Sequence[int], set_b: Sequence[int]
) -> bool:
    """True when no monochromatic path joins A to B, for either color."""
    query = SeparationQuery(set_a=tuple(set_a), set_b=tuple(set_b))
    _check_nodes(graph, [*query.set_a, *query.set_b])
    if _warn_if_empty(query.set_a, query.set_b):
        return True
    targets = set(query.set_b)
    for links in (graph.lower_links, graph.upper_links):
        adj = _adjacency(graph.num_nodes, links)
        if _reaches(adj, query.set_a, targets, set()):
            return False
    return True


def _component_labels(
    num_nodes: int, links: Iterable[tuple[int, int]]
) -> np.ndarray:
    adj = _adjacency(num_nodes, links)
    labels = np.full(num_nodes, -1, dtype=int)
    current = 0
    for start in range(num_nodes):
        if labels[start] >= 0:
            continue
        queue = deque([start])
        labels[start] = current
        while queue:
            node = queue.popleft()
            for nxt in adj[node]:
                if labels[nxt] < 0:
                    labels[nxt] = current
                    queue.append(nxt)
        current += 1
    return labels


def color_separated_singleton_pairs(graph: CmrfGraph) -> list[tuple[int, int]]:
    """All pairs (i, j), i < j, with {i} color-separated from {j}.

    A singleton pair is color-separated iff the two nodes fall in
    different connected components of the lower-link graph and also of
    the upper-link graph.
    """
    lower = _component_labels(graph.num_nodes, graph.lower_links)
    upper = _component_labels(graph.num_nodes, graph.upper_links)
    return [
        (i, j)
        for i in range(graph.num_nodes)
        for j in range(i + 1, graph.num_nodes)
        if lower[i] != lower[j] and upper[i] != upper[j]
    ]


def _mean_variance(cov: np.ndarray) -> float:
    return float(np.trace(cov)) / cov.shape[0]


def verify_marginal_independence(
    prec: EdgePrecision,
    graph: CmrfGraph,
    set_a: Sequence[int],
    set_b: Sequence[int],
) -> IndependenceReport:
    """Check that a color-separated pair of sets has zero cross-covariance.

    Raises NotColorSeparated when the pair is not color-separated (the
    implication is only available in that direction).
    """
    query = SeparationQuery(set_a=tuple(set_a), set_b=tuple(set_b))
    if not is_color_separated(graph, query.set_a, query.set_b):
        raise NotColorSeparated(
            f"A={list(query.set_a)} and B={list(query.set_b)} are joined "
            "by a monochromatic path"
        )
    cov = covariance(prec)
    if query.set_a and query.set_b:
        residual = float(
            np.abs(cov[np.ix_(query.set_a, query.set_b)]).max()
        )
    else:
        residual = 0.0
    tolerance = MARGINAL_RTOL * _mean_variance(cov)
    return IndependenceReport(
        kind="marginal",
        passed=residual < tolerance,
        residual=residual,
        tolerance=tolerance,
        query=query,
    )


def verify_conditional_independence(
    prec: EdgePrecision, graph: CmrfGraph, query: SeparationQuery
) -> IndependenceReport:
    """Check zero conditional cross-covariance for a separated query.

    The conditional cross-covariance of A and B given S is the Schur
    complement cov[A,B] - cov[A,S] @ inv(cov[S,S]) @ cov[S,B].  Raises
    NotSeparated when S does not separate A from B in the union graph.
    """
    if not is_graph_separated(graph, query):
        raise NotSeparated(
            f"S={list(query.given)} does not separate A={list(query.set_a)} "
            f"from B={list(query.set_b)}"
        )
    cov = covariance(prec)
    a, b, s = list(query.set_a), list(query.set_b), list(query.given)
    if a and b:
        cross = cov[np.ix_(a, b)]
        if s:
            cross = cross - cov[np.ix_(a, s)] @ np.linalg.solve(
                cov[np.ix_(s, s)], cov[np.ix_(s, b)]
            )
        residual = float(np.abs(cross).max())
    else:
        residual = 0.0
    tolerance = CONDITIONAL_RTOL * _mean_variance(cov)
    return IndependenceReport(
        kind="conditional",
        passed=residual < tolerance,
        residual=residual,
        tolerance=tolerance,
        query=query,
    )
