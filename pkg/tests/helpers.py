"""Shared test utilities: independent oracles and random model factories.

The separation oracle here decides reachability by exhaustive
enumeration of simple paths with backtracking, deliberately a different
algorithm from the breadth-first search inside the package.  The
gradient oracle evaluates central finite differences of the
frozen-residual objective slice assembled from local_loss_terms, a
different code path from the analytic coupling-row gradient.
"""

import itertools

import numpy as np

from cmrf import (
    CmrfGraph,
    build_precision,
    build_cmrf,
    coupling_matrix,
    draw_params,
    get_variant,
    local_loss_terms,
)


def draw_sparse_model(inc, seed, sparsity=0.5):
    """Random model whose colored graph has a decent chance of gaps."""
    params = draw_params(inc, np.random.default_rng(seed), sparsity=sparsity)
    prec = build_precision(inc, params)
    graph = build_cmrf(inc, params)
    return params, prec, graph


def random_colored_graph(num_nodes, rng, p_link=0.3):
    """A colored graph that need not come from any complex."""
    lower, upper = set(), set()
    for i, j in itertools.combinations(range(num_nodes), 2):
        if rng.random() < p_link:
            lower.add((i, j))
        if rng.random() < p_link:
            upper.add((i, j))
    return CmrfGraph(
        num_nodes=num_nodes,
        lower_links=frozenset(lower),
        upper_links=frozenset(upper),
    )


def adjacency_sets(num_nodes, links):
    adj = [set() for _ in range(num_nodes)]
    for i, j in links:
        adj[i].add(j)
        adj[j].add(i)
    return adj


def path_exists_by_enumeration(adj, sources, targets, blocked):
    """Depth-first enumeration of simple paths, stopping at the first hit."""
    targets = set(targets)
    blocked = set(blocked)

    def extend(node, visited):
        if node in targets:
            return True
        for nxt in sorted(adj[node]):
            if nxt in visited or nxt in blocked:
                continue
            if extend(nxt, visited | {nxt}):
                return True
        return False

    return any(
        s not in blocked and extend(s, {s}) for s in sources
    )


def graph_separated_by_enumeration(graph, set_a, set_b, given=()):
    adj = adjacency_sets(graph.num_nodes, graph.links)
    return not path_exists_by_enumeration(adj, set_a, set_b, given)


def color_separated_by_enumeration(graph, set_a, set_b):
    for links in (graph.lower_links, graph.upper_links):
        adj = adjacency_sets(graph.num_nodes, links)
        if path_exists_by_enumeration(adj, set_a, set_b, ()):
            return False
    return True


def subsets_up_to(items, max_size):
    for size in range(max_size + 1):
        yield from itertools.combinations(items, size)


def fd_local_gradient(
    edge, variant, theta, regressors, observations, params, inc, prec, h=1e-6
):
    """Central finite differences of the agent's frozen-residual objective.

    The objective slice at edge e sums the variant's active loss terms
    phi_h - phi_d - phi_u over the closed coupling neighborhood of e,
    with every residual frozen except e's own, which varies with theta_e.
    Its exact gradient is what local_gradient returns.
    """
    spec = get_variant(variant)
    row = coupling_matrix(prec, spec)[edge]
    support = sorted(set(np.flatnonzero(row)) | {edge})
    frozen = {
        j: float(observations[j] - regressors[j] @ theta[j])
        for j in range(theta.shape[0])
    }

    def objective(theta_e):
        rmap = dict(frozen)
        rmap[edge] = float(observations[edge] - regressors[edge] @ theta_e)
        total = 0.0
        for j in support:
            ph, pd, pu = local_loss_terms(j, rmap, params, inc)
            total += ph
            if spec.uses_lower_term:
                total -= pd
            if spec.uses_upper_term:
                total -= pu
        return total

    dim = theta.shape[1]
    grad = np.zeros(dim)
    for m in range(dim):
        plus = theta[edge].copy()
        minus = theta[edge].copy()
        plus[m] += h
        minus[m] -= h
        grad[m] = (objective(plus) - objective(minus)) / (2.0 * h)
    return grad
