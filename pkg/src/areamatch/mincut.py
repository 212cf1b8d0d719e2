"""Exact s-t max-flow / min-cut for small dense graphs with real capacities.

Edmonds-Karp (BFS augmenting paths) terminates exactly for real-valued
capacities and the instances here are tiny (tens of nodes), so no capacity
scaling is needed and the resulting cut is an exact minimizer.
"""

from __future__ import annotations

from collections import deque

import numpy as np

EPS = 1e-12


def max_flow(capacity: np.ndarray, source: int, sink: int):
    """Returns (flow_value, source_side) for a dense capacity matrix.

    source_side is the set of vertices reachable from the source in the final
    residual graph; (source_side, complement) is a minimum cut.
    """
    cap = np.array(capacity, dtype=float)
    n = cap.shape[0]
    flow = np.zeros_like(cap)
    total = 0.0

    while True:
        parent = np.full(n, -1, dtype=int)
        parent[source] = source
        queue = deque([source])
        while queue and parent[sink] == -1:
            u = queue.popleft()
            residual_open = (cap[u] - flow[u] > EPS) & (parent == -1)
            for v in np.flatnonzero(residual_open):
                parent[v] = u
                queue.append(int(v))
        if parent[sink] == -1:
            break
        bottleneck = np.inf
        v = sink
        while v != source:
            u = parent[v]
            bottleneck = min(bottleneck, cap[u, v] - flow[u, v])
            v = u
        v = sink
        while v != source:
            u = parent[v]
            flow[u, v] += bottleneck
            flow[v, u] -= bottleneck
            v = u
        total += bottleneck

    reachable = np.zeros(n, dtype=bool)
    reachable[source] = True
    queue = deque([source])
    while queue:
        u = queue.popleft()
        nxt = (cap[u] - flow[u] > EPS) & ~reachable
        for v in np.flatnonzero(nxt):
            reachable[v] = True
            queue.append(int(v))
    return total, reachable
