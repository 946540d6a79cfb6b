"""Pure-Python versions of the compiled kernels (same signatures and results)."""
from collections import deque

import numpy as np


def longest_paths(num_nodes, src, dst, weight, root, terminal):
    down = [-np.inf] * num_nodes
    up = [-np.inf] * num_nodes
    down[root] = 0.0
    up[terminal] = 0.0
    # arcs sorted by source id over layered ids: a single sweep is topological
    src_l = np.asarray(src).tolist()
    dst_l = np.asarray(dst).tolist()
    w_l = np.asarray(weight, dtype=float).tolist()
    for s, t, w in zip(src_l, dst_l, w_l):
        c = down[s] + w
        if c > down[t]:
            down[t] = c
    for s, t, w in zip(reversed(src_l), reversed(dst_l), reversed(w_l)):
        c = up[t] + w
        if c > up[s]:
            up[s] = c
    return np.array(down, dtype=float), np.array(up, dtype=float)


def max_flow(num_nodes, src, dst, capacity, source, sink, eps):
    num_arcs = len(src)
    src_l = np.asarray(src).tolist()
    dst_l = np.asarray(dst).tolist()
    resid = [0.0] * (2 * num_arcs)
    adj = [[] for _ in range(num_nodes)]
    for a in range(num_arcs):
        c = float(capacity[a])
        resid[2 * a] = c if c > 0.0 else 0.0
        adj[src_l[a]].append(2 * a)
        adj[dst_l[a]].append(2 * a + 1)

    value = 0.0
    while True:
        seen = [False] * num_nodes
        pred = [-1] * num_nodes
        seen[source] = True
        queue = deque([source])
        while queue and not seen[sink]:
            u = queue.popleft()
            for e in adj[u]:
                if resid[e] <= eps:
                    continue
                v = dst_l[e >> 1] if e % 2 == 0 else src_l[e >> 1]
                if not seen[v]:
                    seen[v] = True
                    pred[v] = e
                    queue.append(v)
        if not seen[sink]:
            break
        path = []
        v = sink
        while v != source:
            e = pred[v]
            path.append(e)
            v = src_l[e >> 1] if e % 2 == 0 else dst_l[e >> 1]
        bottleneck = min(resid[e] for e in path)
        for e in path:
            resid[e] -= bottleneck
            resid[e ^ 1] += bottleneck
        value += bottleneck

    flow = np.array(resid[1::2], dtype=float)
    return value, flow, np.array(seen, dtype=bool)
