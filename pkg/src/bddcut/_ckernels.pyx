# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled longest-path and max-flow loops over arc arrays."""
import numpy as np
cimport numpy as cnp

cnp.import_array()


def longest_paths(Py_ssize_t num_nodes, const cnp.int64_t[:] src, const cnp.int64_t[:] dst,
                  const double[:] weight, Py_ssize_t root, Py_ssize_t terminal):
    cdef Py_ssize_t a, num_arcs = src.shape[0]
    cdef double cand
    down_arr = np.full(num_nodes, -np.inf)
    up_arr = np.full(num_nodes, -np.inf)
    cdef double[:] down = down_arr
    cdef double[:] up = up_arr
    down[root] = 0.0
    up[terminal] = 0.0
    for a in range(num_arcs):
        cand = down[src[a]] + weight[a]
        if cand > down[dst[a]]:
            down[dst[a]] = cand
    for a in range(num_arcs - 1, -1, -1):
        cand = up[dst[a]] + weight[a]
        if cand > up[src[a]]:
            up[src[a]] = cand
    return down_arr, up_arr


def max_flow(Py_ssize_t num_nodes, const cnp.int64_t[:] src, const cnp.int64_t[:] dst,
             const double[:] capacity, Py_ssize_t source, Py_ssize_t sink, double eps):
    cdef Py_ssize_t num_arcs = src.shape[0]
    cdef Py_ssize_t a, e, u, v, k, head, tail
    cdef double bottleneck, value = 0.0

    # residual edge 2a is arc a forward, 2a + 1 its reverse
    resid_arr = np.zeros(2 * num_arcs)
    cdef double[:] resid = resid_arr
    deg_arr = np.zeros(num_nodes + 1, dtype=np.int64)
    cdef cnp.int64_t[:] start = deg_arr
    for a in range(num_arcs):
        resid[2 * a] = capacity[a] if capacity[a] > 0.0 else 0.0
        start[src[a] + 1] += 1
        start[dst[a] + 1] += 1
    for u in range(num_nodes):
        start[u + 1] += start[u]
    adj_arr = np.empty(2 * num_arcs, dtype=np.int64)
    cdef cnp.int64_t[:] adj = adj_arr
    fill_arr = deg_arr[:num_nodes].copy()
    cdef cnp.int64_t[:] fill = fill_arr
    for a in range(num_arcs):
        adj[fill[src[a]]] = 2 * a
        fill[src[a]] += 1
        adj[fill[dst[a]]] = 2 * a + 1
        fill[dst[a]] += 1

    pred_arr = np.empty(num_nodes, dtype=np.int64)
    cdef cnp.int64_t[:] pred = pred_arr
    queue_arr = np.empty(num_nodes, dtype=np.int64)
    cdef cnp.int64_t[:] queue = queue_arr
    seen_arr = np.zeros(num_nodes, dtype=np.uint8)
    cdef cnp.uint8_t[:] seen = seen_arr

    while True:
        for u in range(num_nodes):
            seen[u] = 0
        seen[source] = 1
        head = 0
        tail = 1
        queue[0] = source
        while head < tail and not seen[sink]:
            u = queue[head]
            head += 1
            for k in range(start[u], start[u + 1]):
                e = adj[k]
                if resid[e] <= eps:
                    continue
                if e % 2 == 0:
                    v = dst[e // 2]
                else:
                    v = src[e // 2]
                if not seen[v]:
                    seen[v] = 1
                    pred[v] = e
                    queue[tail] = v
                    tail += 1
        if not seen[sink]:
            break
        bottleneck = np.inf
        v = sink
        while v != source:
            e = pred[v]
            if resid[e] < bottleneck:
                bottleneck = resid[e]
            v = src[e // 2] if e % 2 == 0 else dst[e // 2]
        v = sink
        while v != source:
            e = pred[v]
            resid[e] -= bottleneck
            resid[e ^ 1] += bottleneck
            v = src[e // 2] if e % 2 == 0 else dst[e // 2]
        value += bottleneck

    flow_arr = resid_arr[1::2].copy()
    return value, flow_arr, seen_arr.astype(bool)
