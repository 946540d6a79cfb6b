"""Kernel dispatch: the compiled extension when it imports, pure Python otherwise.

Set ``BDDCUT_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _pykernels

BACKEND = "python"
_impl = _pykernels
if os.environ.get("BDDCUT_PURE_PYTHON") != "1":
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _pykernels


def longest_paths(num_nodes, src, dst, weight, root, terminal):
    """Longest r-to-node and node-to-t values for topologically sorted arcs.

    Arcs must be ordered by nondecreasing source id with layered node ids.
    Unreachable entries stay at ``-inf``.
    """
    return _impl.longest_paths(num_nodes, src, dst, weight, root, terminal)


def max_flow(num_nodes, src, dst, capacity, source, sink, eps=1e-12):
    """Shortest-augmenting-path max flow.

    Returns ``(value, arc_flow, source_side)`` where ``source_side`` marks nodes
    reachable from the source in the final residual graph.
    """
    return _impl.max_flow(num_nodes, src, dst, capacity, source, sink, eps)
