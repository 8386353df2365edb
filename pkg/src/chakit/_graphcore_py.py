"""Pure-Python graph fixpoint kernels (fallback for the C extension).

All functions operate on CSR adjacency: `indptr` (int64, length n+1) and
`indices` (int32). Node sets are uint8 masks. The compiled twin in
`_graphcore.pyx` implements the same contracts.
"""

from __future__ import annotations

import numpy as np

IMPLEMENTATION = "python"


def reach(indptr, indices, sources):
    """Forward-reachable set from the source mask."""
    out = sources.astype(np.uint8).copy()
    stack = list(np.flatnonzero(out))
    while stack:
        n = stack.pop()
        for m in indices[indptr[n]:indptr[n + 1]]:
            if not out[m]:
                out[m] = 1
                stack.append(int(m))
    return out


def ex_step(indptr, indices, mask):
    """Nodes with at least one successor inside the mask."""
    n = len(indptr) - 1
    out = np.zeros(n, dtype=np.uint8)
    for v in range(n):
        row = indices[indptr[v]:indptr[v + 1]]
        if row.size and mask[row].any():
            out[v] = 1
    return out


def eu_fixpoint(rev_indptr, rev_indices, f, g):
    """Least fixpoint of X = g | (f & EX X); the E[f U g] label set."""
    out = g.astype(np.uint8).copy()
    stack = list(np.flatnonzero(out))
    while stack:
        n = stack.pop()
        for p in rev_indices[rev_indptr[n]:rev_indptr[n + 1]]:
            if f[p] and not out[p]:
                out[p] = 1
                stack.append(int(p))
    return out


def eg_fixpoint(indptr, indices, rev_indptr, rev_indices, f, escape):
    """Greatest fixpoint of X = f & (EX X | escape); the EG label set.

    With a zero escape mask this is classical EG; a set escape bit keeps a
    node alive without a successor witness (used by the bounded layers).
    """
    n = len(indptr) - 1
    alive = (f.astype(np.uint8)).copy()
    count = np.zeros(n, dtype=np.int64)
    for v in range(n):
        row = indices[indptr[v]:indptr[v + 1]]
        count[v] = int(alive[row].sum()) if row.size else 0
    stack = [v for v in range(n) if alive[v] and count[v] == 0 and not escape[v]]
    for v in stack:
        alive[v] = 0
    while stack:
        dead = stack.pop()
        for p in rev_indices[rev_indptr[dead]:rev_indptr[dead + 1]]:
            if not alive[p]:
                continue
            count[p] -= 1
            if count[p] == 0 and not escape[p]:
                alive[p] = 0
                stack.append(int(p))
    return alive


def attractor(indptr, indices, rev_indptr, rev_indices, existential, target):
    """Least fixpoint of the game predecessor operator.

    A node joins the attractor if it is a target, if it is existential and
    some successor is in, or if it is universal and all successors are in.
    Returns (win mask, rank int32: BFS layer at which each node joined,
    -1 outside). Nodes without successors never join unless targets.
    """
    n = len(indptr) - 1
    win = target.astype(np.uint8).copy()
    rank = np.full(n, -1, dtype=np.int32)
    outdeg = (indptr[1:] - indptr[:-1]).astype(np.int64)
    need = outdeg.copy()  # universal nodes: successors still outside
    queue = list(np.flatnonzero(win))
    for v in queue:
        rank[v] = 0
    head = 0
    while head < len(queue):
        v = queue[head]
        head += 1
        for p in rev_indices[rev_indptr[v]:rev_indptr[v + 1]]:
            p = int(p)
            if win[p]:
                continue
            if existential[p]:
                win[p] = 1
                rank[p] = rank[v] + 1
                queue.append(p)
            else:
                need[p] -= 1
                if need[p] == 0 and outdeg[p] > 0:
                    win[p] = 1
                    rank[p] = rank[v] + 1
                    queue.append(p)
    return win, rank
