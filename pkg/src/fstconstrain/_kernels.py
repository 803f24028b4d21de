"""Compiled inner loops for trie layout and trie-DFA composition."""

from __future__ import annotations

import numba as nb
import numpy as np


@nb.njit(cache=True, nogil=True)
def preorder_layout(flat, offsets, order):
    """Trie nodes in depth-first preorder from tokens sorted lexicographically.

    ``flat[offsets[i]:offsets[i+1]]`` are the symbol indices of token ``i``
    and ``order`` lists tokens in sorted order. Returns per node (root
    excluded) its depth, symbol index and subtree end, plus a CSR from nodes
    to positions in ``order``.
    """
    total = 0
    prev = -1
    lcps = np.zeros(len(order), np.int64)
    for k in range(len(order)):
        i = order[k]
        a, b = offsets[i], offsets[i + 1]
        lcp = 0
        if prev >= 0:
            pa, pb = offsets[prev], offsets[prev + 1]
            lim = min(b - a, pb - pa)
            while lcp < lim and flat[a + lcp] == flat[pa + lcp]:
                lcp += 1
        lcps[k] = lcp
        total += (b - a) - lcp
        prev = i
    depth = np.empty(total, np.int32)
    sym = np.empty(total, np.int32)
    node_of = np.empty(len(order), np.int64)
    pos = 0
    for k in range(len(order)):
        i = order[k]
        a, b = offsets[i], offsets[i + 1]
        for d in range(lcps[k], b - a):
            depth[pos] = d + 1
            sym[pos] = flat[a + d]
            pos += 1
        node_of[k] = pos - 1
    end = np.empty(total, np.int64)
    stack = np.empty(total + 1, np.int64)
    top = 0
    for j in range(total):
        while top and depth[stack[top - 1]] >= depth[j]:
            end[stack[top - 1]] = j
            top -= 1
        stack[top] = j
        top += 1
    while top:
        end[stack[top - 1]] = total
        top -= 1
    tok_start = np.zeros(total + 1, np.int64)
    for k in range(len(order)):
        tok_start[node_of[k] + 1] += 1
    for j in range(total):
        tok_start[j + 1] += tok_start[j]
    return depth, sym, end, tok_start


@nb.njit(cache=True, nogil=True)
def _scan(depth, sym, end, tok_start, tok_ids, delta, source, cur, out_tok, out_tgt, m):
    # with m < 0 only count the edges
    count = 0
    cur[0] = source
    n = len(depth)
    j = 0
    while j < n:
        q = delta[cur[depth[j] - 1], sym[j]]
        if q < 0:
            j = end[j]
            continue
        cur[depth[j]] = q
        t0, t1 = tok_start[j], tok_start[j + 1]
        if m >= 0:
            for t in range(t0, t1):
                out_tok[m + count] = tok_ids[t]
                out_tgt[m + count] = q
                count += 1
        else:
            count += t1 - t0
        j += 1
    return count


@nb.njit(cache=True, nogil=True)
def compose_scan(depth, sym, end, tok_start, tok_ids, delta, sources, max_depth):
    """Token edges ``(src, tok, tgt)`` of a DFA composed with a preorder trie.

    Returns the tokens and targets grouped by source, with per-source counts.
    """
    cur = np.empty(max_depth + 1, np.int64)
    counts = np.zeros(len(sources), np.int64)
    empty = np.empty(0, np.int32)
    for i in range(len(sources)):
        counts[i] = _scan(depth, sym, end, tok_start, tok_ids, delta, sources[i], cur, empty, empty, -1)
    out_tok = np.empty(counts.sum(), np.int32)
    out_tgt = np.empty(counts.sum(), np.int32)
    m = 0
    for i in range(len(sources)):
        if counts[i]:
            m += _scan(depth, sym, end, tok_start, tok_ids, delta, sources[i], cur, out_tok, out_tgt, m)
    return out_tok, out_tgt, counts
