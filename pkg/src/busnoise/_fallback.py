"""Pure-Python/numpy kernels.  Same contracts and bit-identical results as ``_core``."""

from __future__ import annotations

import heapq

import numpy as np

from ._program import (
    GOLDEN, MASK64, NCOMP, OP_CZ, OP_DEP1, OP_DEP2, OP_H, OP_MEASURE, OP_RESET,
    OP_XFLIP, OP_ZFLIP, STREAM_MUL, Program, batch_key, mix64_array,
)
from .blossom import max_weight_matching

BACKEND = "python"

_U = np.uint64


def _events(prog: Program, op: int, shots: int, key: int):
    """Random (location offset, shot, component) triples for one noise op."""
    code = int(prog.op_code[op])
    ngroups = int(prog.op_len[op]) // (2 if code == OP_DEP2 else 1)
    ncomp = NCOMP[code]
    loc0 = int(prog.op_loc[op])
    rev = prog.tables[prog.op_table[op]][::-1]
    nt = rev.shape[0]
    locs = np.arange(loc0 + 1, loc0 + 1 + ngroups, dtype=np.uint64)
    with np.errstate(over="ignore"):
        stream = mix64_array(_U(key) ^ (locs * _U(STREAM_MUL)))
    idx = np.arange(ngroups)
    pos = np.full(ngroups, -1, dtype=np.int64)
    k = np.ones(ngroups, dtype=np.uint64)
    out_g, out_s, out_c = [], [], []
    while idx.size:
        with np.errstate(over="ignore"):
            u = mix64_array(stream + k * _U(GOLDEN))
        k += _U(1)
        gap = nt - np.searchsorted(rev, u, side="right")
        pos = pos + gap + 1
        alive = pos < shots
        idx, stream, pos, k = idx[alive], stream[alive], pos[alive], k[alive]
        if not idx.size:
            break
        if ncomp > 1:
            with np.errstate(over="ignore"):
                u2 = mix64_array(stream + k * _U(GOLDEN))
            k += _U(1)
            comp = ((u2 >> _U(32)) * _U(ncomp)) >> _U(32)
        else:
            comp = np.zeros(idx.size, dtype=np.uint64)
        out_g.append(idx.copy())
        out_s.append(pos.copy())
        out_c.append(comp.astype(np.int64))
    if not out_g:
        e = np.zeros(0, dtype=np.int64)
        return e, e, e
    return np.concatenate(out_g), np.concatenate(out_s), np.concatenate(out_c)


def _apply(prog: Program, op: int, x, z, g, s, c):
    code = int(prog.op_code[op])
    start = int(prog.op_start[op])
    word = s >> 6
    bit = np.left_shift(np.uint64(1), (s & 63).astype(np.uint64))
    if code == OP_DEP2:
        qa = prog.targets[start + 2 * g]
        qb = prog.targets[start + 2 * g + 1]
        v = c + 1
        for q, pc in ((qa, v & 3), (qb, v >> 2)):
            m = (pc & 1) != 0
            np.bitwise_xor.at(x, (q[m], word[m]), bit[m])
            m = (pc & 2) != 0
            np.bitwise_xor.at(z, (q[m], word[m]), bit[m])
        return
    q = prog.targets[start + g]
    if code == OP_XFLIP:
        pc = np.ones_like(c)
    elif code == OP_ZFLIP:
        pc = np.full_like(c, 2)
    else:
        pc = c + 1
    m = (pc & 1) != 0
    np.bitwise_xor.at(x, (q[m], word[m]), bit[m])
    m = (pc & 2) != 0
    np.bitwise_xor.at(z, (q[m], word[m]), bit[m])


def run_frames(prog: Program, shots: int, seed: int, batch_index: int, forced=None):
    """Propagate one batch of ``shots`` Pauli frames.

    ``forced`` is ``None`` for random sampling or an int64 array of rows
    ``(location, shot, component)`` applied with the RNG switched off.
    Returns ``(det_words, obs_words)`` with one row of uint64 shot words per
    detector / observable.
    """
    nwords = (shots + 63) // 64
    x = np.zeros((prog.num_qubits, nwords), dtype=np.uint64)
    z = np.zeros_like(x)
    meas = np.zeros((max(prog.num_measurements, 1), nwords), dtype=np.uint64)
    key = batch_key(seed, batch_index)
    m = 0
    if forced is not None:
        forced = np.asarray(forced, dtype=np.int64).reshape(-1, 3)
    for op in range(prog.op_code.shape[0]):
        code = int(prog.op_code[op])
        start = int(prog.op_start[op])
        t = prog.targets[start:start + int(prog.op_len[op])]
        if code == OP_RESET:
            x[t] = 0
            z[t] = 0
        elif code == OP_H:
            tmp = x[t].copy()
            x[t] = z[t]
            z[t] = tmp
        elif code == OP_CZ:
            a, b = t[0::2], t[1::2]
            xa, xb = x[a].copy(), x[b].copy()
            z[a] ^= xb
            z[b] ^= xa
        elif code == OP_MEASURE:
            meas[m:m + t.size] = x[t]
            m += t.size
        else:
            if forced is not None:
                loc0 = int(prog.op_loc[op])
                ngroups = t.size // (2 if code == OP_DEP2 else 1)
                sel = (forced[:, 0] >= loc0) & (forced[:, 0] < loc0 + ngroups)
                if not sel.any():
                    continue
                ev = forced[sel]
                _apply(prog, op, x, z, ev[:, 0] - loc0, ev[:, 1], ev[:, 2])
            elif prog.op_prob[op] > 0:
                g, s, c = _events(prog, op, shots, key)
                if g.size:
                    _apply(prog, op, x, z, g, s, c)
    tail = shots & 63
    last = np.uint64((1 << tail) - 1) if tail else np.uint64(MASK64)

    def parity(ptr, rec, n):
        out = np.zeros((n, nwords), dtype=np.uint64)
        for i in range(n):
            r = rec[ptr[i]:ptr[i + 1]]
            if r.size:
                out[i] = np.bitwise_xor.reduce(meas[r], axis=0)
        out[:, -1] &= last
        return out

    return (parity(prog.det_ptr, prog.det_rec, prog.num_detectors),
            parity(prog.obs_ptr, prog.obs_rec, prog.num_observables))


# ---------------------------------------------------------------------------
# decoding

def _local_search(adj_ptr, adj_to, adj_w, adj_obs, bdist, src, fired_set, boundary):
    """Dijkstra from ``src`` that never enters the boundary.

    Returns ``{fired node: (distance, observable parity)}`` for every fired
    node that could still be worth matching to ``src``.
    """
    bs = bdist[src]
    dist = {src: 0}
    par = {src: 0}
    heap = [(0, src)]
    found = {}
    while heap:
        d, u = heapq.heappop(heap)
        if d > dist[u]:
            continue
        if d >= bs + bdist[u]:
            continue
        if u != src and u in fired_set:
            found[u] = (d, par[u])  # no stop here: optimal paths may pass through
        pu = par[u]
        for e in range(adj_ptr[u], adj_ptr[u + 1]):
            v = adj_to[e]
            if v == boundary:
                continue
            nd = d + adj_w[e]
            if nd < dist.get(v, nd + 1):
                dist[v] = nd
                par[v] = pu ^ adj_obs[e]
                heapq.heappush(heap, (nd, v))
    return found


def _find(parent, a):
    while parent[a] != a:
        parent[a] = parent[parent[a]]
        a = parent[a]
    return a


def decode_fired(g, fired):
    """Exact boundary-aware MWPM of one shot.

    ``g`` is the tuple of graph arrays built by ``MatchingGraph.arrays()``.
    Returns ``(predicted observable mask, matched pairs, total weight)``;
    a pair ``(i, -1)`` means ``i`` is matched to the boundary.
    """
    adj_ptr, adj_to, adj_w, adj_obs, bdist, bobs, boundary = g
    fired = sorted(int(f) for f in fired)
    k = len(fired)
    if k == 0:
        return 0, [], 0
    fired_set = set(fired)
    where = {f: i for i, f in enumerate(fired)}
    b = [int(bdist[f]) for f in fired]
    pairs_w = {}
    for i, f in enumerate(fired):
        for u, (d, p) in _local_search(adj_ptr, adj_to, adj_w, adj_obs, bdist, f, fired_set, boundary).items():
            j = where[u]
            w = b[i] + b[j] - d
            if w <= 0:
                continue
            key = (i, j) if i < j else (j, i)
            if key not in pairs_w or w > pairs_w[key][0]:
                pairs_w[key] = (w, p)
    parent = list(range(k))
    for i, j in pairs_w:
        ra, rb = _find(parent, i), _find(parent, j)
        if ra != rb:
            parent[ra] = rb
    comps: dict[int, list[int]] = {}
    for i in range(k):
        comps.setdefault(_find(parent, i), []).append(i)

    pred = 0
    for f in fired:
        pred ^= int(bobs[f])
    total = sum(b)
    matched = []
    mate = [-1] * k
    for members in comps.values():
        if len(members) == 1:
            continue
        if len(members) == 2:
            i, j = members
            mate[i], mate[j] = j, i
            continue
        local = {v: n for n, v in enumerate(members)}
        edges = [(local[i], local[j], 2 * w) for (i, j), (w, _) in pairs_w.items() if i in local]
        res = max_weight_matching(len(members), edges)
        for n, m in enumerate(res):
            if m >= 0:
                mate[members[n]] = members[m]
    for i in range(k):
        j = mate[i]
        if j == -1:
            matched.append((fired[i], -1))
        elif i < j:
            w, p = pairs_w[(i, j)]
            total -= w
            pred ^= int(bobs[fired[i]]) ^ int(bobs[fired[j]]) ^ int(p)
            matched.append((fired[i], fired[j]))
    return pred, matched, total


def decode_packed(g, relevant, det_packed: np.ndarray) -> np.ndarray:
    """Predicted observable masks for shot-major packed detector bytes."""
    shots = det_packed.shape[0]
    out = np.zeros(shots, dtype=np.uint64)
    if shots == 0:
        return out
    bits = np.unpackbits(det_packed, axis=1, bitorder="little")[:, :relevant.shape[0]]
    bits &= relevant[None, :]
    for s in range(shots):
        fired = np.flatnonzero(bits[s])
        if fired.size:
            out[s] = decode_fired(g, fired)[0]
    return out
