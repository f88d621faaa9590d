# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
# distutils: language = c++
"""Compiled kernels: Pauli-frame propagation and exact matching decode.

Mirrors ``_fallback`` operation for operation, including the random stream
layout and Dijkstra tie-breaking, so both backends produce identical bits.
"""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint64_t, int64_t, int32_t, uint8_t
from libcpp.vector cimport vector
from libcpp.pair cimport pair
from libcpp.queue cimport priority_queue

from ._program import GOLDEN as _GOLDEN, STREAM_MUL as _STREAM_MUL, batch_key

cnp.import_array()

BACKEND = "cython"

cdef uint64_t GOLDEN = _GOLDEN
cdef uint64_t STREAM_MUL = _STREAM_MUL

cdef enum:
    OP_RESET = 0
    OP_H = 1
    OP_CZ = 2
    OP_MEASURE = 3
    OP_XFLIP = 4
    OP_ZFLIP = 5
    OP_DEP1 = 6
    OP_DEP2 = 7


cdef inline uint64_t mix64(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * <uint64_t>0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * <uint64_t>0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline void flip(uint64_t* x, uint64_t* z, int nwords, int q, int64_t shot, int code) noexcept nogil:
    cdef uint64_t bit = (<uint64_t>1) << (shot & 63)
    cdef int64_t w = q * nwords + (shot >> 6)
    if code & 1:
        x[w] ^= bit
    if code & 2:
        z[w] ^= bit


cdef inline void apply_event(int code, const int32_t* targets, int64_t start, int64_t g,
                             int64_t shot, int64_t comp,
                             uint64_t* x, uint64_t* z, int nwords) noexcept nogil:
    cdef int v
    if code == OP_DEP2:
        v = <int>comp + 1
        flip(x, z, nwords, targets[start + 2 * g], shot, v & 3)
        flip(x, z, nwords, targets[start + 2 * g + 1], shot, v >> 2)
    elif code == OP_XFLIP:
        flip(x, z, nwords, targets[start + g], shot, 1)
    elif code == OP_ZFLIP:
        flip(x, z, nwords, targets[start + g], shot, 2)
    else:
        flip(x, z, nwords, targets[start + g], shot, <int>comp + 1)


def run_frames(prog, int shots, seed, batch_index, forced=None):
    """See ``_fallback.run_frames``."""
    cdef int nwords = (shots + 63) // 64
    cdef int nq = prog.num_qubits
    cdef int nm = max(prog.num_measurements, 1)
    cdef uint64_t[:, ::1] x = np.zeros((nq, nwords), dtype=np.uint64)
    cdef uint64_t[:, ::1] z = np.zeros((nq, nwords), dtype=np.uint64)
    cdef uint64_t[:, ::1] meas = np.zeros((nm, nwords), dtype=np.uint64)
    cdef const int32_t[::1] op_code = prog.op_code
    cdef const int64_t[::1] op_start = prog.op_start
    cdef const int64_t[::1] op_len = prog.op_len
    cdef const int64_t[::1] op_loc = prog.op_loc
    cdef const int64_t[::1] op_table = prog.op_table
    cdef const double[::1] op_prob = prog.op_prob
    cdef const int32_t[::1] targets = prog.targets
    cdef const uint64_t[:, ::1] tables = prog.tables
    cdef uint64_t key = batch_key(int(seed), int(batch_index))
    cdef bint use_forced = forced is not None
    cdef const int64_t[:, ::1] fr
    cdef int64_t nforced = 0, fi = 0
    if use_forced:
        fr = np.ascontiguousarray(np.asarray(forced, dtype=np.int64).reshape(-1, 3))
        nforced = fr.shape[0]
    else:
        fr = np.zeros((0, 3), dtype=np.int64)

    cdef int64_t nops = op_code.shape[0]
    cdef int64_t op, i, w, start, length, m = 0, g, ngroups, loc0, pos, lo, hi, mid, tab
    cdef int code, ncomp, a, b, q
    cdef uint64_t tmp, stream, kk, u, comp
    cdef const uint64_t* trow
    cdef int64_t tlen = tables.shape[1]
    with nogil:
        for op in range(nops):
            code = op_code[op]
            start = op_start[op]
            length = op_len[op]
            if code == OP_RESET:
                for i in range(length):
                    q = targets[start + i]
                    for w in range(nwords):
                        x[q, w] = 0
                        z[q, w] = 0
            elif code == OP_H:
                for i in range(length):
                    q = targets[start + i]
                    for w in range(nwords):
                        tmp = x[q, w]
                        x[q, w] = z[q, w]
                        z[q, w] = tmp
            elif code == OP_CZ:
                i = 0
                while i < length:
                    a = targets[start + i]
                    b = targets[start + i + 1]
                    for w in range(nwords):
                        z[a, w] ^= x[b, w]
                        z[b, w] ^= x[a, w]
                    i += 2
            elif code == OP_MEASURE:
                for i in range(length):
                    q = targets[start + i]
                    for w in range(nwords):
                        meas[m, w] = x[q, w]
                    m += 1
            else:
                ngroups = length // 2 if code == OP_DEP2 else length
                loc0 = op_loc[op]
                if use_forced:
                    while fi < nforced and fr[fi, 0] < loc0 + ngroups:
                        if fr[fi, 0] >= loc0:
                            apply_event(code, &targets[0], start, fr[fi, 0] - loc0, fr[fi, 1], fr[fi, 2], &x[0, 0], &z[0, 0], nwords)
                        fi += 1
                    continue
                if op_prob[op] <= 0:
                    continue
                if code == OP_DEP2:
                    ncomp = 15
                elif code == OP_DEP1:
                    ncomp = 3
                else:
                    ncomp = 1
                tab = op_table[op]
                trow = &tables[tab, 0]
                for g in range(ngroups):
                    stream = mix64(key ^ (<uint64_t>(loc0 + g + 1) * STREAM_MUL))
                    kk = 1
                    pos = -1
                    while True:
                        u = mix64(stream + kk * GOLDEN)
                        kk += 1
                        # first index with table value <= u (table is decreasing)
                        lo = 0
                        hi = tlen
                        while lo < hi:
                            mid = (lo + hi) >> 1
                            if trow[mid] > u:
                                lo = mid + 1
                            else:
                                hi = mid
                        pos += lo + 1
                        if pos >= shots:
                            break
                        if ncomp > 1:
                            u = mix64(stream + kk * GOLDEN)
                            kk += 1
                            comp = ((u >> 32) * <uint64_t>ncomp) >> 32
                        else:
                            comp = 0
                        apply_event(code, &targets[0], start, g, pos, <int64_t>comp, &x[0, 0], &z[0, 0], nwords)

    cdef int tail = shots & 63
    cdef uint64_t last = ((<uint64_t>1) << tail) - 1 if tail else ~(<uint64_t>0)
    return (_parity(meas, prog.det_ptr, prog.det_rec, prog.num_detectors, nwords, last),
            _parity(meas, prog.obs_ptr, prog.obs_rec, prog.num_observables, nwords, last))


cdef _parity(uint64_t[:, ::1] meas, ptr_arr, rec_arr, int n, int nwords, uint64_t last):
    out_arr = np.zeros((n, nwords), dtype=np.uint64)
    cdef uint64_t[:, ::1] out = out_arr
    cdef const int64_t[::1] ptr = ptr_arr
    cdef const int64_t[::1] rec = rec_arr
    cdef int i, w
    cdef int64_t j
    with nogil:
        for i in range(n):
            for j in range(ptr[i], ptr[i + 1]):
                for w in range(nwords):
                    out[i, w] ^= meas[rec[j], w]
            if nwords:
                out[i, nwords - 1] &= last
    return out_arr


# ---------------------------------------------------------------------------
# maximum-weight matching (port of blossom.max_weight_matching)

cdef class _Matcher:
    cdef int nvertex, nedge
    cdef vector[int] ei, ej
    cdef vector[long long] ew
    cdef vector[int] endpoint
    cdef vector[vector[int]] neighbend
    cdef vector[int] mate, label, labelend, inblossom, blossomparent, blossombase, bestedge
    cdef vector[int] unusedblossoms, queue
    cdef vector[vector[int]] blossomchilds, blossomendps, blossombestedges
    cdef vector[char] has_bbe, allowedge
    cdef vector[long long] dualvar

    cdef inline long long slack(self, int k):
        return self.dualvar[self.ei[k]] + self.dualvar[self.ej[k]] - 2 * self.ew[k]

    cdef void leaves(self, int b, vector[int]& out):
        cdef int t
        if b < self.nvertex:
            out.push_back(b)
            return
        for t in self.blossomchilds[b]:
            if t < self.nvertex:
                out.push_back(t)
            else:
                self.leaves(t, out)

    cdef void assign_label(self, int w, int t, int p):
        cdef int b = self.inblossom[w]
        cdef int base, v
        cdef vector[int] lv
        self.label[w] = t
        self.label[b] = t
        self.labelend[w] = p
        self.labelend[b] = p
        self.bestedge[w] = -1
        self.bestedge[b] = -1
        if t == 1:
            self.leaves(b, lv)
            for v in lv:
                self.queue.push_back(v)
        else:
            base = self.blossombase[b]
            self.assign_label(self.endpoint[self.mate[base]], 1, self.mate[base] ^ 1)

    cdef int scan_blossom(self, int v, int w):
        cdef vector[int] path
        cdef int base = -1, b, tmp
        while v != -1 or w != -1:
            b = self.inblossom[v]
            if self.label[b] & 4:
                base = self.blossombase[b]
                break
            path.push_back(b)
            self.label[b] = 5
            if self.labelend[b] == -1:
                v = -1
            else:
                v = self.endpoint[self.labelend[b]]
                b = self.inblossom[v]
                v = self.endpoint[self.labelend[b]]
            if w != -1:
                tmp = v
                v = w
                w = tmp
        for b in path:
            self.label[b] = 1
        return base

    cdef void add_blossom(self, int base, int k):
        cdef int v = self.ei[k], w = self.ej[k]
        cdef int bb = self.inblossom[base]
        cdef int bv = self.inblossom[v]
        cdef int bw = self.inblossom[w]
        cdef int b = self.unusedblossoms.back()
        cdef vector[int] path, endps, lv, nbl, bestedgeto
        cdef int i, j, k2, bj, p, x
        self.unusedblossoms.pop_back()
        self.blossombase[b] = base
        self.blossomparent[b] = -1
        self.blossomparent[bb] = b
        while bv != bb:
            self.blossomparent[bv] = b
            path.push_back(bv)
            endps.push_back(self.labelend[bv])
            v = self.endpoint[self.labelend[bv]]
            bv = self.inblossom[v]
        path.push_back(bb)
        _reverse(path)
        _reverse(endps)
        endps.push_back(2 * k)
        while bw != bb:
            self.blossomparent[bw] = b
            path.push_back(bw)
            endps.push_back(self.labelend[bw] ^ 1)
            w = self.endpoint[self.labelend[bw]]
            bw = self.inblossom[w]
        self.blossomchilds[b] = path
        self.blossomendps[b] = endps
        self.label[b] = 1
        self.labelend[b] = self.labelend[bb]
        self.dualvar[b] = 0
        self.leaves(b, lv)
        for x in lv:
            if self.label[self.inblossom[x]] == 2:
                self.queue.push_back(x)
            self.inblossom[x] = b
        bestedgeto.assign(2 * self.nvertex, -1)
        for bv in path:
            nbl.clear()
            if not self.has_bbe[bv]:
                lv.clear()
                self.leaves(bv, lv)
                for x in lv:
                    for p in self.neighbend[x]:
                        nbl.push_back(p // 2)
            else:
                nbl = self.blossombestedges[bv]
            for k2 in nbl:
                i = self.ei[k2]
                j = self.ej[k2]
                if self.inblossom[j] == b:
                    i, j = j, i
                bj = self.inblossom[j]
                if (bj != b and self.label[bj] == 1
                        and (bestedgeto[bj] == -1 or self.slack(k2) < self.slack(bestedgeto[bj]))):
                    bestedgeto[bj] = k2
            self.blossombestedges[bv].clear()
            self.has_bbe[bv] = 0
            self.bestedge[bv] = -1
        self.blossombestedges[b].clear()
        for k2 in bestedgeto:
            if k2 != -1:
                self.blossombestedges[b].push_back(k2)
        self.has_bbe[b] = 1
        self.bestedge[b] = -1
        for k2 in self.blossombestedges[b]:
            if self.bestedge[b] == -1 or self.slack(k2) < self.slack(self.bestedge[b]):
                self.bestedge[b] = k2

    cdef void expand_blossom(self, int b, bint endstage):
        cdef vector[int] childs = self.blossomchilds[b]
        cdef vector[int] endps, lv
        cdef int s, v, entrychild, j, jstep, endptrick, p, bv, reached, nch
        for s in childs:
            self.blossomparent[s] = -1
            if s < self.nvertex:
                self.inblossom[s] = s
            elif endstage and self.dualvar[s] == 0:
                self.expand_blossom(s, endstage)
            else:
                lv.clear()
                self.leaves(s, lv)
                for v in lv:
                    self.inblossom[v] = s
        if (not endstage) and self.label[b] == 2:
            entrychild = self.inblossom[self.endpoint[self.labelend[b] ^ 1]]
            endps = self.blossomendps[b]
            nch = <int>childs.size()
            j = _index(childs, entrychild)
            if j & 1:
                j -= nch
                jstep = 1
                endptrick = 0
            else:
                jstep = -1
                endptrick = 1
            p = self.labelend[b]
            while j != 0:
                self.label[self.endpoint[p ^ 1]] = 0
                self.label[self.endpoint[endps[_wrap(j - endptrick, nch)] ^ endptrick ^ 1]] = 0
                self.assign_label(self.endpoint[p ^ 1], 2, p)
                self.allowedge[endps[_wrap(j - endptrick, nch)] // 2] = 1
                j += jstep
                p = endps[_wrap(j - endptrick, nch)] ^ endptrick
                self.allowedge[p // 2] = 1
                j += jstep
            bv = childs[_wrap(j, nch)]
            self.label[self.endpoint[p ^ 1]] = 2
            self.label[bv] = 2
            self.labelend[self.endpoint[p ^ 1]] = p
            self.labelend[bv] = p
            self.bestedge[bv] = -1
            j += jstep
            while childs[_wrap(j, nch)] != entrychild:
                bv = childs[_wrap(j, nch)]
                if self.label[bv] == 1:
                    j += jstep
                    continue
                reached = -1
                lv.clear()
                self.leaves(bv, lv)
                for v in lv:
                    if self.label[v] != 0:
                        reached = v
                        break
                if reached >= 0:
                    v = reached
                    self.label[v] = 0
                    self.label[self.endpoint[self.mate[self.blossombase[bv]]]] = 0
                    self.assign_label(v, 2, self.labelend[v])
                j += jstep
        self.label[b] = -1
        self.labelend[b] = -1
        self.blossomchilds[b].clear()
        self.blossomendps[b].clear()
        self.blossombase[b] = -1
        self.blossombestedges[b].clear()
        self.has_bbe[b] = 0
        self.bestedge[b] = -1
        self.unusedblossoms.push_back(b)

    cdef void augment_blossom(self, int b, int v):
        cdef int t = v, i, j, jstep, endptrick, p, nch
        cdef vector[int] childs, endps, rc, re
        while self.blossomparent[t] != b:
            t = self.blossomparent[t]
        if t >= self.nvertex:
            self.augment_blossom(t, v)
        childs = self.blossomchilds[b]
        endps = self.blossomendps[b]
        nch = <int>childs.size()
        i = _index(childs, t)
        j = i
        if i & 1:
            j -= nch
            jstep = 1
            endptrick = 0
        else:
            jstep = -1
            endptrick = 1
        while j != 0:
            j += jstep
            t = childs[_wrap(j, nch)]
            p = endps[_wrap(j - endptrick, nch)] ^ endptrick
            if t >= self.nvertex:
                self.augment_blossom(t, self.endpoint[p])
            j += jstep
            t = childs[_wrap(j, nch)]
            if t >= self.nvertex:
                self.augment_blossom(t, self.endpoint[p ^ 1])
            self.mate[self.endpoint[p]] = p ^ 1
            self.mate[self.endpoint[p ^ 1]] = p
        for j in range(nch):
            rc.push_back(childs[(i + j) % nch])
            re.push_back(endps[(i + j) % nch])
        self.blossomchilds[b] = rc
        self.blossomendps[b] = re
        self.blossombase[b] = self.blossombase[rc[0]]

    cdef void augment_matching(self, int k):
        cdef int s, p, bs, t, bt, j, side
        for side in range(2):
            if side == 0:
                s = self.ei[k]
                p = 2 * k + 1
            else:
                s = self.ej[k]
                p = 2 * k
            while True:
                bs = self.inblossom[s]
                if bs >= self.nvertex:
                    self.augment_blossom(bs, s)
                self.mate[s] = p
                if self.labelend[bs] == -1:
                    break
                t = self.endpoint[self.labelend[bs]]
                bt = self.inblossom[t]
                s = self.endpoint[self.labelend[bt]]
                j = self.endpoint[self.labelend[bt] ^ 1]
                if bt >= self.nvertex:
                    self.augment_blossom(bt, j)
                self.mate[j] = self.labelend[bt]
                p = self.labelend[bt] ^ 1

    cdef void solve(self):
        cdef int n = self.nvertex
        cdef int stage, v, k, p, w, base, b, i, j, deltatype, deltaedge, deltablossom, lab
        cdef long long delta, dd, kslack = 0
        cdef bint augmented
        for stage in range(n):
            for v in range(2 * n):
                self.label[v] = 0
                self.bestedge[v] = -1
            for v in range(n, 2 * n):
                self.blossombestedges[v].clear()
                self.has_bbe[v] = 0
            for k in range(self.nedge):
                self.allowedge[k] = 0
            self.queue.clear()
            for v in range(n):
                if self.mate[v] == -1 and self.label[self.inblossom[v]] == 0:
                    self.assign_label(v, 1, -1)
            augmented = False
            while True:
                while self.queue.size() and not augmented:
                    v = self.queue.back()
                    self.queue.pop_back()
                    for p in self.neighbend[v]:
                        k = p // 2
                        w = self.endpoint[p]
                        if self.inblossom[v] == self.inblossom[w]:
                            continue
                        if not self.allowedge[k]:
                            kslack = self.slack(k)
                            if kslack <= 0:
                                self.allowedge[k] = 1
                        if self.allowedge[k]:
                            if self.label[self.inblossom[w]] == 0:
                                self.assign_label(w, 2, p ^ 1)
                            elif self.label[self.inblossom[w]] == 1:
                                base = self.scan_blossom(v, w)
                                if base >= 0:
                                    self.add_blossom(base, k)
                                else:
                                    self.augment_matching(k)
                                    augmented = True
                                    break
                            elif self.label[w] == 0:
                                self.label[w] = 2
                                self.labelend[w] = p ^ 1
                        elif self.label[self.inblossom[w]] == 1:
                            b = self.inblossom[v]
                            if self.bestedge[b] == -1 or kslack < self.slack(self.bestedge[b]):
                                self.bestedge[b] = k
                        elif self.label[w] == 0:
                            if self.bestedge[w] == -1 or kslack < self.slack(self.bestedge[w]):
                                self.bestedge[w] = k
                if augmented:
                    break

                deltatype = 1
                delta = self.dualvar[0]
                for v in range(1, n):
                    if self.dualvar[v] < delta:
                        delta = self.dualvar[v]
                deltaedge = -1
                deltablossom = -1
                for v in range(n):
                    if self.label[self.inblossom[v]] == 0 and self.bestedge[v] != -1:
                        dd = self.slack(self.bestedge[v])
                        if dd < delta:
                            delta = dd
                            deltatype = 2
                            deltaedge = self.bestedge[v]
                for b in range(2 * n):
                    if self.blossomparent[b] == -1 and self.label[b] == 1 and self.bestedge[b] != -1:
                        dd = self.slack(self.bestedge[b]) // 2
                        if dd < delta:
                            delta = dd
                            deltatype = 3
                            deltaedge = self.bestedge[b]
                for b in range(n, 2 * n):
                    if (self.blossombase[b] >= 0 and self.blossomparent[b] == -1 and self.label[b] == 2
                            and self.dualvar[b] < delta):
                        delta = self.dualvar[b]
                        deltatype = 4
                        deltablossom = b

                for v in range(n):
                    lab = self.label[self.inblossom[v]]
                    if lab == 1:
                        self.dualvar[v] -= delta
                    elif lab == 2:
                        self.dualvar[v] += delta
                for b in range(n, 2 * n):
                    if self.blossombase[b] >= 0 and self.blossomparent[b] == -1:
                        if self.label[b] == 1:
                            self.dualvar[b] += delta
                        elif self.label[b] == 2:
                            self.dualvar[b] -= delta

                if deltatype == 1:
                    break
                elif deltatype == 2:
                    self.allowedge[deltaedge] = 1
                    i = self.ei[deltaedge]
                    j = self.ej[deltaedge]
                    if self.label[self.inblossom[i]] == 0:
                        i = j
                    self.queue.push_back(i)
                elif deltatype == 3:
                    self.allowedge[deltaedge] = 1
                    self.queue.push_back(self.ei[deltaedge])
                else:
                    self.expand_blossom(deltablossom, False)
            if not augmented:
                break
            for b in range(n, 2 * n):
                if (self.blossomparent[b] == -1 and self.blossombase[b] >= 0 and self.label[b] == 1
                        and self.dualvar[b] == 0):
                    self.expand_blossom(b, True)

    cdef void setup(self, int nvertex, vector[int]& ei, vector[int]& ej, vector[long long]& ew):
        cdef int k, n = nvertex
        cdef long long maxweight = 0
        self.nvertex = n
        self.nedge = <int>ei.size()
        self.ei = ei
        self.ej = ej
        self.ew = ew
        for k in range(self.nedge):
            if ew[k] > maxweight:
                maxweight = ew[k]
        self.endpoint.resize(2 * self.nedge)
        self.neighbend.assign(n, vector[int]())
        for k in range(self.nedge):
            self.endpoint[2 * k] = ei[k]
            self.endpoint[2 * k + 1] = ej[k]
            self.neighbend[ei[k]].push_back(2 * k + 1)
            self.neighbend[ej[k]].push_back(2 * k)
        self.mate.assign(n, -1)
        self.label.assign(2 * n, 0)
        self.labelend.assign(2 * n, -1)
        self.inblossom.resize(n)
        for k in range(n):
            self.inblossom[k] = k
        self.blossomparent.assign(2 * n, -1)
        self.blossomchilds.assign(2 * n, vector[int]())
        self.blossombase.assign(2 * n, -1)
        for k in range(n):
            self.blossombase[k] = k
        self.blossomendps.assign(2 * n, vector[int]())
        self.bestedge.assign(2 * n, -1)
        self.blossombestedges.assign(2 * n, vector[int]())
        self.has_bbe.assign(2 * n, 0)
        self.unusedblossoms.clear()
        for k in range(n, 2 * n):
            self.unusedblossoms.push_back(k)
        self.dualvar.assign(2 * n, 0)
        for k in range(n):
            self.dualvar[k] = maxweight
        self.allowedge.assign(self.nedge, 0)
        self.queue.clear()


cdef inline void _reverse(vector[int]& v):
    cdef size_t i = 0, j = v.size()
    cdef int t
    while j > i + 1:
        j -= 1
        t = v[i]
        v[i] = v[j]
        v[j] = t
        i += 1


cdef inline int _index(vector[int]& v, int x):
    cdef int i
    for i in range(<int>v.size()):
        if v[i] == x:
            return i
    return -1


cdef inline int _wrap(int j, int n):
    return j + n if j < 0 else j


def max_weight_matching(int nvertex, edges):
    """Same contract as ``blossom.max_weight_matching``."""
    cdef vector[int] ei, ej
    cdef vector[long long] ew
    if not edges:
        return [-1] * nvertex
    for i, j, w in edges:
        ei.push_back(i)
        ej.push_back(j)
        ew.push_back(w)
    cdef _Matcher mt = _Matcher()
    mt.setup(nvertex, ei, ej, ew)
    mt.solve()
    return [mt.endpoint[m] if m >= 0 else -1 for m in mt.mate]


# ---------------------------------------------------------------------------
# decoding

ctypedef pair[long long, int] QItem

cdef class _Decoder:
    cdef const int64_t[::1] adj_ptr
    cdef const int32_t[::1] adj_to
    cdef const int64_t[::1] adj_w
    cdef const uint64_t[::1] adj_obs
    cdef const int64_t[::1] bdist
    cdef const uint64_t[::1] bobs
    cdef int boundary
    cdef vector[long long] dist
    cdef vector[uint64_t] par
    cdef vector[int] touched, fired_idx
    cdef _Matcher matcher

    def __init__(self, g):
        self.adj_ptr, self.adj_to, self.adj_w, self.adj_obs, self.bdist, self.bobs, self.boundary = g
        self.dist.assign(self.boundary, -1)
        self.par.assign(self.boundary, 0)
        self.fired_idx.assign(self.boundary, -1)
        self.matcher = _Matcher()

    cdef void search(self, int si, vector[int]& fired, vector[int]& pi, vector[int]& pj,
                     vector[long long]& pw, vector[uint64_t]& pp):
        cdef int src = fired[si]
        cdef long long bs = self.bdist[src], d, nd, w
        cdef int u, v, j
        cdef int64_t e
        cdef uint64_t pu
        cdef priority_queue[QItem] heap
        cdef QItem top
        self.dist[src] = 0
        self.par[src] = 0
        self.touched.push_back(src)
        heap.push(QItem(0, -src))
        while not heap.empty():
            top = heap.top()
            heap.pop()
            d = -top.first
            u = -top.second
            if d > self.dist[u]:
                continue
            if d >= bs + self.bdist[u]:
                continue
            j = self.fired_idx[u]
            if u != src and j >= 0:
                if j > si:
                    w = self.bdist[src] + self.bdist[u] - d
                    if w > 0:
                        pi.push_back(si)
                        pj.push_back(j)
                        pw.push_back(w)
                        pp.push_back(self.par[u])
                # keep going: an optimal pairing may route through a fired node
            pu = self.par[u]
            for e in range(self.adj_ptr[u], self.adj_ptr[u + 1]):
                v = self.adj_to[e]
                if v == self.boundary:
                    continue
                nd = d + self.adj_w[e]
                if self.dist[v] < 0 or nd < self.dist[v]:
                    if self.dist[v] < 0:
                        self.touched.push_back(v)
                    self.dist[v] = nd
                    self.par[v] = pu ^ self.adj_obs[e]
                    heap.push(QItem(-nd, -v))
        for v in self.touched:
            self.dist[v] = -1
        self.touched.clear()

    cdef uint64_t decode(self, vector[int]& fired, vector[int]& mate_out, long long* total):
        """``fired`` must be sorted ascending."""
        cdef int k = <int>fired.size()
        cdef int i, j, ra, rb, c, nloc, n
        cdef uint64_t pred = 0
        cdef long long tot = 0
        cdef vector[int] pi, pj, parent, order, local, members
        cdef vector[long long] pw
        cdef vector[uint64_t] pp
        cdef vector[int] ei, ej, comp_start
        cdef vector[long long] ew
        mate_out.assign(k, -1)
        if k == 0:
            total[0] = 0
            return 0
        for i in range(k):
            self.fired_idx[fired[i]] = i
        for i in range(k):
            self.search(i, fired, pi, pj, pw, pp)
        for i in range(k):
            self.fired_idx[fired[i]] = -1
            pred ^= self.bobs[fired[i]]
            tot += self.bdist[fired[i]]
        parent.resize(k)
        for i in range(k):
            parent[i] = i
        for c in range(<int>pi.size()):
            ra = _find(parent, pi[c])
            rb = _find(parent, pj[c])
            if ra != rb:
                parent[ra] = rb
        # group members by root, in order of first appearance
        local.assign(k, -1)
        members.assign(k, 0)
        order.assign(k, 0)  # per root: member count
        for i in range(k):
            order[_find(parent, i)] += 1
        comp_start.assign(k + 1, 0)
        for i in range(k):
            comp_start[i + 1] = comp_start[i] + order[i]
        order.assign(k, 0)
        for i in range(k):
            ra = _find(parent, i)
            members[comp_start[ra] + order[ra]] = i
            local[i] = order[ra]
            order[ra] += 1
        for ra in range(k):
            n = comp_start[ra + 1] - comp_start[ra]
            if n < 2:
                continue
            if n == 2:
                i = members[comp_start[ra]]
                j = members[comp_start[ra] + 1]
                mate_out[i] = j
                mate_out[j] = i
                continue
            ei.clear()
            ej.clear()
            ew.clear()
            for c in range(<int>pi.size()):
                if _find(parent, pi[c]) == ra:
                    ei.push_back(local[pi[c]])
                    ej.push_back(local[pj[c]])
                    ew.push_back(2 * pw[c])
            self.matcher.setup(n, ei, ej, ew)
            self.matcher.solve()
            for c in range(n):
                if self.matcher.mate[c] >= 0:
                    mate_out[members[comp_start[ra] + c]] = members[comp_start[ra] + self.matcher.endpoint[self.matcher.mate[c]]]
        for c in range(<int>pi.size()):
            i = pi[c]
            j = pj[c]
            if mate_out[i] == j:
                tot -= pw[c]
                pred ^= self.bobs[fired[i]] ^ self.bobs[fired[j]] ^ pp[c]
        total[0] = tot
        return pred


cdef inline int _find(vector[int]& parent, int a):
    while parent[a] != a:
        parent[a] = parent[parent[a]]
        a = parent[a]
    return a


def decode_fired(g, fired):
    """See ``_fallback.decode_fired``."""
    cdef _Decoder dec = _Decoder(g)
    cdef vector[int] f, mate
    cdef long long total = 0
    for x in sorted(int(v) for v in fired):
        f.push_back(x)
    pred = dec.decode(f, mate, &total)
    pairs = []
    for i in range(<int>f.size()):
        if mate[i] == -1:
            pairs.append((f[i], -1))
        elif i < mate[i]:
            pairs.append((f[i], f[mate[i]]))
    return int(pred), pairs, int(total)


def decode_packed(g, relevant, det_packed):
    """See ``_fallback.decode_packed``."""
    cdef _Decoder dec = _Decoder(g)
    cdef const uint8_t[:, ::1] bits = np.ascontiguousarray(det_packed, dtype=np.uint8)
    cdef const uint8_t[::1] rel = np.ascontiguousarray(relevant, dtype=np.uint8)
    cdef int shots = bits.shape[0]
    cdef int nbytes = bits.shape[1]
    cdef int ndet = rel.shape[0]
    out_arr = np.zeros(shots, dtype=np.uint64)
    cdef uint64_t[::1] out = out_arr
    cdef vector[int] fired, mate
    cdef long long total
    cdef int s, by, bit, det
    cdef uint8_t val
    for s in range(shots):
        fired.clear()
        for by in range(nbytes):
            val = bits[s, by]
            if val == 0:
                continue
            for bit in range(8):
                if val & (1 << bit):
                    det = by * 8 + bit
                    if det < ndet and rel[det]:
                        fired.push_back(det)
        if fired.size():
            out[s] = dec.decode(fired, mate, &total)
    return out_arr
