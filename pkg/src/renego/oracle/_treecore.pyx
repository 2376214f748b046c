# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled trajectory-tree walks; mirrors _walk_py operation for operation."""

from libc.stdint cimport int32_t, int64_t, uint64_t

import numpy as np

from .abstraction import AbstractionTooLarge, FNV_OFFSET

cdef int KIND_OFFER = 0
cdef int KIND_ACCEPT = 1
cdef int KIND_REJECT = 2

cdef double INV53 = 1.0 / 9007199254740992.0

cdef struct Pair:
    double a
    double b

cdef struct Triple:
    double a
    double b
    double c


cdef inline uint64_t splitmix64(uint64_t x) nogil:
    cdef uint64_t z = x + <uint64_t>0x9E3779B97F4A7C15
    z = (z ^ (z >> 30)) * <uint64_t>0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * <uint64_t>0x94D049BB133111EB
    return z ^ (z >> 31)


cdef inline uint64_t child_hash(uint64_t ph, int aid) nogil:
    return splitmix64(ph ^ <uint64_t>(aid + 1))


cdef class _Tables:
    cdef int H, P, M, n_obs, n_actions, starter, obs_width
    cdef int32_t[::1] kind, pay, msg
    cdef double[::1] r1
    cdef int64_t[::1] legal_ptr
    cdef int32_t[::1] legal_ids
    cdef int[18] actor_of

    def __init__(self, tables):
        self.H = tables.H
        self.P = tables.P
        self.M = tables.M
        self.n_obs = tables.n_obs
        self.n_actions = tables.n_actions
        self.starter = tables.starter
        self.obs_width = (2 * tables.P + 1) * (tables.M + 1)
        if self.H + 2 >= 18:
            raise ValueError("horizon too large for the compiled kernel")
        self.kind = np.ascontiguousarray(tables.kind, dtype=np.int32)
        self.pay = np.ascontiguousarray(tables.pay, dtype=np.int32)
        self.msg = np.ascontiguousarray(tables.msg, dtype=np.int32)
        self.r1 = np.ascontiguousarray(tables.r1_deal, dtype=np.float64)
        ptr = [0]
        ids = []
        for obs in range(tables.n_obs):
            ids.extend(int(a) for a in tables.legal_lists[obs])
            ptr.append(len(ids))
        self.legal_ptr = np.asarray(ptr, dtype=np.int64)
        self.legal_ids = np.asarray(ids, dtype=np.int32)
        for h in range(1, self.H + 1):
            self.actor_of[h] = tables.actor_list[h]


cdef class _Policy:
    cdef int64_t[::1] ptr
    cdef int32_t[::1] ids
    cdef double[::1] probs
    cdef double delta
    cdef uint64_t hash_seed
    cdef int hash_k

    def __init__(self, prep):
        self.ptr = np.ascontiguousarray(prep.ptr, dtype=np.int64)
        self.ids = np.ascontiguousarray(prep.ids, dtype=np.int32)
        self.probs = np.ascontiguousarray(prep.probs, dtype=np.float64)
        self.delta = prep.delta
        self.hash_seed = prep.hash_seed
        self.hash_k = prep.hash_k
        if self.hash_k > 8:
            raise ValueError("hash_k above 8 is not supported by the kernel")


cdef int build_dist(_Tables t, _Policy p, int obs, uint64_t ph,
                    int32_t* out_ids, double* out_probs) nogil:
    """Fill ascending (ids, probs) for a policy at a node; returns length."""
    cdef int64_t start = p.ptr[obs]
    cdef int64_t stop = p.ptr[obs + 1]
    cdef int n = 0
    cdef int64_t i
    for i in range(start, stop):
        out_ids[n] = p.ids[i]
        out_probs[n] = p.probs[i]
        n += 1
    if p.delta == 0.0:
        return n
    cdef int64_t lstart = t.legal_ptr[obs]
    cdef int n_legal = <int>(t.legal_ptr[obs + 1] - lstart)
    cdef uint64_t hs = splitmix64(ph ^ p.hash_seed)
    cdef int32_t[8] slots
    cdef double[8] weights
    cdef int n_slots = 0
    cdef double total = 0.0
    cdef uint64_t r
    cdef int32_t slot
    cdef double w, add
    cdef int j, k, found, pos, m
    for j in range(p.hash_k):
        r = splitmix64(hs + <uint64_t>j)
        slot = t.legal_ids[lstart + <int64_t>(r % <uint64_t>n_legal)]
        w = <double>(r >> 11) * INV53 + 0.25
        found = 0
        for k in range(n_slots):
            if slots[k] == slot:
                weights[k] += w
                found = 1
                break
        if not found:
            slots[n_slots] = slot
            weights[n_slots] = w
            n_slots += 1
        total += w
    for k in range(n_slots):
        slot = slots[k]
        add = p.delta * (weights[k] / total)
        pos = 0
        while pos < n and out_ids[pos] < slot:
            pos += 1
        if pos < n and out_ids[pos] == slot:
            out_probs[pos] = out_probs[pos] + add
        else:
            m = n
            while m > pos:
                out_ids[m] = out_ids[m - 1]
                out_probs[m] = out_probs[m - 1]
                m -= 1
            out_ids[pos] = slot
            out_probs[pos] = add
            n += 1
    return n


cdef class _TheoremWalker:
    cdef _Tables t
    cdef _Policy p1, p2a, p2b
    cdef long node_cap, nodes
    cdef double[::1] eps
    cdef list points
    cdef int width
    cdef int32_t[::1] scratch_i
    cdef double[::1] scratch_d

    def __init__(self, _Tables t, _Policy p1, _Policy p2a, _Policy p2b, long node_cap):
        self.t = t
        self.p1 = p1
        self.p2a = p2a
        self.p2b = p2b
        self.node_cap = node_cap
        self.nodes = 0
        self.eps = np.zeros(t.H + 2)
        self.points = []
        self.width = t.n_actions + 16
        self.scratch_i = np.zeros(2 * (t.H + 2) * self.width, dtype=np.int32)
        self.scratch_d = np.zeros(2 * (t.H + 2) * self.width, dtype=np.float64)

    cdef Pair walk(self, int h, int sp, int spr_, int lm, uint64_t ph,
                   int depth) except *:
        cdef Pair out, c
        self.nodes += 1
        if self.nodes > self.node_cap:
            raise AbstractionTooLarge(f"enumeration exceeded {self.node_cap} nodes")
        cdef int sc = 0 if sp < 0 else 1 + (0 if spr_ == 1 else self.t.P) + sp
        cdef int obs = (h - 1) * self.t.obs_width + sc * (self.t.M + 1) + (lm + 1)
        cdef int actor = self.t.actor_of[h]
        cdef int base_a = (2 * depth) * self.width
        cdef int base_b = (2 * depth + 1) * self.width
        cdef int n_a, n_b, i, j, aid
        cdef double pa, pb, tv, va, vb, p

        if actor == 1:
            n_a = build_dist(self.t, self.p1, obs, ph,
                             &self.scratch_i[base_a], &self.scratch_d[base_a])
            va = 0.0
            vb = 0.0
            for i in range(n_a):
                p = self.scratch_d[base_a + i]
                if p <= 0.0:
                    continue
                aid = self.scratch_i[base_a + i]
                c = self.child(h, sp, spr_, actor, aid, ph, depth)
                va += p * c.a
                vb += p * c.b
            self.points.append((h, va, vb))
            out.a = va
            out.b = vb
            return out

        n_a = build_dist(self.t, self.p2a, obs, ph,
                         &self.scratch_i[base_a], &self.scratch_d[base_a])
        n_b = build_dist(self.t, self.p2b, obs, ph,
                         &self.scratch_i[base_b], &self.scratch_d[base_b])
        tv = 0.0
        va = 0.0
        vb = 0.0
        i = 0
        j = 0
        while i < n_a or j < n_b:
            if j >= n_b or (i < n_a and self.scratch_i[base_a + i] < self.scratch_i[base_b + j]):
                aid = self.scratch_i[base_a + i]
                pa = self.scratch_d[base_a + i]
                pb = 0.0
                i += 1
            elif i >= n_a or self.scratch_i[base_b + j] < self.scratch_i[base_a + i]:
                aid = self.scratch_i[base_b + j]
                pa = 0.0
                pb = self.scratch_d[base_b + j]
                j += 1
            else:
                aid = self.scratch_i[base_a + i]
                pa = self.scratch_d[base_a + i]
                pb = self.scratch_d[base_b + j]
                i += 1
                j += 1
            tv += pa - pb if pa >= pb else pb - pa
            if pa <= 0.0 and pb <= 0.0:
                continue
            c = self.child(h, sp, spr_, actor, aid, ph, depth)
            va += pa * c.a
            vb += pb * c.b
        tv *= 0.5
        if tv > self.eps[h]:
            self.eps[h] = tv
        out.a = va
        out.b = vb
        return out

    cdef Pair child(self, int h, int sp, int spr_, int actor, int aid,
                    uint64_t ph, int depth) except *:
        cdef Pair out
        cdef int k = self.t.kind[aid]
        if k == KIND_ACCEPT:
            out.a = self.t.r1[sp]
            out.b = out.a
            return out
        if k == KIND_REJECT or h + 1 > self.t.H:
            out.a = 0.0
            out.b = 0.0
            return out
        if k == KIND_OFFER:
            return self.walk(h + 1, self.t.pay[aid], actor, self.t.msg[aid],
                             child_hash(ph, aid), depth + 1)
        return self.walk(h + 1, sp, spr_, self.t.msg[aid],
                         child_hash(ph, aid), depth + 1)


cdef class _BRWalker:
    cdef _Tables t
    cdef _Policy pm, pt
    cdef long node_cap, nodes
    cdef double[::1] eps
    cdef int width
    cdef int32_t[::1] scratch_i
    cdef double[::1] scratch_d

    def __init__(self, _Tables t, _Policy pm, _Policy pt, long node_cap,
                 double[::1] eps):
        self.t = t
        self.pm = pm
        self.pt = pt
        self.node_cap = node_cap
        self.nodes = 0
        self.eps = eps
        self.width = t.n_actions + 16
        self.scratch_i = np.zeros(2 * (t.H + 2) * self.width, dtype=np.int32)
        self.scratch_d = np.zeros(2 * (t.H + 2) * self.width, dtype=np.float64)

    cdef Triple walk(self, int h, int sp, int spr_, int lm, uint64_t ph,
                     int depth) except *:
        cdef Triple out, c
        self.nodes += 1
        if self.nodes > self.node_cap:
            raise AbstractionTooLarge(f"enumeration exceeded {self.node_cap} nodes")
        cdef int sc = 0 if sp < 0 else 1 + (0 if spr_ == 1 else self.t.P) + sp
        cdef int obs = (h - 1) * self.t.obs_width + sc * (self.t.M + 1) + (lm + 1)
        cdef int actor = self.t.actor_of[h]
        cdef int base_m = (2 * depth) * self.width
        cdef int base_t = (2 * depth + 1) * self.width
        cdef int n_m, n_t, i, j, aid, first
        cdef double pm, pt, tv, vbm, vgt, vbt
        cdef double best_bm, best_gt, best_bt
        cdef int64_t lstart, lstop, li

        if actor == 1:
            lstart = self.t.legal_ptr[obs]
            lstop = self.t.legal_ptr[obs + 1]
            first = 1
            best_bm = 0.0
            best_gt = 0.0
            best_bt = 0.0
            for li in range(lstart, lstop):
                aid = self.t.legal_ids[li]
                c = self.child(h, sp, spr_, actor, aid, ph, depth)
                if first or c.a > best_bm:
                    best_bm = c.a
                    best_gt = c.b
                if first or c.c > best_bt:
                    best_bt = c.c
                first = 0
            out.a = best_bm
            out.b = best_gt
            out.c = best_bt
            return out

        n_m = build_dist(self.t, self.pm, obs, ph,
                         &self.scratch_i[base_m], &self.scratch_d[base_m])
        n_t = build_dist(self.t, self.pt, obs, ph,
                         &self.scratch_i[base_t], &self.scratch_d[base_t])
        tv = 0.0
        vbm = 0.0
        vgt = 0.0
        vbt = 0.0
        i = 0
        j = 0
        while i < n_m or j < n_t:
            if j >= n_t or (i < n_m and self.scratch_i[base_m + i] < self.scratch_i[base_t + j]):
                aid = self.scratch_i[base_m + i]
                pm = self.scratch_d[base_m + i]
                pt = 0.0
                i += 1
            elif i >= n_m or self.scratch_i[base_t + j] < self.scratch_i[base_m + i]:
                aid = self.scratch_i[base_t + j]
                pm = 0.0
                pt = self.scratch_d[base_t + j]
                j += 1
            else:
                aid = self.scratch_i[base_m + i]
                pm = self.scratch_d[base_m + i]
                pt = self.scratch_d[base_t + j]
                i += 1
                j += 1
            tv += pm - pt if pm >= pt else pt - pm
            if pm <= 0.0 and pt <= 0.0:
                continue
            c = self.child(h, sp, spr_, actor, aid, ph, depth)
            vbm += pm * c.a
            vgt += pt * c.b
            vbt += pt * c.c
        tv *= 0.5
        if tv > self.eps[h]:
            self.eps[h] = tv
        out.a = vbm
        out.b = vgt
        out.c = vbt
        return out

    cdef Triple child(self, int h, int sp, int spr_, int actor, int aid,
                      uint64_t ph, int depth) except *:
        cdef Triple out
        cdef int k = self.t.kind[aid]
        if k == KIND_ACCEPT:
            out.a = self.t.r1[sp]
            out.b = out.a
            out.c = out.a
            return out
        if k == KIND_REJECT or h + 1 > self.t.H:
            out.a = 0.0
            out.b = 0.0
            out.c = 0.0
            return out
        if k == KIND_OFFER:
            return self.walk(h + 1, self.t.pay[aid], actor, self.t.msg[aid],
                             child_hash(ph, aid), depth + 1)
        return self.walk(h + 1, sp, spr_, self.t.msg[aid],
                         child_hash(ph, aid), depth + 1)


def theorem_walk(tables, p1, p2a, p2b, node_cap):
    """Compiled twin of _walk_py.theorem_walk (same signature, same results)."""
    t = _Tables(tables)
    walker = _TheoremWalker(t, _Policy(p1), _Policy(p2a), _Policy(p2b), node_cap)
    root = walker.walk(1, -1, 0, -1, FNV_OFFSET, 0)
    return root.a, root.b, walker.points, np.asarray(walker.eps), walker.nodes


def br_walk(tables, p2_model, p2_true, node_cap, eps=None):
    """Compiled twin of _walk_py.br_walk (same signature, same results)."""
    t = _Tables(tables)
    if eps is None:
        eps = np.zeros(tables.H + 2)
    eps = np.ascontiguousarray(eps, dtype=np.float64)
    walker = _BRWalker(t, _Policy(p2_model), _Policy(p2_true), node_cap, eps)
    root = walker.walk(1, -1, 0, -1, FNV_OFFSET, 0)
    return root.a, root.b, root.c, eps, walker.nodes
