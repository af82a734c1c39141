# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled search kernels.

Mirror of ``pure.py``: identical arithmetic expression order so that costs
are bit-for-bit equal between backends.  See tests/test_kernels.py.
"""

from libc.stdlib cimport calloc, free, malloc
from libc.string cimport memset

import time

from ..errors import OptimizeTimeout

OP_HJ = 0
OP_INL = 1

name = "compiled"
is_compiled = True

cdef double INF = float("inf")


cdef struct ProblemC:
    int n
    int n_edges
    int* edge_u
    int* edge_v
    double scan[32]
    char indexed[32]
    double lam
    double* cards          # indexed by mask, NaN when absent
    int* pair_inner        # indexed by edge id
    long long pair_mask0   # unused marker


cdef class _Problem:
    cdef ProblemC p
    cdef long long full
    cdef dict pair_inner_by_mask

    def __cinit__(self, inst):
        cdef int n = inst.n
        cdef int m = len(inst.edge_u)
        cdef long long size = (<long long>1) << n
        cdef long long mask
        self.p.n = n
        self.p.n_edges = m
        self.p.lam = inst.lam
        self.full = size - 1
        self.p.edge_u = <int*>malloc(m * sizeof(int))
        self.p.edge_v = <int*>malloc(m * sizeof(int))
        self.p.pair_inner = <int*>malloc(size * sizeof(int))
        self.p.cards = <double*>malloc(size * sizeof(double))
        if not self.p.edge_u or not self.p.edge_v or not self.p.pair_inner or not self.p.cards:
            raise MemoryError()
        cdef int i
        for i in range(m):
            self.p.edge_u[i] = inst.edge_u[i]
            self.p.edge_v[i] = inst.edge_v[i]
        for i in range(n):
            self.p.scan[i] = inst.scan[i]
            self.p.indexed[i] = 1 if inst.indexed[i] else 0
        for mask in range(size):
            self.p.cards[mask] = INF
            self.p.pair_inner[mask] = -1
        for key, val in inst.cards.items():
            self.p.cards[<long long>key] = <double>val
        for key, val in inst.pair_inner.items():
            self.p.pair_inner[<long long>key] = <int>val

    def __dealloc__(self):
        if self.p.edge_u:
            free(self.p.edge_u)
        if self.p.edge_v:
            free(self.p.edge_v)
        if self.p.pair_inner:
            free(self.p.pair_inner)
        if self.p.cards:
            free(self.p.cards)


cdef inline int _popcount(long long x):
    cdef int c = 0
    while x:
        x &= x - 1
        c += 1
    return c


cdef inline int _lowbit_index(long long x):
    cdef int i = 0
    while not (x & 1):
        x >>= 1
        i += 1
    return i


cdef inline double _merge_c(ProblemC* p, long long l_mask, long long r_mask,
                            int* op_out, int* side_out, double* out_card) nogil:
    cdef double out = p.cards[l_mask | r_mask]
    cdef double lc = p.cards[l_mask]
    cdef double rc = p.cards[r_mask]
    cdef bint l_single = (l_mask & (l_mask - 1)) == 0
    cdef bint r_single = (r_mask & (r_mask - 1)) == 0
    cdef double build_card, cost, inl, outer_card
    cdef int side, op, inner
    cdef long long inner_mask, outer_mask

    if lc < rc or (lc == rc and l_mask < r_mask):
        build_card = lc
        side = 0
    else:
        build_card = rc
        side = 1
    cost = out + build_card
    if l_single:
        cost = cost + p.scan[_lowbit_index_nogil(l_mask)]
    if r_single:
        cost = cost + p.scan[_lowbit_index_nogil(r_mask)]
    op = 0

    inner = -1
    if l_single and r_single:
        inner = p.pair_inner[l_mask | r_mask]
    elif r_single:
        inner = _lowbit_index_nogil(r_mask)
    elif l_single:
        inner = _lowbit_index_nogil(l_mask)
    if inner >= 0 and p.indexed[inner]:
        inner_mask = (<long long>1) << inner
        outer_mask = r_mask if inner_mask == l_mask else l_mask
        outer_card = p.cards[outer_mask]
        if outer_card > 0.0:
            inl = p.lam * (out if out >= outer_card else outer_card)
        else:
            inl = 0.0
        if (outer_mask & (outer_mask - 1)) == 0:
            inl = inl + p.scan[_lowbit_index_nogil(outer_mask)]
        if inl < cost:
            cost = inl
            op = 1
            side = 0 if inner_mask == l_mask else 1
    op_out[0] = op
    side_out[0] = side
    out_card[0] = out
    return cost


cdef inline int _lowbit_index_nogil(long long x) nogil:
    cdef int i = 0
    while not (x & 1):
        x >>= 1
        i += 1
    return i


def merge(inst, long long l_mask, long long r_mask):
    """Python-visible merge, matching pure.merge exactly."""
    cdef _Problem prob = _Problem(inst)
    cdef int op = 0
    cdef int side = 0
    cdef double out = 0.0
    cdef double cost = _merge_c(&prob.p, l_mask, r_mask, &op, &side, &out)
    return cost, op, side, out


def dp_search(inst, double prune_bound=INF, double deadline=0.0):
    cdef _Problem prob = _Problem(inst)
    cdef ProblemC* p = &prob.p
    cdef int n = p.n
    cdef long long full = ((<long long>1) << n) - 1
    cdef long long size = full + 1
    cdef long long mask, s1, s2, low, grow, frontier, reach
    cdef int v, op, side
    cdef double c1, c2, inc, total, best_cost, out

    cdef long long* adj = <long long*>calloc(n, sizeof(long long))
    cdef char* conn = <char*>calloc(size, sizeof(char))
    cdef long long* nbr = <long long*>calloc(size, sizeof(long long))
    cdef double* best = <double*>malloc(size * sizeof(double))
    cdef long long* ch_s1 = <long long*>calloc(size, sizeof(long long))
    cdef char* ch_op = <char*>calloc(size, sizeof(char))
    cdef char* ch_side = <char*>calloc(size, sizeof(char))
    cdef char* have = <char*>calloc(size, sizeof(char))
    if not adj or not conn or not nbr or not best or not ch_s1 or not ch_op or not ch_side or not have:
        raise MemoryError()

    cdef long long subplans = 0
    cdef long long splits = 0
    cdef long long checked = 0
    cdef bint touched, found
    cdef long long best_s1 = 0
    cdef int best_op = 0, best_side = 0

    try:
        for v in range(p.n_edges):
            adj[p.edge_u[v]] |= (<long long>1) << p.edge_v[v]
            adj[p.edge_v[v]] |= (<long long>1) << p.edge_u[v]
        for mask in range(1, size):
            low = mask & (-mask)
            reach = low
            frontier = low
            while frontier:
                v = _lowbit_index(frontier)
                frontier &= frontier - 1
                grow = adj[v] & mask & ~reach
                reach |= grow
                frontier |= grow
            conn[mask] = 1 if reach == mask else 0
            nbr[mask] = nbr[mask ^ low] | adj[_lowbit_index(low)]

        for mask in range(size):
            best[mask] = INF
        for v in range(n):
            best[(<long long>1) << v] = 0.0
            have[(<long long>1) << v] = 1

        for mask in range(1, size):
            if not conn[mask] or (mask & (mask - 1)) == 0:
                continue
            checked += 1
            if deadline != 0.0 and checked % 1024 == 0:
                if time.perf_counter() > deadline:
                    raise OptimizeTimeout("exhaustive enumeration ran past its deadline")
            low = mask & (-mask)
            best_cost = INF
            found = False
            touched = False
            s1 = (mask - 1) & mask
            while s1:
                if s1 & low:
                    s2 = mask ^ s1
                    if have[s1] and have[s2]:
                        c1 = best[s1]
                        c2 = best[s2]
                        if c1 <= prune_bound and c2 <= prune_bound and (nbr[s1] & s2):
                            splits += 1
                            touched = True
                            inc = _merge_c(p, s1, s2, &op, &side, &out)
                            total = inc + c1 + c2
                            if total < best_cost:
                                best_cost = total
                                best_s1 = s1
                                best_op = op
                                best_side = side
                                found = True
                s1 = (s1 - 1) & mask
            if touched:
                subplans += 1
            if found:
                best[mask] = best_cost
                have[mask] = 1
                ch_s1[mask] = best_s1
                ch_op[mask] = <char>best_op
                ch_side[mask] = <char>best_side

        choices = {}
        for mask in range(1, size):
            if have[mask] and (mask & (mask - 1)) != 0:
                choices[mask] = (ch_s1[mask], ch_op[mask], ch_side[mask])
        if n > 1 and not have[full]:
            return INF, choices, subplans, splits, splits
        root = best[full] if n > 1 else 0.0
        return root, choices, subplans, splits, splits
    finally:
        free(adj)
        free(conn)
        free(nbr)
        free(best)
        free(ch_s1)
        free(ch_op)
        free(ch_side)
        free(have)


cdef struct TreeState:
    int n
    int n_edges
    int slots
    int* edge_u
    int* edge_v
    int* parent
    char* used
    long long* ff            # ff[u * (slots+1) + s]
    long long counts[4]      # valid, invalid, linear, bushy
    long long nodes
    double deadline


cdef int _find(int* parent, int x) nogil:
    while parent[x] != x:
        x = parent[x]
    return x


cdef int _count_rec(TreeState* st, int depth, long long touched, int touched_cnt, bint linear) except -1:
    st.nodes += 1
    if st.deadline != 0.0 and st.nodes % 4096 == 0:
        if time.perf_counter() > st.deadline:
            raise OptimizeTimeout("tree enumeration ran past its deadline")
    cdef int remaining = st.slots - depth
    cdef int unused = st.n_edges - depth
    cdef int e, u, v, ru, rv, new_cnt
    cdef long long new_touched
    cdef bint new_linear
    for e in range(st.n_edges):
        if st.used[e]:
            continue
        u = st.edge_u[e]
        v = st.edge_v[e]
        ru = _find(st.parent, u)
        rv = _find(st.parent, v)
        if ru == rv:
            st.counts[1] += st.ff[(unused - 1) * (st.slots + 1) + (remaining - 1)]
            continue
        st.parent[ru] = rv
        st.used[e] = 1
        new_touched = touched | ((<long long>1) << u) | ((<long long>1) << v)
        new_cnt = touched_cnt
        if not (touched >> u) & 1:
            new_cnt += 1
        if not (touched >> v) & 1:
            new_cnt += 1
        new_linear = linear and (new_cnt - (depth + 1) == 1)
        if depth + 1 == st.slots:
            st.counts[0] += 1
            if new_linear:
                st.counts[2] += 1
            else:
                st.counts[3] += 1
        else:
            _count_rec(st, depth + 1, new_touched, new_cnt, new_linear)
        st.used[e] = 0
        st.parent[ru] = ru
    return 0


cdef long long* _ff_table(int n_edges, int slots):
    cdef long long* ff = <long long*>malloc((n_edges + 1) * (slots + 1) * sizeof(long long))
    if not ff:
        raise MemoryError()
    cdef int u, s
    for u in range(n_edges + 1):
        ff[u * (slots + 1)] = 1
        for s in range(1, slots + 1):
            if u < s:
                ff[u * (slots + 1) + s] = 0
            else:
                ff[u * (slots + 1) + s] = ff[(u - 1) * (slots + 1) + (s - 1)] * u
    return ff


def count_trees(int n, edge_u, edge_v, double deadline=0.0):
    cdef int n_edges = len(edge_u)
    cdef int slots = n - 1
    if slots == 0:
        return 1, 0, 1, 0
    cdef TreeState st
    st.n = n
    st.n_edges = n_edges
    st.slots = slots
    st.nodes = 0
    st.deadline = deadline
    st.edge_u = <int*>malloc(n_edges * sizeof(int))
    st.edge_v = <int*>malloc(n_edges * sizeof(int))
    st.parent = <int*>malloc(n * sizeof(int))
    st.used = <char*>calloc(n_edges, sizeof(char))
    st.ff = _ff_table(n_edges, slots)
    if not st.edge_u or not st.edge_v or not st.parent or not st.used:
        raise MemoryError()
    cdef int i
    for i in range(n_edges):
        st.edge_u[i] = edge_u[i]
        st.edge_v[i] = edge_v[i]
    for i in range(n):
        st.parent[i] = i
    for i in range(4):
        st.counts[i] = 0
    try:
        _count_rec(&st, 0, 0, 0, True)
        return st.counts[0], st.counts[1], st.counts[2], st.counts[3]
    finally:
        free(st.edge_u)
        free(st.edge_v)
        free(st.parent)
        free(st.used)
        free(st.ff)


cdef struct BruteState:
    TreeState t
    ProblemC* p
    long long* comp_mask
    double* comp_cost
    int* seq
    int* best_seq
    double best
    bint have_best
    long long evals


cdef int _brute_rec(BruteState* bs, dict memo, int depth, long long touched,
                    int touched_cnt, bint linear) except -1:
    cdef TreeState* st = &bs.t
    st.nodes += 1
    if st.deadline != 0.0 and st.nodes % 4096 == 0:
        if time.perf_counter() > st.deadline:
            raise OptimizeTimeout("oracle enumeration ran past its deadline")
    cdef int remaining = st.slots - depth
    cdef int unused = st.n_edges - depth
    cdef int e, u, v, ru, rv, new_cnt, op, side, i
    cdef long long new_touched, lm, rm, a, b, saved_mask
    cdef double inc, new_cost, saved_cost, out
    cdef bint new_linear
    cdef object key, hit
    for e in range(st.n_edges):
        if st.used[e]:
            continue
        u = st.edge_u[e]
        v = st.edge_v[e]
        ru = _find(st.parent, u)
        rv = _find(st.parent, v)
        if ru == rv:
            st.counts[1] += st.ff[(unused - 1) * (st.slots + 1) + (remaining - 1)]
            continue
        lm = bs.comp_mask[ru]
        rm = bs.comp_mask[rv]
        if lm < rm:
            a = lm
            b = rm
        else:
            a = rm
            b = lm
        key = (a << 25) | b
        bs.evals += 1
        hit = memo.get(key)
        if hit is None:
            inc = _merge_c(bs.p, a, b, &op, &side, &out)
            memo[key] = inc
        else:
            inc = <double>hit
        new_cost = inc + bs.comp_cost[ru] + bs.comp_cost[rv]

        st.parent[ru] = rv
        saved_mask = bs.comp_mask[rv]
        saved_cost = bs.comp_cost[rv]
        bs.comp_mask[rv] = lm | rm
        bs.comp_cost[rv] = new_cost
        st.used[e] = 1
        bs.seq[depth] = e
        new_touched = touched | ((<long long>1) << u) | ((<long long>1) << v)
        new_cnt = touched_cnt
        if not (touched >> u) & 1:
            new_cnt += 1
        if not (touched >> v) & 1:
            new_cnt += 1
        new_linear = linear and (new_cnt - (depth + 1) == 1)
        if depth + 1 == st.slots:
            st.counts[0] += 1
            if new_linear:
                st.counts[2] += 1
            else:
                st.counts[3] += 1
            if new_cost < bs.best:
                bs.best = new_cost
                bs.have_best = True
                for i in range(st.slots):
                    bs.best_seq[i] = bs.seq[i]
        else:
            _brute_rec(bs, memo, depth + 1, new_touched, new_cnt, new_linear)
        st.used[e] = 0
        bs.comp_mask[rv] = saved_mask
        bs.comp_cost[rv] = saved_cost
        st.parent[ru] = ru
    return 0


def brute_search(inst, double deadline=0.0):
    cdef _Problem prob = _Problem(inst)
    cdef int n = prob.p.n
    cdef int n_edges = prob.p.n_edges
    cdef int slots = n - 1
    if slots == 0:
        return 0.0, [], 1, 0, 1, 0, 0, 0, 0
    cdef BruteState bs
    cdef TreeState* st = &bs.t
    st.n = n
    st.n_edges = n_edges
    st.slots = slots
    st.nodes = 0
    st.deadline = deadline
    st.edge_u = prob.p.edge_u
    st.edge_v = prob.p.edge_v
    st.parent = <int*>malloc(n * sizeof(int))
    st.used = <char*>calloc(n_edges, sizeof(char))
    st.ff = _ff_table(n_edges, slots)
    bs.p = &prob.p
    bs.comp_mask = <long long*>malloc(n * sizeof(long long))
    bs.comp_cost = <double*>malloc(n * sizeof(double))
    bs.seq = <int*>malloc(slots * sizeof(int))
    bs.best_seq = <int*>malloc(slots * sizeof(int))
    bs.best = INF
    bs.have_best = False
    bs.evals = 0
    if not st.parent or not st.used or not bs.comp_mask or not bs.comp_cost or not bs.seq or not bs.best_seq:
        raise MemoryError()
    cdef int i
    for i in range(n):
        st.parent[i] = i
        bs.comp_mask[i] = (<long long>1) << i
        bs.comp_cost[i] = 0.0
    for i in range(4):
        st.counts[i] = 0
    memo = {}
    try:
        _brute_rec(&bs, memo, 0, 0, 0, True)
        best_seq = [bs.best_seq[i] for i in range(slots)] if bs.have_best else []
        mask_mod = (<long long>1) << 25
        subplans = len({(k >> 25) | (k % mask_mod) for k in memo})
        return (
            bs.best,
            best_seq,
            st.counts[0],
            st.counts[1],
            st.counts[2],
            st.counts[3],
            subplans,
            len(memo),
            bs.evals,
        )
    finally:
        free(st.parent)
        free(st.used)
        free(st.ff)
        free(bs.comp_mask)
        free(bs.comp_cost)
        free(bs.seq)
        free(bs.best_seq)
