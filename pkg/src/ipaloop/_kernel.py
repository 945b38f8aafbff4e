"""Compiled timing recursion; mirrors ``des._timing_python`` line for line."""

import numpy as np
from numba import njit


@njit(cache=True, inline="always")
def _less(k1, i1, k2, i2):
    return k1 < k2 or (k1 == k2 and i1 < i2)


@njit(cache=True)
def _push(keys, ids, size, k, i):
    pos = size
    keys[pos] = k
    ids[pos] = i
    while pos > 0:
        parent = (pos - 1) >> 1
        if _less(keys[pos], ids[pos], keys[parent], ids[parent]):
            keys[pos], keys[parent] = keys[parent], keys[pos]
            ids[pos], ids[parent] = ids[parent], ids[pos]
            pos = parent
        else:
            break
    return size + 1


@njit(cache=True)
def _pop(keys, ids, size):
    size -= 1
    keys[0] = keys[size]
    ids[0] = ids[size]
    pos = 0
    while True:
        left = 2 * pos + 1
        if left >= size:
            break
        child = left
        right = left + 1
        if right < size and _less(keys[right], ids[right], keys[left], ids[left]):
            child = right
        if _less(keys[child], ids[child], keys[pos], ids[pos]):
            keys[pos], keys[child] = keys[child], keys[pos]
            ids[pos], ids[child] = ids[child], ids[pos]
            pos = child
        else:
            break
    return size


@njit(cache=True)
def timing_kernel(is_memory, xi, cycles, transfer, hit, service, dep, capacity, tau):
    n = xi.shape[0]
    a_v = np.empty(n)
    al_v = np.empty(n)
    b_v = np.empty(n)
    d_v = np.empty(n)
    al_c = np.empty(n, np.int64)
    b_c = np.empty(n, np.int64)
    d_c = np.empty(n, np.int64)
    b_s = np.empty(n)
    q_v = np.full(n, np.nan)
    start_br = np.zeros(n, np.uint8)
    commit_br = np.zeros(n, np.uint8)
    heads = np.full(n, -1, np.int64)

    # pending: keyed by queue entry; resident: by entry; expiry: by beta.
    pk = np.empty(n)
    pi = np.empty(n, np.int64)
    rk = np.empty(n)
    ri = np.empty(n, np.int64)
    ek = np.empty(n)
    ei = np.empty(n, np.int64)
    left = np.zeros(n, np.bool_)
    np_, nr, ne = 0, 0, 0
    count = 0

    dc = 0
    ds = 0.0
    dv = 0.0
    for i in range(n):
        x = xi[i]
        a = x * tau
        a_v[i] = a
        sc = x
        ss = 0.0
        sv = a
        branch = 0
        k = dep[i]
        if k > 0:
            j = k - 1
            if b_v[j] > sv:
                sc = b_c[j]
                ss = b_s[j]
                sv = b_v[j]
                branch = 1
        if is_memory[i]:
            while np_ > 0 and pk[0] <= a:
                idx = pi[0]
                ent = pk[0]
                np_ = _pop(pk, pi, np_)
                nr = _push(rk, ri, nr, ent, idx)
                ne = _push(ek, ei, ne, b_v[idx], idx)
                count += 1
            while ne > 0 and ek[0] <= a:
                left[ei[0]] = True
                ne = _pop(ek, ei, ne)
                count -= 1
            if count >= capacity:
                while nr > 0 and left[ri[0]]:
                    nr = _pop(rk, ri, nr)
                h = ri[0]
                heads[i] = h
                if b_v[h] > sv:
                    sc = b_c[h]
                    ss = b_s[h]
                    sv = b_v[h]
                    branch = 2
        start_br[i] = branch

        ac = sc + 1
        al_c[i] = ac
        al_v[i] = ac * tau + ss
        if is_memory[i] and not hit[i]:
            qc = ac + cycles[i] + transfer[i]
            q_v[i] = qc * tau + ss
            bc = qc + 1
            bs = ss + service[i]
            bv = bc * tau + bs
            np_ = _push(pk, pi, np_, q_v[i], i)
        else:
            bc = ac + cycles[i]
            bs = ss
            bv = bc * tau + bs
        b_c[i] = bc
        b_s[i] = bs
        b_v[i] = bv

        if bv >= dv:
            dc = bc + 1
            ds = bs
        else:
            dc = dc + 1
            commit_br[i] = 1
        dv = dc * tau + ds
        d_c[i] = dc
        d_v[i] = dv

    return (a_v, al_v, b_v, d_v, al_c, b_c, d_c, q_v, start_br, commit_br, heads)
