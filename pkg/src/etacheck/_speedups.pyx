# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled versions of the hot loops; same contracts as ``_fallback``."""

UNBOUNDED = 1 << 62


def concrete_successors(tuple state, list table, Py_ssize_t n_loc):
    cdef list out = []
    cdef Py_ssize_t n = len(state), j, idx = 0, src, dst
    cdef long long x, y
    cdef bint ok
    cdef list new
    cdef tuple low, high, upd, rst
    for row in table:
        src = row[0]
        dst = row[1]
        if <long long>state[src] < 1:
            idx += 1
            continue
        low = row[2]
        high = row[3]
        upd = row[4]
        rst = row[5]
        new = list(state)
        ok = True
        for j in range(n - n_loc):
            x = state[n_loc + j]
            if x < <long long>low[j] or x > <long long>high[j]:
                ok = False
                break
            if rst[j]:
                new[n_loc + j] = 0
            else:
                y = x + <long long>upd[j]
                if y < 0:
                    ok = False
                    break
                new[n_loc + j] = y
        if ok:
            new[src] = new[src] - 1
            new[dst] = new[dst] + 1
            out.append((idx, tuple(new)))
        idx += 1
    return out


def find_leq(tuple vec, list candidates):
    cdef Py_ssize_t n = len(vec), i = 0, j
    cdef tuple c
    cdef bint ok
    for c in candidates:
        ok = True
        for j in range(n):
            if <long long>c[j] > <long long>vec[j]:
                ok = False
                break
        if ok:
            return i
        i += 1
    return -1


def find_geq_all(tuple vec, list candidates):
    cdef list out = []
    cdef Py_ssize_t n = len(vec), i = 0, j
    cdef tuple c
    cdef bint ok, strict
    cdef long long a, b
    for c in candidates:
        ok = True
        strict = False
        for j in range(n):
            a = c[j]
            b = vec[j]
            if a < b:
                ok = False
                break
            if a > b:
                strict = True
        if ok and strict:
            out.append(i)
        i += 1
    return out
