"""Pure-Python versions of the hot loops (see ``kernels``)."""

UNBOUNDED = 1 << 62


def concrete_successors(state, table, n_loc):
    """Fire every enabled rule once.

    ``state`` is counters followed by shared values.  ``table`` rows are
    ``(source, target, low, high, update, reset)`` with per-variable integer
    guard bounds ``low <= x <= high`` and a 0/1 reset mask.
    Returns ``(rule index, successor)`` pairs in table order.
    """
    out = []
    n = len(state)
    for idx, (src, dst, low, high, upd, rst) in enumerate(table):
        if state[src] < 1:
            continue
        new = list(state)
        ok = True
        for j in range(n - n_loc):
            x = state[n_loc + j]
            if x < low[j] or x > high[j]:
                ok = False
                break
            if rst[j]:
                new[n_loc + j] = 0
            else:
                y = x + upd[j]
                if y < 0:
                    ok = False
                    break
                new[n_loc + j] = y
        if not ok:
            continue
        new[src] -= 1
        new[dst] += 1
        out.append((idx, tuple(new)))
    return out


def find_leq(vec, candidates):
    """Index of the first candidate pointwise <= ``vec``, or -1."""
    n = len(vec)
    for i, c in enumerate(candidates):
        for j in range(n):
            if c[j] > vec[j]:
                break
        else:
            return i
    return -1


def find_geq_all(vec, candidates):
    """Indices of candidates pointwise >= ``vec`` and different from it."""
    out = []
    n = len(vec)
    for i, c in enumerate(candidates):
        strict = False
        for j in range(n):
            if c[j] < vec[j]:
                break
            if c[j] > vec[j]:
                strict = True
        else:
            if strict:
                out.append(i)
    return out
