"""Brute-force grid minimisers used as independent checks."""
import numpy as np

GRID = np.round(np.linspace(-5.0, 5.0, 10001), 12)  # spacing 1e-3


def mcp_grid(t, lam, a):
    at = np.abs(t)
    return np.where(at <= a * lam, lam * at - at ** 2 / (2 * a), 0.5 * a * lam ** 2)


def penalty_fn(kind, lam, a=None):
    if kind == "l1":
        return lambda t: lam * np.abs(t)
    return lambda t: mcp_grid(t, lam, a)


def grid_min_quadratic(H, c, *pens, grid=GRID, chunk=500):
    """Global grid minimiser of ``0.5 (b-c)'H(b-c) + sum_j pen(b_j)`` for p in {1, 2}.

    One ``(argmin, value)`` pair is returned per penalty; with a single
    penalty the pair itself is returned.
    """
    H = np.atleast_2d(np.asarray(H, dtype=float))
    c = np.asarray(c, dtype=float).ravel()
    if c.size == 1:
        q = 0.5 * H[0, 0] * (grid - c[0]) ** 2
        out = []
        for pen in pens:
            obj = q + pen(grid)
            i = int(np.argmin(obj))
            out.append((np.array([grid[i]]), float(obj[i])))
        return out[0] if len(out) == 1 else out
    if c.size != 2:
        raise ValueError("grid oracle supports p <= 2")
    d2 = grid - c[1]
    q2 = 0.5 * H[1, 1] * d2 ** 2
    pen2 = [pen(grid) for pen in pens]
    best = [(None, np.inf) for _ in pens]
    for s in range(0, grid.size, chunk):
        g1 = grid[s:s + chunk]
        d1 = g1 - c[0]
        base = np.multiply.outer(H[0, 1] * d1, d2)
        base += q2
        base += (0.5 * H[0, 0] * d1 ** 2)[:, None]
        for m, pen in enumerate(pens):
            obj = base + pen(g1)[:, None] + pen2[m][None, :]
            k = int(np.argmin(obj))
            v = obj.flat[k]
            if v < best[m][1]:
                i, j = divmod(k, grid.size)
                best[m] = (np.array([g1[i], grid[j]]), float(v))
    return best[0] if len(best) == 1 else best
