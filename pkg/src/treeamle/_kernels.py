"""Compiled Gauss-Seidel sweeps for infinity-harmonic relaxation on large nets.

A vertex value is replaced by the centre of the smallest ball containing its
neighbours' values: the midrange for real data, the midpoint of a diametral
pair for tree data.  Tree points are (edge id, offset from the edge's first
endpoint); vertex points may use any incident edge.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def relax_midrange(indptr, indices, fixed, vals, tol, max_sweeps):
    n = vals.shape[0]
    change = np.inf
    for sweep in range(max_sweeps):
        change = 0.0
        for i in range(n):
            if fixed[i]:
                continue
            lo = np.inf
            hi = -np.inf
            for p in range(indptr[i], indptr[i + 1]):
                v = vals[indices[p]]
                if v < lo:
                    lo = v
                if v > hi:
                    hi = v
            new = 0.5 * (lo + hi)
            d = abs(new - vals[i])
            if d > change:
                change = d
            vals[i] = new
        if change < tol:
            return sweep + 1, change
    return max_sweeps, change


@njit(cache=True)
def _tdist(e1, s1, e2, s2, eu, ev, el, vd):
    if e1 == e2:
        return abs(s1 - s2)
    a1 = s1
    b1 = el[e1] - s1
    a2 = s2
    b2 = el[e2] - s2
    best = a1 + vd[eu[e1], eu[e2]] + a2
    d = a1 + vd[eu[e1], ev[e2]] + b2
    if d < best:
        best = d
    d = b1 + vd[ev[e1], eu[e2]] + a2
    if d < best:
        best = d
    d = b1 + vd[ev[e1], ev[e2]] + b2
    if d < best:
        best = d
    return best


@njit(cache=True)
def _along(e1, s1, e2, s2, tau, eu, ev, el, vd, nxt, eid):
    """Point at distance tau from (e1, s1) on the arc towards (e2, s2)."""
    if e1 == e2:
        if s2 >= s1:
            return e1, s1 + tau
        return e1, s1 - tau
    best = np.inf
    x1 = 0
    d1 = 0.0
    x2 = 0
    d2 = 0.0
    for k1 in range(2):
        xa = eu[e1] if k1 == 0 else ev[e1]
        da = s1 if k1 == 0 else el[e1] - s1
        for k2 in range(2):
            xb = eu[e2] if k2 == 0 else ev[e2]
            db = s2 if k2 == 0 else el[e2] - s2
            d = da + vd[xa, xb] + db
            if d < best:
                best = d
                x1, d1, x2, d2 = xa, da, xb, db
    if tau <= d1:
        if x1 == eu[e1]:
            return e1, s1 - tau
        return e1, s1 + tau
    walked = d1
    cur = x1
    while cur != x2:
        nx = nxt[cur, x2]
        e = eid[cur, nx]
        length = el[e]
        if tau <= walked + length:
            off = tau - walked
            if eu[e] == cur:
                return e, off
            return e, length - off
        walked += length
        cur = nx
    off = tau - walked
    if off > d2:
        off = d2
    if x2 == eu[e2]:
        return e2, off
    return e2, el[e2] - off


@njit(cache=True)
def relax_tree(indptr, indices, fixed, ve, vs, eu, ev, el, vd, nxt, eid, tol, max_sweeps):
    n = ve.shape[0]
    change = np.inf
    for sweep in range(max_sweeps):
        change = 0.0
        for i in range(n):
            if fixed[i]:
                continue
            p0 = indices[indptr[i]]
            # farthest neighbour value from an arbitrary one, then farthest from that
            a = p0
            da = -1.0
            for p in range(indptr[i], indptr[i + 1]):
                j = indices[p]
                d = _tdist(ve[p0], vs[p0], ve[j], vs[j], eu, ev, el, vd)
                if d > da:
                    da = d
                    a = j
            b = a
            db = -1.0
            for p in range(indptr[i], indptr[i + 1]):
                j = indices[p]
                d = _tdist(ve[a], vs[a], ve[j], vs[j], eu, ev, el, vd)
                if d > db:
                    db = d
                    b = j
            e, s = _along(ve[a], vs[a], ve[b], vs[b], 0.5 * db, eu, ev, el, vd, nxt, eid)
            d = _tdist(e, s, ve[i], vs[i], eu, ev, el, vd)
            if d > change:
                change = d
            ve[i] = e
            vs[i] = s
        if change < tol:
            return sweep + 1, change
    return max_sweeps, change
