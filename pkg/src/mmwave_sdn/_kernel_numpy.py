"""Pure-numpy slot kernel: loops over slots, vectorised over runs.

Arithmetic is ordered exactly like the compiled kernel so both backends
produce identical outcome sequences.
"""

import numpy as np

from ._layout import (ANCHOR_CHANGES, CLUSTER_SUM, ENTER, EXIT, GMIN, HO_SINGLE, HYST, INTERRUPT,
                      INTERRUPTED, INV_L, INV_PEN, MIN_CLUSTER, NOISE, P_ACTIVE, PERIOD, RHO, SQ,
                      SUCC_MULTI, SUCC_SINGLE, TTT, VIOLATION)


def _first_argmax(values, mask):
    """Index of the largest masked value (lowest index on ties); -1 if mask is empty."""
    v = np.where(mask, values, -np.inf)
    idx = np.argmax(v, axis=1)
    return np.where(mask.any(axis=1), idx, -1)


def beam_power(g, diag, xre, xim):
    """Best beam-pair power |sum_l g_l a_l|^2 for every (run, gNB), before the 1/L factor.

    ``diag`` (R,B,L,P) holds |a_l|^2 per beam pair, ``xre``/``xim`` (R,B,M,P)
    twice the cross products a_l conj(a_m) for l < m.
    """
    L = g.shape[2]
    s = (g[:, :, 0].real * g[:, :, 0].real + g[:, :, 0].imag * g[:, :, 0].imag)[..., None] * diag[:, :, 0]
    for l in range(1, L):
        s = s + (g[:, :, l].real * g[:, :, l].real + g[:, :, l].imag * g[:, :, l].imag)[..., None] * diag[:, :, l]
    m = 0
    for l in range(L):
        for j in range(l + 1, L):
            z = g[:, :, l] * g[:, :, j].conj()
            s = s + z.real[..., None] * xre[:, :, m]
            s = s - z.imag[..., None] * xim[:, :, m]
            m += 1
    return np.maximum(s.max(axis=2), 0.0)


def _interference(P, active, exclude, inv_pen):
    out = np.zeros(P.shape[0])
    for c in range(P.shape[1]):
        out = out + np.where(active[:, c] & ~exclude[:, c], P[:, c] * inv_pen, 0.0)
    return out


def advance_block(t0, n, fp, ip, diag, xre, xim, w, u, pathgain, est_in, feasible, bg,
                  g, est, member, prepared, anchor, serving, last_ho, int_until,
                  acc, out_single, out_multi, out_state):
    R, B, L = g.shape
    rows = np.arange(R)
    bits = np.left_shift(1, np.arange(B, dtype=np.int64))
    for k in range(n):
        t = t0 + k
        g[...] = fp[RHO] * g + fp[SQ] * w[:, k]
        P = pathgain[:, k] * (beam_power(g, diag, xre, xim) * fp[INV_L])
        active = bg[None, :] & (u[:, k] < fp[P_ACTIVE])
        feas = feasible[:, k]

        if t % ip[PERIOD] == 0:
            est[...] = est_in[:, k]

        fresh = anchor < 0
        if fresh.any():
            first = _first_argmax(est, feas)
            first = np.where(first < 0, 0, first)
            member[rows[fresh], first[fresh]] = True
            anchor[fresh] = first[fresh]
            serving[fresh] = first[fresh]

        add = (~member & feas & (est >= fp[ENTER]) & (prepared >= 0) & (prepared <= t - 1))
        rem = member & ((est < fp[EXIT]) | ~feas)
        remaining = ((member & ~rem) | add).sum(axis=1)
        keep = _first_argmax(est, rem)
        fix = (remaining == 0) & (keep >= 0)
        rem[rows[fix], keep[fix]] = False
        member &= ~rem
        member |= add
        prepared[add] = -1
        prep = ~member & feas & (est >= fp[ENTER]) & (prepared < 0)
        prepared[prep] = t
        size = member.sum(axis=1)
        best = _first_argmax(est, member)
        acc[:, ANCHOR_CHANGES] += best != anchor
        anchor[...] = best
        acc[:, CLUSTER_SUM] += size
        acc[:, MIN_CLUSTER] = np.minimum(acc[:, MIN_CLUSTER], size)
        bad = (size == 0) & (acc[:, VIOLATION] < 0)
        acc[bad, VIOLATION] = t

        # single-link baseline handover
        due = (t - last_ho) >= ip[TTT]
        others = feas.copy()
        others[rows, serving] = False
        alt = _first_argmax(est, others)
        cur = est[rows, serving]
        go = due & (alt >= 0) & (est[rows, np.maximum(alt, 0)] > cur * fp[HYST])
        serving[go] = alt[go]
        last_ho[go] = t
        int_until[go] = t + ip[INTERRUPT]
        acc[:, HO_SINGLE] += go
        out_state[:, k, 0] = (member * bits).sum(axis=1)
        out_state[:, k, 1] = anchor
        out_state[:, k, 2] = serving

        s_mask = np.zeros((R, B), dtype=bool)
        s_mask[rows, serving] = True
        interrupted = t < int_until
        ok_single = P[rows, serving] / (fp[NOISE] + _interference(P, active, s_mask, fp[INV_PEN])) >= fp[GMIN]
        out_single[:, k] = np.where(interrupted, 2, np.where(ok_single, 0, 1))
        acc[:, INTERRUPTED] += interrupted
        acc[:, SUCC_SINGLE] += ~interrupted & ok_single

        pmax = np.where(member, P, 0.0).max(axis=1)
        ok_multi = (size > 0) & (pmax / (fp[NOISE] + _interference(P, active, member, fp[INV_PEN])) >= fp[GMIN])
        out_multi[:, k] = np.where(ok_multi, 0, 1)
        acc[:, SUCC_MULTI] += ok_multi
