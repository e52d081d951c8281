"""Compiled slot kernel: one scalar loop per run, runs spread over threads."""

import numpy as np
from numba import njit, prange

from ._layout import (ANCHOR_CHANGES, CLUSTER_SUM, ENTER, EXIT, GMIN, HO_SINGLE, HYST, INTERRUPT,
                      INTERRUPTED, INV_L, INV_PEN, MIN_CLUSTER, NOISE, P_ACTIVE, PERIOD, RHO, SQ,
                      SUCC_MULTI, SUCC_SINGLE, TTT, VIOLATION)


@njit(cache=True)
def _beam_power(g, diag, xre, xim, buf):
    # |sum_l g_l a_l|^2 for all beam pairs at once, expanded into |g_l|^2
    # terms and pairwise cross terms so the inner loops run over pairs
    L = g.shape[0]
    P = diag.shape[1]
    q = g[0].real * g[0].real + g[0].imag * g[0].imag
    for p in range(P):
        buf[p] = q * diag[0, p]
    for l in range(1, L):
        q = g[l].real * g[l].real + g[l].imag * g[l].imag
        for p in range(P):
            buf[p] += q * diag[l, p]
    m = 0
    for l in range(L):
        for j in range(l + 1, L):
            z = g[l] * g[j].conjugate()
            cr = z.real
            ci = z.imag
            for p in range(P):
                buf[p] += cr * xre[m, p]
            for p in range(P):
                buf[p] -= ci * xim[m, p]
            m += 1
    best = 0.0
    for p in range(P):
        best = max(best, buf[p])
    return best


@njit(parallel=True, cache=True)
def advance_block(t0, n, fp, ip, diag, xre, xim, w, u, pathgain, est_in, feasible, bg,
                  g, est, member, prepared, anchor, serving, last_ho, int_until,
                  acc, out_single, out_multi, out_state):
    R, B, L = g.shape
    for r in prange(R):
        P = np.empty(B)
        active = np.empty(B, dtype=np.bool_)
        add = np.empty(B, dtype=np.bool_)
        rem = np.empty(B, dtype=np.bool_)
        buf = np.empty(diag.shape[3])
        for k in range(n):
            t = t0 + k
            # fading, per-link received power, background activity
            for b in range(B):
                for l in range(L):
                    g[r, b, l] = fp[RHO] * g[r, b, l] + fp[SQ] * w[r, k, b, l]
                P[b] = pathgain[r, k, b] * (_beam_power(g[r, b], diag[r, b], xre[r, b], xim[r, b], buf)
                                            * fp[INV_L])
                active[b] = bg[b] and u[r, k, b] < fp[P_ACTIVE]

            # vMM refresh
            if t % ip[PERIOD] == 0:
                for b in range(B):
                    est[r, b] = est_in[r, k, b]

            if anchor[r] < 0:
                first = -1
                for b in range(B):
                    if feasible[r, k, b] and (first < 0 or est[r, b] > est[r, first]):
                        first = b
                if first < 0:
                    first = 0
                member[r, first] = True
                anchor[r] = first
                serving[r] = first

            # serving-cluster update
            remaining = 0
            for b in range(B):
                add[b] = False
                rem[b] = False
                if not member[r, b]:
                    if (feasible[r, k, b] and est[r, b] >= fp[ENTER]
                            and prepared[r, b] >= 0 and prepared[r, b] <= t - 1):
                        add[b] = True
                        remaining += 1
                else:
                    if est[r, b] < fp[EXIT] or not feasible[r, k, b]:
                        rem[b] = True
                    else:
                        remaining += 1
            if remaining == 0:
                keep = -1
                for b in range(B):
                    if rem[b] and (keep < 0 or est[r, b] > est[r, keep]):
                        keep = b
                if keep >= 0:
                    rem[keep] = False
            size = 0
            mask = 0
            for b in range(B):
                if rem[b]:
                    member[r, b] = False
                if add[b]:
                    member[r, b] = True
                    prepared[r, b] = -1
                if member[r, b]:
                    size += 1
                    mask |= 1 << b
                elif feasible[r, k, b] and est[r, b] >= fp[ENTER] and prepared[r, b] < 0:
                    prepared[r, b] = t
            best = -1
            for b in range(B):
                if member[r, b] and (best < 0 or est[r, b] > est[r, best]):
                    best = b
            if best != anchor[r]:
                acc[r, ANCHOR_CHANGES] += 1
                anchor[r] = best
            acc[r, CLUSTER_SUM] += size
            if size < acc[r, MIN_CLUSTER]:
                acc[r, MIN_CLUSTER] = size
            if size == 0 and acc[r, VIOLATION] < 0:
                acc[r, VIOLATION] = t

            # single-link baseline handover
            s = serving[r]
            if t - last_ho[r] >= ip[TTT]:
                alt = -1
                for b in range(B):
                    if b != s and feasible[r, k, b] and (alt < 0 or est[r, b] > est[r, alt]):
                        alt = b
                if alt >= 0 and est[r, alt] > est[r, s] * fp[HYST]:
                    serving[r] = alt
                    s = alt
                    last_ho[r] = t
                    int_until[r] = t + ip[INTERRUPT]
                    acc[r, HO_SINGLE] += 1
            out_state[r, k, 0] = mask
            out_state[r, k, 1] = anchor[r]
            out_state[r, k, 2] = s

            # downlink attempt, single scheme
            if t < int_until[r]:
                out_single[r, k] = 2
                acc[r, INTERRUPTED] += 1
            else:
                interf = 0.0
                for c in range(B):
                    if c != s and active[c]:
                        interf += P[c] * fp[INV_PEN]
                if P[s] / (fp[NOISE] + interf) >= fp[GMIN]:
                    out_single[r, k] = 0
                    acc[r, SUCC_SINGLE] += 1
                else:
                    out_single[r, k] = 1

            # downlink attempt, multi scheme (selection over cluster members)
            interf = 0.0
            pmax = 0.0
            for c in range(B):
                if member[r, c]:
                    if P[c] > pmax:
                        pmax = P[c]
                elif active[c]:
                    interf += P[c] * fp[INV_PEN]
            if size > 0 and pmax / (fp[NOISE] + interf) >= fp[GMIN]:
                out_multi[r, k] = 0
                acc[r, SUCC_MULTI] += 1
            else:
                out_multi[r, k] = 1
