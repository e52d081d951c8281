"""Index layout of the parameter and accumulator arrays shared by both kernels."""

# float parameters
RHO, SQ, INV_L, NOISE, INV_PEN, GMIN, ENTER, EXIT, HYST, P_ACTIVE = range(10)
N_FPARAMS = 10
# integer parameters
PERIOD, TTT, INTERRUPT = range(3)
N_IPARAMS = 3
# per-run accumulators
(SUCC_SINGLE, SUCC_MULTI, HO_SINGLE, ANCHOR_CHANGES, CLUSTER_SUM,
 INTERRUPTED, VIOLATION, MIN_CLUSTER) = range(8)
N_ACC = 8

# per-slot outcome codes
OK, BELOW_THRESHOLD, HANDOVER_INTERRUPTION = 0, 1, 2
