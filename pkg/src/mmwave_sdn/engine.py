"""Slotted-time simulation of one mobile UE crossing a row of mmWave cells.

Two execution paths share one random-number contract (see ``rng``):

* ``run_batch`` / ``run_scenario`` advance all seeds of one speed together
  through the selected slot kernel. This is what sweeps use.
* ``World`` + ``run_slot`` step a single run with the object-level channel,
  topology and controller operations. It is slow and exists as the
  reference the kernels are checked against.
"""

from __future__ import annotations

import math
import multiprocessing as mp
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import channel as ch
from . import mobility as mob
from ._layout import (ANCHOR_CHANGES, BELOW_THRESHOLD, CLUSTER_SUM, HANDOVER_INTERRUPTION, HO_SINGLE,
                      INTERRUPTED, MIN_CLUSTER, N_ACC, N_FPARAMS, N_IPARAMS, OK, SUCC_MULTI,
                      SUCC_SINGLE, VIOLATION)
from ._layout import (ENTER, EXIT, GMIN, HYST, INTERRUPT, INV_L, INV_PEN, NOISE, P_ACTIVE, PERIOD,
                      RHO, SQ, TTT)
from .controller import ANCHOR as ANCHOR_REASON
from .controller import ENTER as ENTER_REASON
from .controller import EXIT as EXIT_REASON
from .controller import BaselineLink, SoftGnb, Thresholds, refresh_estimates
from .errors import InvariantViolation
from .kernels import get_kernel
from .rng import BLOCK, RunStreams, run_seed
from .scenario import Scenario
from .topology import (AssociationState, Ue, compute_near_set, derive_activity, place_grid,
                       validate_constraints)

CAUSES = {OK: "ok", BELOW_THRESHOLD: "below-threshold", HANDOVER_INTERRUPTION: "handover-interruption"}
MOBILE_UE = 0


# --------------------------------------------------------------------------
# Scenario-derived pieces
# --------------------------------------------------------------------------


def build_gnbs(sc: Scenario):
    return place_grid(sc.gnb_count, sc.cell_radius_m)


def build_trajectory(sc: Scenario, speed_kmh: float, gnbs=None) -> mob.Trajectory:
    speed = mob.kmh_to_mps(speed_kmh)
    if sc.trajectory == "auto-edge":
        gnbs = gnbs if gnbs is not None else build_gnbs(sc)
        return mob.default_edge_trajectory(gnbs, sc.cell_radius_m, sc.edge_offset_factor, speed)
    return mob.Trajectory(tuple(tuple(map(float, p)) for p in sc.trajectory), speed)


def slots_for(sc: Scenario, traj: mob.Trajectory) -> int:
    if sc.total_slots is not None:
        return sc.total_slots
    return mob.traversal_slots(traj, sc.slot_duration_s)


def pathloss_params(sc: Scenario) -> ch.PathLossParams:
    return ch.PathLossParams(sc.floating_intercept_db, sc.pathloss_exponent, sc.shadow_sigma_db)


def array_config(sc: Scenario) -> ch.AntennaArrayConfig:
    return ch.AntennaArrayConfig(sc.n_tx, sc.n_rx, sc.element_spacing)


def noise_dbm(sc: Scenario) -> float:
    return ch.noise_power(sc.bandwidth_hz, sc.noise_dbm_hz)


# --------------------------------------------------------------------------
# Background load
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class BackgroundLoad:
    users: tuple[int, ...]  # static background UEs per gNB
    activity_probability: float = 0.5

    def __post_init__(self):
        if any(n < 0 for n in self.users):
            raise ValueError("background user counts must be >= 0")
        if not 0.0 <= self.activity_probability <= 1.0:
            raise ValueError("activity probability must lie in [0, 1]")


def active_from_uniforms(load: BackgroundLoad, uniforms, serving=()) -> frozenset:
    serving = set(serving)
    return frozenset(
        b for b, (n, x) in enumerate(zip(load.users, uniforms))
        if n > 0 and x < load.activity_probability and b not in serving
    )


def background_interference_draw(load: BackgroundLoad, rng, serving=()) -> frozenset:
    """gNBs busy with background traffic this slot (serving gNBs excluded)."""
    return active_from_uniforms(load, rng.random(len(load.users)), serving)


# --------------------------------------------------------------------------
# Per-slot outcome and transmission rule
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SlotOutcome:
    slot: int
    reports: dict
    packet_success: bool
    cause: str


def evaluate_transmission(serving, rx_dbm, active, scheme, *, noise_dbm, min_sinr_db=-10.0,
                          sidelobe_penalty_db=20.0, interrupted=False):
    """Downlink attempt to the mobile UE.

    ``multi``: every serving gNB sends a copy, success if any copy clears the
    SINR floor. ``single``: one link, and nothing gets through while a
    handover interruption is running.
    """
    serving = list(serving)
    if scheme == "single":
        if len(serving) != 1:
            raise ValueError("single scheme needs exactly one serving gNB")
        if interrupted:
            return False, {}
    interference = ch.interference_at(rx_dbm, active, serving, sidelobe_penalty_db)
    reports = {b: ch.sinr(rx_dbm[b], interference, noise_dbm, min_sinr_db) for b in serving}
    return any(r.satisfied for r in reports.values()), reports


# --------------------------------------------------------------------------
# Reference single-run world
# --------------------------------------------------------------------------


@dataclass
class World:
    scenario: Scenario
    scheme: str
    speed_kmh: float
    gnbs: list
    trajectory: mob.Trajectory
    state: mob.MobilityState
    streams: RunStreams
    subpaths: ch.SubpathSet
    shadow: ch.ShadowField
    fading: ch.FadingProcess
    codebook: ch.BeamCodebook
    load: BackgroundLoad
    controller: object
    long_term_gain_db: list
    slot: int = 0
    block: tuple | None = None
    events: list = field(default_factory=list)


def init_world(sc: Scenario, speed_kmh: float, run: int, scheme: str) -> World:
    gnbs = build_gnbs(sc)
    traj = build_trajectory(sc, speed_kmh, gnbs)
    streams = RunStreams.open(run_seed(sc.seed, run), len(gnbs), sc.subpaths,
                              sc.shadow_sigma_db)
    shadow = ch.ShadowField(sc.shadow_sigma_db,
                            {(g.id, MOBILE_UE): float(streams.shadow_db[g.id]) for g in gnbs})
    if scheme == "multi":
        controller = SoftGnb(Thresholds(sc.enter_threshold_db, sc.exit_threshold_db),
                             sc.reporting_period_slots)
    elif scheme == "single":
        controller = BaselineLink(MOBILE_UE, None, sc.handover_hysteresis_db,
                                  sc.interruption_slots, sc.time_to_trigger_slots)
        controller.estimate = None
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    codebook = ch.default_codebook(array_config(sc))
    return World(
        scenario=sc, scheme=scheme, speed_kmh=speed_kmh, gnbs=gnbs, trajectory=traj,
        state=mob.initial_state(traj), streams=streams, subpaths=streams.subpaths, shadow=shadow,
        fading=ch.FadingProcess.from_speed(traj.speed, sc.carrier_hz, sc.slot_duration_s),
        codebook=codebook,
        load=BackgroundLoad(tuple([sc.users_per_cell] * len(gnbs)), sc.background_activity),
        controller=controller,
        long_term_gain_db=[ch.long_term_beamforming_gain(streams.subpaths, array_config(sc), codebook, g.id)[0]
                           for g in gnbs],
    )


def _link_state(world: World):
    """Per-gNB instantaneous received power, plus long-term power and path gain."""
    sc = world.scenario
    params = pathloss_params(sc)
    cfg = array_config(sc)
    rx_dbm, lt_dbm, large_scale_db = {}, {}, {}
    for g in world.gnbs:
        h = ch.channel_matrix(world.subpaths, cfg, g.id, world.slot)
        psi, _, _ = ch.beamforming_gain(h, world.codebook)
        psi_lt = world.long_term_gain_db[g.id]
        d = math.hypot(world.state.position[0] - g.position[0], world.state.position[1] - g.position[1])
        pl = ch.path_loss(params, d, world.shadow.get(g.id, MOBILE_UE))
        rx_dbm[g.id] = ch.received_power(sc.tx_power_dbm, psi, sc.subpath_attenuation_db, pl).rx_power_dbm
        lt_dbm[g.id] = ch.received_power(sc.tx_power_dbm, psi_lt, sc.subpath_attenuation_db, pl).rx_power_dbm
        large_scale_db[g.id] = -pl
    return rx_dbm, lt_dbm, large_scale_db


def long_term_sinr_db(lt_dbm: dict, load: BackgroundLoad, noise: float, sidelobe_penalty_db: float):
    """What the vMM reports for each link: long-term SINR under mean background activity."""
    p = load.activity_probability
    shifted = {b: v + (ch.lin_to_db(p) if load.users[b] > 0 else -np.inf) for b, v in lt_dbm.items()}
    out = []
    for b in sorted(lt_dbm):
        interference = ch.interference_at(shifted, shifted.keys(), {b}, sidelobe_penalty_db)
        out.append(ch.sinr(lt_dbm[b], interference, noise).sinr_db)
    return out


def run_slot(world: World) -> SlotOutcome:
    """Advance the world by one slot and attempt one downlink packet.

    Order: mobility, fading, background activity, vMM refresh, control
    update, transmission.
    """
    sc = world.scenario
    t = world.slot
    world.state = mob.step(world.state, world.trajectory, sc.slot_duration_s)
    if t % BLOCK == 0:
        world.block = world.streams.next_block()
    w, u = world.block
    world.subpaths = ch.evolve_fading(world.subpaths, world.fading, innovations=w[t % BLOCK])
    active = active_from_uniforms(world.load, u[t % BLOCK])

    rx_dbm, lt_dbm, large_scale_db = _link_state(world)
    n0 = noise_dbm(sc)
    ids = [g.id for g in world.gnbs]
    sinr_db = long_term_sinr_db(lt_dbm, world.load, n0, sc.sidelobe_penalty_db)
    gains = [lt_dbm[b] - sc.tx_power_dbm for b in ids]
    ue = Ue(MOBILE_UE, world.state.position, world.trajectory.speed)
    near = compute_near_set(ue, world.gnbs, sc.near_set_metric, sc.near_set_size, large_scale_db)
    feasible = list(near.members)

    ctl = world.controller
    if world.scheme == "multi":
        ctl.refresh(MOBILE_UE, gains, sinr_db, t)
        update = ctl.step(MOBILE_UE, t, feasible)
        cluster = ctl.clusters[MOBILE_UE]
        if t == 0:
            world.events.append({"slot": t, "scheme": "multi", "type": "attach",
                                 "members": list(cluster.members), "anchor": cluster.anchor})
        if not update.empty:
            world.events.append({
                "slot": t, "scheme": "multi", "type": "cluster-update",
                "members": list(cluster.members), "anchor": cluster.anchor,
                "changes": [[b, why] for b, why in update.reasons],
            })
        serving = cluster.members
    else:
        ctl.estimate = refresh_estimates(gains, sinr_db, sc.reporting_period_slots, t, ctl.estimate)
        ev = ctl.step(ctl.estimate, t, feasible)
        if t == 0:
            world.events.append({"slot": t, "scheme": "single", "type": "attach",
                                 "gnb": ev.from_gnb if ev is not None else ctl.serving})
        if ev is not None:
            world.events.append({
                "slot": t, "scheme": "single", "type": "handover", "from": ev.from_gnb,
                "to": ev.to_gnb, "interruption_slots": ev.interruption_slots,
            })
        serving = (ctl.serving,)

    if not serving:
        raise InvariantViolation("cluster-non-empty", t)
    # a gNB kept as last cluster member stays a feasible pair even if it left the near set
    beta = np.zeros((1, len(ids)), dtype=bool)
    beta[0, list(serving)] = True
    nmat = beta.copy()
    nmat[0, feasible] = True
    assoc = derive_activity(AssociationState(np.zeros(len(ids), dtype=bool), beta, nmat))
    violations = validate_constraints(assoc)
    if violations:
        raise InvariantViolation("association", t, "; ".join(map(str, violations)))

    interrupted = world.scheme == "single" and ctl.interrupted(t)
    success, reports = evaluate_transmission(
        serving, rx_dbm, active, world.scheme, noise_dbm=n0, min_sinr_db=sc.min_sinr_db,
        sidelobe_penalty_db=sc.sidelobe_penalty_db, interrupted=interrupted)
    if success:
        cause = "ok"
    elif interrupted:
        cause = "handover-interruption"
    else:
        cause = "below-threshold"
    world.slot += 1
    return SlotOutcome(t, reports, success, cause)


# --------------------------------------------------------------------------
# Batched kernel driver
# --------------------------------------------------------------------------


@dataclass
class BatchResult:
    speed_kmh: float
    runs: tuple[int, ...]
    total_slots: int
    acc: np.ndarray  # (R, N_ACC)
    outcomes_single: np.ndarray | None = None  # (R, T) outcome codes
    outcomes_multi: np.ndarray | None = None
    states: np.ndarray | None = None  # (R, T, 3): member bitmask, anchor, single serving gNB

    @property
    def cluster_sizes(self) -> np.ndarray:
        masks = self.states[..., 0]
        n_bits = max(int(masks.max()).bit_length(), 1)
        return sum((masks >> b) & 1 for b in range(n_bits))


def kernel_params(sc: Scenario, fading: ch.FadingProcess):
    fp = np.zeros(N_FPARAMS)
    rho = fading.correlation_coefficient
    fp[RHO] = rho
    fp[SQ] = math.sqrt(max(0.0, 1.0 - rho * rho))
    fp[INV_L] = 1.0 / sc.subpaths
    fp[NOISE] = 10.0 ** (noise_dbm(sc) / 10.0)
    fp[INV_PEN] = 10.0 ** (-sc.sidelobe_penalty_db / 10.0)
    fp[GMIN] = 10.0 ** (sc.min_sinr_db / 10.0)
    fp[ENTER] = 10.0 ** (sc.enter_threshold_db / 10.0)
    fp[EXIT] = 10.0 ** (sc.exit_threshold_db / 10.0)
    fp[HYST] = 10.0 ** (sc.handover_hysteresis_db / 10.0)
    fp[P_ACTIVE] = sc.background_activity
    ip = np.zeros(N_IPARAMS, dtype=np.int64)
    ip[PERIOD] = sc.reporting_period_slots
    ip[TTT] = sc.time_to_trigger_slots
    ip[INTERRUPT] = sc.interruption_slots
    return fp, ip


def beam_projections(subpaths: ch.SubpathSet, cfg: ch.AntennaArrayConfig, codebook: ch.BeamCodebook):
    """Per-subpath beam responses ``w_rx^H u_rx`` (B,L,K_rx) and ``u_tx^H w_tx`` (B,L,K_tx)."""
    B, L = subpaths.gains.shape
    arx = np.empty((B, L, len(codebook.rx_beams)), dtype=complex)
    atx = np.empty((B, L, len(codebook.tx_beams)), dtype=complex)
    for b in range(B):
        for l in range(L):
            u_rx = ch.array_response(cfg, subpaths.aoa_azimuth[b, l], subpaths.aoa_elevation[b, l], "rx")
            u_tx = ch.array_response(cfg, subpaths.aod_azimuth[b, l], subpaths.aod_elevation[b, l], "tx")
            arx[b, l] = codebook.rx_beams.conj() @ u_rx
            atx[b, l] = codebook.tx_beams @ u_tx.conj()
    return arx, atx


def beam_tables(arx, atx):
    """Beam-pair tables consumed by the slot kernels.

    With ``a_l[p] = arx[l, i] * atx[l, j]`` for beam pair ``p = i * n_tx + j``
    the kernels evaluate ``|sum_l g_l a_l[p]|^2`` as
    ``sum_l |g_l|^2 |a_l|^2 + sum_{l<m} Re(g_l conj(g_m) * 2 a_l conj(a_m))``,
    which needs only the per-slot gains and these run-constant tables.
    Returns ``diag`` (..., L, P) and ``xre``, ``xim`` (..., L(L-1)/2, P).
    """
    a = arx[..., :, None] * atx[..., None, :]
    a = a.reshape(a.shape[:-2] + (-1,))
    L = a.shape[-2]
    diag = a.real * a.real + a.imag * a.imag
    cross = [2.0 * a[..., l, :] * a[..., m, :].conj() for l in range(L) for m in range(l + 1, L)]
    if cross:
        x = np.stack(cross, axis=-2)
    else:
        x = np.zeros(a.shape[:-2] + (0, a.shape[-1]), dtype=complex)
    return (np.ascontiguousarray(diag), np.ascontiguousarray(x.real), np.ascontiguousarray(x.imag))


def _feasible_block(sc, dist, pl_total):
    """Near-set mask, shape (R, n, B): the k best gNBs per run and slot."""
    R = pl_total.shape[0]
    key = np.broadcast_to(dist, pl_total.shape) if sc.near_set_metric == "distance" else pl_total
    order = np.argsort(key, axis=-1, kind="stable")[..., : min(sc.near_set_size, key.shape[-1])]
    mask = np.zeros(pl_total.shape, dtype=bool)
    np.put_along_axis(mask, order, True, axis=-1)
    return mask if mask.shape[0] == R else np.broadcast_to(mask, pl_total.shape).copy()


def run_batch(sc: Scenario, speed_kmh: float, runs=None, *, backend=None,
              keep_outcomes=False) -> BatchResult:
    """Simulate runs ``runs`` (default ``range(sc.seeds)``) at one speed."""
    runs = tuple(range(sc.seeds) if runs is None else runs)
    kernel = get_kernel(backend)
    gnbs = build_gnbs(sc)
    traj = build_trajectory(sc, speed_kmh, gnbs)
    T = slots_for(sc, traj)
    R, B, L = len(runs), len(gnbs), sc.subpaths
    cfg = array_config(sc)
    codebook = ch.default_codebook(cfg)
    fading = ch.FadingProcess.from_speed(traj.speed, sc.carrier_hz, sc.slot_duration_s)
    fp, ip = kernel_params(sc, fading)
    params = pathloss_params(sc)
    gnb_xy = np.array([g.position for g in gnbs], dtype=float)
    bg = np.full(B, sc.users_per_cell > 0, dtype=bool)

    streams = [RunStreams.open(run_seed(sc.seed, r), B, L, sc.shadow_sigma_db) for r in runs]
    arx = np.empty((R, B, L, sc.n_rx), dtype=complex)
    atx = np.empty((R, B, L, sc.n_tx), dtype=complex)
    for i, s in enumerate(streams):
        arx[i], atx[i] = beam_projections(s.subpaths, cfg, codebook)
    shadow = np.stack([s.shadow_db for s in streams])  # (R, B)
    diag, xre, xim = beam_tables(arx, atx)
    # fading-averaged best beam-pair gain, fixed per run and link
    psi_lt = diag.sum(axis=2).max(axis=2) / L  # (R, B)
    mean_load = np.where(bg, sc.background_activity, 0.0) * fp[INV_PEN]

    g = np.ascontiguousarray(np.stack([s.subpaths.gains for s in streams]))
    est = np.zeros((R, B))
    member = np.zeros((R, B), dtype=bool)
    prepared = np.full((R, B), -1, dtype=np.int64)
    anchor = np.full(R, -1, dtype=np.int64)
    serving = np.full(R, -1, dtype=np.int64)
    last_ho = np.full(R, -(1 << 62), dtype=np.int64)
    int_until = np.zeros(R, dtype=np.int64)
    acc = np.zeros((R, N_ACC), dtype=np.int64)
    acc[:, VIOLATION] = -1
    acc[:, MIN_CLUSTER] = B + 1

    out_s = np.empty((R, BLOCK), dtype=np.int8)
    out_m = np.empty((R, BLOCK), dtype=np.int8)
    out_z = np.empty((R, BLOCK, 3), dtype=np.int64)
    keep = ([], [], []) if keep_outcomes else None

    for t0 in range(0, T, BLOCK):
        n = min(BLOCK, T - t0)
        blocks = [s.next_block() for s in streams]
        w = np.ascontiguousarray(np.stack([b[0] for b in blocks]))
        u = np.ascontiguousarray(np.stack([b[1] for b in blocks]))
        xy = mob.positions(traj, t0, BLOCK, sc.slot_duration_s)
        dist = np.hypot(xy[:, None, 0] - gnb_xy[None, :, 0], xy[:, None, 1] - gnb_xy[None, :, 1])
        pl_mean = params.floating_intercept_db + params.pathloss_exponent * 10.0 * np.log10(np.maximum(dist, 1.0))
        pl_total = pl_mean[None, :, :] + shadow[:, None, :]  # (R, BLOCK, B)
        pathgain = 10.0 ** ((sc.tx_power_dbm - sc.subpath_attenuation_db - pl_total) / 10.0)
        feasible = np.ascontiguousarray(_feasible_block(sc, dist, pl_total))
        lt = pathgain * psi_lt[:, None, :]
        est_in = np.empty_like(lt)
        for b in range(B):
            interf = np.zeros(lt.shape[:2])
            for c in range(B):
                if c != b:
                    interf = interf + lt[:, :, c] * mean_load[c]
            est_in[:, :, b] = lt[:, :, b] / (fp[NOISE] + interf)
        kernel(t0, n, fp, ip, diag, xre, xim, w, u, np.ascontiguousarray(pathgain), est_in, feasible, bg,
               g, est, member, prepared, anchor, serving, last_ho, int_until,
               acc, out_s, out_m, out_z)
        if keep is not None:
            keep[0].append(out_s[:, :n].copy())
            keep[1].append(out_m[:, :n].copy())
            keep[2].append(out_z[:, :n].copy())

    res = BatchResult(speed_kmh, runs, T, acc)
    if keep is not None:
        res.outcomes_single = np.concatenate(keep[0], axis=1)
        res.outcomes_multi = np.concatenate(keep[1], axis=1)
        res.states = np.concatenate(keep[2], axis=1)
    return res


# --------------------------------------------------------------------------
# Metrics and sweeps
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class RunMetrics:
    speed_kmh: float
    scheme: str
    run: int
    transmitted: int
    succeeded: int
    handovers: int
    mean_cluster_size: float
    interruption_slots: int
    min_cluster_size: int

    @property
    def failed(self) -> int:
        return self.transmitted - self.succeeded

    @property
    def success_rate(self) -> float:
        return self.succeeded / self.transmitted


@dataclass(frozen=True)
class Metrics:
    speed_kmh: float
    scheme: str
    seeds: int
    transmitted: int
    succeeded: int
    failed: int
    success_rate: float  # mean of per-run success rates
    success_rate_stderr: float
    handovers_mean: float
    cluster_size_mean: float
    interruption_slots: int
    min_cluster_size: int


def run_metrics(batch: BatchResult, scheme: str) -> list[RunMetrics]:
    out = []
    T = batch.total_slots
    for i, run in enumerate(batch.runs):
        a = batch.acc[i]
        if scheme == "multi":
            out.append(RunMetrics(batch.speed_kmh, scheme, run, T, int(a[SUCC_MULTI]),
                                  int(a[ANCHOR_CHANGES]), a[CLUSTER_SUM] / T, 0, int(a[MIN_CLUSTER])))
        else:
            out.append(RunMetrics(batch.speed_kmh, scheme, run, T, int(a[SUCC_SINGLE]),
                                  int(a[HO_SINGLE]), 1.0, int(a[INTERRUPTED]), 1))
    return out


def aggregate(rows: list[RunMetrics]) -> Metrics:
    rates = np.array([r.success_rate for r in rows])
    n = len(rates)
    stderr = float(rates.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return Metrics(
        speed_kmh=rows[0].speed_kmh, scheme=rows[0].scheme, seeds=n,
        transmitted=sum(r.transmitted for r in rows), succeeded=sum(r.succeeded for r in rows),
        failed=sum(r.failed for r in rows), success_rate=float(rates.mean()),
        success_rate_stderr=stderr, handovers_mean=float(np.mean([r.handovers for r in rows])),
        cluster_size_mean=float(np.mean([r.mean_cluster_size for r in rows])),
        interruption_slots=sum(r.interruption_slots for r in rows),
        min_cluster_size=min(r.min_cluster_size for r in rows),
    )


def check_batch(batch: BatchResult):
    bad = np.nonzero(batch.acc[:, VIOLATION] >= 0)[0]
    if len(bad):
        i = int(bad[0])
        raise InvariantViolation("cluster-non-empty", int(batch.acc[i, VIOLATION]),
                                 f"speed {batch.speed_kmh} km/h, run {batch.runs[i]}")


def _speed_job(args):
    sc, speed, backend = args
    batch = run_batch(sc, speed, backend=backend)
    check_batch(batch)
    return {s: run_metrics(batch, s) for s in sc.schemes}


def run_scenario_detail(sc: Scenario, *, backend=None, jobs=1) -> dict:
    """Per-run metrics keyed by ``(speed, scheme)``."""
    speeds = sorted(float(s) for s in sc.speed_sweep)
    tasks = [(sc, s, backend) for s in speeds]
    if jobs > 1 and len(tasks) > 1:
        # fork is unsafe once the compiled kernel has started its thread pool
        with ProcessPoolExecutor(max_workers=jobs, mp_context=mp.get_context("spawn")) as pool:
            results = list(pool.map(_speed_job, tasks))
    else:
        results = [_speed_job(t) for t in tasks]
    out = {}
    for speed, per_scheme in zip(speeds, results):
        for scheme in sorted(per_scheme):
            out[(speed, scheme)] = per_scheme[scheme]
    return out


def run_scenario(sc: Scenario, *, backend=None, jobs=1) -> list[Metrics]:
    """Aggregated metrics, one row per (speed, scheme), sorted by speed then scheme."""
    detail = run_scenario_detail(sc, backend=backend, jobs=jobs)
    return [aggregate(rows) for _, rows in sorted(detail.items())]


def _members(mask: int) -> list[int]:
    return [b for b in range(mask.bit_length()) if mask >> b & 1]


def events_from_states(states: np.ndarray, schemes, speed_kmh: float, run: int,
                       interruption_slots: int) -> list[dict]:
    """Event log of one run rebuilt from its per-slot (mask, anchor, serving) states."""
    events = []
    for scheme in sorted(schemes):
        prev = None
        for t, (mask, anchor, serving) in enumerate(states.tolist()):
            head = {"speed_kmh": speed_kmh, "run": run, "slot": t, "scheme": scheme}
            if scheme == "multi":
                if prev is None:
                    events.append({**head, "type": "attach", "members": _members(mask),
                                   "anchor": anchor})
                elif (mask, anchor) != prev[:2]:
                    changes = [[b, ENTER_REASON] for b in _members(mask & ~prev[0])]
                    changes += [[b, EXIT_REASON] for b in _members(prev[0] & ~mask)]
                    if anchor != prev[1]:
                        changes.append([anchor, ANCHOR_REASON])
                    events.append({**head, "type": "cluster-update", "members": _members(mask),
                                   "anchor": anchor, "changes": changes})
            else:
                if prev is None:
                    events.append({**head, "type": "attach", "gnb": serving})
                elif serving != prev[2]:
                    events.append({**head, "type": "handover", "from": prev[2], "to": serving,
                                   "interruption_slots": interruption_slots})
            prev = (mask, anchor, serving)
    return events


def trace_run(sc: Scenario, speed_kmh: float, run: int = 0, *, backend=None) -> list[dict]:
    """Event log of one run: attach, cluster updates and baseline handovers."""
    batch = run_batch(sc, speed_kmh, (run,), backend=backend, keep_outcomes=True)
    return events_from_states(batch.states[0], sc.schemes, speed_kmh, run, sc.interruption_slots)


def reference_trace(sc: Scenario, speed_kmh: float, run: int = 0, slots: int | None = None):
    """The same event log produced slot by slot by the object-level reference world."""
    events = []
    T = slots_for(sc, build_trajectory(sc, speed_kmh)) if slots is None else slots
    for scheme in sorted(sc.schemes):
        world = init_world(sc, speed_kmh, run, scheme)
        for _ in range(T):
            run_slot(world)
        for ev in world.events:
            events.append({"speed_kmh": speed_kmh, "run": run, **ev})
    return events
