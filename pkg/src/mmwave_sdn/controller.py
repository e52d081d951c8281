"""Soft-gNB control logic: vMM link estimation, serving-cluster maintenance,
target-path preparation and the single-link handover baseline."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

ENTER = "enter-threshold"
EXIT = "exit-threshold"
ANCHOR = "anchor-change"


@dataclass(frozen=True)
class Thresholds:
    enter_db: float = -13.0
    exit_db: float = -18.0

    def __post_init__(self):
        if not self.enter_db > self.exit_db:
            raise ConfigError(
                "hysteresis rule: enter_threshold_db "
                f"({self.enter_db}) must exceed exit_threshold_db ({self.exit_db})"
            )


@dataclass(frozen=True)
class VmmEstimate:
    """Per-gNB link estimates for one UE, indexed by gNB id."""

    ue_id: int
    gain_db: np.ndarray
    sinr_db: np.ndarray
    measured_at: int
    staleness: int = 0


@dataclass(frozen=True)
class ServingCluster:
    ue_id: int
    members: tuple[int, ...]
    anchor: int

    def __post_init__(self):
        if not self.members:
            raise ValueError("serving cluster may not be empty")
        if self.anchor not in self.members:
            raise ValueError("anchor must be a cluster member")


@dataclass(frozen=True)
class ClusterUpdate:
    additions: frozenset
    removals: frozenset
    slot: int
    reasons: tuple[tuple[int, str], ...] = ()

    @property
    def empty(self) -> bool:
        return not (self.additions or self.removals or self.reasons)


@dataclass(frozen=True)
class HandoverEvent:
    ue_id: int
    from_gnb: int
    to_gnb: int
    slot: int
    interruption_slots: int


def _best(candidates, score):
    """Highest score, lowest id on ties."""
    return min(candidates, key=lambda b: (-score[b], b))


def refresh_estimates(true_gain_db, true_sinr_db, reporting_period: int, slot: int,
                      previous: VmmEstimate | None = None, ue_id: int = 0) -> VmmEstimate:
    """Sample the true link state every ``reporting_period`` slots.

    Between reports the previous sample is kept and only its staleness grows.
    """
    if previous is None or slot % reporting_period == 0:
        return VmmEstimate(ue_id, np.array(true_gain_db, dtype=float),
                           np.array(true_sinr_db, dtype=float), slot, 0)
    return VmmEstimate(previous.ue_id, previous.gain_db, previous.sinr_db,
                       previous.measured_at, slot - previous.measured_at)


def update_cluster(cluster: ServingCluster, est: VmmEstimate, thresholds: Thresholds, *,
                   slot: int = 0, prepared=None, feasible=None):
    """Apply the enter/exit threshold rule to one serving cluster.

    ``prepared`` maps gNB id to the slot its downlink path was set up; when
    given, only gNBs prepared in an earlier slot may join. ``feasible``
    restricts membership to the UE's near set.
    """
    sinr = est.sinr_db
    ids = range(len(sinr))
    ok = set(ids) if feasible is None else set(feasible)
    members = set(cluster.members)

    additions = set()
    for b in ids:
        if b in members or b not in ok or not sinr[b] >= thresholds.enter_db:
            continue
        if prepared is not None and not (b in prepared and prepared[b] <= slot - 1):
            continue
        additions.add(b)

    removals = {b for b in members if sinr[b] < thresholds.exit_db or b not in ok}
    remaining = (members - removals) | additions
    if not remaining:
        keep = _best(removals, sinr)
        removals.discard(keep)
        remaining = {keep}

    anchor = _best(remaining, sinr)
    reasons = [(b, ENTER) for b in sorted(additions)]
    reasons += [(b, EXIT) for b in sorted(removals)]
    if anchor != cluster.anchor:
        reasons.append((anchor, ANCHOR))
    new = ServingCluster(cluster.ue_id, tuple(sorted(remaining)), anchor)
    return new, ClusterUpdate(frozenset(additions), frozenset(removals), slot, tuple(reasons))


def baseline_handover(current: int, est: VmmEstimate, hysteresis_db: float = 3.0,
                      interruption_slots: int = 50, *, slot: int = 0,
                      last_handover_slot: int | None = None, time_to_trigger: int = 100,
                      feasible=None) -> HandoverEvent | None:
    """Hard handover rule of the single-link baseline.

    Switches when the best other gNB beats the current one by more than
    ``hysteresis_db``. A new handover is refused until ``time_to_trigger``
    slots have passed since the previous one.
    """
    if last_handover_slot is not None and slot - last_handover_slot < time_to_trigger:
        return None
    sinr = est.sinr_db
    others = [b for b in (range(len(sinr)) if feasible is None else feasible) if b != current]
    if not others:
        return None
    target = _best(others, sinr)
    if sinr[target] - sinr[current] > hysteresis_db:
        return HandoverEvent(est.ue_id, current, target, slot, interruption_slots)
    return None


@dataclass
class SoftGnb:
    """Central controller for one mobile UE population.

    Holds the serving clusters, path-preparation marks and the latest vMM
    estimate per UE. Everything is updated from the simulation loop, once
    per slot.
    """

    thresholds: Thresholds = field(default_factory=Thresholds)
    reporting_period: int = 5
    clusters: dict = field(default_factory=dict)
    prepared: dict = field(default_factory=dict)  # ue -> {gnb: slot}
    estimates: dict = field(default_factory=dict)

    def refresh(self, ue_id, gain_db, sinr_db, slot) -> VmmEstimate:
        est = refresh_estimates(gain_db, sinr_db, self.reporting_period, slot,
                                self.estimates.get(ue_id), ue_id)
        self.estimates[ue_id] = est
        return est

    def prepare_target(self, ue_id, gnb, slot) -> bool:
        """Set up the downlink path to ``gnb``; False when nothing was done."""
        cluster = self.clusters.get(ue_id)
        marks = self.prepared.setdefault(ue_id, {})
        if (cluster is not None and gnb in cluster.members) or gnb in marks:
            return False
        marks[gnb] = slot
        return True

    def step(self, ue_id, slot, feasible=None) -> ClusterUpdate:
        est = self.estimates[ue_id]
        ok = list(range(len(est.sinr_db))) if feasible is None else sorted(feasible)
        if ue_id not in self.clusters:
            first = _best(ok or range(len(est.sinr_db)), est.sinr_db)
            self.clusters[ue_id] = ServingCluster(ue_id, (first,), first)
        marks = self.prepared.setdefault(ue_id, {})
        cluster, update = update_cluster(self.clusters[ue_id], est, self.thresholds,
                                         slot=slot, prepared=marks, feasible=ok)
        for b in update.additions:
            marks.pop(b, None)
        self.clusters[ue_id] = cluster
        for b in ok:
            if b not in cluster.members and est.sinr_db[b] >= self.thresholds.enter_db:
                self.prepare_target(ue_id, b, slot)
        return update


@dataclass
class BaselineLink:
    """State of the single-gNB baseline for one UE."""

    ue_id: int
    serving: int | None = None
    hysteresis_db: float = 3.0
    interruption_slots: int = 50
    time_to_trigger: int = 100
    last_handover: int | None = None
    interrupted_until: int = 0

    def step(self, est: VmmEstimate, slot: int, feasible=None) -> HandoverEvent | None:
        if self.serving is None:
            ok = range(len(est.sinr_db)) if feasible is None else feasible
            self.serving = _best(ok, est.sinr_db)
        ev = baseline_handover(self.serving, est, self.hysteresis_db, self.interruption_slots,
                               slot=slot, last_handover_slot=self.last_handover,
                               time_to_trigger=self.time_to_trigger, feasible=feasible)
        if ev is not None:
            self.serving = ev.to_gnb
            self.last_handover = slot
            self.interrupted_until = slot + ev.interruption_slots
        return ev

    def interrupted(self, slot: int) -> bool:
        return slot < self.interrupted_until
