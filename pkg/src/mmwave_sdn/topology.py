"""gNB/UE population and the binary association indicators.

Three indicator families describe who serves whom:

* ``alpha[b]``    gNB b is active (serves at least one UE),
* ``beta[u, b]``  gNB b is in the serving cluster of UE u,
* ``near[u, b]``  (u, b) is a feasible pair, i.e. b is in UE u's near set.

They are tied together by ``alpha_b = 1 - prod_u (1 - beta_ub * near_ub)``,
``alpha_b >= beta_ub * near_ub`` and ``sum_b beta_ub * near_ub >= 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import InputError


@dataclass(frozen=True)
class Gnb:
    id: int
    position: tuple[float, float]
    is_soft_gnb: bool = False
    cell_radius: float = 100.0


@dataclass(frozen=True)
class Ue:
    id: int
    position: tuple[float, float]
    speed: float = 0.0


@dataclass(frozen=True)
class NearSet:
    ue_id: int
    members: tuple[int, ...]
    metrics: tuple[float, ...]
    metric: str = "distance"


@dataclass(frozen=True)
class AssociationState:
    alpha: np.ndarray  # (B,) bool
    beta: np.ndarray  # (U, B) bool
    near: np.ndarray  # (U, B) bool

    @classmethod
    def empty(cls, n_ues, n_gnbs):
        return cls(
            np.zeros(n_gnbs, dtype=bool),
            np.zeros((n_ues, n_gnbs), dtype=bool),
            np.zeros((n_ues, n_gnbs), dtype=bool),
        )


@dataclass(frozen=True)
class Violation:
    equation: str  # "activity-bound" or "served-at-least-once"
    ue: int
    gnb: int | None = None

    def __str__(self):
        if self.gnb is None:
            return f"{self.equation}: UE {self.ue} has no serving gNB"
        return f"{self.equation}: gNB {self.gnb} serves UE {self.ue} but is inactive"


def distance(a, b) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


def compute_near_set(ue: Ue, gnbs, metric: str = "distance", k: int = 3,
                     gains_db=None) -> NearSet:
    """The k best gNBs for a UE, best first, ties to the lowest gNB id.

    ``metric="channel_gain"`` ranks by ``gains_db[gnb_id]`` (higher is better).
    """
    if k < 1:
        raise InputError("near-set size must be >= 1")
    if not gnbs:
        raise InputError("no gNBs to choose from")
    if metric == "distance":
        scored = [(distance(ue.position, g.position), g.id) for g in gnbs]
    elif metric == "channel_gain":
        if gains_db is None:
            raise InputError("channel_gain metric needs per-gNB gains")
        scored = [(-gains_db[g.id], g.id) for g in gnbs]
    else:
        raise InputError(f"unknown near-set metric {metric!r}")
    scored.sort()
    chosen = scored[: min(k, len(scored))]
    values = tuple(-s if metric == "channel_gain" else s for s, _ in chosen)
    return NearSet(ue.id, tuple(i for _, i in chosen), values, metric)


def near_matrix(near_sets, n_ues, n_gnbs) -> np.ndarray:
    near = np.zeros((n_ues, n_gnbs), dtype=bool)
    for ns in near_sets:
        near[ns.ue_id, list(ns.members)] = True
    return near


def derive_activity(assoc: AssociationState) -> AssociationState:
    served = np.asarray(assoc.beta, dtype=bool) & np.asarray(assoc.near, dtype=bool)
    # 1 - prod_u (1 - beta*near), evaluated in integers
    alpha = 1 - np.prod(1 - served.astype(np.int64), axis=0)
    return replace(assoc, alpha=alpha.astype(bool))


def validate_constraints(assoc: AssociationState) -> list[Violation]:
    served = np.asarray(assoc.beta, dtype=bool) & np.asarray(assoc.near, dtype=bool)
    alpha = np.asarray(assoc.alpha, dtype=bool)
    out = []
    for u, b in zip(*np.nonzero(served & ~alpha[None, :])):
        out.append(Violation("activity-bound", int(u), int(b)))
    for u in np.nonzero(~served.any(axis=1))[0]:
        out.append(Violation("served-at-least-once", int(u)))
    return out


def place_grid(gnb_count: int, cell_radius: float = 100.0, origin=(0.0, 0.0)) -> list[Gnb]:
    """A row of tangent cells starting at ``origin``; the middle one is the Soft-gNB."""
    if gnb_count < 1:
        raise InputError("gnb_count must be >= 1")
    soft = (gnb_count - 1) // 2
    return [
        Gnb(i, (origin[0] + 2.0 * cell_radius * i, origin[1]), i == soft, cell_radius)
        for i in range(gnb_count)
    ]
