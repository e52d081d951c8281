"""Constant-speed UE movement along a polyline."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError


@dataclass(frozen=True)
class Trajectory:
    waypoints: tuple[tuple[float, float], ...]
    speed: float  # m/s

    def __post_init__(self):
        if len(self.waypoints) < 2:
            raise InputError("a trajectory needs at least two waypoints")
        for a, b in zip(self.waypoints, self.waypoints[1:]):
            if a == b:
                raise InputError(f"consecutive waypoints coincide at {a}")
        if not self.speed >= 0:
            raise InputError("speed must be >= 0")

    @property
    def segment_lengths(self) -> np.ndarray:
        pts = np.asarray(self.waypoints, dtype=float)
        return np.hypot(*np.diff(pts, axis=0).T)

    @property
    def length(self) -> float:
        return float(self.segment_lengths.sum())

    def with_speed(self, speed) -> "Trajectory":
        return Trajectory(self.waypoints, speed)


@dataclass(frozen=True)
class MobilityState:
    position: tuple[float, float]
    segment: int = 0
    elapsed: int = 0
    travelled: float = 0.0


def kmh_to_mps(speed_kmh: float) -> float:
    return speed_kmh / 3.6


def initial_state(traj: Trajectory) -> MobilityState:
    return MobilityState(tuple(traj.waypoints[0]), 0, 0, 0.0)


def locate(traj: Trajectory, arc):
    """Points and segment indices at arc lengths ``arc`` (clamped to the path)."""
    pts = np.asarray(traj.waypoints, dtype=float)
    seg_len = traj.segment_lengths
    cum = np.concatenate([[0.0], np.cumsum(seg_len)])
    s = np.clip(np.asarray(arc, dtype=float), 0.0, cum[-1])
    seg = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(seg_len) - 1)
    frac = (s - cum[seg]) / seg_len[seg]
    xy = pts[seg] + frac[..., None] * (pts[seg + 1] - pts[seg])
    return xy, seg, s


def step(state: MobilityState, traj: Trajectory, slot_duration: float) -> MobilityState:
    """Advance one slot; the UE parks at the final waypoint.

    Position is recomputed from the elapsed slot count rather than by
    accumulating increments, so n calls agree with ``positions(traj, ...)``.
    """
    elapsed = state.elapsed + 1
    xy, seg, s = locate(traj, elapsed * traj.speed * slot_duration)
    return MobilityState((float(xy[0]), float(xy[1])), int(seg), elapsed, float(s))


def positions(traj: Trajectory, first_slot: int, n_slots: int, slot_duration: float) -> np.ndarray:
    """UE positions after the mobility step of slots ``first_slot .. first_slot+n-1``."""
    k = np.arange(first_slot + 1, first_slot + n_slots + 1, dtype=float)
    xy, _, _ = locate(traj, k * traj.speed * slot_duration)
    return xy


def traversal_slots(traj: Trajectory, slot_duration: float) -> int:
    if traj.speed <= 0:
        raise InputError("traversal time is undefined for a stationary UE")
    return max(1, math.ceil(round(traj.length / (traj.speed * slot_duration), 9)))


def default_edge_trajectory(gnbs, cell_radius: float = 100.0, offset_factor: float = 0.9,
                            speed: float = 0.0) -> Trajectory:
    """Straight pass parallel to the gNB row at ``offset_factor * cell_radius``."""
    if len(gnbs) < 2:
        raise InputError("edge trajectory needs at least two gNBs in a row")
    xs = [g.position[0] for g in gnbs]
    y = gnbs[0].position[1] + offset_factor * cell_radius
    return Trajectory(((min(xs) - cell_radius, y), (max(xs) + cell_radius, y)), speed)
