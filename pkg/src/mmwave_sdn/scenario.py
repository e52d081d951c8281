"""Scenario configuration: defaults, JSON loading and validation."""

from __future__ import annotations

import dataclasses
import json
import math
import re
from dataclasses import dataclass, field, fields

from .errors import ConfigError

SCHEMES = ("single", "multi")
MAX_GNBS = 62  # cluster membership travels as an int64 bitmask


@dataclass
class Scenario:
    # radio parameters
    carrier_ghz: float = 28.0
    bandwidth_ghz: float = 1.0
    tx_power_dbm: float = 37.0
    shadow_sigma_db: float = 8.2
    noise_dbm_hz: float = -174.0
    min_sinr_db: float = -10.0
    users_per_cell: int = 100
    # propagation / antennas
    floating_intercept_db: float = 72.0
    pathloss_exponent: float = 2.92
    subpath_attenuation_db: float = 0.0
    subpaths: int = 2
    n_tx: int = 16
    n_rx: int = 4
    element_spacing: float = 0.5
    sidelobe_penalty_db: float = 20.0
    background_activity: float = 0.5
    # layout and movement
    gnb_count: int = 3
    cell_radius_m: float = 100.0
    edge_offset_factor: float = 0.9
    trajectory: object = "auto-edge"
    speed_sweep: list = field(default_factory=lambda: [30.0, 45.0, 60.0, 75.0, 90.0])
    # control plane
    near_set_size: int = 3
    near_set_metric: str = "distance"
    enter_threshold_db: float = -13.0
    exit_threshold_db: float = -18.0
    reporting_period_slots: int = 5
    handover_hysteresis_db: float = 3.0
    time_to_trigger_slots: int = 100
    interruption_slots: int = 50
    # run control
    schemes: list = field(default_factory=lambda: list(SCHEMES))
    slot_duration_s: float = 1e-3
    total_slots: int | None = None
    seeds: int = 100
    seed: int = 0
    association: dict | None = None

    def replace(self, **changes) -> "Scenario":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @property
    def carrier_hz(self) -> float:
        return self.carrier_ghz * 1e9

    @property
    def bandwidth_hz(self) -> float:
        return self.bandwidth_ghz * 1e9


FIELD_NAMES = tuple(f.name for f in fields(Scenario))
_INT_FIELDS = {"users_per_cell", "subpaths", "n_tx", "n_rx", "gnb_count", "near_set_size",
               "reporting_period_slots", "time_to_trigger_slots", "interruption_slots",
               "seeds", "seed"}


def _is_number(x):
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def _line_of(text, key):
    m = re.search(r'"%s"\s*:' % re.escape(key), text or "")
    return text.count("\n", 0, m.start()) + 1 if m else None


def scenario_from_dict(data: dict, text: str | None = None) -> Scenario:
    """Build a Scenario; unknown keys and type errors are all reported together."""
    if not isinstance(data, dict):
        raise ConfigError("scenario must be a JSON object")
    problems = []
    kwargs = {}
    for key, value in data.items():
        if key not in FIELD_NAMES:
            line = _line_of(text, key)
            where = f" (line {line})" if line else ""
            problems.append(f"unknown key '{key}'{where}")
            continue
        kwargs[key] = value
    if problems:
        raise ConfigError(problems)
    sc = Scenario(**kwargs)
    problems = validate_scenario(sc, text)
    if problems:
        raise ConfigError(problems)
    return sc


def load_scenario(path) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return parse_scenario(text)


def parse_scenario(text: str) -> Scenario:
    if not text.strip():
        raise ConfigError("scenario file is empty")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}")
    return scenario_from_dict(data, text)


def validate_scenario(sc: Scenario, text: str | None = None) -> list[str]:
    """Every violated scenario invariant, as readable messages."""
    out = []

    def bad(key, msg):
        line = _line_of(text, key)
        out.append(f"{key}: {msg}" + (f" (line {line})" if line else ""))

    for f in fields(Scenario):
        v = getattr(sc, f.name)
        if f.name in _INT_FIELDS:
            if not (isinstance(v, int) and not isinstance(v, bool)):
                bad(f.name, f"expected an integer, got {v!r}")
        elif f.type in ("float", float):
            if not _is_number(v) or not math.isfinite(v):
                bad(f.name, f"expected a finite number, got {v!r}")
    if out:
        return out

    positive = ["carrier_ghz", "bandwidth_ghz", "pathloss_exponent", "element_spacing",
                "cell_radius_m", "slot_duration_s", "subpaths", "n_tx", "n_rx", "gnb_count",
                "near_set_size", "reporting_period_slots", "seeds"]
    for key in positive:
        if not getattr(sc, key) > 0:
            bad(key, "must be > 0")
    for key in ["shadow_sigma_db", "users_per_cell", "time_to_trigger_slots",
                "interruption_slots", "sidelobe_penalty_db", "edge_offset_factor",
                "handover_hysteresis_db", "seed"]:
        if getattr(sc, key) < 0:
            bad(key, "must be >= 0")
    if sc.gnb_count > MAX_GNBS:
        bad("gnb_count", f"at most {MAX_GNBS} gNBs are supported")
    if not 0.0 <= sc.background_activity <= 1.0:
        bad("background_activity", "must lie in [0, 1]")
    if not sc.enter_threshold_db > sc.exit_threshold_db:
        bad("enter_threshold_db", "hysteresis rule: enter_threshold_db must exceed exit_threshold_db")
    if sc.near_set_metric not in ("distance", "channel_gain"):
        bad("near_set_metric", "must be 'distance' or 'channel_gain'")

    if not isinstance(sc.speed_sweep, list) or not sc.speed_sweep:
        bad("speed_sweep", "must be a non-empty list of speeds in km/h")
    else:
        for s in sc.speed_sweep:
            if not _is_number(s) or not math.isfinite(s) or s < 0:
                bad("speed_sweep", f"invalid speed {s!r}")
        if len(set(sc.speed_sweep)) != len(sc.speed_sweep):
            bad("speed_sweep", "speeds must be distinct")
    if not isinstance(sc.schemes, list) or not sc.schemes or any(s not in SCHEMES for s in sc.schemes):
        bad("schemes", f"must be a non-empty subset of {list(SCHEMES)}")

    if sc.total_slots is not None:
        if not isinstance(sc.total_slots, int) or isinstance(sc.total_slots, bool) or sc.total_slots < 1:
            bad("total_slots", "must be an integer >= 1 (or null for the traversal time)")
    elif isinstance(sc.speed_sweep, list) and any(s == 0 for s in sc.speed_sweep):
        bad("total_slots", "required when the sweep contains speed 0")

    if sc.trajectory == "auto-edge":
        if isinstance(sc.gnb_count, int) and sc.gnb_count < 2:
            bad("trajectory", "auto-edge needs gnb_count >= 2; give explicit waypoints")
    elif isinstance(sc.trajectory, list):
        pts = sc.trajectory
        if len(pts) < 2 or not all(
                isinstance(p, list) and len(p) == 2 and all(_is_number(c) for c in p) for p in pts):
            bad("trajectory", "waypoints must be a list of at least two [x, y] pairs")
        elif any(a == b for a, b in zip(pts, pts[1:])):
            bad("trajectory", "consecutive waypoints must differ")
    else:
        bad("trajectory", "must be 'auto-edge' or a list of [x, y] waypoints")

    if sc.association is not None:
        out.extend(_check_association(sc))
    return out


def _check_association(sc: Scenario) -> list[str]:
    """Consistency of a pre-seeded association (activity bound and service floor)."""
    import numpy as np

    from .topology import AssociationState, validate_constraints

    a = sc.association
    if not isinstance(a, dict) or set(a) - {"alpha", "beta", "near"} or "beta" not in a:
        return ["association: expected an object with 'beta' and optional 'alpha', 'near'"]
    try:
        beta = np.asarray(a["beta"], dtype=bool)
        near = np.asarray(a.get("near", np.ones_like(beta)), dtype=bool)
        if beta.ndim != 2 or near.shape != beta.shape:
            raise ValueError
        if "alpha" in a:
            alpha = np.asarray(a["alpha"], dtype=bool)
            if alpha.shape != (beta.shape[1],):
                raise ValueError
        else:
            alpha = (beta & near).any(axis=0)
    except (TypeError, ValueError):
        return ["association: matrices must be rectangular 0/1 arrays of matching shape"]
    return [f"association: {v}" for v in validate_constraints(AssociationState(alpha, beta, near))]
