import json

import pytest

from mmwave_sdn.errors import ConfigError
from mmwave_sdn.scenario import Scenario, parse_scenario, validate_scenario


def test_table_defaults():
    sc = Scenario()
    assert (sc.carrier_ghz, sc.bandwidth_ghz, sc.tx_power_dbm, sc.shadow_sigma_db) == (28.0, 1.0, 37.0, 8.2)
    assert (sc.noise_dbm_hz, sc.min_sinr_db, sc.users_per_cell) == (-174.0, -10.0, 100)
    assert sc.speed_sweep == [30.0, 45.0, 60.0, 75.0, 90.0]
    assert sc.seeds == 100
    assert validate_scenario(sc) == []


def test_missing_keys_take_defaults():
    sc = parse_scenario('{"speed_sweep": [60]}')
    assert sc.speed_sweep == [60]
    assert sc.replace(speed_sweep=Scenario().speed_sweep) == Scenario()


def test_unknown_key_reports_line():
    with pytest.raises(ConfigError) as exc:
        parse_scenario('{\n  "seeds": 3,\n  "sedes": 4\n}')
    assert exc.value.violations == ["unknown key 'sedes' (line 3)"]


@pytest.mark.parametrize("text", ["", "   \n", "{", "[1, 2]", '{"seeds": }'])
def test_unparseable_files(text):
    with pytest.raises(ConfigError):
        parse_scenario(text)


def test_all_violations_reported():
    text = json.dumps({"seeds": 0, "enter_threshold_db": -20.0, "background_activity": 2.0,
                       "schemes": ["quantum"]}, indent=1)
    with pytest.raises(ConfigError) as exc:
        parse_scenario(text)
    joined = "\n".join(exc.value.violations)
    assert len(exc.value.violations) == 4
    for key in ("seeds", "hysteresis rule", "background_activity", "schemes"):
        assert key in joined


@pytest.mark.parametrize("patch, needle", [
    ({"total_slots": 0}, "total_slots"),
    ({"speed_sweep": [0.0]}, "required when the sweep contains speed 0"),
    ({"speed_sweep": [30, 30]}, "distinct"),
    ({"speed_sweep": []}, "speed_sweep"),
    ({"trajectory": [[0, 0]]}, "waypoints"),
    ({"trajectory": [[0, 0], [0, 0]]}, "differ"),
    ({"trajectory": "loop"}, "auto-edge"),
    ({"gnb_count": 1}, "auto-edge needs"),
    ({"gnb_count": 99}, "gnb_count"),
    ({"near_set_metric": "rssi"}, "near_set_metric"),
    ({"seeds": 2.5}, "integer"),
    ({"carrier_ghz": "28"}, "finite number"),
    ({"exit_threshold_db": -13.0}, "hysteresis rule"),
])
def test_single_violation(patch, needle):
    with pytest.raises(ConfigError) as exc:
        parse_scenario(json.dumps(patch))
    assert needle in str(exc.value)


def test_speed_zero_with_total_slots_is_fine():
    sc = parse_scenario('{"speed_sweep": [0], "total_slots": 10}')
    assert sc.total_slots == 10


def test_explicit_waypoints_accepted():
    assert parse_scenario('{"trajectory": [[0, 50], [400, 50]]}').trajectory == [[0, 50], [400, 50]]


def test_preseeded_association_checked():
    good = {"association": {"beta": [[1, 0, 0]], "near": [[1, 1, 0]]}}
    assert parse_scenario(json.dumps(good)).association is not None
    inactive = {"association": {"beta": [[1, 0, 0]], "alpha": [0, 0, 0]}}
    with pytest.raises(ConfigError, match="activity-bound"):
        parse_scenario(json.dumps(inactive))
    unserved = {"association": {"beta": [[0, 0, 0]]}}
    with pytest.raises(ConfigError, match="served-at-least-once"):
        parse_scenario(json.dumps(unserved))
    with pytest.raises(ConfigError, match="rectangular"):
        parse_scenario(json.dumps({"association": {"beta": [[1, 0], [1]]}}))
