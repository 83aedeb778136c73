import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from amprint.errors import ConfigError, UnsupportedCharacteristicError
from amprint.scoring import (
    CRITICAL_VALUES,
    DEFECT_SCORES,
    PartCharacteristic,
    PrintabilityConfig,
    cantilever_stress_surrogate,
    config_from_dict,
    config_to_dict,
    critical_value_table,
    fit_bracket,
    fit_coefficient,
    fit_objective,
    fitted_coefficient,
    global_failure_prob,
    lookup_critical_value,
    overall_printability,
    part_failure_prob,
    probe_unimodality,
)


def grid_search_oracle(w, n_points=100_000):
    """Brute-force log-grid minimizer of the fit objective (independent path)."""
    lo, hi = fit_bracket(w)
    cs = np.logspace(np.log10(lo), np.log10(hi), n_points)
    best_c, best_v = None, np.inf
    for chunk in np.array_split(cs, max(1, n_points // 250)):
        vals = fit_objective(chunk, w)
        k = int(np.argmin(vals))
        if vals[k] < best_v:
            best_v, best_c = float(vals[k]), float(chunk[k])
    return best_c


def bj_config(characteristics, k=0.9, qs=1.0, **kwargs):
    return PrintabilityConfig(
        technology="BJ",
        sensitivity={x: k for x in ("accuracy", "surface_texture", "abnormalities")},
        characteristics=characteristics,
        qs=qs,
        **kwargs,
    )


# -- coefficient fitting -------------------------------------------------------


@pytest.mark.parametrize("w", [0.5, 2.0, 2.78e4])
def test_fit_matches_grid_oracle(w):
    c = fit_coefficient(w)
    oracle = grid_search_oracle(w, 20_000)
    assert abs(c - oracle) / oracle < 1e-3


def test_fit_directions_share_minimizer():
    assert fit_coefficient(2.0, "decreasing") == fit_coefficient(2.0, "increasing")


def test_fit_rejects_bad_input():
    with pytest.raises(ConfigError):
        fit_coefficient(-1.0)
    with pytest.raises(ConfigError):
        fit_coefficient(2.0, "sideways")


def test_fitted_coefficient_cached():
    a = fitted_coefficient(1.5)
    b = fitted_coefficient(1.5)
    assert a == b


def test_probe_unimodality_single_minimum():
    for w in (0.5, 2.0, 45.0):
        count, argmin = probe_unimodality(w, 4000)
        assert count == 1
        assert abs(argmin - fit_coefficient(w)) / argmin < 0.01


def test_woman_of_pindos_strap_survival():
    # thin strap 1.5 mm on BJ (w = 2 mm), predicted error 0.18 mm
    c = fit_coefficient(2.0)
    char = PartCharacteristic("thin_part", {"thickness": 1.5}, epsilon=0.18)
    p_f = part_failure_prob(char, "BJ", c)
    assert 1.0 - p_f == pytest.approx(0.300, abs=0.05)


def test_coefficient_scaling_property():
    # the ramp width is 2w - 0.05, so c*w is nearly constant across w
    products = [fit_coefficient(w) * w for w in (0.5, 1.5, 2.0)]
    assert max(products) / min(products) < 1.05


# -- part characteristic probabilities ------------------------------------------


def test_midpoint_is_half_exactly():
    for tech, kind, dim, w in [
        ("BJ", "hole", "diameter", 1.5),
        ("FDM", "bridge", "length", 10.0),
    ]:
        char = PartCharacteristic(kind, {dim: w}, epsilon=0.0, significance=1.0)
        assert part_failure_prob(char, tech, c=1.234) == 0.5


def test_monotonicity_decreasing_kind():
    c = fitted_coefficient(2.0)
    ds = np.linspace(0.1, 6.0, 40)
    p = [part_failure_prob(PartCharacteristic("pin", {"diameter": d}), "BJ", c) for d in ds]
    assert np.all(np.diff(p) < 0)
    eps = np.linspace(0.0, 1.0, 20)
    pe = [
        part_failure_prob(PartCharacteristic("pin", {"diameter": 3.0}, epsilon=e), "BJ", c)
        for e in eps
    ]
    assert np.all(np.diff(pe) > 0)


def test_monotonicity_increasing_kind():
    c = fitted_coefficient(10.0)
    lengths = np.linspace(1.0, 30.0, 25)
    p = [
        part_failure_prob(PartCharacteristic("bridge", {"length": d}), "FDM", c)
        for d in lengths
    ]
    assert np.all(np.diff(p) > 0)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.01, 1.0), st.floats(0.1, 8.0))
def test_significance_linearity(s, d):
    c = fitted_coefficient(2.0)
    base = part_failure_prob(
        PartCharacteristic("thin_part", {"thickness": d}, significance=1.0), "BJ", c
    )
    scaled = part_failure_prob(
        PartCharacteristic("thin_part", {"thickness": d}, significance=s), "BJ", c
    )
    assert scaled == s * base  # exact, not approximate


def test_overhang_ignores_epsilon():
    c = fitted_coefficient(2.78e4)
    with_eps = part_failure_prob(
        PartCharacteristic("overhang", {"stress": 1.856e4}, epsilon=0.13), "BJ", c
    )
    without = part_failure_prob(
        PartCharacteristic("overhang", {"stress": 1.856e4}), "BJ", c
    )
    assert with_eps == without


def test_unsupported_characteristics_raise():
    with pytest.raises(UnsupportedCharacteristicError) as exc:
        lookup_critical_value("BJ", PartCharacteristic("bridge", {"length": 5.0}))
    assert "bridge" in str(exc.value) and "BJ" in str(exc.value)
    with pytest.raises(UnsupportedCharacteristicError):
        lookup_critical_value("MJ", PartCharacteristic("overhang", {"angle": 30.0}))
    with pytest.raises(ConfigError):
        lookup_critical_value("BJ", PartCharacteristic("hole", {"radius": 3.0}))


def test_multi_dimension_governed_by_minimum():
    char = PartCharacteristic("embossed", {"width": 1.5, "height": 0.8})
    w, name, value, direction = lookup_critical_value("BJ", char)
    assert (name, value, w, direction) == ("height", 0.8, 0.5, "decreasing")


def test_fdm_overhang_is_angle_table_entry():
    w, name, value, direction = lookup_critical_value(
        "FDM", PartCharacteristic("overhang", {"angle": 30.0})
    )
    assert (w, name, direction) == (45.0, "angle", "increasing")


# -- global probability ----------------------------------------------------------


def test_published_survival_triple():
    for k, want in [(0.1, 0.99004), (0.5, 0.95089), (0.9, 0.91288)]:
        p_g, detail = global_failure_prob(bj_config([], k=k))
        assert 1.0 - p_g == pytest.approx(want, abs=1e-3)
        assert detail["qs"] == 1.0


def test_starred_preset_documented_divergence():
    p_g, _ = global_failure_prob(bj_config([], k=0.9, defect_preset="starred"))
    assert 1.0 - p_g == pytest.approx(0.92116, abs=1e-4)


def test_zero_sensitivity_means_no_global_failure():
    p_g, _ = global_failure_prob(bj_config([], k=0.0))
    assert p_g == 0.0


def test_qs_below_one_raises_failure_probability():
    base, _ = global_failure_prob(bj_config([], k=0.9, qs=1.0))
    rough, _ = global_failure_prob(bj_config([], k=0.9, qs=0.9))
    assert rough > base


def test_qs_validation_and_warning():
    with pytest.raises(ConfigError):
        bj_config([], qs=0.0).quality_ratio()
    qs, warnings = bj_config([], qs=1.2).quality_ratio()
    assert qs == 1.2 and warnings
    cfg = bj_config([], qs=None)
    cfg.mesh_area, cfg.cad_area = 95.0, 100.0
    assert cfg.quality_ratio()[0] == pytest.approx(0.95)


# -- overall ----------------------------------------------------------------------


def test_overall_is_product_of_factors():
    chars = [
        PartCharacteristic("hole", {"diameter": 3.0}, epsilon=0.13076),
        PartCharacteristic("pin", {"diameter": 2.5}, epsilon=0.13076),
    ]
    report = overall_printability(bj_config(chars))
    expected = report.global_survival
    for entry in report.characteristics:
        expected *= entry["survival"]
    assert report.overall == pytest.approx(expected, rel=1e-12)
    assert 0.0 <= report.overall <= 1.0


def test_survival_one_characteristic_is_neutral():
    base = overall_printability(bj_config(
        [PartCharacteristic("hole", {"diameter": 2.0}, epsilon=0.13076)]
    ))
    # a pin far above critical saturates to survival exactly 1.0 in float
    extra = overall_printability(bj_config([
        PartCharacteristic("hole", {"diameter": 2.0}, epsilon=0.13076),
        PartCharacteristic("pin", {"diameter": 5000.0}),
    ]))
    assert extra.characteristics[1]["survival"] == 1.0
    assert extra.overall == base.overall


def test_report_fields_complete():
    report = overall_printability(bj_config(
        [PartCharacteristic("thin_part", {"thickness": 1.5}, epsilon=0.18,
                            epsilon_source="predicted", label="strap")]
    ))
    doc = report.to_dict()
    entry = doc["characteristics"][0]
    for key in ("kind", "dimensions", "governing_dimension", "critical_value",
                "coefficient", "epsilon", "epsilon_source", "significance",
                "failure_prob", "survival", "direction", "unit"):
        assert key in entry
    assert entry["label"] == "strap"
    assert doc["overall_percent"] == pytest.approx(100 * doc["overall"])
    assert doc["global"]["factors"][0]["defect_score_perfect"] == pytest.approx(1 / 30)


def test_overhang_stress_warning_present():
    report = overall_printability(bj_config(
        [PartCharacteristic("overhang", {"stress": 1.856e4})]
    ))
    assert any("d_min" in w for w in report.warnings)


# -- configuration wire format ------------------------------------------------------


def woman_of_pindos_doc():
    return {
        "schema_version": 1,
        "technology": "BJ",
        "application": {"name": "art", "k": 0.9},
        "qs": 1.0,
        "characteristics": [
            {
                "kind": "thin_part",
                "dimensions": {"thickness": 1.5},
                "epsilon": 0.18,
                "epsilon_source": "predicted",
                "significance": 1.0,
                "label": "knapsack strap",
            }
        ],
    }


def test_woman_of_pindos_overall():
    config = config_from_dict(woman_of_pindos_doc())
    report = overall_printability(config)
    assert report.overall == pytest.approx(0.2738, abs=0.05)
    assert report.global_survival == pytest.approx(0.9128, abs=0.005)


def test_config_round_trip():
    config = config_from_dict(woman_of_pindos_doc())
    doc = config_to_dict(config)
    again = config_from_dict(doc)
    assert overall_printability(again).overall == overall_printability(config).overall


def test_config_parse_errors():
    with pytest.raises(ConfigError, match="technology"):
        config_from_dict({})
    with pytest.raises(ConfigError, match="schema_version"):
        config_from_dict({"schema_version": 99, "technology": "BJ"})
    with pytest.raises(ConfigError, match="characteristics\\[0\\]"):
        config_from_dict({"technology": "BJ", "characteristics": [{"kind": "hole"}]})
    with pytest.raises(ConfigError, match="dimension"):
        config_from_dict({
            "technology": "BJ",
            "characteristics": [{"kind": "hole", "dimensions": {"diameter": -3}}],
        })
    with pytest.raises(ConfigError, match="significance"):
        PartCharacteristic("hole", {"diameter": 1.0}, significance=0.0)
    with pytest.raises(ConfigError, match="technology"):
        config_from_dict({"technology": "SLA"})
    with pytest.raises(ConfigError):
        config_from_dict({"technology": "BJ", "k": "high"})


def test_critical_value_table_shape():
    table = critical_value_table("BJ")
    assert table["hole"]["dimensions"]["diameter"]["value"] == 1.5
    assert table["unsupported_wall"]["dimensions"]["thickness"]["value"] == 3.0
    assert table["overhang"]["dimensions"]["stress"]["unit"] == "N/m^2"
    assert table["overhang"]["direction"] == "increasing"
    assert "bridge" not in table
    fdm = critical_value_table("FDM")
    assert fdm["bridge"]["dimensions"]["length"]["value"] == 10.0
    with pytest.raises(ConfigError):
        critical_value_table("XYZ")


def test_defect_score_presets_cover_all():
    for preset, by_tech in DEFECT_SCORES.items():
        for tech in CRITICAL_VALUES:
            for x in ("accuracy", "surface_texture", "abnormalities", "support_construction"):
                assert 0.0 < by_tech[tech][x] <= 1.0


# -- cantilever surrogate -------------------------------------------------------------


def test_cantilever_structure():
    base = cantilever_stress_surrogate(40.0, 15.0, 2.0, 45.0)
    assert cantilever_stress_surrogate(40.0, 15.0, 4.0, 45.0) == pytest.approx(base / 2)
    assert cantilever_stress_surrogate(80.0, 15.0, 2.0, 45.0) == pytest.approx(base * 4)
    # width does not enter the prismatic formula
    assert cantilever_stress_surrogate(40.0, 99.0, 2.0, 45.0) == pytest.approx(base)


def test_cantilever_hand_value():
    # independent evaluation: 3 * 1360 * 9.8 * 0.085^2 * cos(45 deg) / 0.0015
    hand = 3.0 * 1360.0 * 9.8 * 0.085**2 * math.cos(math.pi / 4) / 0.0015
    got = cantilever_stress_surrogate(85.0, 15.0, 1.5, 45.0)
    assert got == pytest.approx(hand, rel=1e-12)
    # the published FEA for this geometry reports 3.33e4 N/m^2; the prismatic
    # surrogate overshoots by a geometry-dependent factor (documented, not asserted)
    factor = got / 3.33e4
    print(f"cantilever surrogate vs FEA reference factor: {factor:.2f}")
    assert factor > 1.0


def test_cantilever_validation():
    with pytest.raises(ConfigError):
        cantilever_stress_surrogate(0.0, 1.0, 1.0, 45.0)


# -- benchmark spot checks (full tables run in the acceptance suite) -------------------


def test_benchmark1_hole_survival():
    c = fitted_coefficient(1.5)
    char = PartCharacteristic("hole", {"diameter": 3.0}, epsilon=0.13076)
    assert 1.0 - part_failure_prob(char, "BJ", c) == pytest.approx(0.9117, abs=0.05)


def test_benchmark_overhang_survivals():
    c = fitted_coefficient(2.78e4)
    for stress, want in [(1.856e4, 0.6882), (1.7825e4, 0.7036), (1.5276e4, 0.7505)]:
        char = PartCharacteristic("overhang", {"stress": stress})
        assert 1.0 - part_failure_prob(char, "BJ", c) == pytest.approx(want, abs=0.02)


def test_empty_config_with_zero_k_scores_one():
    report = overall_printability(bj_config([], k=0.0))
    assert report.overall == 1.0


def test_json_serializable(tmp_path):
    report = overall_printability(config_from_dict(woman_of_pindos_doc()))
    text = json.dumps(report.to_dict())
    assert "overall" in json.loads(text)
