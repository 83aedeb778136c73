import numpy as np
import pytest

from amprint.errors import RegistrationError
from amprint.registration import (
    ErrorStats,
    RigidTransform,
    c2c_distance,
    icp_align,
)
from test_spatial import brute_force_nn


def rot_z(deg):
    a = np.radians(deg)
    return np.array([
        [np.cos(a), -np.sin(a), 0.0],
        [np.sin(a), np.cos(a), 0.0],
        [0.0, 0.0, 1.0],
    ])


@pytest.fixture(scope="module")
def blob():
    rng = np.random.default_rng(11)
    return rng.uniform(0.0, 40.0, (300, 3))


def test_identity_when_source_equals_target(blob):
    transform, info = icp_align(blob, blob)
    assert np.abs(transform.rotation - np.eye(3)).max() < 1e-9
    assert np.linalg.norm(transform.translation) < 1e-9
    assert info["rms"] == pytest.approx(0.0, abs=1e-12)


def test_recovers_known_transform(blob):
    truth = RigidTransform(rot_z(10.0), np.array([1.0, 2.0, 3.0]))
    target = truth.apply(blob)
    recovered, info = icp_align(blob, target)
    assert np.abs(recovered.rotation - truth.rotation).max() < 1e-3
    assert np.abs(recovered.translation - truth.translation).max() < 1e-3
    inv = recovered.inverse()
    back = inv.apply(target)
    assert np.abs(back - blob).max() < 1e-3


def test_noise_floor(blob):
    rng = np.random.default_rng(5)
    noisy = blob + rng.uniform(-0.05, 0.05, blob.shape)
    _, info = icp_align(noisy, blob)
    assert info["rms"] <= 0.05 * np.sqrt(3.0)


def test_never_worse_than_identity(blob):
    # target far away but overlapping start: final RMS must be <= start RMS
    target = blob + np.array([0.5, -0.3, 0.2])
    _, info = icp_align(blob, target)
    assert info["rms"] <= info["rms_history"][0] + 1e-12


def test_invariant_under_common_rigid_motion(blob):
    rng = np.random.default_rng(12)
    truth = RigidTransform(rot_z(8.0), np.array([0.5, -1.0, 2.0]))
    target = truth.apply(blob)
    a, _ = icp_align(blob, target)

    common = RigidTransform(rot_z(-31.0), rng.uniform(-20, 20, 3))
    b, _ = icp_align(common.apply(blob), common.apply(target))
    lhs = b.compose(common)
    rhs = common.compose(a)
    assert np.abs(lhs.rotation - rhs.rotation).max() < 1e-6
    assert np.abs(lhs.translation - rhs.translation).max() < 1e-6


def test_collinear_source_rejected():
    line = np.column_stack([np.linspace(0, 1, 10), np.zeros(10), np.zeros(10)])
    target = np.random.default_rng(0).uniform(size=(50, 3))
    with pytest.raises(RegistrationError):
        icp_align(line, target)


def test_rigid_transform_validation():
    with pytest.raises(RegistrationError):
        RigidTransform(np.eye(3) * 2.0, np.zeros(3))           # scale
    with pytest.raises(RegistrationError):
        RigidTransform(np.diag([1.0, 1.0, -1.0]), np.zeros(3))  # reflection
    t = RigidTransform.identity()
    assert np.array_equal(t.apply(np.ones((2, 3))), np.ones((2, 3)))


def test_transform_json_round_trip(tmp_path):
    t = RigidTransform(rot_z(25.0), np.array([1.0, -2.0, 0.5]))
    p = tmp_path / "t.json"
    t.save(p, rms=0.12)
    import json

    doc = json.loads(p.read_text())
    back = RigidTransform.from_dict(doc)
    assert np.allclose(back.rotation, t.rotation)
    assert np.allclose(back.translation, t.translation)
    assert doc["rms"] == 0.12


def test_c2c_subset_is_zero(blob):
    stats = c2c_distance(blob[:100], blob)
    assert np.all(stats.distances == 0.0)
    assert stats.mae == 0.0


def test_c2c_hand_example():
    stats = c2c_distance(np.array([[0.0, 0.0, 0.0]]),
                         np.array([[3.0, 4.0, 0.0], [10.0, 0.0, 0.0]]))
    assert stats.distances[0] == pytest.approx(5.0)


def test_c2c_matches_brute_force():
    rng = np.random.default_rng(9)
    src = rng.uniform(-10, 10, (200, 3))
    tgt = rng.uniform(-10, 10, (2000, 3))
    stats = c2c_distance(src, tgt)
    db, _ = brute_force_nn(tgt, src)
    assert np.array_equal(stats.distances, db)


def test_error_stats_consistency():
    rng = np.random.default_rng(4)
    d = np.abs(rng.normal(size=500))
    stats = ErrorStats.from_distances(d)
    assert stats.mae == float(d.mean())
    assert stats.std == float(d.std(ddof=0))
    assert stats.std_kind == "population"
    with pytest.raises(ValueError):
        ErrorStats.from_distances(np.array([-1.0]))


def test_trim_fraction(blob):
    # with outliers in the source, trimming still converges
    truth = RigidTransform(rot_z(5.0), np.array([0.3, 0.1, -0.2]))
    target = truth.apply(blob)
    src = np.vstack([blob, [[500.0, 500.0, 500.0]] * 5])
    recovered, _ = icp_align(src, target, trim=0.95)
    assert np.abs(recovered.rotation - truth.rotation).max() < 0.05
    with pytest.raises(RegistrationError):
        icp_align(blob, target, trim=1.5)
