import itertools
import math

import numpy as np
import pytest

from mrpchan.core import (
    ChannelDomainError,
    ConstraintSet,
    DrawSite,
    InfeasibleConstraintsError,
    MalformedInputError,
    MeasuredTargets,
    Point3D,
    RandomStream,
    RpPlacement,
    Violation,
    placement_from_coordinates,
    rp_coordinates,
    validate_placement,
    virtual_anchor,
    wrap180,
    wrap360,
)


def placement(*entries):
    return RpPlacement.from_entries(entries)


def test_default_constraints_accept_published_placement():
    p = placement((6.19, 0.0, 90.0), (6.50, 130.69, 90.0), (11.49, 243.28, 90.0))
    report = validate_placement(p, ConstraintSet())
    assert report.ok
    assert report.violations == ()


@pytest.mark.parametrize(
    "entries, expected",
    [
        # AoDs 10 degrees apart
        (
            [(5.0, 0.0, 90.0), (6.0, 10.0, 90.0)],
            [Violation("aod_separation", (0, 1))],
        ),
        # 355 and 5 are 10 degrees apart across north
        (
            [(5.0, 355.0, 90.0), (6.0, 5.0, 90.0)],
            [Violation("aod_separation", (0, 1))],
        ),
        ([(200.0, 0.0, 90.0)], [Violation("distance_bounds", (0,))]),
        ([(5.0, 0.0, 45.0)], [Violation("zod_bounds", (0,))]),
        (
            [(5.0, 72.0 * k, 90.0) for k in range(5)] + [(5.0, 36.0, 90.0)],
            [Violation("q_range", ())],
        ),
    ],
)
def test_validate_placement_violations(entries, expected):
    report = validate_placement(placement(*entries), ConstraintSet())
    assert not report.ok
    assert list(report.violations) == expected


def test_validate_placement_aod_separation_at_limit():
    p = placement((5.0, 0.0, 90.0), (5.0, 20.0, 90.0))
    assert validate_placement(p, ConstraintSet()).ok


@pytest.mark.parametrize(
    "entries",
    [
        [(5.0, 0.0, 90.0), (6.0, 130.0, 90.0), (7.0, 250.0, 90.0)],
        [(5.0, 0.0, 90.0), (6.0, 10.0, 90.0), (200.0, 180.0, 90.0)],
    ],
)
def test_validate_placement_ignores_rp_order(entries):
    p = placement(*entries)
    expected = validate_placement(p, ConstraintSet())
    for order in itertools.permutations(range(3)):
        report = validate_placement(p.permuted(order), ConstraintSet())
        assert report.ok == expected.ok
        assert report.constraints == expected.constraints


def test_validate_placement_distance_separation():
    c = ConstraintSet(delta_d_m=1.0)
    p = placement((5.0, 0.0, 90.0), (5.5, 90.0, 90.0), (7.0, 180.0, 90.0))
    report = validate_placement(p, c)
    assert report.constraints == ("distance_separation",)
    assert report.violations[0].indices == (0, 1)


def test_validate_placement_rejects_ragged():
    with pytest.raises(MalformedInputError):
        validate_placement(RpPlacement((5.0, 6.0), (0.0,), (90.0,)), ConstraintSet())


def test_validate_placement_rejects_empty():
    with pytest.raises(MalformedInputError):
        validate_placement(RpPlacement((), (), ()), ConstraintSet())


def test_constraint_set_check():
    ConstraintSet().check()
    with pytest.raises(ValueError):
        ConstraintSet(q_min=3, q_max=2).check()
    with pytest.raises(ValueError):
        ConstraintSet(d_min_m=10.0, d_max_m=1.0).check()
    with pytest.raises(ValueError):
        ConstraintSet(delta_phi_deg=-1.0).check()


def test_measured_targets_check():
    MeasuredTargets(-80.8125, 32.92e-9, 89.98).check()
    with pytest.raises(ValueError):
        MeasuredTargets(-80.8125, -1e-9, 89.98).check()
    with pytest.raises(ValueError):
        MeasuredTargets(-80.8125, 32.92e-9, 400.0).check()


def test_rp_coordinates_on_axes():
    p = placement((2.0, 0.0, 90.0), (3.0, 90.0, 90.0), (4.0, 0.0, 0.0))
    points = rp_coordinates(Point3D(1.0, 1.0, 1.0), p)
    np.testing.assert_allclose(
        [tuple(point) for point in points],
        [(3.0, 1.0, 1.0), (1.0, 4.0, 1.0), (1.0, 1.0, 5.0)],
        atol=1e-12,
    )


def test_coordinate_roundtrip():
    rng = np.random.default_rng(7)
    tx = Point3D(0.5, -1.0, 1.5)
    p = RpPlacement(
        distances_m=tuple(rng.uniform(0.5, 50.0, 20)),
        aod_deg=tuple(rng.uniform(0.0, 360.0, 20)),
        zod_deg=tuple(rng.uniform(1.0, 179.0, 20)),
    )
    back = placement_from_coordinates(tx, rp_coordinates(tx, p))
    np.testing.assert_allclose(back.distances_m, p.distances_m, atol=1e-9)
    np.testing.assert_allclose(back.zod_deg, p.zod_deg, atol=1e-9)
    np.testing.assert_allclose(
        wrap180(np.subtract(back.aod_deg, p.aod_deg)), 0.0, atol=1e-9
    )


def test_placement_from_coordinates_at_tx():
    with pytest.raises(ChannelDomainError):
        placement_from_coordinates(Point3D(0, 0, 0), [Point3D(0, 0, 0)])


def test_virtual_anchor_doubles_the_distance():
    tx = Point3D(1.0, 2.0, 3.0)
    anchor = virtual_anchor(tx, Point3D(4.0, 6.0, 3.0))
    assert anchor == Point3D(7.0, 10.0, 3.0)
    assert math.dist(tx, anchor) == pytest.approx(10.0)


def test_placement_helpers():
    p = placement((5.0, 0.0, 90.0), (6.0, 120.0, 80.0))
    assert p.size == 2
    assert p.entries()[1].aod_deg == 120.0
    assert p.permuted([1, 0]).distances_m == (6.0, 5.0)
    with pytest.raises(MalformedInputError):
        RpPlacement.from_entries([(1.0, 2.0)])


def test_wrap_helpers():
    np.testing.assert_array_equal(wrap360([-10.0, 360.0, 725.0]), [350.0, 0.0, 5.0])
    assert wrap360(-1e-20) == 0.0
    np.testing.assert_array_equal(
        wrap180([180.0, -180.0, 190.0]), [-180.0, -180.0, -170.0]
    )


def test_random_stream_is_deterministic():
    a = RandomStream(5).child(DrawSite.LSP, 3).generator().random(4)
    b = RandomStream(5).child(DrawSite.LSP, 3).generator().random(4)
    np.testing.assert_array_equal(a, b)


def test_random_stream_children_are_independent():
    root = RandomStream(5)
    a = root.child(0).generator().random(4)
    b = root.child(1).generator().random(4)
    c = RandomStream(6).child(0).generator().random(4)
    assert not np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_random_stream_child_keeps_path():
    assert RandomStream(1).child(2).child(3) == RandomStream(1, (2, 3))


def test_random_stream_rejects_negative():
    with pytest.raises(ValueError):
        RandomStream(1).child(-1)
    with pytest.raises(ValueError):
        RandomStream(-1).generator()


def test_infeasible_error_names_constraint():
    e = InfeasibleConstraintsError("aod_separation", "too many RPs")
    assert e.constraint == "aod_separation"
    assert "too many RPs" in str(e)
