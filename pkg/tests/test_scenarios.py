import copy
import csv
import io
import json
import math

import numpy as np
import pytest

from drivelab.scenarios import (
    Box3,
    ParamError,
    ParamSpec,
    Scenario,
    ScenarioError,
    actor_ttc,
    actor_visibility,
    builtin_scenario_ids,
    load_builtin,
    run_point,
    run_sweep,
    surface_points,
    time_to_collision,
    visibility,
)
from drivelab.sim import DT, make_actor

from oracles import oracle_ttc_stepping, oracle_visibility_dense


def minimal_doc():
    return {
        "format_version": 1,
        "scenario_id": "mini",
        "title": "minimal",
        "description": "",
        "duration_s": 2.0,
        "world": {"lane_width": 3.7, "roads": [{"points": [[0, 0], [200, 0]], "lanes": 2, "oneway": True}]},
        "occluders": [],
        "params": [{"name": "speed", "lo": 1, "hi": 10, "step": 1, "default": 5}],
        "actors": [
            {"id": "ego", "kind": "car", "x": 5, "y": 0, "heading_deg": 0, "speed": "$speed",
             "ego": True, "driver": {"type": "constant"}},
            {"id": "other", "kind": "car", "x": 60, "y": 0, "heading_deg": 0, "speed": 0,
             "driver": {"type": "constant"}},
        ],
        "viewpoints": [{"name": "eyes", "actor": "ego", "eye": [0.5, 0.0, 1.2]}],
        "analysis": {"viewpoint": "eyes", "target": "other", "decel": 6.0, "reaction_s": 1.5},
        "sweep_default": "speed",
    }


class TestParamSpec:
    def test_grid_includes_both_endpoints(self):
        spec = ParamSpec("v", 5.0, 25.0, 1.0, 9.0)
        grid = spec.grid()
        assert grid[0] == 5.0 and grid[-1] == 25.0 and len(grid) == 21

    def test_grid_with_fractional_step(self):
        grid = ParamSpec("w", 0.8, 2.2, 0.1, 1.4).grid()
        assert len(grid) == 15
        np.testing.assert_allclose(grid[-1], 2.2)

    def test_validate_names_the_violated_bound(self):
        spec = ParamSpec("ego_speed", 8, 22, 1, 15)
        with pytest.raises(ParamError, match=r"ego_speed=99 outside \[8, 22\]"):
            spec.validate(99)
        with pytest.raises(ParamError, match=r"ego_speed=-1 outside \[8, 22\]"):
            spec.validate(-1)

    def test_validate_accepts_boundary_values(self):
        spec = ParamSpec("x", 0.0, 1.0, 0.5, 0.0)
        assert spec.validate(0.0) == 0.0
        assert spec.validate(1.0) == 1.0

    def test_non_numeric_rejected(self):
        with pytest.raises(ParamError, match="must be a number"):
            ParamSpec("x", 0, 1, 1, 0).validate("fast")

    def test_bad_ranges_rejected(self):
        with pytest.raises(ScenarioError):
            ParamSpec("x", 0, 1, -1, 0)
        with pytest.raises(ScenarioError):
            ParamSpec("x", 2, 1, 1, 1.5)
        with pytest.raises(ScenarioError):
            ParamSpec("x", 0, 1, 1, 5)


class TestBox3:
    def test_footprint_axis_aligned(self):
        box = Box3(cx=1.0, cy=2.0, half_x=3.0, half_y=0.5, z_lo=0.0, z_hi=2.0)
        np.testing.assert_allclose(
            box.footprint(), [(4.0, 2.5), (-2.0, 2.5), (-2.0, 1.5), (4.0, 1.5)]
        )

    def test_placed_rotates_into_world_frame(self):
        local = Box3(cx=2.0, cy=-1.0, half_x=0.1, half_y=0.1, z_lo=0.0, z_hi=1.0)
        world = local.placed(10.0, 5.0, math.radians(90.0))
        assert world.cx == pytest.approx(11.0)
        assert world.cy == pytest.approx(7.0)
        assert world.yaw_deg == pytest.approx(90.0)

    def test_dict_round_trip(self):
        box = Box3(cx=1, cy=2, half_x=3, half_y=4, z_lo=0.5, z_hi=6, yaw_deg=15)
        assert Box3.from_dict(box.to_dict()) == box

    def test_degenerate_extents_rejected(self):
        with pytest.raises(ScenarioError):
            Box3(cx=0, cy=0, half_x=0, half_y=1, z_lo=0, z_hi=1)
        with pytest.raises(ScenarioError):
            Box3(cx=0, cy=0, half_x=1, half_y=1, z_lo=1, z_hi=1)


class TestTimeToCollision:
    def test_head_on_closing(self):
        # gap 100 between centers, combined radius 2, closing at 20 m/s
        t = time_to_collision((0, 0), (10, 0), 1.0, (100, 0), (-10, 0), 1.0)
        assert t == pytest.approx(98.0 / 20.0, abs=1e-12)

    def test_parallel_same_velocity_never_touches(self):
        assert time_to_collision((0, 0), (5, 0), 1.0, (10, 10), (5, 0), 1.0) is None

    def test_receding_returns_none(self):
        assert time_to_collision((0, 0), (-5, 0), 1.0, (10, 0), (5, 0), 1.0) is None

    def test_already_overlapping_returns_zero(self):
        assert time_to_collision((0, 0), (0, 0), 2.0, (1, 0), (0, 0), 2.0) == 0.0

    def test_sideswipe_miss(self):
        # passes 5 m abeam, radii sum 2: no contact
        assert time_to_collision((0, 0), (10, 0), 1.0, (50, 5), (0, 0), 1.0) is None

    def test_matches_stepping_oracle_on_random_encounters(self):
        rng = np.random.Generator(np.random.PCG64(7))
        checked = 0
        for k in range(300):
            pa = rng.uniform(-50, 50, 2)
            pb = rng.uniform(-50, 50, 2)
            va = rng.uniform(-15, 15, 2)
            if k % 2 == 0:
                vb = rng.uniform(-15, 15, 2)
            else:
                # aim b roughly at a so a good share of draws actually collide
                aim = pa - pb
                aim = aim / max(np.hypot(*aim), 1e-9)
                vb = va + rng.uniform(2, 12) * aim + rng.normal(0, 0.4, 2)
            ra, rb = rng.uniform(0.3, 3.0, 2)
            fast = time_to_collision(pa, va, ra, pb, vb, rb)
            slow = oracle_ttc_stepping(pa, va, ra, pb, vb, rb, horizon=30.0, dt=1e-3)
            if fast is None or fast > 30.0:
                assert slow is None or slow > 29.9
            else:
                assert slow is not None
                assert abs(fast - slow) < 1e-3
                checked += 1
        assert checked > 30  # the draw must actually produce collisions

    def test_actor_ttc_flags_rectangle_contact(self):
        a = make_actor("a", "car", x=0, y=0, heading=0.0, speed=10.0)
        b = make_actor("b", "car", x=100, y=0, heading=math.pi, speed=10.0)
        t, rect = actor_ttc(a, b)
        # discs circumscribe the cars, so disc contact precedes bumper contact
        assert t == pytest.approx((100 - 2 * a.bounding_radius()) / 20.0, abs=1e-9)
        assert rect is False

    def test_actor_ttc_none_when_diverging(self):
        a = make_actor("a", "car", x=0, y=0, heading=0.0, speed=10.0)
        b = make_actor("b", "car", x=-50, y=0, heading=math.pi, speed=10.0)
        t, rect = actor_ttc(a, b)
        assert t is None and rect is False


class TestSurfacePoints:
    def test_count_and_heights(self):
        pts = surface_points((0, 0), 0.25, 0.25, 1.8, 0.0)
        assert pts.shape == (64, 3)
        expected_z = [(j + 0.5) / 8 * 1.8 for j in range(8)]
        np.testing.assert_allclose(sorted(set(np.round(pts[:, 2], 12))), expected_z)

    def test_points_lie_on_perimeter(self):
        pts = surface_points((3, -2), 1.0, 0.5, 2.0, 0.0)
        local = pts[:, :2] - (3, -2)
        on_edge = (np.abs(np.abs(local[:, 0]) - 1.0) < 1e-9) | (np.abs(np.abs(local[:, 1]) - 0.5) < 1e-9)
        assert on_edge.all()

    def test_column_counts_proportional_to_side_length(self):
        pts = surface_points((0, 0), 1.0, 0.5, 2.0, 0.0)
        cols = {}
        for x, y, _ in np.round(pts, 9):
            cols.setdefault((x, y), 0)
        # 8 perimeter strata over sides of length 2,1,2,1
        long_cols = sum(1 for (x, y) in cols if abs(abs(y) - 0.5) < 1e-9)
        short_cols = sum(1 for (x, y) in cols if abs(abs(x) - 1.0) < 1e-9)
        assert long_cols == 6 and short_cols == 2

    def test_rotation_carries_pattern(self):
        flat = surface_points((0, 0), 1.0, 0.5, 2.0, 0.0)
        spun = surface_points((0, 0), 1.0, 0.5, 2.0, 90.0)
        c, s = 0.0, 1.0
        rotated = np.stack(
            [c * flat[:, 0] - s * flat[:, 1], s * flat[:, 0] + c * flat[:, 1], flat[:, 2]], axis=1
        )
        np.testing.assert_allclose(spun, rotated, atol=1e-12)


WALL_HALF = Box3(cx=5.0, cy=10.0, half_x=0.05, half_y=10.0, z_lo=0.0, z_hi=3.0)
WALL_QUARTER = Box3(cx=5.0, cy=10.0, half_x=0.05, half_y=10.0, z_lo=0.9, z_hi=3.0)
BOX_AROUND_TARGET = Box3(cx=10.0, cy=0.0, half_x=2.0, half_y=2.0, z_lo=0.0, z_hi=3.0)
EYE = (0.0, 0.0, 0.9)
TARGET_PTS = surface_points((10.0, 0.0), 0.25, 0.25, 1.8, 0.0)


def to_oracle_box(box: Box3) -> dict:
    return {
        "center": (box.cx, box.cy, 0.5 * (box.z_lo + box.z_hi)),
        "half": (box.half_x, box.half_y, 0.5 * (box.z_hi - box.z_lo)),
        "yaw_deg": box.yaw_deg,
    }


ORACLE_TARGET = {"half_length": 0.25, "half_width": 0.25, "height": 1.8, "center": (10.0, 0.0), "yaw_deg": 0.0}


class TestVisibility:
    def test_open_field_fully_visible(self):
        assert visibility(EYE, TARGET_PTS, []) == 1.0

    def test_enclosing_box_fully_hidden(self):
        assert visibility(EYE, TARGET_PTS, [BOX_AROUND_TARGET]) == 0.0

    def test_half_wall_blocks_half(self):
        # wall edge at y=0 splits the silhouette exactly in two
        assert visibility(EYE, TARGET_PTS, [WALL_HALF]) == 0.5

    def test_raised_wall_blocks_quarter(self):
        # same wall lifted to eye height: blocks the upper half of one side
        assert visibility(EYE, TARGET_PTS, [WALL_QUARTER]) == 0.75

    @pytest.mark.parametrize(
        "occluders,expected",
        [([], 1.0), ([WALL_HALF], 0.5), ([WALL_QUARTER], 0.75)],
    )
    def test_agrees_with_dense_sampling(self, occluders, expected):
        dense = oracle_visibility_dense(
            EYE, ORACLE_TARGET, [to_oracle_box(b) for b in occluders], n=20_000, seed=3
        )
        strat = visibility(EYE, TARGET_PTS, occluders)
        assert strat == expected
        assert abs(strat - dense) <= 0.02

    def test_adding_occluders_never_reveals_more(self):
        rng = np.random.Generator(np.random.PCG64(11))
        for _ in range(40):
            eye = (rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(0.5, 2.0))
            pts = surface_points(rng.uniform(8, 20, 2), 0.5, 0.5, 1.8, rng.uniform(0, 360))
            boxes = [
                Box3(
                    cx=rng.uniform(0, 15),
                    cy=rng.uniform(-6, 6),
                    half_x=rng.uniform(0.2, 3.0),
                    half_y=rng.uniform(0.2, 3.0),
                    z_lo=0.0,
                    z_hi=rng.uniform(0.5, 4.0),
                    yaw_deg=rng.uniform(0, 360),
                )
                for _ in range(4)
            ]
            fracs = [visibility(eye, pts, boxes[:k]) for k in range(5)]
            for wider, narrower in zip(fracs, fracs[1:]):
                assert narrower <= wider + 1e-12

    def test_actor_visibility_uses_actor_pose(self):
        ped = make_actor("p", "pedestrian", x=10.0, y=0.0, heading=0.0)
        assert actor_visibility(EYE, ped, [WALL_HALF]) == 0.5

    def test_empty_sample_set_rejected(self):
        with pytest.raises(ValueError):
            visibility(EYE, np.empty((0, 3)), [])


class TestScenarioDocument:
    def test_round_trip_through_json(self):
        sc = Scenario.from_json(json.dumps(minimal_doc()))
        again = Scenario.from_json(sc.to_json())
        assert again.to_json() == sc.to_json()

    def test_unsupported_version_rejected(self):
        doc = minimal_doc()
        doc["format_version"] = 99
        with pytest.raises(ScenarioError, match="version"):
            Scenario.from_json(json.dumps(doc))

    def test_invalid_json_rejected(self):
        with pytest.raises(ScenarioError, match="invalid"):
            Scenario.from_json("{nope")

    def test_missing_field_rejected(self):
        doc = minimal_doc()
        del doc["actors"]
        with pytest.raises(ScenarioError, match="missing"):
            Scenario.from_json(json.dumps(doc))

    @pytest.mark.parametrize(
        "mutate,msg",
        [
            (lambda d: d["actors"].append(dict(d["actors"][0])), "unique"),
            (lambda d: d["viewpoints"][0].update(actor="ghost"), "undefined actor"),
            (lambda d: d["viewpoints"][0].update(target="ghost"), "undefined actor"),
            (lambda d: d["analysis"].update(target="ghost"), "analysis target"),
            (lambda d: d["analysis"].update(viewpoint="ghost"), "analysis viewpoint"),
            (lambda d: d.update(sweep_default="ghost"), "sweep_default"),
            (lambda d: d["actors"][1].update(ego=True), "one actor"),
            (lambda d: d.update(duration_s=0.0), "duration"),
            (lambda d: d["params"].append(dict(d["params"][0])), "duplicate"),
            (lambda d: d["viewpoints"][0].update(target="ego"), "different target"),
        ],
    )
    def test_validation_errors(self, mutate, msg):
        doc = minimal_doc()
        mutate(doc)
        with pytest.raises(ScenarioError, match=msg):
            Scenario.from_json(json.dumps(doc))

    def test_unknown_parameter_reference_rejected(self):
        doc = minimal_doc()
        doc["actors"][0]["speed"] = "$warp"
        sc = Scenario.from_json(json.dumps(doc))
        with pytest.raises(ScenarioError, match=r"\$warp"):
            sc.build_world(sc.resolve_params())

    def test_substitution_reaches_nested_driver_fields(self):
        doc = minimal_doc()
        doc["params"].append({"name": "walk", "lo": 0.5, "hi": 3.0, "step": 0.5, "default": 2.0})
        doc["actors"][1]["driver"] = {
            "type": "path",
            "waypoints": [[60, 0], [60, 20]],
            "speed": "$walk",
        }
        sc = Scenario.from_json(json.dumps(doc))
        world = sc.build_world(sc.resolve_params({"walk": 2.5}))
        assert world.drivers["other"].speed == 2.5

    def test_resolve_params_applies_defaults_and_overrides(self):
        sc = Scenario.from_json(json.dumps(minimal_doc()))
        assert sc.resolve_params() == {"speed": 5.0}
        assert sc.resolve_params({"speed": 7}) == {"speed": 7.0}

    def test_resolve_rejects_unknown_and_out_of_range(self):
        sc = Scenario.from_json(json.dumps(minimal_doc()))
        with pytest.raises(ParamError, match="unknown parameter"):
            sc.resolve_params({"nope": 1})
        with pytest.raises(ParamError, match=r"speed=11 outside \[1, 10\]"):
            sc.resolve_params({"speed": 11})

    def test_unknown_driver_type_rejected(self):
        doc = minimal_doc()
        doc["actors"][0]["driver"] = {"type": "psychic"}
        sc = Scenario.from_json(json.dumps(doc))
        with pytest.raises(ScenarioError, match="driver"):
            sc.build_world(sc.resolve_params())


class TestRunPoint:
    def test_collision_time_matches_hand_calculation(self):
        # constant 5 m/s toward a parked car 55 m ahead: bumpers meet when the
        # 4.5 m bodies close to 4.5 m between centers, at t = (55 - 4.5) / 5
        doc = minimal_doc()
        doc["duration_s"] = 12.0
        sc = Scenario.from_json(json.dumps(doc))
        report = run_point(sc, {"speed": 5}).report
        assert report.collision
        assert report.collision_time == pytest.approx(50.5 / 5.0, abs=1e-9)

    def test_open_view_visible_from_start(self):
        sc = Scenario.from_json(json.dumps(minimal_doc()))
        report = run_point(sc, {"speed": 5}).report
        assert report.first_visibility_time == 0.0
        assert report.ttc_at_first_visibility == pytest.approx(
            (55.0 - 2 * make_actor("x", "car").bounding_radius()) / 5.0, abs=1e-9
        )
        assert report.gap_at_first_visibility == pytest.approx(
            55.0 - 2 * make_actor("x", "car").bounding_radius(), abs=1e-9
        )
        assert report.stoppable is True  # 50 m gap vs 2.083 + 7.5 m needed at 5 m/s

    def test_no_collision_when_too_slow_to_arrive(self):
        sc = Scenario.from_json(json.dumps(minimal_doc()))
        report = run_point(sc, {"speed": 1}).report
        assert not report.collision
        assert report.collision_time is None
        assert report.min_distance == pytest.approx(55.0 - 2.0, abs=1e-9)

    def test_trace_sampled_at_quarter_seconds(self):
        sc = Scenario.from_json(json.dumps(minimal_doc()))
        result = run_point(sc, {"speed": 1})
        times = [s.t for s in result.trace.snapshots]
        np.testing.assert_allclose(times, np.arange(0, 2.01, 0.25), atol=1e-12)
        series = result.report.visibility_series
        assert series["t"] == [round(t, 10) for t in np.arange(0, 2.01, 0.25)]
        assert len(series["eyes"]) == len(series["t"])

    def test_seed_recorded(self):
        sc = Scenario.from_json(json.dumps(minimal_doc()))
        result = run_point(sc, {"speed": 1}, seed=17)
        assert result.report.seed == 17 and result.trace.seed == 17

    def test_scenario_without_analysis_still_runs(self):
        doc = minimal_doc()
        doc["analysis"] = {}
        doc["viewpoints"] = []
        sc = Scenario.from_json(json.dumps(doc))
        report = run_point(sc, {"speed": 1}).report
        assert report.first_visibility_time is None
        assert report.stoppable is None
        assert list(report.visibility_series) == ["t"]

    def test_reports_are_reproducible(self):
        sc = load_builtin("pedestrian_crossing")
        a = json.dumps(run_point(sc).report.to_dict(), sort_keys=True)
        b = json.dumps(run_point(sc).report.to_dict(), sort_keys=True)
        assert a == b


class TestPedestrianScenario:
    def test_walker_hidden_at_start(self):
        report = run_point(load_builtin("pedestrian_crossing")).report
        assert report.visibility_series["ego_driver"][0] == 0.0
        assert report.first_visibility_time > 1.0

    def test_attentive_driver_stops_short(self):
        report = run_point(load_builtin("pedestrian_crossing")).report
        assert not report.collision
        assert report.min_distance > 3.0

    def test_inattentive_driver_hits_at_derived_time(self):
        # front bumper reaches the walker's near edge at
        # (110 - 0.25 - 2.25 - 10) / 15 = 6.5 s; the walker is mid-lane then
        report = run_point(load_builtin("pedestrian_crossing"), {"attentive": 0}).report
        assert report.collision
        assert report.collision_time == pytest.approx(6.5, abs=1e-6)

    def test_walker_waits_for_trigger(self):
        # trigger fires when the ego is 2 s from the path start: x >= 80,
        # which a 15 m/s ego reaches at t = 70 / 15 = 4.67 s
        trace = run_point(load_builtin("pedestrian_crossing"), {"attentive": 0}).trace
        for snap in trace.snapshots:
            walker = next(a for a in snap.actors if a.actor_id == "walker")
            if snap.t <= 4.5:
                assert walker.y == -6.0
            if snap.t >= 5.0:
                assert walker.y > -6.0

    def test_walk_speed_parameter_changes_crossing(self):
        slow = run_point(load_builtin("pedestrian_crossing"), {"attentive": 0, "walk_speed": 0.8}).report
        fast = run_point(load_builtin("pedestrian_crossing"), {"attentive": 0, "walk_speed": 2.2}).report
        # a brisk walker clears the lane before the car arrives; a slow one
        # is still mid-lane at the 6.5 s arrival and gets hit
        assert slow.collision
        assert not fast.collision

    def test_out_of_range_override_names_bound(self):
        with pytest.raises(ParamError, match=r"ego_speed=50 outside \[8, 22\]"):
            run_point(load_builtin("pedestrian_crossing"), {"ego_speed": 50})


class TestTruckScenario:
    def test_default_point_verdicts(self):
        report = run_point(load_builtin("truck_turn_crash")).report
        assert report.collision
        assert 4.8 < report.collision_time < 5.0
        assert 2.7 < report.first_visibility_time < 3.0
        assert report.stoppable is False
        assert report.ttc_at_first_visibility is not None

    def test_wall_hides_truck_then_junction_reveals_it(self):
        report = run_point(load_builtin("truck_turn_crash")).report
        series = report.visibility_series["ego_driver"]
        assert series[0] == 0.0
        assert max(series) == 1.0

    def test_truck_driver_viewpoint_tracks_the_car(self):
        report = run_point(load_builtin("truck_turn_crash")).report
        series = report.visibility_series["truck_driver"]
        assert series[0] == 0.0  # same wall hides the car from the truck
        assert max(series) > 0.9

    def test_slow_approach_misses_fast_approach_collides(self):
        sc = load_builtin("truck_turn_crash")
        assert not run_point(sc, {"ego_speed": 12}).report.collision
        assert run_point(sc, {"ego_speed": 32}).report.collision

    def test_reaction_window_shrinks_with_speed(self):
        sweep = run_sweep(load_builtin("truck_turn_crash"), values=[24, 27, 30, 33])
        windows = [
            row["collision_time"] - row["first_visibility_time"]
            for row in sweep.rows
            if row["collision"]
        ]
        assert len(windows) == 4
        assert all(b < a for a, b in zip(windows, windows[1:]))


class TestSweep:
    def test_rows_follow_grid_order(self):
        sc = Scenario.from_json(json.dumps(minimal_doc()))
        sweep = run_sweep(sc)
        assert sweep.param == "speed"
        assert sweep.values == [float(v) for v in range(1, 11)]
        assert [r["params"]["speed"] for r in sweep.rows] == sweep.values

    def test_explicit_values_and_param(self):
        sc = Scenario.from_json(json.dumps(minimal_doc()))
        sweep = run_sweep(sc, param="speed", values=[2, 4])
        assert len(sweep.rows) == 2

    def test_out_of_range_value_rejected(self):
        sc = Scenario.from_json(json.dumps(minimal_doc()))
        with pytest.raises(ParamError, match="outside"):
            run_sweep(sc, values=[99])

    def test_missing_default_param_rejected(self):
        doc = minimal_doc()
        doc["sweep_default"] = ""
        sc = Scenario.from_json(json.dumps(doc))
        with pytest.raises(ParamError, match="no default sweep"):
            run_sweep(sc)

    def test_parked_off_road_actor_never_collides(self):
        doc = minimal_doc()
        doc["actors"][1].update(x=500.0, y=300.0)
        doc["analysis"]["decel"] = 6.0
        sc = Scenario.from_json(json.dumps(doc))
        sweep = run_sweep(sc)
        assert all(not r["collision"] for r in sweep.rows)
        assert all(r["collision_time"] is None for r in sweep.rows)
        assert all(r["min_distance"] > 250 for r in sweep.rows)

    def test_reruns_are_bit_identical(self):
        sc = load_builtin("pedestrian_crossing")
        a = run_sweep(sc, values=[10, 15, 20])
        b = run_sweep(sc, values=[10, 15, 20])
        assert a.to_json() == b.to_json()
        assert a.to_csv() == b.to_csv()

    def test_csv_shape(self):
        sc = Scenario.from_json(json.dumps(minimal_doc()))
        sweep = run_sweep(sc)
        rows = list(csv.reader(io.StringIO(sweep.to_csv())))
        assert rows[0][0] == "value"
        assert len(rows) == 1 + len(sweep.values)
        assert [float(r[0]) for r in rows[1:]] == sweep.values

    def test_overrides_apply_to_every_point(self):
        sc = load_builtin("pedestrian_crossing")
        sweep = run_sweep(sc, values=[10, 14], overrides={"attentive": 0})
        assert all(r["params"]["attentive"] == 0.0 for r in sweep.rows)


class TestBuiltins:
    def test_ids_listed(self):
        assert builtin_scenario_ids() == ["pedestrian_crossing", "truck_turn_crash"]

    def test_unknown_id_rejected(self):
        with pytest.raises(ScenarioError, match="no built-in"):
            load_builtin("flying_cars")

    def test_builtin_documents_validate_and_round_trip(self):
        for sid in builtin_scenario_ids():
            sc = load_builtin(sid)
            assert sc.scenario_id == sid
            again = Scenario.from_json(sc.to_json())
            assert again.to_json() == sc.to_json()

    def test_world_collision_time_brackets_disc_prediction(self):
        # the disc TTC must lower-bound the stepped rectangle contact, and the
        # rectangle contact follows within the diagonal margin
        doc = minimal_doc()
        doc["duration_s"] = 12.0
        sc = Scenario.from_json(json.dumps(doc))
        report = run_point(sc, {"speed": 8}).report
        radius = make_actor("x", "car").bounding_radius()
        ttc_disc = (55.0 - 2 * radius) / 8.0
        assert report.collision
        assert report.collision_time >= ttc_disc - DT
        assert report.collision_time <= ttc_disc + (2 * radius - 4.5) / 8.0 + DT
