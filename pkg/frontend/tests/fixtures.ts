import type { PointReport, RunHandle, SweepReport } from "../src/api.js";

export function makeReport(over: Partial<PointReport> = {}): PointReport {
  return {
    scenario_id: "truck_turn_crash",
    params: { ego_speed: 25, truck_speed: 9, truck_brightness: 245 },
    seed: 0,
    duration_s: 15,
    first_visibility_time: 3.75,
    ttc_at_first_visibility: 1.9,
    gap_at_first_visibility: 42.1,
    speed_at_first_visibility: 25,
    min_distance: 0,
    contact_threshold: 0.05,
    collision: true,
    collision_time: 5.65,
    stoppable: false,
    decel: 6,
    reaction_s: 1.5,
    visibility_series: { t: [0, 0.25], ego_driver: [0, 0] },
    ...over,
  };
}

export function makeRun(over: Partial<RunHandle> = {}): RunHandle {
  return {
    run_id: "run-0001",
    status: "done",
    kind: "point",
    scenario_id: "truck_turn_crash",
    params: {},
    seed: 0,
    sweep: null,
    error: null,
    ...over,
  };
}

export function makeSweep(
  values: number[],
  rowOver: (value: number, i: number) => Partial<PointReport> = () => ({}),
): SweepReport {
  return {
    scenario_id: "truck_turn_crash",
    param: "truck_speed",
    values,
    seed: 0,
    rows: values.map((v, i) =>
      makeReport({ params: { ego_speed: 25, truck_speed: v, truck_brightness: 245 }, ...rowOver(v, i) }),
    ),
  };
}
