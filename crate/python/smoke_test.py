#!/usr/bin/env python3
"""Builds the pivotplan_py extension with cargo and exercises the bindings.

Run from anywhere:

    python3 python/smoke_test.py

The script copies the built cdylib into a temporary directory under an
importable name, so it needs no maturin or pip install.
"""

import math
import shutil
import subprocess
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
FIXTURES = ROOT / "crates" / "core" / "tests" / "fixtures"

PASSED = 0


def check(label: str, condition: bool, detail: str = "") -> None:
    global PASSED
    if not condition:
        print(f"FAIL {label}: {detail}")
        sys.exit(1)
    PASSED += 1
    print(f"ok   {label}")


def close(a, b, tol=1e-9) -> bool:
    return all(abs(x - y) <= tol for x, y in zip(a, b))


def build_module():
    subprocess.run(
        ["cargo", "build", "-p", "pivotplan-py"],
        cwd=ROOT,
        check=True,
    )
    built = None
    for name in ("libpivotplan_py.so", "libpivotplan_py.dylib", "pivotplan_py.dll"):
        candidate = ROOT / "target" / "debug" / name
        if candidate.is_file():
            built = candidate
            break
    if built is None:
        print("FAIL: cargo build produced no pivotplan_py library")
        sys.exit(1)
    staging = Path(tempfile.mkdtemp(prefix="pivotplan_py."))
    suffix = ".pyd" if built.suffix == ".dll" else ".so"
    shutil.copy2(built, staging / f"pivotplan_py{suffix}")
    sys.path.insert(0, str(staging))
    import pivotplan_py

    return pivotplan_py


def main() -> None:
    pp = build_module()
    check("module imports", hasattr(pp, "__version__"))

    # Pose algebra.
    identity = pp.Pose.identity()
    pose = pp.Pose(position=(0.3, -0.1, 0.2), orientation=(1.0, 0.0, 0.0, 1.0))
    roundtrip = pose * pose.inverse()
    check("pose inverse cancels", roundtrip.distance_to(identity) < 1e-12)
    check(
        "orientation is normalized",
        close(pose.orientation, (math.sqrt(0.5), 0.0, 0.0, math.sqrt(0.5))),
    )
    quarter = pp.Pose.rotation_about_line((0, 0, 0), (0, 0, 1), math.pi / 2)
    check(
        "rotation about a line moves points",
        close(quarter.transform_point((0.2, 0.0, 0.0)), (0.0, 0.2, 0.0), 1e-12),
    )

    try:
        pp.Pose(orientation=(0.0, 0.0, 0.0, 0.0))
        check("zero quaternion is rejected", False)
    except ValueError:
        check("zero quaternion is rejected", True)

    # Screw extraction on a known displacement.
    disp = pp.Pose.rotation_about_line((0.1, -0.2, 0.3), (1, 0, 0), math.pi / 3)
    screw = pp.screw_of(disp)
    check("screw kind", screw["kind"] == "general", str(screw))
    check("screw angle", abs(screw["angle"] - math.pi / 3) < 1e-12)
    check("screw slide", abs(screw["slide"]) < 1e-12)
    check("screw axis", close(screw["axis"], (1.0, 0.0, 0.0), 1e-12))
    check(
        "screw axis point",
        close(screw["point_on_axis"], (0.0, -0.2, 0.3), 1e-12),
    )
    fp = pp.fixed_point(disp)
    check("fixed point exists", fp is not None)
    check("fixed point is fixed", close(disp.transform_point(fp), fp, 1e-12))

    # ScLERP and screw powers.
    goal = pp.Pose(position=(0.4, 0.1, 0.0), orientation=(0.92388, 0.0, 0.0, 0.38268))
    half = pp.pose_power(goal, 0.5)
    check("half power squares back", (half * half).distance_to(goal) < 1e-12)
    path = pp.sclerp_path(identity, goal, steps=7)
    check("path has the requested length", len(path) == 7)
    check("path starts at the start", path[0].distance_to(identity) < 1e-12)
    check("path ends at the goal", path[-1].distance_to(goal) < 1e-12)
    mid = pp.sclerp(identity, goal, 0.5)
    check("sclerp matches the path midpoint", mid.distance_to(path[3]) < 1e-12)

    # Gait round trip: generate a feasible instance, solve it, replay it.
    alphas = [0.3, -0.2, 0.25, -0.15]
    a0, b0 = (0.0, 0.0), (0.25, 0.0)
    goal_edge = pp.forward_gait(a0, b0, alphas, start_vertex="a")
    solution = pp.solve_gait(
        a0, b0, goal_edge["a"], goal_edge["b"], alpha_max=0.6, k_max=4, seed=5
    )
    check("gait solves within the step budget", solution["k"] <= 4, str(solution))
    replay = pp.forward_gait(a0, b0, solution["alphas"], solution["start_vertex"])
    check(
        "gait replay reaches the goal",
        close(replay["a"], goal_edge["a"], 1e-5) and close(replay["b"], goal_edge["b"], 1e-5),
        str(replay),
    )
    try:
        pp.solve_gait(a0, b0, (2.0, 2.0), (2.25, 2.0), alpha_max=0.01, k_max=2)
        check("infeasible gait raises", False)
    except RuntimeError:
        check("infeasible gait raises", True)

    # Kinematics on a planar three-link arm.
    arm = pp.Arm(
        joints=[
            ((0, 0, 1), (0.0, 0, 0)),
            ((0, 0, 1), (0.4, 0, 0)),
            ((0, 0, 1), (0.8, 0, 0)),
        ],
        home=pp.Pose(position=(1.1, 0, 0)),
        limits=[(-3.0, 3.0)] * 3,
    )
    check("arm dof", arm.dof == 3)
    at_zero = arm.forward_kinematics([0.0, 0.0, 0.0])
    check("fk at zero is the home pose", close(at_zero.position, (1.1, 0.0, 0.0), 1e-12))
    jac = arm.jacobian([0.0, 0.0, 0.0])
    check("jacobian shape", len(jac) == 6 and all(len(row) == 3 for row in jac))
    check(
        "jacobian linear row",
        close(jac[1], (1.1, 0.7, 0.3), 1e-12),
        str(jac[1]),
    )

    theta0 = [0.2, -0.1, 0.3]
    theta1 = [0.5, -0.4, 0.2]
    start_pose = arm.forward_kinematics(theta0)
    target = arm.forward_kinematics(theta1)
    waypoints = pp.sclerp_path(start_pose, target, steps=15)
    tracked = arm.track(theta0, waypoints)
    check("track returns one config per waypoint", len(tracked["joints"]) == 15)
    check("track converges", max(tracked["errors"]) < 1e-8, str(max(tracked["errors"])))
    final = arm.forward_kinematics(tracked["joints"][-1])
    check("tracked end pose matches", final.distance_to(target) < 1e-6)
    solved = arm.solve_to_pose(theta0, target)
    reached = arm.forward_kinematics(solved)
    check("solve_to_pose reaches the target", reached.distance_to(target) < 1e-6)

    # Full pipeline from a scenario file.
    scenario = str(FIXTURES / "single7dof.json")
    cases = pp.check_file(scenario)
    check("scenario classifies", cases == ["shared contact"], str(cases))
    result = pp.plan_file(scenario)
    check("plan arm names", result["arm_names"] == ["arm1"])
    check("plan sample count", len(result["object_poses"]) == 46, str(len(result["object_poses"])))
    check("plan has no regrasps", result["regrasps"] == 0)
    check(
        "plan trajectories align",
        len(result["ee_poses"][0]) == 46 and len(result["joints"][0]) == 46,
    )
    check("plan joint width", all(len(j) == 7 for j in result["joints"][0]))
    grasp0 = result["object_poses"][0].inverse() * result["ee_poses"][0][0]
    drift = max(
        (obj.inverse() * ee).distance_to(grasp0)
        for obj, ee in zip(result["object_poses"], result["ee_poses"][0])
    )
    check("grasp stays rigid along the plan", drift < 1e-6, str(drift))

    print(f"smoke test passed ({PASSED} checks)")


if __name__ == "__main__":
    main()
