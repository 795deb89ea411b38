import xml.etree.ElementTree as ET

from cubesim.geometry import Pose
from cubesim.plot import export_trajectory_svg, trajectory_svg
from cubesim.runtime import RunLimits, run_episode
from cubesim.solutions import make_solution
from cubesim.world import default_scenario

NS = "{http://www.w3.org/2000/svg}"


def run(start, name="ultrasound1", timeout=300.0):
    sc = default_scenario()
    return run_episode(sc.with_start(start), make_solution(name), RunLimits(timeout_s=timeout, stride=5)), sc


def test_svg_structure_and_determinism(tmp_path):
    res, sc = run(Pose(75, 60, 0))
    a = trajectory_svg(res, sc)
    assert a == trajectory_svg(res, sc)
    root = ET.fromstring(a)
    assert root.tag == NS + "svg"
    assert len(root.findall(NS + "circle")) == len(res.removals) == 3
    assert len(root.findall(NS + "polyline")) == 4  # three cubes and the robot
    path = export_trajectory_svg(res, tmp_path / "r.svg", sc)
    assert path.read_bytes() == a


def test_completed_path_ends_at_last_removal():
    res, sc = run(Pose(75, 60, 0))
    assert res.trajectory[-1][0] == res.removals[-1][1]
    robot_line = ET.fromstring(trajectory_svg(res, sc)).findall(NS + "polyline")[-1]
    last = robot_line.get("points").split()[-1]
    x, y = res.trajectory[-1][1:3]
    assert last == f"{10 + 4 * x:.2f},{10 + 4 * (120 - y):.2f}"


def test_timeout_path_drawn_in_full():
    res, sc = run(Pose(75, 60, 0), "blink", timeout=5.0)
    assert res.status == "timeout"
    root = ET.fromstring(trajectory_svg(res, sc))
    assert "timeout" in "".join(t.text for t in root.findall(NS + "text"))
    assert res.trajectory[-1][0] == 250
