"""Regenerates the sample scenarios in this directory."""
import json
import math
from pathlib import Path

HERE = Path(__file__).resolve().parent


def ego_path(T, speed=1.5, heading=0.0):
    return [{"x": speed * (t + 1) * math.cos(heading), "y": speed * (t + 1) * math.sin(heading), "theta": heading}
            for t in range(T)]


def position_agent(T, name, start, velocities, persistence=False):
    weights = [0.5, 0.3, 0.2]
    steps = []
    for t in range(T):
        modes = []
        for w, (vx, vy) in zip(weights, velocities):
            s = 0.05 + 0.02 * t
            modes.append({"weight": w, "mean": [start[0] + vx * (t + 1), start[1] + vy * (t + 1)],
                          "cov": [[s, 0.3 * s], [0.3 * s, 0.6 * s]]})
        steps.append({"modes": modes})
    return {"id": name, "form": "gmm_position", "mode_persistence": persistence, "steps": steps}


def control_agent(T, name, x, y, v, theta):
    steps = []
    for _ in range(T):
        steps.append({
            "w_v_modes": [{"weight": 0.7, "mean": 0.0, "var": 0.01}, {"weight": 0.3, "mean": -0.1, "var": 0.02}],
            "w_theta_modes": [{"weight": 0.6, "mean": 0.0, "var": 0.0025},
                              {"weight": 0.4, "mean": 0.02, "var": 0.004}],
        })
    return {"id": name, "form": "gmm_control", "initial_state": {"x": x, "y": y, "v": v, "theta": theta},
            "steps": steps}


def write(name, doc):
    (HERE / name).write_text(json.dumps(doc, indent=2) + "\n")


write("minimal.json", {
    "ego_trajectory": [{"x": 0.0, "y": 0.0, "theta": 0.0}],
    "ellipsoid": {"q": [[1.0, 0.0], [0.0, 1.0]]},
    "agents": [{"id": "parked", "form": "gmm_position",
                "steps": [{"modes": [{"weight": 1.0, "mean": [0.5, 0.0], "cov": [[0.0, 0.0], [0.0, 0.0]]}]}]}],
})

T = 30
write("crossing_position.json", {
    "ego_trajectory": ego_path(T),
    "ellipsoid": {"q": [[0.25, 0.0], [0.0, 1.0]]},
    "agents": [
        position_agent(T, "crossing", (22.5, -15.0), [(0.0, 1.0), (0.1, 0.8), (-0.1, 0.6)]),
        position_agent(T, "oncoming", (50.0, 1.0), [(-1.2, 0.0), (-1.0, -0.05), (-0.8, 0.05)], persistence=True),
    ],
})

write("follow_control.json", {
    "ego_trajectory": ego_path(T),
    "ellipsoid": {"q": [[0.25, 0.0], [0.0, 1.0]]},
    "agents": [
        control_agent(T, "merging", 4.0, -6.0, 1.4, 0.12),
        control_agent(T, "adjacent_lane", 0.0, 3.5, 1.5, 0.0),
    ],
})
