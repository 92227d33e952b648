"""Regenerate src/contactforge/assets/hand_model_v1.json.

Run from the repo root after editing the skeleton constants below. The output
file is committed; the package never runs this script.
"""

import json
import pathlib

import numpy as np

FINGERS = ["thumb", "index", "middle", "ring", "pinky"]

# root offset (mm, wrist frame), rest bone direction, flexion axis,
# bone lengths (proximal, middle, distal) and capsule radii per segment.
SKELETON = {
    # thumb flexion axis chosen so the sweep opposes the palm center
    # (rest tip moves toward (-0.87, -0.30, 0.37), i.e. across and above the palm)
    "thumb": {
        "root": [32.0, 28.0, -4.0],
        "bone": [0.75, 0.60, 0.28],
        "flex": [0.306, -0.521, 0.297],
        "lengths": [45.0, 32.0, 28.0],
        "radii": [11.0, 10.0, 9.0],
    },
    "index": {
        "root": [25.0, 92.0, 0.0],
        "bone": [0.08, 1.0, 0.0],
        "flex": [1.0, -0.08, 0.0],
        "lengths": [45.0, 26.0, 23.0],
        "radii": [9.0, 8.0, 7.0],
    },
    "middle": {
        "root": [8.0, 98.0, 0.0],
        "bone": [0.0, 1.0, 0.0],
        "flex": [1.0, 0.0, 0.0],
        "lengths": [50.0, 30.0, 25.0],
        "radii": [9.0, 8.0, 7.0],
    },
    "ring": {
        "root": [-10.0, 92.0, 0.0],
        "bone": [-0.08, 1.0, 0.0],
        "flex": [1.0, 0.08, 0.0],
        "lengths": [46.0, 28.0, 24.0],
        "radii": [8.5, 7.5, 6.5],
    },
    "pinky": {
        "root": [-27.0, 80.0, 0.0],
        "bone": [-0.16, 1.0, 0.0],
        "flex": [1.0, 0.16, 0.0],
        "lengths": [36.0, 22.0, 20.0],
        "radii": [8.0, 7.0, 6.0],
    },
}

# Palm modeled as one capsule per metacarpal (wrist frame, rest pose).
PALM_CAPSULES = [
    {"name": "palm_thumb", "p0": [8.0, 12.0, -2.0], "p1": [26.0, 24.0, -3.0], "radius": 12.0},
    {"name": "palm_index", "p0": [14.0, 18.0, 0.0], "p1": [23.0, 78.0, 0.0], "radius": 12.0},
    {"name": "palm_middle", "p0": [5.0, 18.0, 0.0], "p1": [8.0, 84.0, 0.0], "radius": 12.5},
    {"name": "palm_ring", "p0": [-5.0, 18.0, 0.0], "p1": [-9.0, 78.0, 0.0], "radius": 12.0},
    {"name": "palm_pinky", "p0": [-14.0, 16.0, 0.0], "p1": [-24.0, 68.0, 0.0], "radius": 11.0},
]

SURFACE_QUOTA = {
    "palm": [30, 30, 30, 30, 30],
    "thumb": [36, 38, 42],
    "index": [38, 40, 50],
    "middle": [38, 40, 50],
    "ring": [38, 40, 50],
    "pinky": [38, 40, 50],
}

LIMITS = {
    "order": ["flexion", "abduction", "twist"],
    "flexion": [0.0, 1.9],
    "abduction": [-0.5, 0.5],
    "twist": [-0.3, 0.3],
}


def orthonormal_frame(flex, bone):
    y = np.asarray(bone, dtype=float)
    y = y / np.linalg.norm(y)
    x = np.asarray(flex, dtype=float)
    x = x - np.dot(x, y) * y
    x = x / np.linalg.norm(x)
    z = np.cross(x, y)
    return x, y, z


def main():
    bones = {}
    rest_joints = [[0.0, 0.0, 0.0]]  # wrist
    for name in FINGERS:
        cfg = SKELETON[name]
        x, y, z = orthonormal_frame(cfg["flex"], cfg["bone"])
        bones[name] = {
            "root": cfg["root"],
            "frame": {"flex": x.tolist(), "bone": y.tolist(), "normal": z.tolist()},
            "lengths": cfg["lengths"],
            "radii": cfg["radii"],
        }
        p = np.asarray(cfg["root"], dtype=float)
        rest_joints.append(p.tolist())
        for L in cfg["lengths"]:
            p = p + L * y
            rest_joints.append(p.tolist())

    asset = {
        "version": "1",
        "units": "mm",
        "bones": bones,
        "capsules": {"palm": PALM_CAPSULES},
        "surface_quota": SURFACE_QUOTA,
        "limits": LIMITS,
        "rest_joints": rest_joints,
        "palm_center": [5.0, 50.0, 12.5],
    }
    out = pathlib.Path(__file__).resolve().parents[1] / "src" / "contactforge" / "assets" / "hand_model_v1.json"
    out.write_text(json.dumps(asset, indent=1) + "\n")
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
