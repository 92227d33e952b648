"""Capsule-based articulated right hand.

A MANO-style stand-in: 16-transform kinematic tree (global wrist + 15 finger
joints), 21 output joints, and a 778-point surface sampled from 20 capsules
(15 finger segments + 5 palm metacarpals). Skeleton constants live in
``assets/hand_model_v1.json`` (keys: bones, limits, capsules, surface_quota,
rest_joints).

Units are millimeters; angles are radians. Each finger joint takes an
axis-angle triple ``(flexion, abduction, twist)`` in the joint's local frame,
mapped to the rotation vector ``flexion*x + twist*y + abduction*z`` where x is
the flexion axis, y the bone axis, and z the palm normal.
"""

import functools
import importlib.resources
import json
from dataclasses import dataclass, field

import numpy as np
import torch

from .errors import InvalidInputError
from .geometry import DTYPE, capsule_surface_lattice, rodrigues

FINGERS = ("thumb", "index", "middle", "ring", "pinky")
SEGMENTS = ("proximal", "middle", "distal")
NUM_SURFACE_POINTS = 778
NUM_JOINTS = 21


@functools.lru_cache(maxsize=1)
def hand_asset() -> dict:
    ref = importlib.resources.files("contactforge.assets").joinpath("hand_model_v1.json")
    return json.loads(ref.read_text())


@functools.lru_cache(maxsize=1)
def joint_limits() -> tuple[np.ndarray, np.ndarray]:
    """(lo, hi) arrays of shape (45,) matching the theta layout."""
    lim = hand_asset()["limits"]
    lo = np.array([lim["flexion"][0], lim["abduction"][0], lim["twist"][0]] * 15)
    hi = np.array([lim["flexion"][1], lim["abduction"][1], lim["twist"][1]] * 15)
    return lo, hi


def _as_tensor(x, n, name) -> torch.Tensor:
    t = x if isinstance(x, torch.Tensor) else torch.as_tensor(x, dtype=DTYPE)
    t = t.to(DTYPE)
    if t.shape != (n,):
        raise InvalidInputError(f"{name} must have shape ({n},), got {tuple(t.shape)}")
    return t


@dataclass
class HandShape:
    """10 bone-scale coefficients, centered at 0.

    0-4: per-finger length scale (thumb..pinky), 5: palm width, 6-8: proximal /
    middle / distal segment scale across fingers, 9: palm length. All map to
    multiplicative factors that stay positive for |coefficient| <= 3.
    """

    coeffs: torch.Tensor = field(default_factory=lambda: torch.zeros(10, dtype=DTYPE))

    def __post_init__(self):
        self.coeffs = _as_tensor(self.coeffs, 10, "beta")

    def finger_scale(self, f: int) -> torch.Tensor:
        return 1.0 + 0.1 * self.coeffs[f]

    def segment_scale(self, s: int) -> torch.Tensor:
        return 1.0 + 0.05 * self.coeffs[6 + s]

    @property
    def palm_width(self) -> torch.Tensor:
        return 1.0 + 0.1 * self.coeffs[5]

    @property
    def palm_length(self) -> torch.Tensor:
        return 1.0 + 0.1 * self.coeffs[9]


@dataclass
class HandPose:
    """theta: 45 joint angles, beta: HandShape, trans: mm, rot: global axis-angle."""

    theta: torch.Tensor = field(default_factory=lambda: torch.zeros(45, dtype=DTYPE))
    beta: HandShape = field(default_factory=HandShape)
    trans: torch.Tensor = field(default_factory=lambda: torch.zeros(3, dtype=DTYPE))
    rot: torch.Tensor = field(default_factory=lambda: torch.zeros(3, dtype=DTYPE))

    def __post_init__(self):
        self.theta = _as_tensor(self.theta, 45, "theta")
        if not isinstance(self.beta, HandShape):
            self.beta = HandShape(self.beta)
        self.trans = _as_tensor(self.trans, 3, "trans")
        self.rot = _as_tensor(self.rot, 3, "rot")

    def validate(self):
        for name, t in (("theta", self.theta), ("beta", self.beta.coeffs), ("trans", self.trans), ("rot", self.rot)):
            if not bool(torch.isfinite(t).all()):
                raise InvalidInputError(f"non-finite {name} in hand pose")

    def clamped(self) -> "HandPose":
        """Copy with theta clamped to the limits table and |rot| <= pi."""
        lo, hi = joint_limits()
        theta = self.theta.clamp(
            torch.as_tensor(lo, dtype=DTYPE), torch.as_tensor(hi, dtype=DTYPE)
        )
        rot = self.rot
        norm = rot.norm()
        if float(norm) > np.pi:
            rot = rot * ((norm - 2.0 * np.pi * torch.ceil((norm - np.pi) / (2.0 * np.pi))) / norm)
        return HandPose(theta, HandShape(self.beta.coeffs.clone()), self.trans.clone(), rot)

    def detached(self) -> "HandPose":
        return HandPose(
            self.theta.detach().clone(),
            HandShape(self.beta.coeffs.detach().clone()),
            self.trans.detach().clone(),
            self.rot.detach().clone(),
        )

    def as_dict(self) -> dict:
        return {
            "theta": self.theta.detach().tolist(),
            "beta": self.beta.coeffs.detach().tolist(),
            "trans": self.trans.detach().tolist(),
            "rot": self.rot.detach().tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "HandPose":
        return cls(d["theta"], HandShape(d["beta"]), d["trans"], d["rot"])


@dataclass
class JointSet:
    """21 joint positions: wrist, then (mcp, pip, dip, tip) thumb..pinky."""

    joints: torch.Tensor

    def __post_init__(self):
        t = self.joints if isinstance(self.joints, torch.Tensor) else torch.as_tensor(self.joints, dtype=DTYPE)
        if t.shape != (NUM_JOINTS, 3):
            raise InvalidInputError(f"joints must be ({NUM_JOINTS}, 3), got {tuple(t.shape)}")
        self.joints = t.to(DTYPE)

    def numpy(self) -> np.ndarray:
        return self.joints.detach().numpy()


@dataclass
class HandSurface:
    """778 surface points with their generating capsule's finger/segment label.

    `capsules` carries the posed capsule set (p0s, p1s, radii, labels) the
    points were sampled from, so contact code can evaluate exact hand SDFs.
    """

    points: torch.Tensor
    finger_label: np.ndarray  # (778,) in {palm, thumb, index, middle, ring, pinky}
    segment_label: np.ndarray  # (778,) in {proximal, middle, distal}
    capsules: tuple | None = None

    def mask(self, fingers=None, segments=None) -> np.ndarray:
        m = np.ones(len(self.finger_label), dtype=bool)
        if fingers is not None:
            m &= np.isin(self.finger_label, list(fingers))
        if segments is not None:
            m &= np.isin(self.segment_label, list(segments))
        return m


def _finger_chain(pose: HandPose, f: int, Rg: torch.Tensor, bones: dict):
    """Transform chain for finger f: list of (R, t) for MCP, PIP, DIP frames plus joint positions."""
    name = FINGERS[f]
    b = bones[name]
    frame = torch.stack(
        [
            torch.as_tensor(b["frame"]["flex"], dtype=DTYPE),
            torch.as_tensor(b["frame"]["bone"], dtype=DTYPE),
            torch.as_tensor(b["frame"]["normal"], dtype=DTYPE),
        ],
        dim=1,
    )  # columns: local x (flex), y (bone), z (normal)
    root = torch.as_tensor(b["root"], dtype=DTYPE)
    root = torch.stack([root[0] * pose.beta.palm_width, root[1] * pose.beta.palm_length, root[2]])
    lengths = [
        torch.as_tensor(b["lengths"][s], dtype=DTYPE) * pose.beta.finger_scale(f) * pose.beta.segment_scale(s)
        for s in range(3)
    ]

    t0 = pose.trans + Rg @ root
    R = Rg @ frame
    frames = []
    t = t0
    joints = [t0]
    for s in range(3):
        th = pose.theta[3 * (f * 3 + s): 3 * (f * 3 + s) + 3]
        rotvec = torch.stack([th[0], th[2], th[1]])  # (flex, abd, twist) -> local (x, y, z)=(flex, twist, abd)
        R = R @ rodrigues(rotvec)
        frames.append((R, t))
        t = t + R @ torch.stack([torch.zeros((), dtype=DTYPE), lengths[s], torch.zeros((), dtype=DTYPE)])
        joints.append(t)
    return frames, joints, lengths, b["radii"]


def forward_kinematics(pose: HandPose) -> JointSet:
    """Joint positions via the fixed kinematic tree. Differentiable in all pose fields."""
    pose.validate()
    bones = hand_asset()["bones"]
    Rg = rodrigues(pose.rot)
    out = [pose.trans]
    for f in range(5):
        _, joints, _, _ = _finger_chain(pose, f, Rg, bones)
        out.extend(joints)
    return JointSet(torch.stack(out, dim=0))


def hand_capsules(pose: HandPose):
    """All 20 capsules posed in world frame.

    Returns (p0s, p1s, radii, labels) with p0s/p1s (20, 3) differentiable
    w.r.t. pose and labels a list of (finger, segment) with palm capsules as
    ("palm", "proximal").
    """
    pose.validate()
    asset = hand_asset()
    Rg = rodrigues(pose.rot)
    p0s, p1s, radii, labels = [], [], [], []
    scale_xy = torch.stack([pose.beta.palm_width, pose.beta.palm_length, torch.ones((), dtype=DTYPE)])
    for cap in asset["capsules"]["palm"]:
        a = torch.as_tensor(cap["p0"], dtype=DTYPE) * scale_xy
        b = torch.as_tensor(cap["p1"], dtype=DTYPE) * scale_xy
        p0s.append(pose.trans + Rg @ a)
        p1s.append(pose.trans + Rg @ b)
        radii.append(cap["radius"])
        labels.append(("palm", "proximal"))
    bones = asset["bones"]
    for f in range(5):
        frames, _, lengths, caps_r = _finger_chain(pose, f, Rg, bones)
        for s in range(3):
            R, t = frames[s]
            p0s.append(t)
            p1s.append(t + R @ torch.stack([torch.zeros((), dtype=DTYPE), lengths[s], torch.zeros((), dtype=DTYPE)]))
            radii.append(caps_r[s])
            labels.append((FINGERS[f], SEGMENTS[s]))
    return (
        torch.stack(p0s, dim=0),
        torch.stack(p1s, dim=0),
        torch.as_tensor(radii, dtype=DTYPE),
        labels,
    )


def sample_hand_surface(pose: HandPose) -> HandSurface:
    """778 points by deterministic stratified sampling of the capsule surfaces.

    Per-capsule quotas come from the asset's surface_quota table; sampling is a
    fixed golden-angle lattice, so identical poses give bitwise-identical
    clouds and the cloud moves rigidly with the pose.
    """
    pose.validate()
    asset = hand_asset()
    quota = asset["surface_quota"]
    Rg = rodrigues(pose.rot)
    scale_xy = torch.stack([pose.beta.palm_width, pose.beta.palm_length, torch.ones((), dtype=DTYPE)])

    pts, f_lab, s_lab = [], [], []
    cap_p0, cap_p1, cap_r, cap_labels = [], [], [], []
    zero = torch.zeros((), dtype=DTYPE)
    for cap, n in zip(asset["capsules"]["palm"], quota["palm"]):
        a = torch.as_tensor(cap["p0"], dtype=DTYPE) * scale_xy
        b = torch.as_tensor(cap["p1"], dtype=DTYPE) * scale_xy
        axis = b - a
        length = axis.norm()
        ey = axis / length.clamp(min=1e-9)
        # deterministic frame around the capsule axis
        ref = torch.tensor([0.0, 0.0, 1.0], dtype=DTYPE) if abs(float(ey[2])) < 0.9 else torch.tensor(
            [1.0, 0.0, 0.0], dtype=DTYPE
        )
        ex = torch.linalg.cross(ey, ref)
        ex = ex / ex.norm()
        ez = torch.linalg.cross(ex, ey)
        local = capsule_surface_lattice(length, cap["radius"], n)
        world = pose.trans + (Rg @ (a[:, None] + torch.stack([ex, ey, ez], dim=1) @ local.T)).T
        pts.append(world)
        f_lab.extend(["palm"] * n)
        s_lab.extend(["proximal"] * n)
        cap_p0.append(pose.trans + Rg @ a)
        cap_p1.append(pose.trans + Rg @ b)
        cap_r.append(cap["radius"])
        cap_labels.append(("palm", "proximal"))

    bones = asset["bones"]
    for f in range(5):
        frames, _, lengths, caps_r = _finger_chain(pose, f, Rg, bones)
        for s in range(3):
            R, t = frames[s]
            local = capsule_surface_lattice(lengths[s], caps_r[s], quota[FINGERS[f]][s])
            pts.append(t + (R @ local.T).T)
            f_lab.extend([FINGERS[f]] * quota[FINGERS[f]][s])
            s_lab.extend([SEGMENTS[s]] * quota[FINGERS[f]][s])
            cap_p0.append(t)
            cap_p1.append(t + R @ torch.stack([zero, lengths[s], zero]))
            cap_r.append(caps_r[s])
            cap_labels.append((FINGERS[f], SEGMENTS[s]))

    points = torch.cat(pts, dim=0)
    assert points.shape == (NUM_SURFACE_POINTS, 3)
    capsules = (
        torch.stack(cap_p0, dim=0),
        torch.stack(cap_p1, dim=0),
        torch.as_tensor(cap_r, dtype=DTYPE),
        cap_labels,
    )
    return HandSurface(points, np.array(f_lab), np.array(s_lab), capsules=capsules)


def perturb_pose(pose: HandPose, scale: float, seed: int) -> HandPose:
    """Add zero-mean Gaussian noise (std=scale) to theta, x10 on trans (mm), clamp to limits."""
    if scale < 0:
        raise InvalidInputError("perturbation scale must be >= 0")
    pose.validate()
    rng = np.random.default_rng(seed)
    theta = pose.theta + torch.as_tensor(rng.normal(0.0, scale, size=45), dtype=DTYPE)
    trans = pose.trans + torch.as_tensor(rng.normal(0.0, scale * 10.0, size=3), dtype=DTYPE)
    return HandPose(theta, HandShape(pose.beta.coeffs.clone()), trans, pose.rot.clone()).clamped()


def rest_pose() -> HandPose:
    return HandPose()


def rest_joint_table() -> np.ndarray:
    return np.asarray(hand_asset()["rest_joints"], dtype=np.float64)
