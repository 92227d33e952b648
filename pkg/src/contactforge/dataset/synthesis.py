"""Procedural grasp synthesis from a contact prompt.

The hand is oriented palm-toward-object along a seeded approach direction and
placed against a grasp-type-specific anchor. Contacting fingers then close
joint by joint (a gripper-style closure): each flexion joint sweeps until the
finger first sits within the hard-contact band, so full-finger labels conform
around the surface while tip labels stop at first distal touch. The result is
verified against derive_prompt; any mismatch raises SynthesisFailure so
callers can count and skip it.
"""

import math

import numpy as np
import torch

from ..contact import ObjectModel, object_sdf
from ..errors import SynthesisFailure
from ..geometry import DTYPE, capsule_surface_lattice, rodrigues, rotation_to_axis_angle
from ..hand import FINGERS, HandPose, hand_asset, sample_hand_surface
from ..hand import _finger_chain  # internal chain evaluator, reused for speed
from .prompts import PromptAnnotation, derive_prompt

MAX_APPROACHES = 10
PALM_ANCHOR = np.array([5.0, 55.0, 12.5])

# per-joint flexion ceilings during closure, per contact label
CLOSE_LIMITS = {
    "tip-contact": (1.1, 1.7, 1.5),
    "full-finger-contact": (1.9, 1.6, 1.1),
    "pad-contact": (1.9, 0.8, 0.0),
}
# joint sweep order: tip curls from the distal end, wraps close from the base
CLOSE_ORDER = {
    "tip-contact": (2, 1, 0),
    "full-finger-contact": (0, 1, 2),
    "pad-contact": (0, 1),
}

FREE_SHAPES = {
    "full extension": (0.0, 0.0, 0.0),
    "partial extension": (0.5, 0.55, 0.45),
    "sphere": (1.2, 1.5, 1.4),
}

GAPS = {"wrap": 6.0, "lift": 0.0}
CONTACT_TARGET = 1.0  # mm, middle of the [0, 2] hard-contact band
PEN_GUARD = -1.5  # mm, deepest tolerated penetration while closing
FREE_CLEARANCE = 2.5


class _AttemptFailed(Exception):
    def __init__(self, reason):
        self.reason = reason


def _rot_vec(v: np.ndarray) -> np.ndarray:
    angle = math.sqrt(v @ v)
    if angle < 1e-12:
        return np.eye(3)
    axis = v / angle
    K = np.array([[0, -axis[2], axis[1]], [axis[2], 0, -axis[0]], [-axis[1], axis[0], 0]])
    return np.eye(3) + math.sin(angle) * K + (1.0 - math.cos(angle)) * (K @ K)


class _FingerEval:
    """Single-finger FK over precomputed capsule lattices (numpy, fast).

    Takes flexion per joint plus an optional MCP abduction, combined into the
    same per-joint axis-angle the full hand model uses.
    """

    def __init__(self, f: int, Rg: np.ndarray, trans: np.ndarray):
        asset = hand_asset()
        b = asset["bones"][FINGERS[f]]
        frame = np.stack([b["frame"]["flex"], b["frame"]["bone"], b["frame"]["normal"]], axis=1)
        self.root = trans + Rg @ np.asarray(b["root"])
        self.R_base = Rg @ frame
        self.lengths = list(b["lengths"])
        quota = asset["surface_quota"][FINGERS[f]]
        self.lattices = [
            capsule_surface_lattice(torch.as_tensor(b["lengths"][s], dtype=DTYPE), b["radii"][s], quota[s]).numpy()
            for s in range(3)
        ]

    def segment_points(self, flex, abd=0.0) -> list[np.ndarray]:
        R, t = self.R_base, self.root
        out = []
        for s in range(3):
            rotvec = np.array([flex[s], 0.0, abd if s == 0 else 0.0])
            R = R @ _rot_vec(rotvec)
            out.append(t + self.lattices[s] @ R.T)
            t = t + R @ np.array([0.0, self.lengths[s], 0.0])
        return out

    def seg_min_sdf(self, flex, obj: ObjectModel, abd=0.0) -> np.ndarray:
        pts = np.concatenate(self.segment_points(flex, abd), axis=0)
        d = object_sdf(obj, torch.as_tensor(pts, dtype=DTYPE)).numpy()
        sizes = [len(l) for l in self.lattices]
        o = np.cumsum([0] + sizes)
        return np.array([d[o[s]: o[s + 1]].min() for s in range(3)])


def _scan_bisect(fn, lo, hi, target, steps=16, iters=20):
    """First downward crossing of fn(t)=target on [lo, hi].

    Returns (t, crossed): with crossed=False, t is the argmin of the scan
    (the closest non-touching configuration).
    """
    ts = np.linspace(lo, hi, steps)
    vals = np.array([fn(t) for t in ts])
    if vals[0] < target:
        return lo, True
    for i in range(1, steps):
        if vals[i] < target:
            a, b = ts[i - 1], ts[i]
            for _ in range(iters):
                m = 0.5 * (a + b)
                if fn(m) < target:
                    b = m
                else:
                    a = m
            return b, True
    return float(ts[int(np.argmin(vals))]), False


def _close_finger(theta: np.ndarray, ev: _FingerEval, obj: ObjectModel, f: int, label: str) -> None:
    flex = theta[9 * f: 9 * f + 9: 3].copy()
    limits = CLOSE_LIMITS[label]
    tip_mode = label == "tip-contact"

    for s in CLOSE_ORDER[label]:

        def fn(a, s=s):
            trial = flex.copy()
            trial[s] = a
            d = ev.seg_min_sdf(trial, obj)
            if d.min() < PEN_GUARD:
                return -1e6  # penetration guard counts as crossed
            return d[2] if tip_mode else d[s]

        a_star, crossed = _scan_bisect(fn, flex[s], limits[s], CONTACT_TARGET)
        flex[s] = a_star
        if crossed and tip_mode:
            break
        if crossed and label == "pad-contact":
            break

    if tip_mode:
        # release the base joint if the middle segment landed as well
        d = ev.seg_min_sdf(flex, obj)
        if abs(d[1]) <= 2.0 and flex[0] > 0.0:

            def mid_clear(a):
                trial = flex.copy()
                trial[0] = a
                dd = ev.seg_min_sdf(trial, obj)
                return 2.4 - dd[1]  # crossed once the middle segment is clear

            a_star, crossed = _scan_bisect(mid_clear, flex[0], 0.0, 0.0, steps=12, iters=12)
            if crossed:
                flex[0] = a_star

                def tip_press(a, s=2):
                    trial = flex.copy()
                    trial[s] = a
                    dd = ev.seg_min_sdf(trial, obj)
                    return dd[2] if dd.min() >= PEN_GUARD else -1e6

                a2, crossed2 = _scan_bisect(tip_press, flex[2], limits[2], CONTACT_TARGET, steps=12)
                if crossed2:
                    flex[2] = a2

    theta[9 * f: 9 * f + 9: 3] = flex


def _surface_offset(obj: ObjectModel, u: np.ndarray) -> float:
    """Distance from the object's center to its surface along u."""
    c = obj.trans.numpy()

    def sdf_at(s):
        return float(object_sdf(obj, torch.as_tensor(c + s * u, dtype=DTYPE)))

    s = 1.0
    while sdf_at(s) < 0 and s < 1000.0:
        s *= 1.5
    a, b = 0.0, s
    for _ in range(50):
        m = 0.5 * (a + b)
        if sdf_at(m) < 0:
            a = m
        else:
            b = m
    return 0.5 * (a + b)


def _tip_midpoint(theta: np.ndarray, rot, fingers: list[int]) -> np.ndarray:
    pose = HandPose(theta.copy(), rot=rot)
    Rg = rodrigues(pose.rot)
    tips = []
    for f in fingers:
        _, joints, _, _ = _finger_chain(pose, f, Rg, hand_asset()["bones"])
        tips.append(joints[-1].numpy())
    return np.mean(tips, axis=0)


def synthesize_grasp(obj: ObjectModel, prompt: PromptAnnotation, seed: int) -> HandPose:
    """Pose the hand on `obj` to realize `prompt`; deterministic per seed."""
    prompt.validate()
    rng = np.random.default_rng(seed)
    c = obj.trans.numpy()
    failures = []

    for attempt in range(MAX_APPROACHES):
        u = rng.normal(size=3)
        u /= np.linalg.norm(u)
        v = rng.normal(size=3)
        v -= np.dot(v, u) * u
        v /= np.linalg.norm(v)

        z_w = -u  # palm normal points at the object
        y_w = v
        x_w = np.cross(y_w, z_w)
        R = np.stack([x_w, y_w, z_w], axis=1)
        rot = rotation_to_axis_angle(torch.as_tensor(R, dtype=DTYPE))

        try:
            pose = _attempt(obj, prompt, u, R, rot, c)
        except _AttemptFailed as exc:
            failures.append(f"approach {attempt}: {exc.reason}")
            continue
        derived = derive_prompt(pose, obj)
        if derived.grasp_type != prompt.grasp_type or derived.per_finger != prompt.per_finger:
            failures.append(
                f"approach {attempt}: round-trip mismatch "
                f"(got {derived.grasp_type}/{derived.per_finger})"
            )
            continue
        return pose

    raise SynthesisFailure(
        f"could not realize {prompt.grasp_type} prompt on {obj.object_id or obj.kind}",
        diagnostic={"attempts": failures},
    )


def _attempt(obj: ObjectModel, prompt: PromptAnnotation, u, R, rot, c) -> HandPose:
    theta = np.zeros(45)
    contacting = [f for f in range(5) if prompt.per_finger[f] != "free"]
    for f, name in enumerate(FINGERS):
        if prompt.per_finger[f] == "free":
            for s in range(3):
                theta[9 * f + 3 * s] = FREE_SHAPES[prompt.free_status[name]][s]

    if prompt.grasp_type in ("wrap", "lift"):
        anchor_w = R @ PALM_ANCHOR
        s_surf = _surface_offset(obj, u)
        trans_np = c + (s_surf + GAPS[prompt.grasp_type]) * u - anchor_w
    else:
        # fingertip grasps: object centered at the half-curl tip midpoint,
        # with the hand withdrawn a little so contact lands on the tips
        th = theta.copy()
        for f in contacting:
            lim = CLOSE_LIMITS[prompt.per_finger[f]]
            for s in range(3):
                th[9 * f + 3 * s] = 0.55 * lim[s]
        trans_np = c - _tip_midpoint(th, rot, contacting) + 10.0 * u

    # keep the palm itself clear unless the grasp wants palm contact
    if prompt.grasp_type != "lift":
        palm_d = _palm_min_sdf(theta, rot, trans_np, obj)
        if palm_d < 3.0:
            trans_np = trans_np + (3.0 - palm_d) * u

    evals = {f: _FingerEval(f, R, trans_np) for f in range(5)}
    for f in contacting:
        _close_finger(theta, evals[f], obj, f, prompt.per_finger[f])

    for f, name in enumerate(FINGERS):
        if prompt.per_finger[f] == "free":
            # fall back through alternative free shapes if the requested one collides
            ladder = [np.array(FREE_SHAPES[prompt.free_status[name]])]
            ladder += [np.array([1.6, 1.9, 1.7]), np.array(FREE_SHAPES["partial extension"]),
                       np.array(FREE_SHAPES["full extension"])]
            for shape in ladder:
                if evals[f].seg_min_sdf(shape, obj).min() > FREE_CLEARANCE:
                    theta[9 * f: 9 * f + 9: 3] = shape
                    break
            else:
                raise _AttemptFailed(f"free finger {name} would touch the object")

    trans = torch.as_tensor(trans_np, dtype=DTYPE)
    return HandPose(theta, trans=trans, rot=rot).clamped()


def _palm_min_sdf(theta, rot, trans_np, obj) -> float:
    pose = HandPose(theta.copy(), trans=torch.as_tensor(trans_np, dtype=DTYPE), rot=rot)
    surf = sample_hand_surface(pose)
    return float(object_sdf(obj, surf.points[surf.mask(fingers=["palm"])]).min())
