"""Analytic-SDF objects, soft contact maps, and penetration loss.

The soft contact surrogate is a sigmoid of clamped surface distance,
sigma((r0 - d) / tau), evaluated from exact primitive SDFs on the hand side
and from the hand's capsule-union SDF on the object side. Hard ground-truth
contact uses |distance| <= gt_threshold (2mm by default, matching the
coverage metric convention).
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np
import torch

from .errors import InvalidInputError, UnsupportedObjectError
from .geometry import DTYPE, capsule_set_sdf, rodrigues
from .hand import HandSurface

OBJECT_POINTS = 2048

_KINDS = ("sphere", "capsule", "box", "torus", "cylinder")


@dataclass
class ObjectModel:
    """Rigid primitive with an exact SDF plus 2048 sampled surface points (mm).

    params by kind:
      sphere:   {radius}
      capsule:  {radius, half_height}   (axis z)
      box:      {half_extents: [hx, hy, hz]}
      torus:    {major_radius, minor_radius}   (axis z)
      cylinder: {radius, half_height}   (axis z)
    """

    kind: str
    params: dict
    rot: torch.Tensor = field(default_factory=lambda: torch.zeros(3, dtype=DTYPE))
    trans: torch.Tensor = field(default_factory=lambda: torch.zeros(3, dtype=DTYPE))
    points: torch.Tensor | None = None
    object_id: str = ""
    seed: int = 0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise UnsupportedObjectError(f"unknown object kind {self.kind!r}")
        for k, v in self.params.items():
            vals = v if isinstance(v, (list, tuple)) else [v]
            if any(x <= 0 for x in vals):
                raise InvalidInputError(f"object param {k} must be positive")
        self.rot = torch.as_tensor(self.rot, dtype=DTYPE)
        self.trans = torch.as_tensor(self.trans, dtype=DTYPE)
        if self.points is None:
            self.points = sample_object_points(self, self.seed)

    @property
    def rotation(self) -> torch.Tensor:
        return rodrigues(self.rot)

    def as_dict(self) -> dict:
        return {
            "id": self.object_id,
            "kind": self.kind,
            "params": self.params,
            "pose": {"rot": self.rot.tolist(), "trans": self.trans.tolist()},
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ObjectModel":
        pose = d.get("pose", {})
        return cls(
            kind=d["kind"],
            params=d["params"],
            rot=pose.get("rot", [0.0, 0.0, 0.0]),
            trans=pose.get("trans", [0.0, 0.0, 0.0]),
            object_id=d.get("id", ""),
            seed=d.get("seed", 0),
        )


def load_object_bank(path) -> list[ObjectModel]:
    with open(path) as fh:
        entries = json.load(fh)
    return [ObjectModel.from_dict(e) for e in entries]


def save_object_bank(objects, path):
    with open(path, "w") as fh:
        json.dump([o.as_dict() for o in objects], fh, indent=1)
        fh.write("\n")


def _sdf_local(kind: str, params: dict, q: torch.Tensor) -> torch.Tensor:
    if kind == "sphere":
        return q.norm(dim=-1) - params["radius"]
    if kind == "capsule":
        h, r = params["half_height"], params["radius"]
        z = q[..., 2].clamp(-h, h)
        closest = torch.stack([torch.zeros_like(z), torch.zeros_like(z), z], dim=-1)
        return (q - closest).norm(dim=-1) - r
    if kind == "box":
        half = torch.as_tensor(params["half_extents"], dtype=q.dtype)
        d = q.abs() - half
        outside = d.clamp(min=0.0).norm(dim=-1)
        inside = d.max(dim=-1).values.clamp(max=0.0)
        return outside + inside
    if kind == "torus":
        R, r = params["major_radius"], params["minor_radius"]
        ring = torch.sqrt(q[..., 0] ** 2 + q[..., 1] ** 2 + 1e-300) - R
        return torch.sqrt(ring**2 + q[..., 2] ** 2 + 1e-300) - r
    if kind == "cylinder":
        h, r = params["half_height"], params["radius"]
        dr = torch.sqrt(q[..., 0] ** 2 + q[..., 1] ** 2 + 1e-300) - r
        dz = q[..., 2].abs() - h
        d = torch.stack([dr, dz], dim=-1)
        outside = d.clamp(min=0.0).norm(dim=-1)
        inside = d.max(dim=-1).values.clamp(max=0.0)
        return outside + inside
    raise UnsupportedObjectError(f"unknown object kind {kind!r}")


def object_sdf(obj: ObjectModel, p) -> torch.Tensor:
    """Exact signed distance (mm, negative inside) of points (..., 3)."""
    p = p if isinstance(p, torch.Tensor) else torch.as_tensor(p, dtype=DTYPE)
    if not bool(torch.isfinite(p).all()):
        raise InvalidInputError("non-finite query point")
    q = (p - obj.trans) @ obj.rotation  # world -> local (R^T applied row-wise)
    return _sdf_local(obj.kind, obj.params, q)


def sample_object_points(obj: ObjectModel, seed: int, n: int = OBJECT_POINTS) -> torch.Tensor:
    """Area-weighted surface samples, deterministic per seed."""
    rng = np.random.default_rng(seed)
    kind, params = obj.kind, obj.params
    if kind == "sphere":
        v = rng.normal(size=(n, 3))
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        local = v * params["radius"]
    elif kind == "capsule":
        r, h = params["radius"], params["half_height"]
        area_cyl = 2 * math.pi * r * 2 * h
        area_caps = 4 * math.pi * r * r
        u = rng.random(n)
        phi = rng.random(n) * 2 * math.pi
        on_cyl = u < area_cyl / (area_cyl + area_caps)
        z = np.where(on_cyl, (rng.random(n) * 2 - 1) * h, 0.0)
        local = np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)
        caps = ~on_cyl
        m = int(caps.sum())
        if m:
            v = rng.normal(size=(m, 3))
            v /= np.linalg.norm(v, axis=1, keepdims=True)
            cap_pts = v * r
            cap_pts[:, 2] = np.abs(cap_pts[:, 2]) * np.where(rng.random(m) < 0.5, 1.0, -1.0)
            cap_pts[:, 2] += np.sign(cap_pts[:, 2]) * h
            local[caps] = cap_pts
    elif kind == "box":
        hx, hy, hz = params["half_extents"]
        areas = np.array([hy * hz, hy * hz, hx * hz, hx * hz, hx * hy, hx * hy])
        face = rng.choice(6, size=n, p=areas / areas.sum())
        u = (rng.random(n) * 2 - 1)
        v = (rng.random(n) * 2 - 1)
        local = np.zeros((n, 3))
        for i, (ax, sign) in enumerate([(0, 1), (0, -1), (1, 1), (1, -1), (2, 1), (2, -1)]):
            m = face == i
            half = [hx, hy, hz]
            others = [j for j in range(3) if j != ax]
            local[m, ax] = sign * half[ax]
            local[m, others[0]] = u[m] * half[others[0]]
            local[m, others[1]] = v[m] * half[others[1]]
    elif kind == "torus":
        R, r = params["major_radius"], params["minor_radius"]
        theta = rng.random(n) * 2 * math.pi  # around main axis
        # minor angle: density proportional to (R + r cos phi), sample by rejection
        phi = np.empty(n)
        filled = 0
        while filled < n:
            cand = rng.random(n) * 2 * math.pi
            acc = rng.random(n) < (R + r * np.cos(cand)) / (R + r)
            take = min(int(acc.sum()), n - filled)
            phi[filled: filled + take] = cand[acc][:take]
            filled += take
        ring = R + r * np.cos(phi)
        local = np.stack([ring * np.cos(theta), ring * np.sin(theta), r * np.sin(phi)], axis=1)
    elif kind == "cylinder":
        r, h = params["radius"], params["half_height"]
        area_side = 2 * math.pi * r * 2 * h
        area_disk = math.pi * r * r
        u = rng.random(n)
        phi = rng.random(n) * 2 * math.pi
        side = u < area_side / (area_side + 2 * area_disk)
        top = (~side) & (rng.random(n) < 0.5)
        rad = r * np.sqrt(rng.random(n))
        local = np.stack(
            [
                np.where(side, r * np.cos(phi), rad * np.cos(phi)),
                np.where(side, r * np.sin(phi), rad * np.sin(phi)),
                np.where(side, (rng.random(n) * 2 - 1) * h, np.where(top, h, -h)),
            ],
            axis=1,
        )
    else:
        raise UnsupportedObjectError(f"unknown object kind {kind!r}")

    local_t = torch.as_tensor(local, dtype=DTYPE)
    return local_t @ obj.rotation.T + obj.trans


@dataclass
class ContactParams:
    """Soft-contact shape: midpoint r0 (mm), softness tau (mm), hard threshold (mm)."""

    r0: float = 5.0
    tau: float = 1.5
    gt_threshold: float = 2.0

    def __post_init__(self):
        if self.tau <= 0 or self.r0 <= 0:
            raise InvalidInputError("contact params r0 and tau must be positive")


@dataclass
class ContactMap:
    """Per-point contact probability on the hand (778) and object (2048) clouds."""

    hand_values: torch.Tensor
    object_values: torch.Tensor

    def __post_init__(self):
        self.hand_values = torch.as_tensor(self.hand_values, dtype=DTYPE)
        self.object_values = torch.as_tensor(self.object_values, dtype=DTYPE)

    def validate(self):
        for name, v in (("hand", self.hand_values), ("object", self.object_values)):
            if bool((v < 0).any()) or bool((v > 1).any()):
                raise InvalidInputError(f"{name} contact values outside [0, 1]")

    def concatenated(self) -> torch.Tensor:
        return torch.cat([self.hand_values, self.object_values])

    def as_dict(self) -> dict:
        return {"hand": self.hand_values.detach().tolist(), "object": self.object_values.detach().tolist()}


def _surface_capsules(hand: HandSurface):
    if hand.capsules is None:
        raise InvalidInputError("hand surface lacks its capsule set; build it with sample_hand_surface")
    return hand.capsules


def diff_contact(hand: HandSurface, obj: ObjectModel, params: ContactParams | None = None) -> ContactMap:
    """Soft contact map, differentiable w.r.t. the pose behind `hand`.

    Hand side uses the object's exact SDF clamped at zero; object side uses the
    exact capsule-union SDF of the hand carried on the surface.
    """
    params = params or ContactParams()
    d_hand = object_sdf(obj, hand.points).clamp(min=0.0)
    hand_vals = torch.sigmoid((params.r0 - d_hand) / params.tau)
    p0s, p1s, radii, _ = _surface_capsules(hand)
    d_obj = capsule_set_sdf(obj.points, p0s, p1s, radii).clamp(min=0.0)
    obj_vals = torch.sigmoid((params.r0 - d_obj) / params.tau)
    return ContactMap(hand_vals, obj_vals)


def contact_maps(pose, obj: ObjectModel, params: ContactParams | None = None) -> ContactMap:
    """diff_contact driven directly from a pose."""
    from .hand import sample_hand_surface

    return diff_contact(sample_hand_surface(pose), obj, params)


def ground_truth_contact(hand: HandSurface, obj: ObjectModel, params: ContactParams | None = None) -> ContactMap:
    """Hard contact: 1 where |surface distance| <= gt_threshold, else 0."""
    params = params or ContactParams()
    thr = params.gt_threshold
    d_hand = object_sdf(obj, hand.points)
    hand_vals = (d_hand.abs() <= thr).to(DTYPE)
    p0s, p1s, radii, _ = _surface_capsules(hand)
    d_obj = capsule_set_sdf(obj.points, p0s, p1s, radii)
    obj_vals = (d_obj.abs() <= thr).to(DTYPE)
    return ContactMap(hand_vals, obj_vals)


def penetration_loss(hand: HandSurface, obj: ObjectModel) -> torch.Tensor:
    """Sum of squared penetration depths (mm^2) of hand points inside the object."""
    d = object_sdf(obj, hand.points)
    return ((-d).clamp(min=0.0) ** 2).sum()
