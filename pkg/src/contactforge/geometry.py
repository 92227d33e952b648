"""Shared torch geometry kernels: rotations, capsule SDFs, surface lattices.

Everything here works in float64 and stays differentiable (a.e. for SDFs),
since both the pose optimizer and the fusion conditioning backpropagate
through these functions.
"""

import math

import torch

DTYPE = torch.float64

GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))


def rodrigues(rotvec: torch.Tensor) -> torch.Tensor:
    """Axis-angle vector (..., 3) to rotation matrix (..., 3, 3).

    Uses the Taylor-safe sin(t)/t and (1-cos t)/t^2 forms so gradients are
    finite at t=0.
    """
    theta2 = (rotvec * rotvec).sum(-1)
    theta = torch.sqrt(theta2 + 1e-30)
    small = theta < 1e-8
    sin_t = torch.where(small, 1.0 - theta2 / 6.0, torch.sin(theta) / theta)
    cos_t = torch.where(small, 0.5 - theta2 / 24.0, (1.0 - torch.cos(theta)) / theta2.clamp(min=1e-30))

    x, y, z = rotvec[..., 0], rotvec[..., 1], rotvec[..., 2]
    zeros = torch.zeros_like(x)
    K = torch.stack(
        [
            torch.stack([zeros, -z, y], dim=-1),
            torch.stack([z, zeros, -x], dim=-1),
            torch.stack([-y, x, zeros], dim=-1),
        ],
        dim=-2,
    )
    eye = torch.eye(3, dtype=rotvec.dtype, device=rotvec.device).expand(K.shape)
    return eye + sin_t[..., None, None] * K + cos_t[..., None, None] * (K @ K)


def rotation_to_axis_angle(R) -> torch.Tensor:
    """Rotation matrix (3, 3) to axis-angle vector with magnitude <= pi."""
    R = torch.as_tensor(R, dtype=DTYPE)
    trace = R[0, 0] + R[1, 1] + R[2, 2]
    cos_t = ((trace - 1.0) / 2.0).clamp(-1.0, 1.0)
    angle = torch.acos(cos_t)
    if angle < 1e-9:
        return torch.zeros(3, dtype=DTYPE)
    if math.pi - float(angle) < 1e-6:
        # near-pi: extract axis from R + I
        A = (R + torch.eye(3, dtype=DTYPE)) / 2.0
        axis = torch.sqrt(torch.clamp(torch.diagonal(A), min=0.0))
        # fix signs from off-diagonals
        if axis[0] > 0:
            axis = axis * torch.tensor(
                [1.0, math.copysign(1.0, float(A[0, 1])), math.copysign(1.0, float(A[0, 2]))], dtype=DTYPE
            )
        elif axis[1] > 0:
            axis = axis * torch.tensor([1.0, 1.0, math.copysign(1.0, float(A[1, 2]))], dtype=DTYPE)
        axis = axis / axis.norm()
        return axis * angle
    axis = torch.stack([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]]) / (2.0 * torch.sin(angle))
    return axis * angle


def capsule_sdf(points: torch.Tensor, p0: torch.Tensor, p1: torch.Tensor, radius) -> torch.Tensor:
    """Signed distance of points (..., 3) to a capsule with axis p0->p1."""
    ab = p1 - p0
    ap = points - p0
    denom = (ab * ab).sum(-1).clamp(min=1e-12)
    t = ((ap * ab).sum(-1) / denom).clamp(0.0, 1.0)
    closest = p0 + t[..., None] * ab
    return (points - closest).norm(dim=-1) - radius


def capsule_set_sdf(points: torch.Tensor, p0s: torch.Tensor, p1s: torch.Tensor, radii: torch.Tensor) -> torch.Tensor:
    """Min signed distance of points (N, 3) to a set of K capsules.

    p0s, p1s: (K, 3); radii: (K,). Returns (N,).
    """
    ab = p1s - p0s  # (K, 3)
    ap = points[:, None, :] - p0s[None, :, :]  # (N, K, 3)
    denom = (ab * ab).sum(-1).clamp(min=1e-12)  # (K,)
    t = ((ap * ab[None, :, :]).sum(-1) / denom[None, :]).clamp(0.0, 1.0)  # (N, K)
    closest = p0s[None, :, :] + t[..., None] * ab[None, :, :]
    d = (points[:, None, :] - closest).norm(dim=-1) - radii[None, :]  # (N, K)
    return d.min(dim=-1).values


def fibonacci_hemisphere(n: int, up: int) -> torch.Tensor:
    """Deterministic lattice of n unit vectors on the up>0 / up<0 hemisphere (y axis)."""
    if n == 0:
        return torch.zeros((0, 3), dtype=DTYPE)
    i = torch.arange(n, dtype=DTYPE)
    y = (i + 0.5) / n  # (0, 1)
    r = torch.sqrt(1.0 - y * y)
    phi = GOLDEN_ANGLE * i
    return torch.stack([r * torch.cos(phi), up * y, r * torch.sin(phi)], dim=-1)


def capsule_surface_lattice(length: torch.Tensor, radius: float, n: int) -> torch.Tensor:
    """n points covering a capsule surface (axis +y from origin to (0, length, 0)).

    Split between cylinder side and the two hemispherical caps by area, then a
    golden-angle lattice on each part. Differentiable w.r.t. `length`; the
    split counts are piecewise constant in it.
    """
    L = float(length)
    area_cyl = 2.0 * math.pi * radius * L
    area_caps = 4.0 * math.pi * radius * radius
    n_cyl = int(round(n * area_cyl / (area_cyl + area_caps)))
    n_cyl = min(max(n_cyl, 0), n)
    n_caps = n - n_cyl
    n_top = n_caps // 2 + (n_caps % 2)
    n_bot = n_caps // 2

    parts = []
    if n_cyl > 0:
        i = torch.arange(n_cyl, dtype=DTYPE)
        t = (i + 0.5) / n_cyl
        phi = GOLDEN_ANGLE * i
        xz = torch.stack([radius * torch.cos(phi), torch.zeros(n_cyl, dtype=DTYPE), radius * torch.sin(phi)], dim=-1)
        axis = torch.zeros((n_cyl, 3), dtype=DTYPE)
        axis[:, 1] = 1.0
        parts.append(xz + axis * (t * length)[:, None])
    if n_top > 0:
        parts.append(fibonacci_hemisphere(n_top, up=1) * radius + torch.stack(
            [torch.zeros((), dtype=DTYPE), length, torch.zeros((), dtype=DTYPE)]
        ))
    if n_bot > 0:
        parts.append(fibonacci_hemisphere(n_bot, up=-1) * radius)
    return torch.cat(parts, dim=0)


def transform_points(R: torch.Tensor, t: torch.Tensor, points: torch.Tensor) -> torch.Tensor:
    """Apply x -> R x + t to points (..., 3)."""
    return points @ R.transpose(-1, -2) + t
