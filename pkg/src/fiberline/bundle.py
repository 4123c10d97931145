"""Oriented frames with in-plane offsets, and their quotient to lines.

A point is a pair ``(g, r)``: a rotation matrix g and a 2-vector r of
coordinates in the plane spanned by the frame's first two columns.  The
circle acts by

    h . (g, r) = (g Rz(h), R(-h) r)

where Rz(h) spins the frame about its third column and R(-h) counter-rotates
the offset coordinates.  The quotient map

    project_to_line(g, r) = (u, foot) = (g e_z, r1 g e_x + r2 g e_y)

is invariant under this action: the two rotations cancel, so every orbit is
one directed line.  Densities built from u and the foot vector inherit that
invariance; ``symmetrize_density`` manufactures it for arbitrary raw
densities by averaging over the circle.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import BoundViolated, NonFinite, RejectionStall
from .haar import AcceptanceStats, sample_rotation, sample_sphere2, \
    tangent_from_ball
from .linespace import DirectedLine
from .randkit import RngStream

__all__ = [
    "BundlePoint",
    "LineDensity",
    "act",
    "project_to_line",
    "sample_disk",
    "sample_isotropic",
    "sample_bundle",
    "sample_cosine_surface",
    "symmetrize_density",
    "uniform_density",
    "tilt_density",
    "radial_density",
    "tilt_radial_density",
    "foot_tilt_density",
]

_ORTHO_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class BundlePoint:
    """Frame(s) g of shape (3, 3) or (n, 3, 3) with offset(s) r of matching
    shape (2,) or (n, 2).  g must be a rotation to 1e-10."""

    g: np.ndarray
    r: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.g, dtype=np.float64)
        r = np.asarray(self.r, dtype=np.float64)
        if g.shape[-2:] != (3, 3) or g.ndim not in (2, 3):
            raise ValueError("g must have shape (3, 3) or (n, 3, 3)")
        if r.shape != g.shape[:-2] + (2,):
            raise ValueError("r must have shape (2,) or (n, 2) matching g")
        if not (np.all(np.isfinite(g)) and np.all(np.isfinite(r))):
            raise ValueError("bundle coordinates must be finite")
        gtg = np.swapaxes(g, -1, -2) @ g
        eye = np.eye(3)
        if np.max(np.abs(gtg - eye)) > _ORTHO_TOL:
            raise ValueError("g is not orthogonal to 1e-10")
        if np.max(np.abs(np.linalg.det(g) - 1.0)) > _ORTHO_TOL:
            raise ValueError("g must have determinant +1")
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "r", r)

    @property
    def is_batch(self) -> bool:
        return self.g.ndim == 3

    def __len__(self) -> int:
        return self.g.shape[0] if self.is_batch else 1


@dataclass(frozen=True, eq=False)
class LineDensity:
    """Unnormalized density on bundle points.

    ``f(g, r)`` must be vectorized over a leading batch axis, take values in
    [0, bound], and depend on (g, r) only through the projected line if you
    want estimates on lines to be meaningful.  ``disk_radius`` is the radius
    of the offset disk proposals are drawn from.
    """

    f: Callable[[np.ndarray, np.ndarray], np.ndarray]
    bound: float
    disk_radius: float

    def __post_init__(self):
        if not callable(self.f):
            raise ValueError("f must be callable")
        if not (np.isfinite(self.bound) and self.bound > 0.0):
            raise ValueError("bound must be positive and finite")
        if not (np.isfinite(self.disk_radius) and self.disk_radius > 0.0):
            raise ValueError("disk_radius must be positive and finite")


def _act_arrays(h, g: np.ndarray, r: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Circle action on raw (g, r) arrays; h is a scalar or (n,) array."""
    h = np.asarray(h, dtype=np.float64)
    ch, sh = np.cos(h), np.sin(h)
    zeros = np.zeros_like(ch)
    ones = np.ones_like(ch)
    rz = np.stack(
        [
            np.stack([ch, -sh, zeros], axis=-1),
            np.stack([sh, ch, zeros], axis=-1),
            np.stack([zeros, zeros, ones], axis=-1),
        ],
        axis=-2,
    )
    g2 = g @ rz
    r1, r2 = r[..., 0], r[..., 1]
    # R(-h) r: clockwise counter-rotation of the offset coordinates
    r_new = np.stack([ch * r1 + sh * r2, -sh * r1 + ch * r2], axis=-1)
    return g2, r_new


def act(h, pt: BundlePoint) -> BundlePoint:
    """Apply the circle action; h broadcasts over a batch.

    The projected line is unchanged: act is a pure gauge move.
    """
    g2, r2 = _act_arrays(h, pt.g, pt.r)
    return BundlePoint(g2, r2)


def _act_broken_arrays(h, g, r):
    """Deliberately wrong action (offset rotated with +h instead of -h);
    kept as the negative control for gauge-invariance audits."""
    h = np.asarray(h, dtype=np.float64)
    g2, _ = _act_arrays(h, g, r)
    ch, sh = np.cos(h), np.sin(h)
    r1, r2 = r[..., 0], r[..., 1]
    r_new = np.stack([ch * r1 - sh * r2, sh * r1 + ch * r2], axis=-1)
    return g2, r_new


def _project_arrays(g: np.ndarray, r: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    u = g[..., :, 2]
    foot = r[..., 0, None] * g[..., :, 0] + r[..., 1, None] * g[..., :, 1]
    return u, foot


def project_to_line(pt: BundlePoint) -> DirectedLine:
    """Quotient map to directed lines: u = g e_z, foot in the frame plane."""
    u, foot = _project_arrays(pt.g, pt.r)
    return DirectedLine(u, foot)


def sample_disk(rng: RngStream, radius: float, n: int | None = None) -> np.ndarray:
    """Uniform point(s) in the closed disk of given radius, by square
    rejection; shape (2,) or (n, 2)."""
    if not (np.isfinite(radius) and radius > 0.0):
        raise ValueError("radius must be positive and finite")
    if n is None:
        m, single = 1, True
    else:
        m, single = int(n), False
        if m < 0:
            raise ValueError("n must be nonnegative")
    out = np.empty((m, 2), dtype=np.float64)
    pending = np.arange(m)
    while pending.size:
        c = 2.0 * rng.uniforms(2 * pending.size).reshape(-1, 2) - 1.0
        ok = np.sum(c * c, axis=1) <= 1.0
        out[pending[ok]] = c[ok]
        pending = pending[~ok]
    out *= radius
    return out[0] if single else out


def sample_isotropic(
    rng: RngStream, radius: float, n: int | None = None
) -> DirectedLine:
    """Line(s) from the rotation-invariant kinematic measure, restricted to
    lines whose foot lies within ``radius`` of the origin.

    Draws a uniformly random frame and a uniform offset in the disk (frames
    first, then offsets, when batched).  Every line meeting the ball of that
    radius is reachable, with density constant in the invariant measure.
    """
    g = sample_rotation(rng, n)
    r = sample_disk(rng, radius, n)
    u, foot = _project_arrays(g, r)
    return DirectedLine(u, foot)


def sample_bundle(
    rng: RngStream,
    density: LineDensity,
    n: int | None = None,
    *,
    return_stats: bool = False,
    stall_acceptance: float = 1e-6,
    stall_proposals: int = 1_000_000,
):
    """Bundle point(s) distributed as density.f times the product of the
    rotation-invariant measure on frames and the uniform disk on offsets.

    Plain rejection: propose (frame, disk offset), keep with probability
    f/bound.  Raises BoundViolated if f exceeds the bound beyond roundoff,
    NonFinite on NaN/inf densities, RejectionStall when fewer than
    ``stall_acceptance`` of at least ``stall_proposals`` candidates were
    kept.  With ``return_stats=True`` also returns :class:`AcceptanceStats`.
    """
    if n is None:
        m, single = 1, True
    else:
        m, single = int(n), False
        if m < 0:
            raise ValueError("n must be nonnegative")
    f, bound = density.f, density.bound
    g_out = np.empty((m, 3, 3), dtype=np.float64)
    r_out = np.empty((m, 2), dtype=np.float64)
    got = 0
    accepted = 0
    proposals = 0
    rate_guess = 1.0
    while got < m:
        want = m - got
        k = min(max(int(want / max(rate_guess, 0.01)) + 8, 32), 4 * m + 64, 1 << 22)
        g = sample_rotation(rng, k)
        r = sample_disk(rng, density.disk_radius, k)
        val = np.asarray(f(g, r), dtype=np.float64)
        if val.shape != (k,):
            raise ValueError("density must return one value per proposal")
        if not np.all(np.isfinite(val)):
            raise NonFinite("density returned NaN or infinity")
        if np.any(val > bound * (1.0 + 1e-9)) or np.any(val < 0.0):
            raise BoundViolated(
                f"density range [{float(val.min()):.6g}, {float(val.max()):.6g}]"
                f" outside [0, {bound:.6g}]"
            )
        keep = rng.uniforms(k) * bound < val
        proposals += k
        accepted += int(np.count_nonzero(keep))
        idx = np.nonzero(keep)[0][:want]
        g_out[got:got + idx.size] = g[idx]
        r_out[got:got + idx.size] = r[idx]
        got += idx.size
        rate_guess = max(accepted / proposals, 1e-3) if accepted else rate_guess * 0.25
        if proposals >= stall_proposals and accepted < stall_acceptance * proposals:
            raise RejectionStall(f"{accepted} acceptances in {proposals} proposals")
    pt = BundlePoint(g_out[0], r_out[0]) if single else BundlePoint(g_out, r_out)
    if return_stats:
        return pt, AcceptanceStats(accepted, proposals)
    return pt


def sample_cosine_surface(
    rng: RngStream, radius: float, n: int | None = None
) -> DirectedLine:
    """Line(s) through cosine-weighted inward directions from the sphere.

    A uniform surface point on the sphere of the given radius emits a ray
    whose angle from the inward normal has density 2 cos(alpha) sin(alpha)
    (drawn as cos(alpha) = sqrt(U)).  The resulting flux through the sphere
    reproduces the invariant line measure restricted to hitting lines.
    """
    if not (np.isfinite(radius) and radius > 0.0):
        raise ValueError("radius must be positive and finite")
    if n is None:
        m, single = 1, True
    else:
        m, single = int(n), False
        if m < 0:
            raise ValueError("n must be nonnegative")
    normal_in = -sample_sphere2(rng, m)  # inward normal at the surface point
    surf = -radius * normal_in
    tang = tangent_from_ball(rng, normal_in)
    cos_a = np.sqrt(rng.uniforms(m))
    sin_a = np.sqrt(np.maximum(0.0, 1.0 - cos_a * cos_a))
    u = cos_a[:, None] * normal_in + sin_a[:, None] * tang
    foot = surf - np.sum(surf * u, axis=1, keepdims=True) * u
    dl = DirectedLine(u, foot)
    if single:
        return DirectedLine(dl.u[0], dl.foot[0])
    return dl


def symmetrize_density(
    f_raw: Callable[[np.ndarray, np.ndarray], np.ndarray], k: int = 64
) -> Callable[[np.ndarray, np.ndarray], np.ndarray]:
    """Average a raw density over the circle at k equispaced angles.

    The result is gauge-invariant up to the k-point quadrature error (exact
    for densities whose angular dependence has harmonics below k).  NonFinite
    from f_raw propagates.
    """
    k = int(k)
    if k < 1:
        raise ValueError("k must be at least 1")
    angles = 2.0 * np.pi * np.arange(k) / k

    def f(g: np.ndarray, r: np.ndarray) -> np.ndarray:
        acc = None
        for h in angles:
            g2, r2 = _act_arrays(h, g, r)
            v = np.asarray(f_raw(g2, r2), dtype=np.float64)
            if not np.all(np.isfinite(v)):
                raise NonFinite("raw density returned NaN or infinity")
            acc = v.copy() if acc is None else acc + v
        return acc / k

    return f


def _unit_axis(axis) -> np.ndarray:
    a = np.asarray(axis, dtype=np.float64).reshape(3)
    ln = float(np.sqrt(np.sum(a * a)))
    if not np.isfinite(ln) or ln <= 0.0:
        raise ValueError("axis must be a nonzero vector")
    return a / ln


def uniform_density(disk_radius: float = 1.0) -> LineDensity:
    """f == 1: plain isotropic lines, for pipeline checks."""

    def f(g, r):
        return np.ones(g.shape[:-2], dtype=np.float64)

    return LineDensity(f, 1.0, disk_radius)


def tilt_density(kappa: float, axis=(0.0, 0.0, 1.0),
                 disk_radius: float = 1.0) -> LineDensity:
    """exp(kappa (u . axis - 1)) on the direction u = g e_z.

    Gauge-invariant because u is.  The bound is 1 for kappa >= 0; for
    negative kappa the maximum sits at u . axis = -1, giving exp(-2 kappa).
    """
    kappa = float(kappa)
    a = _unit_axis(axis)
    bound = 1.0 if kappa >= 0.0 else float(np.exp(-2.0 * kappa))

    def f(g, r):
        u = g[..., :, 2]
        return np.exp(kappa * (u @ a - 1.0))

    return LineDensity(f, bound, disk_radius)


def radial_density(sigma: float, disk_radius: float = 1.0) -> LineDensity:
    """exp(-|r|^2 / (2 sigma^2)); |r| equals the line's distance from the
    origin, so this is gauge-invariant too."""
    sigma = float(sigma)
    if not (np.isfinite(sigma) and sigma > 0.0):
        raise ValueError("sigma must be positive")

    def f(g, r):
        return np.exp(-np.sum(r * r, axis=-1) / (2.0 * sigma * sigma))

    return LineDensity(f, 1.0, disk_radius)


def tilt_radial_density(kappa: float, sigma: float, axis=(0.0, 0.0, 1.0),
                        disk_radius: float = 1.0) -> LineDensity:
    """Product of the tilt and radial factors."""
    t = tilt_density(kappa, axis, disk_radius)
    rad = radial_density(sigma, disk_radius)

    def f(g, r):
        return t.f(g, r) * rad.f(g, r)

    return LineDensity(f, t.bound, disk_radius)


def foot_tilt_density(beta: float, axis=(0.0, 0.0, 1.0),
                      disk_radius: float = 1.0) -> LineDensity:
    """exp(beta (foot . axis - disk_radius)) on the projected foot point.

    Depends on where the foot sits in space (not only on |r|), yet is exactly
    gauge-invariant since the foot is.  This makes it the sharp audit case: a
    wrong circle action moves the foot and visibly distorts estimates, which
    purely directional or radial densities cannot detect.  Requires
    beta >= 0; bound is 1 because |foot| <= disk_radius.
    """
    beta = float(beta)
    if not (np.isfinite(beta) and beta >= 0.0):
        raise ValueError("beta must be nonnegative")
    a = _unit_axis(axis)

    def f(g, r):
        _, foot = _project_arrays(g, r)
        return np.exp(beta * (foot @ a - disk_radius))

    return LineDensity(f, 1.0, disk_radius)
