"""Uniform sampling on S^2, S^3 and SO(3), plus frame utilities.

Rotations are sampled by normalizing 4 gaussians to a unit quaternion
(uniform on S^3) and pushing through the standard quaternion-to-matrix map;
the two preimages q and -q give the same rotation.  A tunable rejection
sampler reweights S^3 by a user density, optionally treating antipodal
points as identified.

All samplers follow one batch convention: ``n=None`` returns a single item,
``n=k`` returns a leading axis of length k, and a single item is computed as
a batch of one (so scalar and batch runs consume the random stream
identically).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import AntipodalViolation, BoundViolated, NonFinite, NotUnit, \
    PoleSingularity, RejectionStall
from .randkit import RngStream

__all__ = [
    "AcceptanceStats",
    "sample_sphere2",
    "sample_sphere3",
    "sample_ball3",
    "quat_to_rotation",
    "quat_mul",
    "rotation_to_frame",
    "sample_rotation",
    "rotation_angle",
    "rotation_angle_cdf",
    "s3_w_cdf",
    "hopf_map",
    "sample_s3_density",
    "naive_frame",
    "tangent_from_ball",
    "angle_between",
]

_UNIT_TOL = 1e-9
_TINY_NORM = 1e-6  # gaussian/ball vectors shorter than this are redrawn


@dataclass(frozen=True)
class AcceptanceStats:
    """Bookkeeping from a rejection sampler: proposals seen, proposals kept."""

    accepted: int
    proposals: int

    @property
    def rate(self) -> float:
        return self.accepted / self.proposals if self.proposals else 0.0


def _batch(n: int | None) -> tuple[int, bool]:
    if n is None:
        return 1, True
    n = int(n)
    if n < 0:
        raise ValueError("n must be nonnegative")
    return n, False


def _unit_gaussians(rng: RngStream, m: int, dim: int) -> np.ndarray:
    """m unit vectors in R^dim from normalized gaussians, redrawing the
    (astronomically rare) rows whose norm underflows below _TINY_NORM."""
    out = np.empty((m, dim), dtype=np.float64)
    pending = np.arange(m)
    while pending.size:
        g = rng.gaussians(dim * pending.size).reshape(-1, dim)
        nrm = np.sqrt(np.sum(g * g, axis=1))
        ok = nrm > _TINY_NORM
        out[pending[ok]] = g[ok] / nrm[ok, None]
        pending = pending[~ok]
    return out


def sample_sphere2(rng: RngStream, n: int | None = None) -> np.ndarray:
    """Uniform unit vector(s) on S^2; shape (3,) or (n, 3)."""
    m, single = _batch(n)
    out = _unit_gaussians(rng, m, 3)
    return out[0] if single else out


def sample_sphere3(rng: RngStream, n: int | None = None) -> np.ndarray:
    """Uniform unit quaternion(s) on S^3 as (w, x, y, z); shape (4,) or (n, 4)."""
    m, single = _batch(n)
    out = _unit_gaussians(rng, m, 4)
    return out[0] if single else out


def sample_ball3(
    rng: RngStream,
    n: int | None = None,
    return_stats: bool = False,
):
    """Uniform point(s) in the closed unit ball via cube rejection.

    Candidates are uniform in [-1, 1)^3 and kept when inside the ball, so the
    long-run acceptance rate is the volume ratio pi/6.  With
    ``return_stats=True`` also returns :class:`AcceptanceStats`.
    """
    m, single = _batch(n)
    out = np.empty((m, 3), dtype=np.float64)
    accepted = 0
    proposals = 0
    pending = np.arange(m)
    while pending.size:
        c = 2.0 * rng.uniforms(3 * pending.size).reshape(-1, 3) - 1.0
        ok = np.sum(c * c, axis=1) <= 1.0
        proposals += pending.size
        accepted += int(np.count_nonzero(ok))
        out[pending[ok]] = c[ok]
        pending = pending[~ok]
    res = out[0] if single else out
    if return_stats:
        return res, AcceptanceStats(accepted, proposals)
    return res


def _check_unit(v: np.ndarray, what: str) -> np.ndarray:
    nrm = np.sqrt(np.sum(v * v, axis=-1))
    if not np.all(np.abs(nrm - 1.0) <= _UNIT_TOL):
        worst = float(np.max(np.abs(nrm - 1.0)))
        raise NotUnit(f"{what} norm off by {worst:.3e} (tolerance {_UNIT_TOL})")
    return v / nrm[..., None]


def quat_to_rotation(q: np.ndarray) -> np.ndarray:
    """Rotation matrix R(q) for unit quaternion(s) q = (w, x, y, z).

    Accepts shape (..., 4), returns (..., 3, 3).  Raises NotUnit when any
    input norm is off by more than 1e-9; inputs are renormalized before use,
    and every matrix entry is a degree-2 product of components, so
    ``quat_to_rotation(-q)`` equals ``quat_to_rotation(q)`` exactly.
    """
    q = np.asarray(q, dtype=np.float64)
    if q.shape[-1] != 4:
        raise ValueError("quaternion must have 4 components")
    q = _check_unit(q, "quaternion")
    w, x, y, z = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    R = np.empty(q.shape[:-1] + (3, 3), dtype=np.float64)
    R[..., 0, 0] = 1.0 - 2.0 * (y * y + z * z)
    R[..., 0, 1] = 2.0 * (x * y - w * z)
    R[..., 0, 2] = 2.0 * (x * z + w * y)
    R[..., 1, 0] = 2.0 * (x * y + w * z)
    R[..., 1, 1] = 1.0 - 2.0 * (x * x + z * z)
    R[..., 1, 2] = 2.0 * (y * z - w * x)
    R[..., 2, 0] = 2.0 * (x * z - w * y)
    R[..., 2, 1] = 2.0 * (y * z + w * x)
    R[..., 2, 2] = 1.0 - 2.0 * (x * x + y * y)
    return R


def quat_mul(q1: np.ndarray, q2: np.ndarray) -> np.ndarray:
    """Hamilton product of quaternions in (w, x, y, z) order; broadcasts."""
    q1 = np.asarray(q1, dtype=np.float64)
    q2 = np.asarray(q2, dtype=np.float64)
    w1, x1, y1, z1 = q1[..., 0], q1[..., 1], q1[..., 2], q1[..., 3]
    w2, x2, y2, z2 = q2[..., 0], q2[..., 1], q2[..., 2], q2[..., 3]
    return np.stack(
        [
            w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
            w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
            w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
            w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
        ],
        axis=-1,
    )


def rotation_to_frame(R: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Columns of R as three vectors: the images of e_x, e_y, e_z."""
    R = np.asarray(R, dtype=np.float64)
    return R[..., :, 0], R[..., :, 1], R[..., :, 2]


def sample_rotation(rng: RngStream, n: int | None = None) -> np.ndarray:
    """Uniformly distributed rotation matrix/matrices; (3, 3) or (n, 3, 3)."""
    return quat_to_rotation(sample_sphere3(rng, n))


def rotation_angle(R: np.ndarray) -> np.ndarray:
    """Rotation angle in [0, pi] from the trace: cos(theta) = (tr R - 1)/2."""
    R = np.asarray(R, dtype=np.float64)
    tr = R[..., 0, 0] + R[..., 1, 1] + R[..., 2, 2]
    return np.arccos(np.clip(0.5 * (tr - 1.0), -1.0, 1.0))


def rotation_angle_cdf(theta: np.ndarray) -> np.ndarray:
    """CDF of the rotation angle under the uniform measure on rotations.

    The angle density is (1 - cos(theta)) / pi on [0, pi], giving
    F(theta) = (theta - sin(theta)) / pi.
    """
    t = np.clip(np.asarray(theta, dtype=np.float64), 0.0, np.pi)
    return (t - np.sin(t)) / np.pi


def s3_w_cdf(w: np.ndarray) -> np.ndarray:
    """CDF of one coordinate of a uniform unit quaternion.

    The marginal density is (2/pi) sqrt(1 - w^2) on [-1, 1]; integrating,
    F(w) = (w sqrt(1 - w^2) + asin(w) + pi/2) / pi.
    """
    w = np.clip(np.asarray(w, dtype=np.float64), -1.0, 1.0)
    return (w * np.sqrt(1.0 - w * w) + np.arcsin(w) + 0.5 * np.pi) / np.pi


def hopf_map(q: np.ndarray) -> np.ndarray:
    """Image of e_z under the rotation of unit quaternion(s) q.

    Constant along circles q -> q * (cos t, 0, 0, sin t), i.e. the fibers of
    the map S^3 -> S^2.  Raises NotUnit like :func:`quat_to_rotation`.
    """
    q = np.asarray(q, dtype=np.float64)
    if q.shape[-1] != 4:
        raise ValueError("quaternion must have 4 components")
    q = _check_unit(q, "quaternion")
    w, x, y, z = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    return np.stack(
        [
            2.0 * (x * z + w * y),
            2.0 * (y * z - w * x),
            1.0 - 2.0 * (x * x + y * y),
        ],
        axis=-1,
    )


def sample_s3_density(
    rng: RngStream,
    f: Callable[[np.ndarray], np.ndarray],
    bound: float,
    n: int | None = None,
    *,
    projective: bool = False,
    return_stats: bool = False,
    stall_acceptance: float = 1e-6,
    stall_proposals: int = 1_000_000,
):
    """Quaternions distributed as f(q) times the uniform S^3 measure.

    Parameters
    ----------
    f : callable
        Vectorized density factor: maps (m, 4) quaternions to (m,) values in
        [0, bound].  Need not be normalized.
    bound : float
        Rejection bound M; proposals are kept with probability f(q)/M.
    projective : bool
        Declare f antipodally symmetric.  The first accepted batch is audited
        (|f(q) - f(-q)| <= 1e-12) and AntipodalViolation raised otherwise.

    Raises
    ------
    BoundViolated if f exceeds ``bound`` beyond roundoff, NonFinite on NaN or
    infinite density values, RejectionStall if fewer than a
    ``stall_acceptance`` fraction of at least ``stall_proposals`` candidates
    were kept.
    """
    if not (np.isfinite(bound) and bound > 0.0):
        raise ValueError("bound must be positive and finite")
    m, single = _batch(n)
    out = np.empty((m, 4), dtype=np.float64)
    got = 0
    accepted = 0
    proposals = 0
    audited = False
    rate_guess = 1.0
    while got < m:
        want = m - got
        k = min(max(int(want / max(rate_guess, 0.01)) + 8, 32), 4 * m + 64, 1 << 22)
        q = sample_sphere3(rng, k)
        val = np.asarray(f(q), dtype=np.float64)
        if val.shape != (k,):
            raise ValueError("density must return one value per quaternion")
        if not np.all(np.isfinite(val)):
            raise NonFinite("density returned NaN or infinity")
        if np.any(val > bound * (1.0 + 1e-9)) or np.any(val < 0.0):
            raise BoundViolated(
                f"density range [{float(val.min()):.6g}, {float(val.max()):.6g}] "
                f"outside [0, {bound:.6g}]"
            )
        keep = rng.uniforms(k) * bound < val
        proposals += k
        accepted += int(np.count_nonzero(keep))
        if projective and not audited and np.any(keep):
            qa = q[keep][:1000]
            diff = np.abs(np.asarray(f(qa), float) - np.asarray(f(-qa), float))
            if np.any(diff > 1e-12):
                raise AntipodalViolation(
                    f"f(q) and f(-q) differ by up to {float(diff.max()):.3e}"
                )
            audited = True
        take = q[keep][:want]
        out[got:got + take.shape[0]] = take
        got += take.shape[0]
        rate_guess = max(accepted / proposals, 1e-3) if accepted else rate_guess * 0.25
        if proposals >= stall_proposals and accepted < stall_acceptance * proposals:
            raise RejectionStall(
                f"{accepted} acceptances in {proposals} proposals"
            )
    res = out[0] if single else out
    if return_stats:
        return res, AcceptanceStats(accepted, proposals)
    return res


def naive_frame(u: np.ndarray) -> np.ndarray:
    """normalize(e_z x u): a tangent field that is smooth away from the poles.

    Useful as a *witness* that no single continuous construction covers the
    whole sphere: the field turns a full extra revolution around any loop
    enclosing a pole, and this function refuses inputs within 1e-9 of
    (0, 0, +-1) by raising PoleSingularity.
    """
    u = np.asarray(u, dtype=np.float64)
    c = np.stack([-u[..., 1], u[..., 0], np.zeros(u.shape[:-1])], axis=-1)
    nrm = np.sqrt(np.sum(c * c, axis=-1))
    if np.any(nrm <= _UNIT_TOL):
        raise PoleSingularity("direction too close to +-e_z for e_z x u frame")
    return c / nrm[..., None]


def tangent_from_ball(
    rng: RngStream,
    u: np.ndarray,
    n: int | None = None,
) -> np.ndarray:
    """Random unit tangent(s) orthogonal to u, isotropic in the tangent plane.

    A uniform ball point is projected onto the plane orthogonal to u and
    normalized; projections shorter than 1e-6 trigger a redraw.  Accepts one
    direction (shape (3,), optionally with ``n`` tangents for it) or a batch
    (m, 3) yielding one tangent per row (``n`` must then be None).
    """
    u = np.asarray(u, dtype=np.float64)
    if u.ndim == 1:
        m, single = _batch(n)
        us = np.broadcast_to(u, (m, 3))
    else:
        if n is not None:
            raise ValueError("n must be None when u is already a batch")
        us = u
        m, single = u.shape[0], False
    us = _check_unit(us, "direction")
    out = np.empty((m, 3), dtype=np.float64)
    pending = np.arange(m)
    while pending.size:
        b = sample_ball3(rng, pending.size)
        ub = us[pending]
        t = b - np.sum(b * ub, axis=1)[:, None] * ub
        nrm = np.sqrt(np.sum(t * t, axis=1))
        ok = nrm > _TINY_NORM
        out[pending[ok]] = t[ok] / nrm[ok, None]
        pending = pending[~ok]
    return out[0] if single else out


def angle_between(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Angle in [0, pi] between vectors, elementwise over the leading axes."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    dot = np.sum(a * b, axis=-1)
    denom = np.sqrt(np.sum(a * a, axis=-1) * np.sum(b * b, axis=-1))
    return np.arccos(np.clip(dot / denom, -1.0, 1.0))
