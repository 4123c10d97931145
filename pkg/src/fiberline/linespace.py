"""Directed lines in R^3, the slope-intercept chart, and the line measure.

A directed line is stored as ``(u, foot)`` with u the unit direction and
foot the point of the line closest to the origin (so u . foot = 0).  Lines
that are not horizontal also admit the chart

    x = a z + p,   y = b z + q,

and in these coordinates the rigid-motion-invariant measure on lines has
density ``(1 + a^2 + b^2)^-2 da db dp dq``, which is what
:func:`slope_measure_weight` evaluates (unnormalized).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import HorizontalLine, NotUnit

__all__ = [
    "DirectedLine",
    "SlopeLine",
    "slope_to_directed",
    "directed_to_slope",
    "slope_measure_weight",
    "undirect",
    "point_at",
    "lines_equal",
    "lines_to_records",
    "lines_to_csv",
]

_UNIT_TOL = 1e-12
_FOOT_TOL = 1e-9
_HORIZONTAL_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class DirectedLine:
    """Line(s) as unit direction u and foot point, with u . foot = 0.

    Both fields are float arrays of shape (3,) for a single line or (n, 3)
    for a batch.  Construction validates |u| = 1 to 1e-12 and orthogonality
    of the foot to 1e-9.
    """

    u: np.ndarray
    foot: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.u, dtype=np.float64)
        foot = np.asarray(self.foot, dtype=np.float64)
        if u.shape != foot.shape or u.shape[-1] != 3 or u.ndim not in (1, 2):
            raise ValueError("u and foot must both have shape (3,) or (n, 3)")
        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(foot))):
            raise ValueError("line coordinates must be finite")
        nrm = np.sqrt(np.sum(u * u, axis=-1))
        if not np.all(np.abs(nrm - 1.0) <= _UNIT_TOL):
            worst = float(np.max(np.abs(nrm - 1.0)))
            raise NotUnit(f"direction norm off by {worst:.3e}")
        dot = np.abs(np.sum(u * foot, axis=-1))
        if not np.all(dot <= _FOOT_TOL):
            raise ValueError(
                f"foot not orthogonal to direction (|u.foot| up to "
                f"{float(np.max(dot)):.3e})"
            )
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "foot", foot)

    @property
    def is_batch(self) -> bool:
        return self.u.ndim == 2

    def __len__(self) -> int:
        return self.u.shape[0] if self.is_batch else 1


@dataclass(frozen=True, eq=False)
class SlopeLine:
    """Line(s) in slope-intercept form x = a z + p, y = b z + q.

    Fields are floats or equally shaped (n,) arrays; all must be finite.
    """

    a: np.ndarray
    b: np.ndarray
    p: np.ndarray
    q: np.ndarray

    def __post_init__(self):
        vals = []
        for name in ("a", "b", "p", "q"):
            v = np.asarray(getattr(self, name), dtype=np.float64)
            if v.ndim > 1:
                raise ValueError("slope coordinates must be scalars or 1-d")
            if not np.all(np.isfinite(v)):
                raise ValueError(f"{name} must be finite")
            vals.append(v)
        if len({v.shape for v in vals}) != 1:
            raise ValueError("a, b, p, q must share one shape")
        for name, v in zip(("a", "b", "p", "q"), vals):
            object.__setattr__(self, name, v)


def slope_to_directed(sl: SlopeLine) -> DirectedLine:
    """Chart coordinates -> (u, foot).

    The direction is (a, b, 1)/sqrt(1 + a^2 + b^2) (always pointing to
    z > 0) and the foot is the projection of (p, q, 0) onto the plane
    orthogonal to u.
    """
    a, b, p, q = sl.a, sl.b, sl.p, sl.q
    s = np.sqrt(1.0 + a * a + b * b)
    u = np.stack([a / s, b / s, 1.0 / s], axis=-1)
    v = np.stack([p, q, np.zeros_like(p)], axis=-1)
    foot = v - np.sum(v * u, axis=-1, keepdims=True) * u
    return DirectedLine(u, foot)


def directed_to_slope(dl: DirectedLine) -> SlopeLine:
    """(u, foot) -> chart coordinates; HorizontalLine if any |u_z| <= 1e-9.

    Inverts :func:`slope_to_directed` for lines directed into z > 0; a line
    directed into z < 0 maps to the same chart point as its reversal.
    """
    u, foot = dl.u, dl.foot
    uz = u[..., 2]
    if np.any(np.abs(uz) <= _HORIZONTAL_TOL):
        raise HorizontalLine("|u_z| <= 1e-9: line has no slope chart")
    a = u[..., 0] / uz
    b = u[..., 1] / uz
    # intersection with z = 0 is foot + t u at t = -foot_z / u_z
    t = -foot[..., 2] / uz
    p = foot[..., 0] + t * u[..., 0]
    q = foot[..., 1] + t * u[..., 1]
    return SlopeLine(a, b, p, q)


def slope_measure_weight(sl: SlopeLine) -> np.ndarray:
    """Invariant line-measure density (1 + a^2 + b^2)^-2 (unnormalized)."""
    s2 = 1.0 + sl.a * sl.a + sl.b * sl.b
    return 1.0 / (s2 * s2)


def undirect(dl: DirectedLine) -> DirectedLine:
    """Canonical representative of the undirected line.

    Flips u (foot is orientation-free already) so that the first nonzero
    component of (u_z, u_y, u_x) is positive.  Idempotent.
    """
    u = dl.u
    s = np.asarray(np.sign(u[..., 2]))
    for axis in (1, 0):
        zero = s == 0.0
        if not np.any(zero):
            break
        s = np.where(zero, np.sign(u[..., axis]), s)
    return DirectedLine(u * s[..., None], dl.foot)


def point_at(dl: DirectedLine, t) -> np.ndarray:
    """Point(s) foot + t u; t is a scalar or an (n,) array matching a batch."""
    t = np.asarray(t, dtype=np.float64)
    return dl.foot + t[..., None] * dl.u


def lines_equal(dl1: DirectedLine, dl2: DirectedLine, directed: bool = True):
    """Componentwise closeness to 1e-9; set ``directed=False`` to compare the
    undirected lines instead.  Returns a bool, or a bool array for batches."""
    if not directed:
        dl1, dl2 = undirect(dl1), undirect(dl2)
    du = np.max(np.abs(dl1.u - dl2.u), axis=-1)
    df = np.max(np.abs(dl1.foot - dl2.foot), axis=-1)
    res = (du <= 1e-9) & (df <= 1e-9)
    return res if isinstance(res, np.ndarray) else bool(res)


def _rows(dl: DirectedLine) -> tuple[np.ndarray, np.ndarray]:
    u = np.atleast_2d(dl.u)
    foot = np.atleast_2d(dl.foot)
    return u, foot


def lines_to_records(dl: DirectedLine) -> list[dict]:
    """Plain-dict rows {ux, uy, uz, qx, qy, qz}; q* is the foot point."""
    u, foot = _rows(dl)
    keys = ("ux", "uy", "uz", "qx", "qy", "qz")
    cols = np.concatenate([u, foot], axis=1)
    return [dict(zip(keys, map(float, row))) for row in cols]


def lines_to_csv(dl: DirectedLine, comments: list[str] | None = None) -> str:
    """CSV text with header ``ux,uy,uz,qx,qy,qz`` and %.17g values.

    ``comments`` lines (if any) are emitted first, each prefixed with '# '.
    17 significant digits round-trip doubles exactly, so equal inputs yield
    byte-identical text.
    """
    u, foot = _rows(dl)
    out = []
    for c in comments or []:
        out.append(f"# {c}")
    out.append("ux,uy,uz,qx,qy,qz")
    cols = np.concatenate([u, foot], axis=1)
    for row in cols:
        out.append(",".join("%.17g" % v for v in row))
    return "\n".join(out) + "\n"
