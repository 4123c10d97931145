"""Chord lengths, body constants, and the body-description grammar."""
import json

import numpy as np
import pytest

from fiberline.errors import Unbounded, Unsupported
from fiberline.geometry import (
    Ball,
    Box,
    Halfspaces,
    bounding_radius,
    chord,
    parse_body,
    surface_area,
    volume,
)
from fiberline.linespace import DirectedLine, point_at
from fiberline.bundle import sample_isotropic
from fiberline.randkit import make_rng

EZ = np.array([0.0, 0.0, 1.0])
UNIT_BALL = Ball((0.0, 0.0, 0.0), 1.0)
UNIT_CUBE = Box((0.0, 0.0, 0.0), (1.0, 1.0, 1.0))


def _march_chord(body, dl, t_half=4.0, steps=400_001):
    """Grid-independence oracle: measure {t : point_at(t) inside body}."""
    t = np.linspace(-t_half, t_half, steps)
    pts = point_at(dl, t)
    if isinstance(body, Ball):
        inside = np.sum((pts - body.center) ** 2, axis=1) <= body.radius**2
    elif isinstance(body, Box):
        inside = np.all((pts >= body.lo) & (pts <= body.hi), axis=1)
    else:
        inside = np.all(pts @ body.normals.T <= body.offsets, axis=1)
    return float(np.count_nonzero(inside)) * (2.0 * t_half / (steps - 1))


def test_ball_axis_chord():
    assert chord(UNIT_BALL, DirectedLine(EZ, np.zeros(3))) == 2.0


def test_ball_offset_chord():
    d = 0.5
    dl = DirectedLine(EZ, [d, 0.0, 0.0])
    assert abs(chord(UNIT_BALL, dl) - 2.0 * np.sqrt(1.0 - d * d)) < 1e-12


def test_ball_miss_and_tangent():
    assert chord(UNIT_BALL, DirectedLine(EZ, [1.5, 0.0, 0.0])) == 0.0
    # tangency is a miss, not a zero-length hit with roundoff noise
    assert chord(UNIT_BALL, DirectedLine(EZ, [1.0, 0.0, 0.0])) == 0.0


def test_cube_center_chord():
    dl = DirectedLine(EZ, [0.5, 0.5, 0.0])
    assert abs(chord(UNIT_CUBE, dl) - 1.0) < 1e-12


def test_cube_edge_parallel_outside():
    dl = DirectedLine(EZ, [2.0, 0.5, 0.0])
    assert chord(UNIT_CUBE, dl) == 0.0


def test_box_oblique_chord_against_march():
    rng = make_rng(0)
    body = Box((-0.5, -1.0, -1.5), (0.5, 1.0, 1.5))
    lines = sample_isotropic(rng, bounding_radius(body), 50)
    ch = chord(body, lines)
    for i in range(50):
        one = DirectedLine(lines.u[i], lines.foot[i])
        assert abs(ch[i] - _march_chord(body, one)) < 5e-4


def test_ball_oblique_chord_against_march():
    rng = make_rng(1)
    body = Ball((0.3, -0.2, 0.1), 0.8)
    lines = sample_isotropic(rng, bounding_radius(body), 50)
    ch = chord(body, lines)
    for i in range(50):
        one = DirectedLine(lines.u[i], lines.foot[i])
        assert abs(ch[i] - _march_chord(body, one)) < 5e-4


def test_chord_flip_symmetry():
    rng = make_rng(2)
    lines = sample_isotropic(rng, 2.0, 1000)
    flipped = DirectedLine(-lines.u, lines.foot)
    for body in (UNIT_BALL, UNIT_CUBE):
        assert np.max(np.abs(chord(body, lines) - chord(body, flipped))) < 1e-12


def test_chord_translation_consistency():
    """Shifting the ball and the line foot together leaves chords unchanged."""
    rng = make_rng(3)
    shift = np.array([0.4, -1.1, 0.7])
    lines = sample_isotropic(rng, 2.0, 1000)
    moved_foot = lines.foot + shift
    # re-foot: subtract the along-line component to keep u . foot = 0
    moved_foot = moved_foot - np.sum(moved_foot * lines.u, axis=1)[:, None] * lines.u
    moved = DirectedLine(lines.u, moved_foot)
    a = chord(Ball(shift, 1.0), moved)
    b = chord(UNIT_BALL, lines)
    assert np.max(np.abs(a - b)) < 1e-10


def test_volume_surface_values():
    assert abs(volume(UNIT_BALL) - 4.0 * np.pi / 3.0) < 1e-15
    assert abs(surface_area(UNIT_BALL) - 4.0 * np.pi) < 1e-15
    box = Box((0.0, 0.0, 0.0), (1.0, 2.0, 3.0))
    assert volume(box) == 6.0
    assert surface_area(box) == 22.0


def test_bounding_radius_values():
    assert bounding_radius(UNIT_BALL) == 1.0
    assert abs(bounding_radius(Box((-1, -1, -1), (1, 1, 1))) - np.sqrt(3.0)) < 1e-15
    assert bounding_radius(Ball((2.0, 0.0, 0.0), 1.0)) == 3.0


def _cube_halfspaces(lo=0.0, hi=1.0):
    normals = np.array([
        [1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1],
    ], dtype=np.float64)
    offsets = np.array([hi, -lo, hi, -lo, hi, -lo], dtype=np.float64)
    return Halfspaces(normals, offsets)


def test_halfspaces_match_box():
    hs = _cube_halfspaces()
    rng = make_rng(4)
    lines = sample_isotropic(rng, 2.0, 10_000)
    assert np.max(np.abs(chord(hs, lines) - chord(UNIT_CUBE, lines))) < 1e-10


def test_halfspaces_constants_unsupported():
    hs = _cube_halfspaces()
    with pytest.raises(Unsupported):
        volume(hs)
    with pytest.raises(Unsupported):
        surface_area(hs)


def test_halfspaces_bounding_radius_covers_cube():
    r = bounding_radius(_cube_halfspaces())
    assert np.sqrt(3.0) <= r <= 1.1 * np.sqrt(3.0) + 1e-12


def test_unbounded_rejected_at_construction():
    with pytest.raises(Unbounded):
        Halfspaces(np.array([[1.0, 0.0, 0.0]]), np.array([1.0]))  # open slab
    with pytest.raises(Unbounded):
        Halfspaces(
            np.array([[1.0, 0, 0], [-1.0, 0, 0], [0, 1.0, 0], [0, -1.0, 0]]),
            np.ones(4),
        )  # infinite square prism


def test_halfspaces_validation():
    with pytest.raises(ValueError):
        Halfspaces(np.array([[2.0, 0.0, 0.0]]), np.array([1.0]))  # not unit
    with pytest.raises(ValueError):
        Halfspaces(np.zeros((0, 3)), np.zeros(0))


def test_body_validation():
    with pytest.raises(ValueError):
        Ball((0, 0, 0), 0.0)
    with pytest.raises(ValueError):
        Ball((0, 0, np.inf), 1.0)
    with pytest.raises(ValueError):
        Box((0, 0, 0), (1, 0, 1))


def test_parse_ball_and_box():
    b = parse_body("ball:0,0,0,2")
    assert isinstance(b, Ball) and b.radius == 2.0
    x = parse_body("box:0,0,0,1,2,3")
    assert isinstance(x, Box) and np.array_equal(x.hi, [1.0, 2.0, 3.0])


def test_parse_halfspaces_file(tmp_path):
    spec = [{"normal": [2.0, 0.0, 0.0], "offset": 2.0},
            {"normal": [-1.0, 0.0, 0.0], "offset": 0.0},
            {"normal": [0.0, 1.0, 0.0], "offset": 1.0},
            {"normal": [0.0, -1.0, 0.0], "offset": 0.0},
            {"normal": [0.0, 0.0, 1.0], "offset": 1.0},
            {"normal": [0.0, 0.0, -1.0], "offset": 0.0}]
    path = tmp_path / "hs.json"
    path.write_text(json.dumps(spec), encoding="utf-8")
    hs = parse_body(f"halfspaces:@{path}")
    # the doubled normal is rescaled with its offset: same unit cube
    rng = make_rng(5)
    lines = sample_isotropic(rng, 2.0, 2000)
    assert np.max(np.abs(chord(hs, lines) - chord(UNIT_CUBE, lines))) < 1e-10


@pytest.mark.parametrize("bad", [
    "ball",                       # no colon
    "ball:1,2,3",                 # wrong arity
    "ball:1,2,3,abc",             # not a number
    "box:0,0,0,1,1",              # wrong arity
    "pyramid:1,2,3",              # unknown kind
    "halfspaces:inline",          # must be @FILE
])
def test_parse_errors(bad):
    with pytest.raises(ValueError):
        parse_body(bad)


def test_parse_halfspaces_bad_file(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps([{"normal": [0, 0, 0], "offset": 1.0}]))
    with pytest.raises(ValueError):
        parse_body(f"halfspaces:@{path}")
