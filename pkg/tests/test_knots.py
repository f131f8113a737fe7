"""Curve building, framings, linking numbers, braid layouts."""

import math

import numpy as np
import pytest

from cordalg.errors import DegenerateSpec, InvariantLost, SpecError
from cordalg.knots import (
    BraidLayoutSpec,
    build_curve,
    build_framing,
    ellipse_points,
    linking_number,
    perturb_basepoint,
    perturb_curve,
    perturb_framing,
    projection_crossings,
)
from cordalg.tolerances import DEFAULT_TOL


@pytest.fixture(scope="module")
def ellipse():
    return build_curve({"type": "ellipse", "a": 2, "b": 1})


@pytest.fixture(scope="module")
def trefoil():
    return build_curve({"type": "braid", "word": [1, 1, 1]})


def test_circle_length():
    c = build_curve({"type": "circle", "r": 1, "n": 64})
    assert abs(c.L - 2 * math.pi) < 1e-3


def test_ellipse_arclength_param(ellipse):
    # complete elliptic perimeter for (2,1), and |gamma'| = 1 everywhere
    assert abs(ellipse.L - 9.68845) < 1e-3
    probe = np.linspace(0, ellipse.L, 999)
    speeds = np.linalg.norm(ellipse.tangent(probe), axis=1)
    assert np.max(np.abs(speeds - 1)) < DEFAULT_TOL.tol_arc


def test_resampling_idempotent(ellipse):
    again = build_curve({"type": "samples", "points": ellipse.samples.tolist()})
    probe = np.linspace(0, 1, 200) * again.L
    d = np.linalg.norm(again.point(probe) - ellipse.point(probe * ellipse.L / again.L), axis=1)
    assert np.max(d) < DEFAULT_TOL.tol_arc * ellipse.L


def test_frenet_consistency(ellipse):
    probe = np.linspace(0, ellipse.L, 333)
    t = ellipse.tangent(probe)
    a = ellipse.second(probe)
    curv = np.linalg.norm(a, axis=1)
    mask = curv > DEFAULT_TOL.curvature_floor
    dots = np.abs(np.einsum("ij,ij->i", t, a))[mask]
    assert np.max(dots) < 10 * DEFAULT_TOL.tol_arc


def test_too_few_points_rejected():
    pts = ellipse_points(1, 1, n=8).tolist()
    with pytest.raises(DegenerateSpec):
        build_curve({"type": "samples", "points": pts})


def test_braid_closure_must_be_knot():
    with pytest.raises(SpecError):
        BraidLayoutSpec(word=[1, 1], strands=2)  # two-component link


def test_braid_crossing_count(trefoil):
    assert projection_crossings(trefoil) == 3


def test_braid_five_crossings():
    c = build_curve({"type": "braid", "word": [1, 1, 1, 1, 1]})
    assert projection_crossings(c) == 5


def test_blackboard_framing_planar_is_vertical(ellipse):
    f = build_framing(ellipse)
    probe = np.linspace(0, ellipse.L, 64)
    nus = f.nu(probe)
    assert np.max(np.abs(nus - np.array([0, 0, 1.0]))) < 1e-9


def test_framing_orthonormal(trefoil):
    f = build_framing(trefoil, rotation=0.15)
    probe = np.linspace(0, trefoil.L, 257)
    nus = f.nu(probe)
    tans = trefoil.unit_tangent(probe)
    assert np.max(np.abs(np.linalg.norm(nus, axis=1) - 1)) < 1e-9
    assert np.max(np.abs(np.einsum("ij,ij->i", nus, tans))) < 1e-9


def test_linking_unknot_zero(ellipse):
    assert linking_number(ellipse, build_framing(ellipse)) == 0


def test_linking_trefoil_blackboard(trefoil):
    f = build_framing(trefoil, rotation=0.15)
    assert linking_number(trefoil, f) == 3


def test_linking_stable_under_eps(trefoil):
    f = build_framing(trefoil, rotation=0.15)
    assert linking_number(trefoil, f, eps=f.eps / 2) == 3
    assert linking_number(trefoil, f, eps=f.eps / 4) == 3


def test_extra_winding_decrements_linking(trefoil):
    f = build_framing(trefoil, rotation=0.15)
    assert linking_number(trefoil, f.with_winding(1)) == 2
    assert linking_number(trefoil, f.with_winding(3)) == 0


def test_basepoint_shift_pure_reparametrization(ellipse):
    shifted = ellipse.shift_basepoint(1.3)
    probe = np.linspace(0, ellipse.L, 100)
    assert np.allclose(shifted.point(probe), ellipse.point(probe + 1.3), atol=1e-9)


def test_perturb_basepoint_deterministic(ellipse):
    a = perturb_basepoint(ellipse, 0.1, seed=7)
    b = perturb_basepoint(ellipse, 0.1, seed=7)
    assert np.allclose(a.samples, b.samples)
    assert not np.allclose(a.samples, ellipse.samples)


def test_perturb_curve_local_and_valid(ellipse):
    out = perturb_curve(ellipse, 0.02, seed=3, center=1.0, width=0.4)
    assert out.validate() is out
    probe = np.linspace(0, ellipse.L, 400)
    moved = np.linalg.norm(out.point(probe) - ellipse.point(probe), axis=1)
    # displacement concentrated near the bump window
    assert moved.max() > 1e-3
    far = moved[(probe > 3.0) & (probe < ellipse.L - 2.0)]
    assert far.max() < 5e-3


def test_perturb_magnitude_cap(ellipse):
    with pytest.raises(InvariantLost):
        perturb_curve(ellipse, ellipse.clearance, seed=0)


def test_perturb_framing_keeps_class(trefoil):
    f = build_framing(trefoil, rotation=0.15)
    g = perturb_framing(f, 0.1, seed=5)
    assert linking_number(trefoil, g) == 3


def test_torus_knot_builds():
    c = build_curve({"type": "torus_knot", "p": 2, "q": 3})
    assert c.validate() is c
