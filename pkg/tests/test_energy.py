"""Energy landscape: values, derivatives, critical point census."""

import numpy as np
import pytest

from cordalg.energy import (
    CordPoint,
    diagonal_data,
    energy,
    find_critical_points,
    gradient,
    hessian,
    make_cord,
)
from cordalg.errors import DegenerateCritical
from cordalg.knots import build_curve
from cordalg.ring import AlgebraElement, serialize


@pytest.fixture(scope="module")
def ellipse():
    return build_curve({"type": "ellipse", "a": 2, "b": 1})


@pytest.fixture(scope="module")
def trefoil():
    return build_curve({"type": "braid", "word": [1, 1, 1]})


def test_energy_zero_on_diagonal(ellipse):
    for s in (0.0, 1.7, 5.2):
        assert energy(ellipse, s, s) < 1e-20


def test_energy_major_axis_value(ellipse):
    # cord joining (2,0,0) and (-2,0,0): E = (4^2)/2 = 8
    pts = find_critical_points(ellipse)
    majors = [p for p in pts if p.index == 2]
    assert majors and all(abs(p.energy - 8.0) < 1e-4 for p in majors)


def test_energy_matches_raw_samples(ellipse):
    # the spline interpolates the samples, so E at sample params is exactly
    # half the squared distance of raw sample points
    n = len(ellipse.samples)
    i, j = 37, 411
    s = i * ellipse.L / n
    t = j * ellipse.L / n
    direct = 0.5 * float(np.sum((ellipse.samples[j] - ellipse.samples[i]) ** 2))
    assert abs(energy(ellipse, s, t) - direct) < 1e-10


def test_cord_point_cached_length(ellipse):
    c = make_cord(ellipse, 1.0, 4.0)
    direct = float(np.linalg.norm(ellipse.point(4.0) - ellipse.point(1.0)))
    assert abs(c.length - direct) <= 1e-12 * max(direct, 1.0)
    assert 0 <= c.s < ellipse.L and 0 <= c.t < ellipse.L


def test_gradient_zero_on_diagonal(ellipse):
    g = gradient(ellipse, 2.0, 2.0)
    assert np.linalg.norm(g) < 1e-12


def test_gradient_fd(ellipse):
    rng = np.random.default_rng(0)
    h = 1e-5 * ellipse.L
    worst = 0.0
    for _ in range(100):
        s, t = rng.random(2) * ellipse.L
        if ellipse.circ_dist(s, t) < 0.2:
            continue
        g = gradient(ellipse, s, t)
        fd = np.array([
            (energy(ellipse, s + h, t) - energy(ellipse, s - h, t)) / (2 * h),
            (energy(ellipse, s, t + h) - energy(ellipse, s, t - h)) / (2 * h),
        ])
        worst = max(worst, np.linalg.norm(fd - g) / max(np.linalg.norm(g), 1e-9))
    assert worst < 1e-6


def test_hessian_fd(trefoil):
    # tight FD step: the interpolant's third derivative jumps at spline
    # knots, so wide stencils see O(h * jump) contamination
    rng = np.random.default_rng(1)
    h = 1e-6 * trefoil.L
    worst = 0.0
    for _ in range(100):
        s, t = rng.random(2) * trefoil.L
        if trefoil.circ_dist(s, t) < 0.2:
            continue
        H = hessian(trefoil, s, t)
        fd = np.empty((2, 2))
        fd[:, 0] = (gradient(trefoil, s + h, t) - gradient(trefoil, s - h, t)) / (2 * h)
        fd[:, 1] = (gradient(trefoil, s, t + h) - gradient(trefoil, s, t - h)) / (2 * h)
        fd = 0.5 * (fd + fd.T)
        worst = max(worst, np.linalg.norm(fd - H) / max(np.linalg.norm(H), 1e-9))
    assert worst < 1e-4


def test_ellipse_census_and_brute_force(ellipse):
    """Grid-stencil classification at high resolution is the census oracle."""
    pts = find_critical_points(ellipse)
    assert [p.index for p in pts] == [1, 1, 2, 2]
    assert all(abs(p.energy - 2.0) < 1e-4 for p in pts if p.index == 1)

    n = 512
    axis = np.arange(n) * (ellipse.L / n)
    S, T = np.meshgrid(axis, axis, indexing="ij")
    E = energy(ellipse, S.ravel(), T.ravel()).reshape(n, n)
    found = []
    for p in pts:
        i = int(round(p.s / ellipse.L * n)) % n
        j = int(round(p.t / ellipse.L * n)) % n
        patch = np.take(np.take(E, range(i - 2, i + 3), 0, mode="wrap"),
                        range(j - 2, j + 3), 1, mode="wrap")
        center = patch[2, 2]
        if p.index == 2:
            assert center == patch.max()
        else:
            assert patch.min() < center < patch.max()
        found.append((i, j))
    assert len(set(found)) == 4


def test_circle_is_degenerate():
    with pytest.raises(DegenerateCritical):
        find_critical_points(build_curve({"type": "circle", "r": 1}))


def test_trefoil_census(trefoil):
    pts = find_critical_points(trefoil)
    counts = [sum(1 for p in pts if p.index == k) for k in range(3)]
    assert counts == [2, 10, 8]
    # Euler count with the symbolic diagonal pair m (index 0), M (index 1)
    assert (counts[0] + 1) - (counts[1] + 1) + counts[2] == 0
    labels = {p.label for p in pts}
    assert {"s_s", "s_t", "S_s", "S_t"} <= labels


def test_symmetry_of_critical_set(trefoil):
    pts = find_critical_points(trefoil)
    locs = {(round(p.s, 5), round(p.t, 5)): p.index for p in pts}
    for (s, t), idx in locs.items():
        assert locs.get((t, s)) == idx


def test_gradient_norm_below_newton_tol(trefoil):
    for p in find_critical_points(trefoil):
        assert p.grad_norm < 1e-10 * trefoil.L
        assert p.index == sum(1 for ev in p.eigvals if ev < 0)


def test_diagonal_data_symbolic():
    d = diagonal_data()
    assert serialize(d["m"]["value"]) == "1 - u"
    assert d["M"]["boundary"] == AlgebraElement.zero()
    assert d["m"]["index"] == 0 and d["M"]["index"] == 1
