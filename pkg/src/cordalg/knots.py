"""Knot curves, framings, braid-along-ellipse layouts, and linking numbers.

Curves are closed arclength-parametrized C^2 space curves backed by a
periodic cubic spline through resampled points; derivatives come from the
interpolant.  The basepoint is always parameter 0; shifting it is a
reparametrization of the same geometry.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import (
    DegenerateSpec,
    InvariantLost,
    NonEmbedded,
    NumericalAmbiguity,
    SpecError,
    VerticalTangent,
)
from .tolerances import DEFAULT_TOL

VERTICAL = np.array([0.0, 0.0, 1.0])


class PeriodicSpline:
    """Periodic cubic spline on a uniform knot grid with fast derivatives."""

    def __init__(self, values, period):
        n = len(values)
        grid = np.linspace(0.0, period, n + 1)
        closed = np.vstack([values, values[:1]])
        self._cs = CubicSpline(grid, closed, bc_type="periodic", axis=0)
        self._coeffs = self._cs.c  # (4, n, dim)
        self._packed = np.ascontiguousarray(np.moveaxis(self._cs.c, 0, 1))  # (n, 4, dim)
        self._h = period / n
        self._n = n
        self.period = period

    def __call__(self, s, d=0):
        s = np.asarray(s, dtype=float)
        scalar = s.ndim == 0
        s = np.atleast_1d(s) % self.period
        idx = np.minimum((s / self._h).astype(int), self._n - 1)
        dx = s - idx * self._h
        c = self._coeffs[:, idx, :]
        if d == 0:
            out = ((c[0] * dx[:, None] + c[1]) * dx[:, None] + c[2]) * dx[:, None] + c[3]
        elif d == 1:
            out = (3.0 * c[0] * dx[:, None] + 2.0 * c[1]) * dx[:, None] + c[2]
        elif d == 2:
            out = 6.0 * c[0] * dx[:, None] + 2.0 * c[1]
        elif d == 3:
            out = 6.0 * np.broadcast_to(c[0], (len(s), c.shape[-1])).copy()
        else:
            raise ValueError("derivative order must be 0..3")
        return out[0] if scalar else out

    def eval_multi(self, s, ders=(0, 1)):
        """Several derivative orders from one knot-index computation."""
        s = np.asarray(s, dtype=float) % self.period
        idx = np.minimum((s / self._h).astype(int), self._n - 1)
        dx = (s - idx * self._h)[:, None]
        c = self._packed[idx]  # (k, 4, dim)
        c0, c1, c2, c3 = c[:, 0], c[:, 1], c[:, 2], c[:, 3]
        out = []
        for d in ders:
            if d == 0:
                out.append(((c0 * dx + c1) * dx + c2) * dx + c3)
            elif d == 1:
                out.append((3.0 * c0 * dx + 2.0 * c1) * dx + c2)
            elif d == 2:
                out.append(6.0 * c0 * dx + 2.0 * c1)
            else:
                out.append(6.0 * np.broadcast_to(c0, (len(s), c0.shape[-1])).copy())
        return out


def _cumulative_arclength(points):
    deltas = np.diff(np.vstack([points, points[:1]]), axis=0)
    seg = np.linalg.norm(deltas, axis=1)
    return np.concatenate([[0.0], np.cumsum(seg)])


def _resample_arclength(points, n_out, refine=4):
    """Resample a closed polyline-ish point set to uniform arclength.

    Uses a provisional periodic spline and a dense arclength table; two
    passes are enough to hit |gamma'| = 1 well inside tol_arc.
    """
    pts = np.asarray(points, dtype=float)
    for _ in range(3):
        cum = _cumulative_arclength(pts)
        total = cum[-1]
        if total <= 0:
            raise DegenerateSpec("degenerate point set with zero length")
        spline = PeriodicSpline(pts, total)
        dense_t = np.linspace(0.0, total, refine * len(pts), endpoint=False)
        speed = np.linalg.norm(spline(dense_t, d=1), axis=1)
        dt = total / len(dense_t)
        arc = np.concatenate([[0.0], np.cumsum(speed * dt)])
        L = arc[-1]
        targets = np.linspace(0.0, L, n_out, endpoint=False)
        t_of_s = np.interp(targets, arc, np.append(dense_t, total))
        pts = spline(t_of_s)
    return pts, L


def _min_clearance(points, ratio=0.7):
    """Fold-back clearance: min spatial distance among genuinely close approaches.

    A pair of segments counts when its spatial distance is well below its
    circular arc distance (ratio threshold chosen so a round circle's
    antipodal pairs, ratio 2/pi, still count while shallow same-arc
    neighbors, ratio near 1, do not).  Falls back to the diameter scale when
    the curve has no close approaches at all.
    """
    pts = np.asarray(points)
    n = len(pts)
    a = pts
    b = np.roll(pts, -1, axis=0)
    mids = 0.5 * (a + b)
    seg = np.linalg.norm(b - a, axis=1)
    step = float(np.mean(seg))
    diff = mids[:, None, :] - mids[None, :, :]
    dist = np.linalg.norm(diff, axis=2)
    idx = np.arange(n)
    circ = np.abs(idx[:, None] - idx[None, :])
    arc = np.minimum(circ, n - circ) * step
    mask = np.triu(dist < ratio * arc, k=1)
    if not mask.any():
        return float(np.max(dist))
    cand = np.argwhere(mask & (dist < dist[mask].min() + 2 * step))
    best = np.inf
    for i, j in cand:
        best = min(best, _segment_distance(a[i], b[i], a[j], b[j]))
    return best


def _segment_distance(p1, p2, q1, q2):
    u = p2 - p1
    v = q2 - q1
    w = p1 - q1
    a, b, c = u @ u, u @ v, v @ v
    d, e = u @ w, v @ w
    denom = a * c - b * b
    if denom < 1e-14 * max(a * c, 1e-30):
        s = 0.0
        t = np.clip(e / c, 0.0, 1.0) if c > 0 else 0.0
    else:
        s = np.clip((b * e - c * d) / denom, 0.0, 1.0)
        t = np.clip((a * e - b * d) / denom, 0.0, 1.0) if c > 0 else 0.0
        s = np.clip((b * t - d) / a, 0.0, 1.0) if a > 0 else 0.0
    return float(np.linalg.norm(p1 + s * u - (q1 + t * v)))


class KnotCurve:
    """Closed arclength-parametrized space curve with spline derivatives."""

    def __init__(self, samples, L, clearance, metadata=None):
        self.samples = np.asarray(samples, dtype=float)
        self.L = float(L)
        self.clearance = float(clearance)
        self.metadata = dict(metadata or {})
        self.spline = PeriodicSpline(self.samples, self.L)

    # -- evaluation ------------------------------------------------------

    def point(self, s):
        return self.spline(s, d=0)

    def tangent(self, s):
        return self.spline(s, d=1)

    def second(self, s):
        return self.spline(s, d=2)

    def third(self, s):
        return self.spline(s, d=3)

    def unit_tangent(self, s):
        t = self.spline(s, d=1)
        return t / np.linalg.norm(t, axis=-1, keepdims=True)

    # -- invariants ------------------------------------------------------

    def validate(self, tol=DEFAULT_TOL):
        probe = np.linspace(0.0, self.L, 4 * len(self.samples), endpoint=False)
        speed = np.linalg.norm(self.spline(probe, d=1), axis=1)
        if np.any(np.abs(speed - 1.0) > tol.tol_arc):
            raise DegenerateSpec(
                f"arclength parametrization off by {np.max(np.abs(speed - 1.0)):.2e}"
            )
        if self.clearance <= tol.embedding_floor * self.L:
            raise NonEmbedded(f"clearance {self.clearance:.3e} below floor")
        curv = np.linalg.norm(self.spline(probe, d=2), axis=1)
        if np.any(curv < tol.curvature_floor):
            raise DegenerateSpec("curvature below floor at some parameter")
        return self

    # -- reparametrization -------------------------------------------------

    def shift_basepoint(self, delta):
        """Move the basepoint by ``delta`` along the curve (geometry unchanged)."""
        n = len(self.samples)
        s_new = (np.arange(n) * (self.L / n) + delta) % self.L
        pts = self.spline(s_new)
        meta = dict(self.metadata)
        meta["basepoint_shift_total"] = meta.get("basepoint_shift_total", 0.0) + delta
        return KnotCurve(pts, self.L, self.clearance, meta)

    def circ_dist(self, s1, s2):
        d = np.abs((s1 - s2) % self.L)
        return np.minimum(d, self.L - d)


# ---------------------------------------------------------------------------
# framings
# ---------------------------------------------------------------------------

class Framing:
    """Unit normal field nu along a knot curve.

    ``kind`` is one of blackboard | custom; ``rotation`` is an extra constant
    angle applied in the oriented normal plane (used to keep F away from the
    near-vertical inter-strand cords of braid layouts), and ``winding`` adds
    full turns of nu along the curve (changes the framing homotopy class by
    -winding in the linking number).
    """

    def __init__(self, curve, kind="blackboard", table=None, rotation=0.0,
                 winding=0, eps=None):
        self.curve = curve
        self.kind = kind
        self.rotation = float(rotation)
        self.winding = int(winding)
        self.eps = eps if eps is not None else 0.1 * curve.clearance
        if kind == "custom":
            if table is None:
                raise SpecError("custom framing needs a table of samples")
            self._table_spline = PeriodicSpline(np.asarray(table, float), curve.L)
        elif kind == "blackboard":
            self._table_spline = None
        else:
            raise SpecError(f"unknown framing kind {kind!r}")
        self._check_defined()

    def _check_defined(self):
        probe = np.linspace(0.0, self.curve.L, 512, endpoint=False)
        t = self.curve.unit_tangent(probe)
        if self.kind == "blackboard":
            proj = VERTICAL - t * (t @ VERTICAL)[:, None]
            if np.any(np.linalg.norm(proj, axis=1) < 1e-8):
                raise VerticalTangent("tangent parallel to the vertical direction")

    def nu(self, s):
        scalar = np.ndim(s) == 0
        s = np.atleast_1d(np.asarray(s, dtype=float))
        t = self.curve.unit_tangent(s)
        if self.kind == "blackboard":
            raw = np.broadcast_to(VERTICAL, t.shape)
        else:
            raw = self._table_spline(s)
        v = raw - t * np.einsum("ij,ij->i", t, raw)[:, None]
        norms = np.linalg.norm(v, axis=1)
        if np.any(norms < 1e-10):
            raise VerticalTangent("framing table parallel to tangent")
        v = v / norms[:, None]
        if self.winding or self.rotation:
            # positive winding turns clockwise seen along the orientation,
            # decreasing lk(K, K') by one per turn
            angle = self.rotation - 2.0 * math.pi * self.winding * s / self.curve.L
            w = np.cross(t, v)
            v = np.cos(angle)[:, None] * v + np.sin(angle)[:, None] * w
        return v[0] if scalar else v

    def nu_dot(self, s, h=None):
        h = h or 1e-6 * self.curve.L
        return (self.nu(np.atleast_1d(s) + h) - self.nu(np.atleast_1d(s) - h)) / (2 * h)

    def pushoff_points(self, params=None):
        if params is None:
            n = len(self.curve.samples)
            params = np.arange(n) * (self.curve.L / n)
        return self.curve.point(params) + self.eps * self.nu(params)

    def _table_copy(self):
        if self.kind == "blackboard":
            return None
        n = len(self.curve.samples)
        return self._table_spline(np.arange(n) * (self.curve.L / n))

    def with_winding(self, extra):
        return Framing(self.curve, self.kind, self._table_copy(),
                       self.rotation, self.winding + extra, self.eps)

    def validate(self, tol=DEFAULT_TOL):
        probe = np.linspace(0.0, self.curve.L, 1024, endpoint=False)
        v = self.nu(probe)
        t = self.curve.unit_tangent(probe)
        if np.max(np.abs(np.linalg.norm(v, axis=1) - 1.0)) > 1e-8:
            raise InvariantLost("framing not unit length")
        if np.max(np.abs(np.einsum("ij,ij->i", v, t))) > 1e-8:
            raise InvariantLost("framing not orthogonal to tangent")
        return self


def build_framing(curve, kind="blackboard", table=None, rotation=0.0, winding=0):
    """Construct a framing; blackboard projects the vertical onto normal planes."""
    return Framing(curve, kind=kind, table=table, rotation=rotation,
                   winding=winding).validate()


# ---------------------------------------------------------------------------
# Gauss linking number (exact for polylines, Klenin-Langowski style)
# ---------------------------------------------------------------------------

def _solid_angle_quads(p1, p2, q1, q2):
    r13 = q1 - p1
    r14 = q2 - p1
    r23 = q1 - p2
    r24 = q2 - p2
    r12 = p2 - p1
    r34 = q2 - q1

    def unit_cross(x, y):
        c = np.cross(x, y)
        n = np.linalg.norm(c, axis=-1, keepdims=True)
        n = np.where(n < 1e-300, 1.0, n)
        return c / n

    n1 = unit_cross(r13, r14)
    n2 = unit_cross(r14, r24)
    n3 = unit_cross(r24, r23)
    n4 = unit_cross(r23, r13)

    def asin_dot(a, b):
        return np.arcsin(np.clip(np.einsum("...i,...i->...", a, b), -1.0, 1.0))

    omega = asin_dot(n1, n2) + asin_dot(n2, n3) + asin_dot(n3, n4) + asin_dot(n4, n1)
    sign = np.sign(np.einsum("...i,...i->...", np.cross(r34, r12), r13))
    return omega * sign / (4.0 * math.pi)


def gauss_linking(points_a, points_b):
    """Exact polyline linking number contribution sum (float)."""
    a1 = np.asarray(points_a)
    a2 = np.roll(a1, -1, axis=0)
    b1 = np.asarray(points_b)
    b2 = np.roll(b1, -1, axis=0)
    total = 0.0
    block = 64
    for i in range(0, len(a1), block):
        p1 = a1[i:i + block, None, :]
        p2 = a2[i:i + block, None, :]
        total += float(np.sum(_solid_angle_quads(p1, p2, b1[None, :, :], b2[None, :, :])))
    return total


def linking_number(curve, framing, eps=None, n=1024):
    """Gauss linking number of K and its push-off K' = gamma + eps*nu."""
    params = np.arange(n) * (curve.L / n)
    base = curve.point(params)
    eps = eps if eps is not None else framing.eps
    push = curve.point(params) + eps * framing.nu(params)
    raw = gauss_linking(base, push)
    nearest = round(raw)
    if abs(raw - nearest) > 0.1:
        raise NumericalAmbiguity(f"linking integral {raw:.4f} too far from an integer")
    return int(nearest)


# ---------------------------------------------------------------------------
# primitive layouts
# ---------------------------------------------------------------------------

def ellipse_points(a, b, n=1024, tilt=None):
    th = np.linspace(0.0, 2.0 * math.pi, n, endpoint=False)
    pts = np.stack([a * np.cos(th), b * np.sin(th), np.zeros_like(th)], axis=1)
    if tilt:
        pts = pts @ _rotation_matrix(tilt).T
    return pts


def torus_knot_points(p, q, R=3.0, r=1.0, n=2048):
    th = np.linspace(0.0, 2.0 * math.pi, n, endpoint=False)
    return np.stack([
        (R + r * np.cos(q * th)) * np.cos(p * th),
        (R + r * np.cos(q * th)) * np.sin(p * th),
        r * np.sin(q * th),
    ], axis=1)


def _rotation_matrix(angles):
    ax, ay, az = angles
    cx, sx = math.cos(ax), math.sin(ax)
    cy, sy = math.cos(ay), math.sin(ay)
    cz, sz = math.cos(az), math.sin(az)
    rx = np.array([[1, 0, 0], [0, cx, -sx], [0, sx, cx]])
    ry = np.array([[cy, 0, sy], [0, 1, 0], [-sy, 0, cy]])
    rz = np.array([[cz, -sz, 0], [sz, cz, 0], [0, 0, 1]])
    return rz @ ry @ rx


# ---------------------------------------------------------------------------
# braid-along-ellipse layout
# ---------------------------------------------------------------------------

def _smoothstep(t):
    t = np.clip(t, 0.0, 1.0)
    return t * t * t * (t * (6.0 * t - 15.0) + 10.0)


# rotation direction constant: +1 makes positive braid generators produce
# positive crossings w.r.t. the blackboard push-off (pinned by the trefoil
# linking-number test)
_TWIST_DIR = 1.0


@dataclass
class BraidLayoutSpec:
    """Braid closure drawn along an ellipse, crossings confined to one quarter.

    Strands are stacked vertically over the ellipse and swap levels by half
    turns inside angular slots; the stack separation d(theta) is modulated by
    one cosine so the short inter-strand cords have exactly one minimum (the
    cord s) and one maximum (the saddle S) instead of a critical circle.
    """

    word: list
    strands: int = 2
    a: float = 3.0
    b: float = 2.0
    spacing: float = 0.12
    modulation: float = 0.3
    theta_S: float = math.radians(265.0)
    quarter: tuple = (math.radians(272.0), math.radians(358.0))
    basepoint_shift: float = 0.0   # fraction of total length
    inplane_ratio: float = 1.0     # swap-circle in-plane amplitude / spacing;
                                   # 1.0 keeps the strand pair at constant
                                   # separation through the crossings so the
                                   # short-cord family stays a single Bott
                                   # circle (broken only by the modulation)
    samples_per_loop: int = 2048

    def __post_init__(self):
        if self.strands < 2:
            raise DegenerateSpec("braid needs at least 2 strands")
        for g in self.word:
            if g == 0 or abs(g) >= self.strands:
                raise SpecError(f"braid generator {g} out of range")
        if not self._single_cycle():
            raise SpecError("braid closure is a link, not a knot")

    def _permutation(self):
        perm = list(range(self.strands))
        for g in self.word:
            i = abs(g) - 1
            perm[i], perm[i + 1] = perm[i + 1], perm[i]
        return perm

    def _single_cycle(self):
        perm = self._permutation()
        seen = 1
        at = perm[0]
        while at != 0:
            at = perm[at]
            seen += 1
        return seen == self.strands

    def slots(self):
        """Angular slot (start, end) for each crossing, inside the quarter."""
        q0, q1 = self.quarter
        n = len(self.word)
        width = (q1 - q0) / n
        pad = 0.12 * width
        return [(q0 + k * width + pad, q0 + (k + 1) * width - pad) for k in range(n)]

    def d_of_theta(self, theta):
        return self.spacing * (1.0 + self.modulation * np.cos(theta - self.theta_S))

    @property
    def theta_s(self):
        return (self.theta_S + math.pi) % (2.0 * math.pi)


def braid_layout_points(spec):
    """Dense points along the braid closure, plus layout metadata.

    Returns (points, metadata); metadata records which braid position the
    curve occupies at each sample and where the crossing slots sit, which the
    labeler and the Seifert winding-rule derivation consume later.
    """
    n_str = spec.strands
    loops = n_str  # single-cycle closure passes the ellipse once per strand
    n_total = spec.samples_per_loop * loops
    Theta = np.linspace(0.0, 2.0 * math.pi * loops, n_total, endpoint=False)
    theta = Theta % (2.0 * math.pi)
    loop_idx = (Theta // (2.0 * math.pi)).astype(int)

    # braid position occupied at Theta: start of each loop from the closure
    # permutation, updated as theta passes each slot
    perm = spec._permutation()
    start_pos = [0]
    for _ in range(loops - 1):
        start_pos.append(perm[start_pos[-1]])
    slots = spec.slots()

    pos = np.array([start_pos[l] for l in loop_idx])
    alpha = np.zeros(n_total)  # vertical stack coordinate (units of d)
    beta = np.zeros(n_total)   # in-plane normal coordinate  (units of d)

    # positions before each slot, evolved sequentially
    for k, (g, (a_k, b_k)) in enumerate(zip(spec.word, slots)):
        i = abs(g) - 1
        after = theta >= b_k
        inside = (theta >= a_k) & (theta < b_k)
        lo, hi = i, i + 1
        swap_lo = after & (pos == lo)
        swap_hi = after & (pos == hi)
        # rotation inside the slot
        t = _smoothstep((theta - a_k) / (b_k - a_k))
        phi = _TWIST_DIR * np.sign(g) * math.pi * t
        mid = (lo + hi) / 2.0 - (n_str - 1) / 2.0
        for which, sgn in ((lo, -0.5), (hi, 0.5)):
            m = inside & (pos == which)
            alpha[m] = mid + sgn * np.cos(phi[m])
            beta[m] = sgn * spec.inplane_ratio * np.sin(phi[m])
        pos[swap_lo] = hi
        pos[swap_hi] = lo

    outside = np.ones(n_total, dtype=bool)
    for (a_k, b_k) in slots:
        outside &= ~((theta >= a_k) & (theta < b_k))
    alpha[outside] = pos[outside] - (n_str - 1) / 2.0

    d = spec.d_of_theta(theta)
    nx = spec.b * np.cos(theta)
    ny = spec.a * np.sin(theta)
    nn = np.hypot(nx, ny)
    n_hat = np.stack([nx / nn, ny / nn, np.zeros_like(nx)], axis=1)
    base = np.stack([spec.a * np.cos(theta), spec.b * np.sin(theta),
                     np.zeros_like(theta)], axis=1)
    pts = base + (d * alpha)[:, None] * VERTICAL + (d * beta)[:, None] * n_hat

    meta = {
        "layout": "braid",
        "word": list(spec.word),
        "strands": n_str,
        "axes": (spec.a, spec.b),
        "spacing": spec.spacing,
        "modulation": spec.modulation,
        "theta_S": spec.theta_S,
        "theta_s": spec.theta_s,
        "quarter": tuple(spec.quarter),
        "slots": slots,
        "Theta_grid": Theta,
        "position_grid": pos,
        "loops": loops,
    }
    return pts, meta


# ---------------------------------------------------------------------------
# build_curve + knot specs
# ---------------------------------------------------------------------------

def build_curve(spec, n_resample=None, tol=DEFAULT_TOL):
    """Build a validated KnotCurve from a knot-spec record (dict or object).

    Spec types: samples | circle | ellipse | torus_knot | braid.  Optional
    fields: basepoint_shift (fraction of L), seed.
    """
    if isinstance(spec, BraidLayoutSpec):
        spec = {"type": "braid", "braid": spec,
                "basepoint_shift": spec.basepoint_shift}
    kind = spec.get("type")
    meta = {}
    if kind == "samples":
        pts = np.asarray(spec["points"], dtype=float)
        if len(pts) < 12:
            raise DegenerateSpec("need at least 12 sample points")
        n_out = n_resample or max(512, len(pts))
    elif kind == "circle":
        pts = ellipse_points(spec["r"], spec["r"], n=spec.get("n", 1024))
        n_out = n_resample or 512
    elif kind == "ellipse":
        pts = ellipse_points(spec["a"], spec["b"], n=spec.get("n", 1024),
                             tilt=spec.get("tilt"))
        n_out = n_resample or 512
    elif kind == "torus_knot":
        pts = torus_knot_points(spec["p"], spec["q"], spec.get("R", 3.0),
                                spec.get("r", 1.0))
        n_out = n_resample or 1024
    elif kind == "braid":
        braid = spec.get("braid")
        if braid is None:
            keys = ("strands", "a", "b", "spacing", "modulation", "theta_S",
                    "quarter", "basepoint_shift", "inplane_ratio",
                    "samples_per_loop")
            kwargs = {k: spec[k] for k in keys if k in spec}
            if "quarter" in kwargs:
                kwargs["quarter"] = tuple(kwargs["quarter"])
            braid = BraidLayoutSpec(word=list(spec["word"]), **kwargs)
        pts, meta = braid_layout_points(braid)
        meta["braid_spec"] = braid
        n_out = n_resample or 2048
    else:
        raise SpecError(f"unknown knot spec type {kind!r}")

    samples, L = _resample_arclength(pts, n_out)
    clearance = _min_clearance(samples[:: max(1, len(samples) // 512)])
    curve = KnotCurve(samples, L, clearance, meta).validate(tol)
    shift = float(spec.get("basepoint_shift", 0.0)) if isinstance(spec, dict) else 0.0
    if shift:
        curve = curve.shift_basepoint(shift * L).validate(tol)
    return curve


# ---------------------------------------------------------------------------
# projection crossings (diagram checks)
# ---------------------------------------------------------------------------

def projection_crossings(curve, direction=None, n=2048):
    """Count transverse self-crossings of the projected polyline.

    A generic direction must be supplied for layouts whose natural projection
    is degenerate (stacked braid strands).
    """
    if direction is None:
        direction = np.array([0.05, 0.03, 1.0])
    d = np.asarray(direction, float)
    d = d / np.linalg.norm(d)
    e1 = np.cross(d, [1.0, 0.0, 0.0])
    if np.linalg.norm(e1) < 1e-6:
        e1 = np.cross(d, [0.0, 1.0, 0.0])
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(d, e1)
    params = np.arange(n) * (curve.L / n)
    pts3 = curve.point(params)
    pts = np.stack([pts3 @ e1, pts3 @ e2], axis=1)
    a = pts
    b = np.roll(pts, -1, axis=0)
    count = 0
    for i in range(n):
        js = np.arange(i + 2, n if i > 0 else n - 1)
        if len(js) == 0:
            continue
        p, r = a[i], b[i] - a[i]
        q = a[js]
        s = b[js] - a[js]
        denom = r[0] * s[:, 1] - r[1] * s[:, 0]
        ok = np.abs(denom) > 1e-14
        qp = q - p
        t = np.where(ok, (qp[:, 0] * s[:, 1] - qp[:, 1] * s[:, 0]) / np.where(ok, denom, 1.0), -1)
        u = np.where(ok, (qp[:, 0] * r[1] - qp[:, 1] * r[0]) / np.where(ok, denom, 1.0), -1)
        count += int(np.sum(ok & (t > 0) & (t < 1) & (u > 0) & (u < 1)))
    return count


# ---------------------------------------------------------------------------
# perturbations (seeded, deterministic)
# ---------------------------------------------------------------------------

def _bump(x):
    """C^2 bump supported on [-1, 1]."""
    y = np.clip(np.abs(x), 0.0, 1.0)
    return (1.0 - y * y) ** 3


def perturb_basepoint(curve, magnitude, seed=0):
    rng = np.random.default_rng(seed)
    delta = magnitude * (0.5 + 0.5 * rng.random()) * (1 if rng.random() < 0.5 else -1)
    return curve.shift_basepoint(delta)


def perturb_curve(curve, magnitude, seed=0, center=None, direction=None,
                  width=None, tol=DEFAULT_TOL):
    """Seeded local bump of the knot; re-validates all invariants."""
    if magnitude >= curve.clearance / 4.0:
        raise InvariantLost("perturbation magnitude too large for the clearance")
    rng = np.random.default_rng(seed)
    center = center if center is not None else rng.random() * curve.L
    width = width or 0.05 * curve.L
    if direction is None:
        direction = rng.normal(size=3)
    direction = np.asarray(direction, float)
    direction /= np.linalg.norm(direction)
    n = len(curve.samples)
    params = np.arange(n) * (curve.L / n)
    x = (params - center + curve.L / 2) % curve.L - curve.L / 2
    bump = _bump(x / width)[:, None] * direction * magnitude
    pts = curve.samples + bump
    try:
        samples, L = _resample_arclength(pts, n)
        clearance = _min_clearance(samples[:: max(1, len(samples) // 512)])
        return KnotCurve(samples, L, clearance, curve.metadata).validate(tol)
    except (NonEmbedded, DegenerateSpec) as exc:
        raise InvariantLost(str(exc)) from exc


def perturb_framing(framing, magnitude, seed=0):
    """Seeded rotation-angle change of the framing (homotopy class preserved)."""
    rng = np.random.default_rng(seed)
    delta = magnitude * (0.5 + 0.5 * rng.random()) * (1 if rng.random() < 0.5 else -1)
    return Framing(framing.curve, framing.kind, framing._table_copy(),
                   framing.rotation + delta, framing.winding, framing.eps)
