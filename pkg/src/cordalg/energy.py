"""Energy landscape on the cord torus: E(s,t) = |gamma(s)-gamma(t)|^2 / 2.

Critical points of E away from the diagonal are binormal cords.  The
diagonal itself is a Bott minimum handled symbolically: its perturbation
contributes a minimum m with value 1 - u and a maximum M with D(M) = 0 for
every knot, so no numerical perturbation is ever constructed.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import DegenerateCritical, SeedingInsufficient
from .ring import AlgebraElement
from .tolerances import DEFAULT_TOL


@dataclass(frozen=True)
class CordPoint:
    """A linear cord, i.e. a point (s, t) of the torus K x K."""

    s: float
    t: float
    chord: tuple
    length: float

    def as_array(self):
        return np.array([self.s, self.t])


def make_cord(curve, s, t):
    s = float(s) % curve.L
    t = float(t) % curve.L
    chord = curve.point(t) - curve.point(s)
    return CordPoint(s, t, tuple(chord), float(np.linalg.norm(chord)))


@dataclass(frozen=True)
class CriticalPoint:
    location: CordPoint
    index: int
    energy: float
    grad_norm: float
    eigvals: tuple
    eigvecs: tuple  # columns match eigvals
    label: str = ""

    @property
    def s(self):
        return self.location.s

    @property
    def t(self):
        return self.location.t

    def with_label(self, label):
        return replace(self, label=label)


def energy(curve, s, t=None):
    if t is None:
        s, t = s.s, s.t
    d = curve.point(np.atleast_1d(t)) - curve.point(np.atleast_1d(s))
    out = 0.5 * np.sum(d * d, axis=-1)
    return float(out[0]) if np.ndim(s) == 0 else out


def gradient(curve, s, t=None):
    """grad E = (<gamma(s)-gamma(t), gamma'(s)>, <gamma(t)-gamma(s), gamma'(t)>)."""
    if t is None:
        s, t = s.s, s.t
    scalar = np.ndim(s) == 0
    s = np.atleast_1d(np.asarray(s, float))
    t = np.atleast_1d(np.asarray(t, float))
    ps, pt = curve.point(s), curve.point(t)
    vs, vt = curve.tangent(s), curve.tangent(t)
    d = ps - pt
    g = np.stack([np.einsum("ij,ij->i", d, vs), -np.einsum("ij,ij->i", d, vt)], axis=-1)
    return g[0] if scalar else g


def hessian(curve, s, t=None):
    if t is None:
        s, t = s.s, s.t
    scalar = np.ndim(s) == 0
    s = np.atleast_1d(np.asarray(s, float))
    t = np.atleast_1d(np.asarray(t, float))
    ps, pt = curve.point(s), curve.point(t)
    vs, vt = curve.tangent(s), curve.tangent(t)
    as_, at = curve.second(s), curve.second(t)
    d = ps - pt
    h11 = np.einsum("ij,ij->i", vs, vs) + np.einsum("ij,ij->i", d, as_)
    h22 = np.einsum("ij,ij->i", vt, vt) - np.einsum("ij,ij->i", d, at)
    h12 = -np.einsum("ij,ij->i", vs, vt)
    H = np.empty((len(s), 2, 2))
    H[:, 0, 0] = h11
    H[:, 1, 1] = h22
    H[:, 0, 1] = H[:, 1, 0] = h12
    return H[0] if scalar else H


def _newton_polish(curve, seeds, tol, iters=60):
    """Damped Newton on grad E = 0, batched over seed points."""
    pts = np.array(seeds, dtype=float)
    L = curve.L
    for _ in range(iters):
        g = gradient(curve, pts[:, 0], pts[:, 1])
        gn = np.linalg.norm(g, axis=1)
        if np.all(gn < tol.newton_tol * L):
            break
        H = hessian(curve, pts[:, 0], pts[:, 1])
        det = H[:, 0, 0] * H[:, 1, 1] - H[:, 0, 1] * H[:, 1, 0]
        bad = np.abs(det) < 1e-14
        det = np.where(bad, 1.0, det)
        step = np.empty_like(pts)
        step[:, 0] = (H[:, 1, 1] * g[:, 0] - H[:, 0, 1] * g[:, 1]) / det
        step[:, 1] = (-H[:, 1, 0] * g[:, 0] + H[:, 0, 0] * g[:, 1]) / det
        step[bad] = 0.0
        norm = np.linalg.norm(step, axis=1, keepdims=True)
        cap = 0.02 * L
        step = np.where(norm > cap, step * cap / np.where(norm > 0, norm, 1.0), step)
        pts = (pts - step) % L
    return pts


def find_critical_points(curve, tol=DEFAULT_TOL, label=True):
    """All nondegenerate off-diagonal critical points of E.

    Seeds from an escalating dense grid, polishes by Newton, merges
    duplicates, rejects the diagonal tube, classifies by the Hessian, and
    requires the Euler count n0 - n1 + n2 = 0 (chi(T^2) = 0 with the
    diagonal contributing m and M) as a completeness certificate before
    returning.  Raises SeedingInsufficient if the count never closes and
    DegenerateCritical for Bott-type degeneracy.
    """
    L = curve.L
    n_grid = tol.grid_start
    last_err = None
    while n_grid <= tol.grid_max:
        axis = np.arange(n_grid) * (L / n_grid)
        S, T = np.meshgrid(axis, axis, indexing="ij")
        g = gradient(curve, S.ravel(), T.ravel())
        g2 = (g * g).sum(axis=1).reshape(n_grid, n_grid)
        local_min = np.ones_like(g2, dtype=bool)
        for ds in (-1, 0, 1):
            for dt in (-1, 0, 1):
                if ds == 0 and dt == 0:
                    continue
                local_min &= g2 <= np.roll(np.roll(g2, ds, 0), dt, 1)
        si, ti = np.nonzero(local_min)
        seeds = np.stack([axis[si], axis[ti]], axis=1)
        off_diag = curve.circ_dist(seeds[:, 0], seeds[:, 1]) > 0.5 * tol.diag_tube * L
        seeds = seeds[off_diag]
        try:
            points = _collect(curve, seeds, tol, cluster_dist=3.0 * L / n_grid)
        except DegenerateCritical as exc:
            last_err = exc
            n_grid *= 2
            continue
        n_by_index = [sum(1 for p in points if p.index == k) for k in range(3)]
        if n_by_index[0] - n_by_index[1] + n_by_index[2] == 0 and points:
            if label:
                points = assign_labels(curve, points)
            return points
        last_err = SeedingInsufficient(
            f"Euler count open at grid {n_grid}: {n_by_index}"
        )
        n_grid *= 2
    raise last_err if last_err else SeedingInsufficient("no critical points found")


def _collect(curve, seeds, tol, cluster_dist=0.0):
    L = curve.L
    if len(seeds) == 0:
        return []
    # the landscape is symmetric under (s,t) <-> (t,s); seed both
    seeds = np.vstack([seeds, seeds[:, ::-1]])
    polished = _newton_polish(curve, seeds, tol)
    g = gradient(curve, polished[:, 0], polished[:, 1])
    gn = np.linalg.norm(g, axis=1)
    ok = gn < tol.newton_tol * L
    polished = polished[ok]
    gn = gn[ok]
    keep = curve.circ_dist(polished[:, 0], polished[:, 1]) > tol.diag_tube * L
    polished, gn = polished[keep], gn[keep]
    if len(polished) == 0:
        return []

    merged = []
    merged_gn = []
    r = tol.merge_tol * L
    for p, gnorm in zip(polished, gn):
        dup = False
        for q in merged:
            if curve.circ_dist(p[0], q[0]) < r and curve.circ_dist(p[1], q[1]) < r:
                dup = True
                break
        if not dup:
            merged.append(p)
            merged_gn.append(gnorm)
    merged = np.array(merged)

    # isolated criticals cannot sit at grid scale from each other; a cluster
    # of converged points along a valley is a Bott-degenerate family
    if cluster_dist > 0:
        for i in range(len(merged)):
            for j in range(i + 1, len(merged)):
                if (curve.circ_dist(merged[i, 0], merged[j, 0]) < cluster_dist
                        and curve.circ_dist(merged[i, 1], merged[j, 1]) < cluster_dist):
                    raise DegenerateCritical(
                        "critical points cluster at grid scale (Bott family)"
                    )

    H = hessian(curve, merged[:, 0], merged[:, 1])
    eigvals, eigvecs = np.linalg.eigh(H)
    floor = tol.nondegeneracy_rel * np.max(np.abs(eigvals))
    if np.any(np.abs(eigvals) < floor):
        i = int(np.argmin(np.abs(eigvals).min(axis=1)))
        raise DegenerateCritical(
            f"near-zero Hessian eigenvalue at (s,t)=({merged[i,0]:.4f},{merged[i,1]:.4f})"
        )
    out = []
    for i, (p, gnorm) in enumerate(zip(merged, merged_gn)):
        cord = make_cord(curve, p[0], p[1])
        index = int(np.sum(eigvals[i] < 0))
        out.append(CriticalPoint(
            location=cord,
            index=index,
            energy=0.5 * cord.length ** 2,
            grad_norm=float(gnorm),
            eigvals=tuple(eigvals[i]),
            eigvecs=tuple(map(tuple, eigvecs[i].T)),
        ))
    out.sort(key=lambda cp: (cp.index, cp.energy, cp.s))
    return out


# ---------------------------------------------------------------------------
# labels
# ---------------------------------------------------------------------------

def assign_labels(curve, points):
    """Deterministic generator names; paper-style names on braid layouts."""
    if curve.metadata.get("layout") == "braid":
        return _braid_labels(curve, points)
    prefixes = {0: "g", 1: "h", 2: "e"}
    counters = {0: 0, 1: 0, 2: 0}
    seen = {}
    labeled = []
    for p in points:
        key = _pair_key(curve, p)
        if key in seen:
            base = seen[key]
        else:
            counters[p.index] += 1
            base = f"{prefixes[p.index]}{counters[p.index]}"
            seen[key] = base
        labeled.append(p.with_label(f"{base}_{_orientation(p)}"))
    return labeled


def _orientation(p):
    return "s" if p.s < p.t else "t"


def _pair_key(curve, p, res=1e-5):
    a = round(min(p.s, p.t) / (res * curve.L))
    b = round(max(p.s, p.t) / (res * curve.L))
    return (p.index, a, b)


def _braid_labels(curve, points):
    """s / S for the short inter-strand cords, k_ij / l_ij for the long ones.

    The paper's (i, j) strand indices depend on its drawing; here the long
    cords of each index are named k11, k12, ... in descending energy order
    (the paper's k11 is its longest index-1 cord), which is deterministic
    and layout-independent.  Golden comparisons use value multisets, not
    these decorative names.
    """
    meta = curve.metadata
    spacing = meta.get("spacing", 0.25)
    modulation = meta.get("modulation", 0.3)
    short_cut = 2.5 * spacing * (1.0 + modulation)
    n = meta.get("strands", 2)
    pairs = {}
    for p in points:
        key = _pair_key(curve, p)
        pairs.setdefault(key, p)
    seen = {}
    by_family = {}
    for key, p in pairs.items():
        if p.location.length < short_cut:
            fam = {0: "s", 1: "S"}.get(p.index, "c")
        else:
            fam = {1: "k", 2: "l"}.get(p.index, "b")
        by_family.setdefault(fam, []).append(key)
    for fam, keys in by_family.items():
        keys.sort(key=lambda k: (-pairs[k].energy, pairs[k].s))
        if fam in ("s", "S", "c", "b") and len(keys) == 1:
            seen[keys[0]] = fam
        elif fam in ("k", "l"):
            for rank, key in enumerate(keys):
                i, j = divmod(rank, n)
                seen[key] = f"{fam}{i + 1}{j + 1}"
        else:
            for rank, key in enumerate(keys):
                seen[key] = f"{fam}{rank + 1}"
    return [
        p.with_label(f"{seen[_pair_key(curve, p)]}_{_orientation(p)}")
        for p in points
    ]


# ---------------------------------------------------------------------------
# the symbolic diagonal
# ---------------------------------------------------------------------------

def diagonal_data():
    """Symbolic descriptors of the diagonal pair m (index 0) and M (index 1).

    m's algebra value is 1 - u (a contractible cord) and D(M) = 0 for every
    knot, so neither is ever discretized.
    """
    return {
        "m": {"index": 0, "value": AlgebraElement.one() - AlgebraElement.mu()},
        "M": {"index": 1, "boundary": AlgebraElement.zero()},
    }
