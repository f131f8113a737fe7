"""Negative gradient flow of the cord energy with event detection.

Index-1 critical cords are pushed off along their unstable manifolds and
integrated down to index-0 cords or to the diagonal, collecting framing
crossings (mu factors), basepoint crossings (lambda factors) and interior
knot crossings (splits) on the way.  The fold of a finished trace is the
algebra value D-hat; D(k) = D-hat(k+) - D-hat(k-).

Sign conventions that the paper only fixes through its figures (which side
of a crossing contributes mu versus mu^-1, and the split sign) enter through
``Conventions``; the defaults are pinned by the worked trefoil example.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .energy import CriticalPoint, energy, gradient, hessian, make_cord
from .errors import (
    GenericityViolation,
    MaxSplits,
    StepCollapse,
    TangentialContact,
    ZeroProjection,
)
from .incidence import ChordScreen, framing_event, signed_crossing_value
from .ring import AlgebraElement
from .tolerances import DEFAULT_TOL


@dataclass(frozen=True)
class Conventions:
    """Global sign calibration for the figure-borne exponent rules.

    sigma is the sign of the time derivative of the signed event function at
    the crossing; exponents are kappa * sigma, applied on the left for
    start-point events and on the right for end-point events.  A split whose
    forward child heads into the (birth_side * nu)-half-plane at the crossing
    point carries an extra middle factor mu^birth_exp between the two child
    values (the framing must be bent out of the way on exactly one side of a
    split, which strikes one child with a meridian).  The defaults reproduce
    the worked unknot and trefoil traces.
    """

    kappa_f_start: int = 1
    kappa_f_end: int = -1
    kappa_b_start: int = 1
    kappa_b_end: int = -1
    kappa_split: int = -1
    birth_side: int = 1
    birth_exp: int = -1


DEFAULT_CONVENTIONS = Conventions()


@dataclass
class TraceEvent:
    time: float
    kind: str          # F-start | F-end | B-start | B-end | split
    sigma: int
    exponent: int      # applied lambda/mu exponent (0 for splits)
    state: tuple       # (s, t) at the event
    aux: dict = field(default_factory=dict)


@dataclass
class FlowTrace:
    initial: tuple
    events: list
    terminal: str            # index-0 label | "contractible"
    left: tuple              # accumulated (lambda, mu) exponents, left side
    right: tuple
    splits: list             # list of dicts with sign, monomials, children
    energy_drop: tuple       # (E_initial, E_terminal)
    terminal_state: tuple = (0.0, 0.0)
    flagged: list = field(default_factory=list)
    path: list = field(default_factory=list)  # (tau, s, t) at accepted steps


# ---------------------------------------------------------------------------
# flow context: everything precomputed once per (curve, framing)
# ---------------------------------------------------------------------------

class FlowContext:
    def __init__(self, curve, framing, critical_points, tol=DEFAULT_TOL,
                 conventions=DEFAULT_CONVENTIONS):
        self.curve = curve
        self.framing = framing
        self.tol = tol
        self.conventions = conventions
        self.screen = ChordScreen(curve, n=min(len(curve.samples), 1024))
        self.minima = [p for p in critical_points if p.index == 0]
        self.saddles = [p for p in critical_points if p.index == 1]
        self.basins = [self._basin_radius(p) for p in self.minima]
        self.split_budget = tol.max_splits

    def _basin_radius(self, p):
        """Certified ball around an index-0 point: convex and event-free."""
        L = self.curve.L
        r = self.tol.basin_frac * L
        center = np.array([p.s, p.t])
        for _ in range(14):
            if self._ball_certified(center, r):
                return r
            r *= 0.5
        raise GenericityViolation(
            f"no event-free convex ball around index-0 point {p.label}",
            reason="knot",
        )

    def _ball_certified(self, center, r):
        angles = np.linspace(0.0, 2.0 * math.pi, 12, endpoint=False)
        ring = center[None, :] + r * np.stack([np.cos(angles), np.sin(angles)], axis=1)
        pts = np.vstack([center, ring])
        H = hessian(self.curve, pts[:, 0], pts[:, 1])
        eig = np.linalg.eigvalsh(H)
        if np.any(eig <= 0):
            return False
        names = ("F-start", "F-end", "B-start", "B-end")
        vals = {n: [] for n in names}
        for s, t in pts:
            try:
                row = _event_values(self, s, t)
            except (ZeroProjection, TangentialContact):
                return False
            for n in names:
                vals[n].append(row[n])
        for n in names:
            arr = np.array(vals[n])
            if np.any(np.abs(arr) < 1e-6) or (np.min(arr) < 0 < np.max(arr)):
                return False
        for s, t in pts[::4]:
            if self.screen.candidates(s, t, 0.4 * self.screen.step).size:
                hits = _interior_hits(self, s, t)
                if hits:
                    return False
        return True


def _event_values(ctx, s, t):
    """The four scalar event functions at a cord (s, t), one batched pass.

    The framing is evaluated inline (blackboard projection plus the constant
    normal-plane rotation); custom-table framings fall back to Framing.nu.
    """
    curve, framing = ctx.curve, ctx.framing
    L = curve.L
    half = L / 2.0
    st = np.array([s % L, t % L])
    pts, tans = curve.spline.eval_multi(st, (0, 1))
    (px, py, pz), (qx, qy, qz) = pts.tolist()
    rows = tans.tolist()
    out = {
        "B-start": (s + half) % L - half,
        "B-end": (t + half) % L - half,
    }
    inline = framing.kind == "blackboard" and not framing.winding
    if not inline:
        nus_arr = framing.nu(st).tolist()
    ca, sa = math.cos(framing.rotation), math.sin(framing.rotation)
    cx, cy, cz = qx - px, qy - py, qz - pz
    for kind, i, sign in (("F-start", 0, 1.0), ("F-end", 1, -1.0)):
        tx, ty, tz = rows[i]
        tn = math.sqrt(tx * tx + ty * ty + tz * tz)
        tx, ty, tz = tx / tn, ty / tn, tz / tn
        if inline:
            nx, ny, nz = -tz * tx, -tz * ty, 1.0 - tz * tz
            nn = math.sqrt(nx * nx + ny * ny + nz * nz)
            if nn < 1e-12:
                raise ZeroProjection("tangent parallel to the vertical")
            nx, ny, nz = nx / nn, ny / nn, nz / nn
            if framing.rotation:
                wx = ty * nz - tz * ny
                wy = tz * nx - tx * nz
                wz = tx * ny - ty * nx
                nx, ny, nz = ca * nx + sa * wx, ca * ny + sa * wy, ca * nz + sa * wz
        else:
            nx, ny, nz = nus_arr[i]
        vx, vy, vz = sign * cx, sign * cy, sign * cz
        dot_t = vx * tx + vy * ty + vz * tz
        wx, wy, wz = vx - dot_t * tx, vy - dot_t * ty, vz - dot_t * tz
        norm = math.sqrt(wx * wx + wy * wy + wz * wz)
        if norm < 1e-9 * max(math.sqrt(vx * vx + vy * vy + vz * vz), 1e-300):
            raise ZeroProjection("chord parallel to the tangent")
        wx, wy, wz = wx / norm, wy / norm, wz / norm
        # (tangent x nu)-coordinate of the normalized projected chord
        gx = ty * nz - tz * ny
        gy = tz * nx - tx * nz
        gz = tx * ny - ty * nx
        val = wx * gx + wy * gy + wz * gz
        pos = wx * nx + wy * ny + wz * nz
        out[kind] = val if pos > 0.0 else math.copysign(1.0, val)
    return out


VERT = np.array([0.0, 0.0, 1.0])


def _interior_hits(ctx, s, t):
    from .incidence import chord_knot_intersections
    return chord_knot_intersections(ctx.curve, s, t, ctx.tol, screen=ctx.screen)


# ---------------------------------------------------------------------------
# the integrator
# ---------------------------------------------------------------------------

def _rhs(curve, y):
    pts, tans = curve.spline.eval_multi(np.asarray(y, dtype=float), (0, 1))
    d = pts[0] - pts[1]
    return np.array([-float(d @ tans[0]), float(d @ tans[1])])


def _rhs_energy_hessian(curve, y):
    """Flow right-hand side, energy, Hessian entries and spectral bound."""
    pts, tans, secs = curve.spline.eval_multi(np.asarray(y, dtype=float), (0, 1, 2))
    d = pts[0] - pts[1]
    f = np.array([-float(d @ tans[0]), float(d @ tans[1])])
    e = 0.5 * float(d @ d)
    h11 = float(tans[0] @ tans[0]) + float(d @ secs[0])
    h22 = float(tans[1] @ tans[1]) - float(d @ secs[1])
    h12 = -float(tans[0] @ tans[1])
    lam = abs(h11 + h22) * 0.5 + math.hypot(0.5 * (h11 - h22), h12)
    return f, e, (h11, h12, h22), max(lam, 1e-9)


def _rk2_step(curve, y, h, f0=None):
    """Explicit midpoint step; cheap, used inside the stability cap."""
    if f0 is None:
        f0 = _rhs(curve, y)
    fm = _rhs(curve, y + 0.5 * h * f0)
    return y + h * fm


def _ck_step(curve, y, h):
    k = [_rhs(curve, y)]
    for row in _CK_A[1:]:
        yi = y + h * sum(a * ki for a, ki in zip(row, k))
        k.append(_rhs(curve, yi))
    y5 = y + h * sum(b * ki for b, ki in zip(_CK_B5, k))
    y4 = y + h * sum(b * ki for b, ki in zip(_CK_B4, k))
    return y5, y5 - y4


def _rk4(curve, y, h):
    k1 = _rhs(curve, y)
    k2 = _rhs(curve, y + 0.5 * h * k1)
    k3 = _rhs(curve, y + 0.5 * h * k2)
    k4 = _rhs(curve, y + h * k3)
    return y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


class _Tracer:
    """One trajectory; owns the event bookkeeping and split recursion."""

    def __init__(self, ctx, origin_saddle=None):
        self.ctx = ctx
        self.origin = origin_saddle

    def run(self, s, t, depth=0):
        ctx = self.ctx
        tol = ctx.tol
        curve = ctx.curve
        L = curve.L
        y = np.array([float(s) % L, float(t) % L])
        trace = FlowTrace(
            initial=(y[0], y[1]), events=[], terminal="", left=(0, 0),
            right=(0, 0), splits=[], energy_drop=(energy(curve, y[0], y[1]), 0.0),
        )

        trace.path.append((0.0, float(y[0]), float(y[1])))
        term = self._terminal_check(y)
        if term:
            trace.terminal = term
            trace.terminal_state = (float(y[0]), float(y[1]))
            trace.energy_drop = (trace.energy_drop[0], energy(curve, y[0], y[1]))
            return trace

        ev_prev = _event_values(ctx, y[0], y[1])
        s_branches = self._s_branches(y)
        tau = 0.0
        h_min = 1e-15 * L
        disp_cap = 2e-3 * L
        e_prev = energy(curve, y[0], y[1])

        f, _e, _H, lam = _rhs_energy_hessian(curve, y)
        for _ in range(tol.max_steps):
            # the near-Bott valleys make the flow stiff: cap the step at the
            # explicit stability limit of the fastest transverse mode (the
            # valley itself attracts, so along-flow accuracy is what counts);
            # steps carrying an event or the terminal entry are redone small
            # enough for the in-step refinement jumps to stay accurate
            speed = math.hypot(f[0], f[1])
            if speed < 1e-14:
                raise GenericityViolation("flow stalled away from any basin",
                                          reason="knot")
            h = min(disp_cap / speed, 1.6 / lam)
            h_event = min(0.06 / lam, h)
            while True:
                while True:
                    y_new = _rk2_step(curve, y, h, f)
                    y_new_mod = np.array([y_new[0] % L, y_new[1] % L])
                    f_new, e_new, _H, lam_new = _rhs_energy_hessian(curve, y_new_mod)
                    if e_new < e_prev:
                        break
                    h *= 0.5
                    if h < h_min:
                        raise StepCollapse("step collapsed during flow")
                ev_new = _event_values(ctx, y_new_mod[0], y_new_mod[1])
                crossings = self._bracket_events(y, h, ev_prev, ev_new)
                term, t_term = self._terminal_in_step(y, h, y_new_mod)
                if term:
                    crossings = [c for c in crossings if c[0] < t_term]
                s_crossings, s_branches_new = self._bracket_s(
                    y, h, s_branches, y_new_mod, cut=t_term if term else None)
                if (crossings or s_crossings or term) and h > h_event:
                    h = h_event
                    continue
                break
            all_events = sorted(crossings + s_crossings, key=lambda c: c[0])
            self._apply_events(trace, tau, y, h, all_events, depth)

            tau += h
            y = y_new_mod
            e_prev = e_new
            ev_prev = ev_new
            s_branches = s_branches_new
            f, lam = f_new, lam_new
            trace.path.append((tau, float(y[0]), float(y[1])))
            if term:
                trace.terminal = term
                trace.terminal_state = (float(y[0]), float(y[1]))
                trace.energy_drop = (trace.energy_drop[0], e_new)
                return trace
            self._saddle_guard(y)
        raise StepCollapse("flow exceeded the step budget")

    # -- terminal conditions ------------------------------------------------

    def _terminal_check(self, y):
        ctx = self.ctx
        L = ctx.curve.L
        if ctx.curve.circ_dist(y[0], y[1]) < ctx.tol.diag_tube * L:
            return "contractible"
        for p, r in zip(ctx.minima, ctx.basins):
            if math.hypot(*(_torus_delta(y, (p.s, p.t), L))) < r:
                return p.label
        return None

    def _terminal_in_step(self, y0, h, y1):
        """Terminal label and fractional entry time, via bisection."""
        term1 = self._terminal_check(y1)
        if not term1:
            return None, None
        lo, hi = 0.0, 1.0
        for _ in range(40):
            mid = 0.5 * (lo + hi)
            ym = _rk4(self.ctx.curve, y0, h * mid)
            ym = np.array([ym[0] % self.ctx.curve.L, ym[1] % self.ctx.curve.L])
            if self._terminal_check(ym):
                hi = mid
            else:
                lo = mid
        return term1, hi

    def _saddle_guard(self, y):
        ctx = self.ctx
        L = ctx.curve.L
        r = ctx.tol.trajectory_tol * L
        for p in ctx.saddles:
            if self.origin is not None and p is self.origin:
                continue
            if math.hypot(*(_torus_delta(y, (p.s, p.t), L))) < r:
                raise GenericityViolation(
                    f"trajectory ran into index-1 point {p.label}", reason="knot")

    # -- event bracketing -----------------------------------------------------

    def _bracket_events(self, y0, h, ev0, ev1):
        out = []
        L = self.ctx.curve.L
        for kind in ("B-start", "B-end", "F-start", "F-end"):
            a, b = ev0[kind], ev1[kind]
            if kind.startswith("B") and (abs(a) > L / 4 or abs(b) > L / 4):
                continue  # wrap side of the circle, not a basepoint crossing
            if a == 0.0:
                raise GenericityViolation(f"trace starts on {kind} set",
                                          reason="basepoint" if kind[0] == "B" else "framing")
            if a * b < 0.0:
                frac = self._bisect(y0, h, kind, a)
                if frac is not None:
                    out.append((frac, kind, int(math.copysign(1, b - a)), None))
        return out

    def _bisect(self, y0, h, kind, val0, iters=60):
        ctx = self.ctx
        L = ctx.curve.L
        lo, hi = 0.0, 1.0
        sign0 = math.copysign(1.0, val0)
        y_end = _rk4(ctx.curve, y0, h)
        v_end = _event_values(ctx, y_end[0] % L, y_end[1] % L)[kind]
        if math.copysign(1.0, v_end) == sign0:
            return None  # bracket not confirmed on the refinement path
        for _ in range(iters):
            mid = 0.5 * (lo + hi)
            ym = _rk4(ctx.curve, y0, h * mid)
            v = _event_values(ctx, ym[0] % L, ym[1] % L)[kind]
            if math.copysign(1.0, v) == sign0:
                lo = mid
            else:
                hi = mid
            if (hi - lo) * h < ctx.tol.event_tol * L:
                break
        frac = 0.5 * (lo + hi)
        ym = _rk4(ctx.curve, y0, h * frac)
        ym = np.array([ym[0] % L, ym[1] % L])
        if kind.startswith("F"):
            endpoint = "start" if kind == "F-start" else "end"
            ev = framing_event(ctx.curve, ctx.framing, ym[0], ym[1], endpoint)
            if not ev.positive:
                return None  # crossing on the -nu side is not an event
        return frac

    # -- S events ---------------------------------------------------------------

    def _s_branches(self, y):
        """Signed crossing values of nearby knot branches as (u, value, tau)."""
        ctx = self.ctx
        curve = ctx.curve
        excl = max(ctx.tol.endpoint_margin * curve.L, 3.0 * ctx.screen.step)
        # a chord shorter than the endpoint exclusion zones cannot carry a
        # valid interior hit; skip the screen entirely (the long family
        # sweeps of short cords dominate the step count)
        chord = curve.point(y[1]) - curve.point(y[0])
        if float(chord @ chord) < (1.8 * excl) ** 2:
            return []
        cand = ctx.screen.candidates(y[0], y[1], 4.0 * ctx.screen.step)
        branches = []
        if len(cand) == 0:
            return branches
        for g in _group_contiguous(cand, len(ctx.screen.params)):
            u0 = ctx.screen.params[g[len(g) // 2]]
            res = self._branch_value(y, u0, excl)
            if res is not None:
                branches.append(res)
        return branches

    def _branch_value(self, y, u0, excl):
        ctx = self.ctx
        curve = ctx.curve
        if (curve.circ_dist(u0, y[0]) < excl or curve.circ_dist(u0, y[1]) < excl):
            return None
        p = curve.point(y[0])
        d = curve.point(y[1]) - p
        from .incidence import _refine_hit
        try:
            res = _refine_hit(curve, p, d, u0, ctx.tol)
        except TangentialContact:
            return None  # flat but distant minima are harmless
        if res is None:
            return None
        u, tau_frac, dist = res
        if dist > 6.0 * ctx.screen.step:
            return None
        if (curve.circ_dist(u, y[0]) < excl or curve.circ_dist(u, y[1]) < excl):
            return None
        try:
            val, tau_frac, n_hat = signed_crossing_value(curve, y[0], y[1], u)
        except TangentialContact:
            if dist < 4.0 * ctx.tol.intersect_tol * curve.L:
                raise GenericityViolation("tangential chord/knot contact",
                                          reason="knot")
            return None
        return (u, val, tau_frac, n_hat, dist)

    def _bracket_s(self, y0, h, branches0, y1, cut=None):
        branches1 = self._s_branches(y1)
        window = 8.0 * self.ctx.screen.step
        out = []
        for (u1, v1, tau1, n1, d1) in branches1:
            match = None
            for (u0, v0, tau0, n0, d0) in branches0:
                if self.ctx.curve.circ_dist(u0, u1) < window:
                    match = (u0, v0, n0)
                    break
            if match is None:
                continue
            u0, v0, n0 = match
            if float(n1 @ n0) < 0.0:
                v1 = -v1  # keep the branch's sign orientation continuous
            if v0 * v1 >= 0.0:
                continue
            res = self._bisect_s(y0, h, u0, math.copysign(1.0, v0), n0)
            if res is None:
                continue
            frac, u_hit, tau_hit, dist = res
            if dist > 10.0 * self.ctx.tol.intersect_tol * self.ctx.curve.L:
                continue  # the branch slips around the chord, no crossing
            tau_floor = self.ctx.tol.tau_floor
            if tau_hit < -tau_floor or tau_hit > 1.0 + tau_floor:
                continue  # knot crosses the chord's extension, not the cord
            if cut is not None and frac >= cut:
                continue
            out.append((frac, "split", 0, (u_hit, tau_hit, dist)))
        return out, branches1

    def _bisect_s(self, y0, h, u_seed, sign0, n_ref, iters=60):
        ctx = self.ctx
        L = ctx.curve.L
        excl = max(ctx.tol.endpoint_margin * L, 3.0 * ctx.screen.step)
        lo, hi = 0.0, 1.0
        for _ in range(iters):
            mid = 0.5 * (lo + hi)
            ym = _rk4(ctx.curve, y0, h * mid)
            res = self._branch_value(np.array([ym[0] % L, ym[1] % L]), u_seed, excl)
            if res is None:
                return None
            val = res[1] if float(res[3] @ n_ref) >= 0.0 else -res[1]
            if math.copysign(1.0, val) == sign0:
                lo = mid
            else:
                hi = mid
            if (hi - lo) * h < ctx.tol.event_tol * L:
                break
        frac = 0.5 * (lo + hi)
        ym = _rk4(ctx.curve, y0, h * frac)
        res = self._branch_value(np.array([ym[0] % L, ym[1] % L]), u_seed, excl)
        if res is None:
            return None
        return frac, res[0], res[2], res[4]

    # -- applying events ---------------------------------------------------------

    def _apply_events(self, trace, tau, y0, h, events, depth):
        ctx = self.ctx
        L = ctx.curve.L
        conv = ctx.conventions
        for i, (frac, kind, sigma, aux) in enumerate(events):
            if i + 1 < len(events):
                nfrac, nkind = events[i + 1][0], events[i + 1][1]
                if (nfrac - frac) * h < ctx.tol.event_tol * L:
                    pair = {kind, nkind}
                    if pair != {"F-start", "F-end"}:
                        raise GenericityViolation(
                            f"simultaneous events {kind}/{nkind}", reason="knot")
            ym = _rk4(ctx.curve, y0, h * frac)
            ym = np.array([ym[0] % L, ym[1] % L])
            if kind == "split":
                self._do_split(trace, tau + frac * h, ym, depth, aux)
                continue
            side, kappa, sym = {
                "F-start": ("left", conv.kappa_f_start, "mu"),
                "F-end": ("right", conv.kappa_f_end, "mu"),
                "B-start": ("left", conv.kappa_b_start, "lambda"),
                "B-end": ("right", conv.kappa_b_end, "lambda"),
            }[kind]
            expo = kappa * sigma
            la, mu = (1, 0) if sym == "lambda" else (0, 1)
            delta = (la * expo, mu * expo)
            if side == "left":
                trace.left = (trace.left[0] + delta[0], trace.left[1] + delta[1])
            else:
                trace.right = (trace.right[0] + delta[0], trace.right[1] + delta[1])
            trace.events.append(TraceEvent(
                time=tau + frac * h, kind=kind, sigma=sigma, exponent=expo,
                state=(float(ym[0]), float(ym[1])),
            ))

    def _do_split(self, trace, at_time, y, depth, aux=None):
        ctx = self.ctx
        if ctx.split_budget <= 0:
            raise MaxSplits("split budget exhausted")
        ctx.split_budget -= 1
        if depth > 8:
            raise MaxSplits("split recursion too deep")
        curve = ctx.curve
        tol = ctx.tol
        if aux is not None:
            u, tau_frac, dist = aux
            if not (tol.tau_floor < tau_frac < 1.0 - tol.tau_floor) or \
                    curve.circ_dist(u, y[0]) < tol.endpoint_margin * curve.L or \
                    curve.circ_dist(u, y[1]) < tol.endpoint_margin * curve.L:
                raise GenericityViolation("crossing inside the endpoint zone",
                                          reason="knot")
            others = [hit for hit in _interior_hits(ctx, y[0], y[1])
                      if curve.circ_dist(hit[0], u) > 4.0 * tol.endpoint_margin * curve.L]
            if others:
                raise GenericityViolation("cord met the knot twice (S2)",
                                          reason="knot")
        else:
            hits = _interior_hits(ctx, y[0], y[1])
            if not hits:
                raise GenericityViolation(
                    "bracketed interior crossing lost on refinement", reason="knot")
            if len(hits) > 1:
                raise GenericityViolation("cord met the knot twice (S2)",
                                          reason="knot")
            u, tau_frac = hits[0]
        parent_len = make_cord(curve, y[0], y[1]).length
        c1 = (y[0], u)
        c2 = (u, y[1])
        len1 = make_cord(curve, *c1).length
        len2 = make_cord(curve, *c2).length
        floor = ctx.tol.min_split_decrease * curve.L
        if len1 > parent_len - floor or len2 > parent_len - floor:
            raise GenericityViolation("split child not shorter than parent",
                                      reason="knot")
        raw_sign = self._split_sign(y, u, tau_frac)
        sign = ctx.conventions.kappa_split * raw_sign
        q_side, sigma_nu = self._split_framing_side(y, u, tau_frac)
        child1 = _Tracer(ctx).run(*c1, depth=depth + 1)
        child2 = _Tracer(ctx).run(*c2, depth=depth + 1)
        trace.splits.append({
            "time": at_time,
            "sign": sign,
            "raw_sign": raw_sign,
            "q_side": q_side,
            "sigma_nu": sigma_nu,
            "birth_mu": _birth_exponent(ctx.conventions, q_side, sigma_nu),
            "left": trace.left,
            "right": trace.right,
            "children": (child1, child2),
            "hit": (float(u), float(tau_frac)),
            "lengths": (parent_len, len1, len2),
        })
        trace.events.append(TraceEvent(
            time=at_time, kind="split", sigma=sign, exponent=0,
            state=(float(y[0]), float(y[1])),
            aux={"u": float(u), "tau": float(tau_frac)},
        ))

    def _split_framing_side(self, y, u, tau_frac):
        """Position of the framing relative to the split pieces.

        q_side: sign of the forward child's heading against nu(u) (flips
        under cord reversal, so exactly one orientation of a crossing carries
        the birth meridian).  sigma_nu: sign of the knot's crossing velocity
        against nu(u) (orientation-independent).
        """
        curve = self.ctx.curve
        d = curve.point(y[1]) - curve.point(y[0])
        d_hat = d / np.linalg.norm(d)
        sdot, tdot = -gradient(curve, y[0], y[1])
        v = (1.0 - tau_frac) * curve.tangent(y[0]) * sdot \
            + tau_frac * curve.tangent(y[1]) * tdot
        nu = self.ctx.framing.nu(u)
        tang = curve.unit_tangent(u)
        pi_d = d_hat - tang * float(d_hat @ tang)
        q = float(pi_d @ nu)
        s_nu = float(v @ nu)
        if q == 0.0 or s_nu == 0.0:
            raise GenericityViolation("split framing side degenerate",
                                      reason="framing")
        return int(math.copysign(1, q)), int(math.copysign(1, s_nu))

    def _split_sign(self, y, u, tau_frac):
        """Raw orientation sign of a transverse crossing (before kappa)."""
        ctx = self.ctx
        curve = ctx.curve
        d = curve.point(y[1]) - curve.point(y[0])
        d_hat = d / np.linalg.norm(d)
        sdot, tdot = -gradient(curve, y[0], y[1])
        v = (1.0 - tau_frac) * curve.tangent(y[0]) * sdot \
            + tau_frac * curve.tangent(y[1]) * tdot
        w = float(curve.tangent(u) @ np.cross(d_hat, v))
        if w == 0.0:
            raise GenericityViolation("degenerate split orientation", reason="knot")
        return int(math.copysign(1, w))


def _torus_delta(y, p, L):
    d0 = (y[0] - p[0] + L / 2) % L - L / 2
    d1 = (y[1] - p[1] + L / 2) % L - L / 2
    return d0, d1


def _group_contiguous(indices, n):
    """Group sorted indices into circularly contiguous runs."""
    if len(indices) == 0:
        return []
    indices = np.sort(indices)
    breaks = np.nonzero(np.diff(indices) > 4)[0]
    groups = np.split(indices, breaks + 1)
    if len(groups) > 1 and (indices[0] + n - indices[-1]) <= 4:
        groups[0] = np.concatenate([groups[-1], groups[0] + 0])
        groups = groups[:-1]
    return [list(g) for g in groups]


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------

def integrate(curve, framing, s, t, critical_points=None, tol=DEFAULT_TOL,
              conventions=DEFAULT_CONVENTIONS, ctx=None):
    """Flow the cord (s, t) down the negative gradient; returns a FlowTrace."""
    if ctx is None:
        from .energy import find_critical_points
        if critical_points is None:
            critical_points = find_critical_points(curve, tol)
        ctx = FlowContext(curve, framing, critical_points, tol, conventions)
    return _Tracer(ctx).run(s, t)


def _birth_exponent(conventions, q_side, _sigma_nu):
    """Middle meridian exponent of a split (0 when the framing is clear)."""
    if conventions.birth_exp and q_side == conventions.birth_side:
        return conventions.birth_exp
    return 0


def dhat_of_trace(trace, terminal_values):
    """Fold a FlowTrace into its algebra value.

    terminal_values maps index-0 labels to AlgebraElements (the contractible
    terminal maps to 1 - u).  The non-splitting part is
    left * terminal * right; each split contributes
    sign * left_at * Dhat(c1) * mu^birth * Dhat(c2) * right_at with the
    boundary monomials frozen at the split time and the birth meridian
    resolved from the framing side of the crossing.
    """
    if trace.terminal == "contractible":
        core = AlgebraElement.one() - AlgebraElement.mu()
    else:
        core = terminal_values[trace.terminal]
    out = _mono(trace.left) * core * _mono(trace.right)
    for sp in trace.splits:
        c1, c2 = sp["children"]
        piece = (_mono(sp["left"])
                 * dhat_of_trace(c1, terminal_values)
                 * AlgebraElement.mu(sp.get("birth_mu", 0))
                 * dhat_of_trace(c2, terminal_values)
                 * _mono(sp["right"]))
        out = out + sp["sign"] * piece
    return out


def _mono(exps):
    return AlgebraElement.monomial(exps[0], exps[1])


def refold_trace(trace, conventions):
    """Recompute a finished trace's monomial bookkeeping under different sign
    conventions (the recorded event geometry is convention-independent)."""
    kappa = {
        "F-start": ("left", conventions.kappa_f_start, (0, 1)),
        "F-end": ("right", conventions.kappa_f_end, (0, 1)),
        "B-start": ("left", conventions.kappa_b_start, (1, 0)),
        "B-end": ("right", conventions.kappa_b_end, (1, 0)),
    }
    items = [("ev", e.time, e) for e in trace.events if e.kind != "split"]
    items += [("sp", sp["time"], sp) for sp in trace.splits]
    items.sort(key=lambda x: x[1])
    left = (0, 0)
    right = (0, 0)
    new_splits = []
    for tag, _t, obj in items:
        if tag == "sp":
            sp = dict(obj)
            sp["left"], sp["right"] = left, right
            sp["sign"] = conventions.kappa_split * sp["raw_sign"]
            if "q_side" in sp:
                sp["birth_mu"] = _birth_exponent(conventions, sp["q_side"],
                                                 sp["sigma_nu"])
            sp["children"] = tuple(refold_trace(c, conventions)
                                   for c in obj["children"])
            new_splits.append(sp)
        else:
            side, k, (la, mu) = kappa[obj.kind]
            e = k * obj.sigma
            if side == "left":
                left = (left[0] + la * e, left[1] + mu * e)
            else:
                right = (right[0] + la * e, right[1] + mu * e)
    return FlowTrace(
        initial=trace.initial, events=trace.events, terminal=trace.terminal,
        left=left, right=right, splits=new_splits,
        energy_drop=trace.energy_drop, flagged=list(trace.flagged),
    )


def dhat(curve, framing, s, t, ctx):
    trace = _Tracer(ctx).run(s, t)
    return dhat_of_trace(trace, terminal_generator_values(ctx))


def terminal_generator_values(ctx):
    vals = {p.label: AlgebraElement.gen(p.label) for p in ctx.minima}
    return vals


def select_k_pm(curve, framing, k, ctx):
    """Offsets k+ and k- along the unstable eigenvector of an index-1 point.

    k+ moves the startpoint in the direction of the knot orientation; the
    offset grows geometrically until both points sit outside the saddle's
    indecision zone with no event-function sign change on the segment.
    Returns ((s+, t+), (s-, t-), flagged) where flagged marks the
    vertical-eigenvector convention case.
    """
    tol = ctx.tol
    L = curve.L
    i_min = int(np.argmin(k.eigvals))
    if k.eigvals[i_min] >= 0:
        raise ValueError("select_k_pm needs an index-1 point")
    e = np.array(k.eigvecs[i_min], dtype=float)
    e = e / np.linalg.norm(e)
    flagged = []
    if abs(e[0]) > 1e-9:
        if e[0] < 0:
            e = -e
    else:
        flagged.append("vertical-eigenvector: side labels are conventional")
        if e[1] < 0:
            e = -e
    center = np.array([k.s, k.t])
    h = 4.0 * tol.trajectory_tol * L
    e_val = energy(curve, k.s, k.t)
    lam = abs(k.eigvals[i_min])
    for _ in range(40):
        plus = (center + h * e) % L
        minus = (center - h * e) % L
        drop_ok = (energy(curve, *plus) < e_val - 0.2 * lam * h * h / 2
                   and energy(curve, *minus) < e_val - 0.2 * lam * h * h / 2)
        if drop_ok and self_consistent_window(ctx, center, e, h):
            return (tuple(plus), tuple(minus), flagged)
        h *= 1.5
        if h > 0.02 * L:
            break
    raise GenericityViolation(
        f"could not open an event-free window around {k.label}", reason="knot")


def self_consistent_window(ctx, center, e, h):
    """No event-function sign change on the segments [k, k +- h e]."""
    fracs = np.linspace(-1.0, 1.0, 17)
    L = ctx.curve.L
    rows = []
    for fr in fracs:
        p = (center + fr * h * e) % L
        try:
            rows.append(_event_values(ctx, p[0], p[1]))
        except (ZeroProjection, TangentialContact):
            return False
    for kind in ("F-start", "F-end", "B-start", "B-end"):
        vals = np.array([r[kind] for r in rows])
        if kind.startswith("B"):
            vals = vals[np.abs(vals) < L / 4]
            if len(vals) == 0:
                continue
        if np.min(vals) < 0 < np.max(vals):
            return False
    return True


def boundary_D(curve, framing, k, ctx):
    """D(k) = Dhat(k+) - Dhat(k-) for an index-1 critical point."""
    (plus, minus, flagged) = select_k_pm(curve, framing, k, ctx)
    tr_plus = _Tracer(ctx, origin_saddle=k).run(*plus)
    tr_minus = _Tracer(ctx, origin_saddle=k).run(*minus)
    tr_plus.flagged.extend(flagged)
    vals = terminal_generator_values(ctx)
    return (dhat_of_trace(tr_plus, vals) - dhat_of_trace(tr_minus, vals),
            tr_plus, tr_minus)
