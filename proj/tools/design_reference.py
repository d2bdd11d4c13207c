#!/usr/bin/env python3
"""Offline reference designer.

Position is a quintic B-spline in time; thrust follows from inverse nominal
dynamics, so the stored samples satisfy the nominal equations of motion
exactly. The spline coefficients come from a sequence of convex problems
(gravity linearized about the previous iterate) that keep the thrust inside
the input bounds, the position inside the glideslope cone and the speed
below the relaxed speed bound. Near the landing site the thrust band is
narrowed so the composite barrier function of the controller stays
positive along the reference.

Usage: design_reference.py SCENARIO.json --out REF.csv [--intervals N]
"""

import argparse
import json
import math
import re
import sys
from pathlib import Path

import cvxpy as cp
import numpy as np
import scipy.sparse as sp
from scipy.interpolate import BSpline

G = 6.674e-11
G_E = 9.807
SPACING = 0.2
SCALE = 100.0


def load_json_with_comments(path):
    text = Path(path).read_text()
    text = re.sub(r"/\*.*?\*/", "", text, flags=re.S)
    text = re.sub(r"(^|[^:])//[^\n]*", r"\1", text)
    return json.loads(text)


class Setup:
    def __init__(self, doc):
        body = doc["body"]
        mass = sum(e["density"] * 4.0 / 3.0 * math.pi * np.prod(e["semi_axes"]) for e in body["ellipsoids"])
        nominal = body.get("nominal", {})
        self.mu = G * mass * nominal.get("mass_scale", 1.0)
        self.offset = np.array(nominal.get("offset", [0.0, 0.0, 0.0]), float)
        axis = np.array(body.get("rotation_axis", [0, 0, 1]), float)
        self.omega = axis / np.linalg.norm(axis) * 2 * math.pi / (body["rotation_period_hours"] * 3600)
        veh = doc.get("vehicle", {})
        self.m_w = veh.get("wet_mass", 700.0)
        self.isp = veh.get("isp", 225.0)
        self.t_min = veh.get("thrust_min", 5.0)
        self.t_max = veh.get("thrust_max", 20.0)
        self.alpha = 1.0 / (self.isp * G_E)
        self.r0 = np.array(doc["initial"]["r"], float)
        self.v0 = np.array(doc["initial"]["v"], float)
        self.rf = np.array(doc["target"]["r"], float)
        self.vf = np.cross(self.omega, self.rf)
        cons = doc.get("constraints", {})
        land = doc.get("landing", {})
        self.r_l = land.get("radius", 0.6)
        theta = math.radians(cons.get("glideslope_deg", 45.0))
        self.cos_gs = math.cos(theta)
        self.beta = cons.get("beta", 1.0 - self.r_l / (np.linalg.norm(self.rf) * math.tan(theta)))
        self.e_s = np.array(cons.get("e_hat_s", self.rf / np.linalg.norm(self.rf)), float)
        self.e_s /= np.linalg.norm(self.e_s)
        self.v_min = cons.get("v_min", math.sqrt(np.linalg.norm(self.vf)))
        self.k_vel = 1.0 / (10.0 * self.v_min * self.rf @ self.rf)
        self.k_u = 1.0 / (self.t_max**2 - self.t_min**2)
        self.rho = doc.get("cbf", {}).get("rho", 40.0)
        self.design = doc.get("reference", {}).get("design", {})
        self.t_f = self.design.get("t_f", 840.0)
        # Arrival velocity: straight down the local vertical with no lateral
        # motion in the body frame. |v_end - v_f| stays inside the landing
        # speed tolerance while the approach stays clear of the cone wall.
        descent = self.design.get("terminal_descent_speed", 0.15)
        self.v_end = -descent * self.e_s

    # nominal velocity-block drift and its pieces
    def gravity(self, r):
        p = r - self.offset
        n = np.linalg.norm(p, axis=-1, keepdims=True)
        return -self.mu * p / n**3

    def gravity_jacobian(self, r):
        p = r - self.offset
        n = np.linalg.norm(p)
        return -self.mu * (np.eye(3) / n**3 - 3.0 * np.outer(p, p) / n**5)

    def frame_accel(self, r, v):
        w = self.omega
        return -2.0 * np.cross(w, v) - np.cross(w, np.cross(w, r))

    def psi2(self, r):
        d = r - self.beta * self.rf
        return d @ self.e_s - np.linalg.norm(d, axis=-1) * self.cos_gs

    def band(self, dist, speed):
        """Thrust magnitude band that leaves the soft-min composite positive
        given the velocity barrier value expected at this distance."""
        h11 = self.k_vel * (self.v_min**2 * (1.0 + dist**2) - speed**2 - 2.0 * self.v_min**2 * dist * speed)
        h11 = max(h11 * self.design.get("h11_fraction", 0.5), 1e-12)
        excess = math.expm1(self.rho * h11) / 3.0
        need = 0.0 if excess >= 1.0 else -math.log(excess) / self.rho
        need += self.design.get("band_margin", 0.02) if need > 0.0 else 0.0
        edge = self.design.get("bound_margin", 0.002)
        lo2 = (self.t_min + edge)**2 + need / self.k_u
        hi2 = (self.t_max - edge)**2 - need / self.k_u
        if lo2 > hi2:
            mid = 0.5 * (self.t_min**2 + self.t_max**2)
            lo2 = hi2 = mid
        return math.sqrt(lo2), math.sqrt(hi2)


def spline_basis(t_f, intervals, degree=5):
    inner = np.linspace(0.0, t_f, intervals + 1)
    knots = np.concatenate([[0.0] * degree, inner, [t_f] * degree])
    n = len(knots) - degree - 1
    return knots, n, degree


def basis_matrices(knots, n, degree, times, orders=(0, 1, 2, 3)):
    mats = {}
    eye = np.eye(n)
    for order in orders:
        cols = []
        for j in range(n):
            b = BSpline(knots, eye[j], degree, extrapolate=False)
            cols.append(np.nan_to_num(b.derivative(order)(times) if order else b(times)))
        mats[order] = np.array(cols).T
    # the last knot is open on the right; evaluate at t_f - tiny instead
    return mats


def initial_guess(setup, times):
    # quintic with zero boundary accelerations
    T = setup.t_f
    s = times / T
    h00 = 1 - 10 * s**3 + 15 * s**4 - 6 * s**5
    h10 = s - 6 * s**3 + 8 * s**4 - 3 * s**5
    h01 = 10 * s**3 - 15 * s**4 + 6 * s**5
    h11 = -4 * s**3 + 7 * s**4 - 3 * s**5
    return (np.outer(h00, setup.r0) + np.outer(h10 * T, setup.v0) + np.outer(h01, setup.rf)
            + np.outer(h11 * T, setup.v_end))


def mass_profile(setup, times, thrust_accel):
    # m' = -alpha m |a_thrust|  ->  m = m_w exp(-alpha int |a_thrust|)
    mag = np.linalg.norm(thrust_accel, axis=1)
    integral = np.concatenate([[0.0], np.cumsum(0.5 * (mag[1:] + mag[:-1]) * np.diff(times))])
    return setup.m_w * np.exp(-setup.alpha * integral)


def design(setup, intervals, node_dt, iterations, verbose):
    knots, n, deg = spline_basis(setup.t_f, intervals)
    times = np.arange(0.0, setup.t_f + 1e-9, node_dt)
    times[-1] = min(times[-1], setup.t_f)
    if times[-1] < setup.t_f - 1e-9:
        times = np.append(times, setup.t_f)
    eval_t = times.copy()
    eval_t[-1] = setup.t_f * (1 - 1e-12)
    B = basis_matrices(knots, n, deg, eval_t, (0, 1, 2))
    K = len(times)

    # least-squares fit of the initial guess
    guess = initial_guess(setup, times)
    C_bar = np.linalg.lstsq(B[0], guess, rcond=None)[0]

    final_window = setup.design.get("final_window", 120.0)
    lateral_slope = setup.design.get("lateral_slope", 0.25)
    approach_slope = setup.design.get("approach_slope", 0.25)
    approach_floor = setup.design.get("approach_floor", 0.05)
    psi2_margin = setup.design.get("psi2_margin", 1.0)
    smooth_weight = setup.design.get("smooth_weight", 1e-2)
    trust = setup.design.get("trust", 400.0)
    shrink = setup.design.get("trust_shrink", 0.6)

    lateral = np.eye(3) - np.outer(setup.e_s, setup.e_s)
    Wx = np.cross(np.eye(3), setup.omega)  # Wx @ p == omega x p
    Wx2 = Wx @ Wx
    Br = sp.kron(sp.csr_matrix(B[0]), sp.eye(3), format="csr")
    Bv = sp.kron(sp.csr_matrix(B[1]), sp.eye(3), format="csr")
    Ba = sp.kron(sp.csr_matrix(B[2]), sp.eye(3), format="csr")
    late = times >= setup.t_f - final_window
    weights = np.gradient(times)
    for it in range(iterations):
        r_bar = B[0] @ C_bar
        v_bar = B[1] @ C_bar
        a_bar = B[2] @ C_bar
        f2_bar = setup.gravity(r_bar) + np.array([setup.frame_accel(r, v) for r, v in zip(r_bar, v_bar)])
        m_bar = mass_profile(setup, times, a_bar - f2_bar)
        u_bar = m_bar[:, None] * (a_bar - f2_bar)

        # u = m (a - (G - Wx^2) r + 2 Wx v - g(r_bar) + G r_bar), stacked node by node
        Gs = [setup.gravity_jacobian(p) for p in r_bar]
        Kr = sp.block_diag([m_bar[k] * (Gs[k] - Wx2) for k in range(K)], format="csr")
        Mv = sp.kron(sp.diags(m_bar), 2.0 * Wx, format="csr")
        Ma = sp.kron(sp.diags(m_bar), np.eye(3), format="csr")
        Mu = Ma @ Ba - Kr @ Br + Mv @ Bv
        cu = np.concatenate([m_bar[k] * (Gs[k] @ r_bar[k] - setup.gravity(r_bar[k])) for k in range(K)])

        # coefficients in units of SCALE metres keep the conic solver well conditioned
        x = cp.Variable(3 * n)
        U = cp.reshape(SCALE * (Mu @ x) + cu, (K, 3), order="C")
        R = cp.reshape(SCALE * (Br @ x), (K, 3), order="C")
        V = cp.reshape(SCALE * (Bv @ x), (K, 3), order="C")
        x_bar = C_bar.reshape(-1) / SCALE
        radius = max(trust * shrink**it, 0.05) / SCALE

        bands = np.array([setup.band(np.linalg.norm(r_bar[k] - setup.rf), np.linalg.norm(v_bar[k] - setup.vf))
                          for k in range(K)])
        ub = u_bar / np.maximum(np.linalg.norm(u_bar, axis=1, keepdims=True), 1e-9)
        s_lo = cp.Variable(K, nonneg=True)
        s_hi = cp.Variable(K, nonneg=True)
        s_gs = cp.Variable(K, nonneg=True)
        s_sp = cp.Variable(K, nonneg=True)
        D = R - np.outer(np.ones(K), setup.beta * setup.rf)
        margin = np.where(late, 0.0, psi2_margin)
        db = r_bar - setup.rf
        sq = np.sqrt(1.0 + np.sum(db * db, axis=1))
        dR = R - np.outer(np.ones(K), setup.rf)
        dV = V - np.outer(np.ones(K), setup.vf)
        cons = [
            R[0] == setup.r0, V[0] == setup.v0, R[K - 1] == setup.rf, V[K - 1] == setup.v_end,
            cp.norm(x - x_bar, "inf") <= radius,
            cp.norm(U, 2, axis=1) <= bands[:, 1] + s_hi,
            cp.sum(cp.multiply(ub, U), axis=1) >= bands[:, 0] - s_lo,
            D @ setup.e_s - setup.cos_gs * cp.norm(D, 2, axis=1) >= margin - s_gs,
            # relaxed speed bound with the square root replaced by its tangent
            cp.norm(dV, 2, axis=1) <= setup.v_min * (sq + cp.sum(cp.multiply(db / sq[:, None], dR - db), axis=1)) + s_sp,
        ]
        if late.any():
            # vertical corridor above the landing site
            up = dR[late] @ setup.e_s
            dVe = V[late] - np.outer(np.ones(late.sum()), setup.v_end)
            cons += [cp.norm(dR[late] @ lateral, 2, axis=1) <= lateral_slope * up + 1e-3,
                     cp.norm(dVe, 2, axis=1) <= approach_slope * up + approach_floor]
        fuel = setup.alpha * cp.sum(cp.multiply(weights, cp.norm(U, 2, axis=1)))
        smooth = smooth_weight * cp.sum_squares(U[1:] - U[:-1])
        penalty = 1e3 * cp.sum(s_lo + s_hi + s_gs + s_sp)
        prob = cp.Problem(cp.Minimize(fuel + smooth + penalty), cons)
        prob.solve(solver=cp.CLARABEL)
        if x.value is None:
            raise RuntimeError(f"iteration {it}: solver status {prob.status}")
        C_new = SCALE * x.value.reshape(n, 3)
        step = np.abs(C_new - C_bar).max()
        C_bar = C_new
        slack = {name: float(v.value.sum()) for name, v in
                 (("lo", s_lo), ("hi", s_hi), ("gs", s_gs), ("speed", s_sp))}
        if verbose:
            print(f"iter {it}: {prob.status}, objective {prob.value:.6g}, step {step:.3g}, slack {slack}",
                  file=sys.stderr)
        if step < 1e-4 and sum(slack.values()) < 1e-9:
            break
    return knots, deg, C_bar


def sample(setup, knots, deg, C):
    spline = BSpline(knots, C, deg)
    times = np.round(np.arange(0.0, setup.t_f + 1e-9, SPACING), 10)
    if times[-1] < setup.t_f - 1e-9:
        times = np.append(times, setup.t_f)
    r = spline(times)
    v = spline.derivative(1)(times)
    a = spline.derivative(2)(times)
    j = spline.derivative(3)(times)
    r[-1], v[-1] = setup.rf, setup.v_end
    f2 = setup.gravity(r) + np.array([setup.frame_accel(p, q) for p, q in zip(r, v)])
    thrust_accel = a - f2
    # Simpson-accurate mass: integrate |thrust_accel| on a refined grid
    fine = np.linspace(0.0, setup.t_f, 20 * len(times) + 1)
    rf_, vf_, af_ = spline(fine), spline.derivative(1)(fine), spline.derivative(2)(fine)
    f2f = setup.gravity(rf_) + np.array([setup.frame_accel(p, q) for p, q in zip(rf_, vf_)])
    mag = np.linalg.norm(af_ - f2f, axis=1)
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (mag[1:] + mag[:-1]) * np.diff(fine))])
    m = setup.m_w * np.exp(-setup.alpha * np.interp(times, fine, cum))
    u = m[:, None] * thrust_accel
    m_dot = -setup.alpha * np.linalg.norm(u, axis=1)
    f2_dot = np.array([setup.gravity_jacobian(p) @ q for p, q in zip(r, v)]) \
        - 2.0 * np.cross(setup.omega, a) - np.cross(setup.omega, np.cross(setup.omega, v))
    u_dot = m_dot[:, None] * thrust_accel + m[:, None] * (j - f2_dot)
    return times, r, v, m, u, u_dot


def report(setup, times, r, v, m, u):
    thrust = np.linalg.norm(u, axis=1)
    psi2 = np.array([setup.psi2(p) for p in r])
    d = np.linalg.norm(r - setup.rf, axis=1)
    psi1 = setup.v_min * np.sqrt(1 + d**2) - np.linalg.norm(v - setup.vf, axis=1)
    print(f"thrust range [{thrust.min():.4f}, {thrust.max():.4f}] N, final {thrust[-1]:.3f} N", file=sys.stderr)
    print(f"min psi2 {psi2.min():.4g} at t={times[psi2.argmin()]:.1f}; min psi1 {psi1.min():.4g}", file=sys.stderr)
    print(f"propellant {m[0] - m[-1]:.3f} kg", file=sys.stderr)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("scenario")
    ap.add_argument("--out", required=True)
    ap.add_argument("--intervals", type=int, default=60)
    ap.add_argument("--node-dt", type=float, default=1.0)
    ap.add_argument("--iterations", type=int, default=16)
    ap.add_argument("-v", "--verbose", action="store_true")
    args = ap.parse_args()

    setup = Setup(load_json_with_comments(args.scenario))
    knots, deg, C = design(setup, args.intervals, args.node_dt, args.iterations, args.verbose)
    times, r, v, m, u, u_dot = sample(setup, knots, deg, C)
    report(setup, times, r, v, m, u)
    with open(args.out, "w") as f:
        f.write("t,rx,ry,rz,vx,vy,vz,m,ux,uy,uz,udx,udy,udz\n")
        for row in zip(times, r, v, m, u, u_dot):
            vals = [row[0], *row[1], *row[2], row[3], *row[4], *row[5]]
            f.write(",".join(f"{x:.17g}" for x in vals) + "\n")


if __name__ == "__main__":
    main()
