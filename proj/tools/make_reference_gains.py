#!/usr/bin/env python3
"""Regenerate data/reference_gains.json.

The local gains come from a block-structured polytopic H-infinity synthesis.
The lateral rows of the LPV model (v_y, omega, theta) depend only on lateral
states, so the closed loop is block triangular when steering acts on the
lateral block and acceleration on the longitudinal block (v_x, x). Each block
is synthesized over the 8 scheduling vertices with a common X and per-vertex
W_i (K_i = W_i X^-1):

  * bounded real:  [[S_i, E, X C' + W_i' Du'], [E', -g I, 0], [., 0, -g I]] < 0,
    S_i = A_i X + B W_i + (.)', B at delta = 0
  * decay rate:  S_i + 2 alpha X <= 0
  * contraction at h = Ts / substeps:  [[lam X, N_i], [N_i', lam X]] >= 0,
    N_i = (I + h A_i) X + h B_i W_i, B_i at the vertex steering angle
  * optional input budget:  X >= diag(r^2), [[ubar^2, W_i], [W_i', X]] >= 0

E carries the disturbance bounds per second. The longitudinal block uses the
budget; the lateral one is shaped by the steering weight instead, because
the ellipsoidal budget is far more conservative than the actual tube.

P (terminal cost) solves the decrease condition M_i' P M_i - P <= -Q over the
discrete closed-loop vertices M_i at Ts, with Q the MPC tracking weights.

The LQR baseline gains are per-vertex continuous Riccati solutions with the
MPC tuning weights (Q lifted by 1e-6 I).

Usage: python3 tools/make_reference_gains.py [--out data/reference_gains.json]
"""
import argparse
import datetime
import json

import cvxpy as cp
import numpy as np
import scipy.linalg as sl

L_F, L_R, MASS, INERTIA = 0.902, 0.638, 196.0, 93.0
MU, G, RHO, CDA_F = 0.014, 9.81, 1.225, 1.64  # MU: rolling resistance coefficient
STIFFNESS = 4.0e4
TS = 0.033
SUBSTEPS = 7
BOUNDS = [(2.0, 10.0), (-0.6, 0.6), (-0.267, 0.267)]


def lpv_a(vx, vy, delta, cf=STIFFNESS, cr=STIFFNESS):
    a = np.zeros((5, 5))
    s, c = np.sin(delta), np.cos(delta)
    a[0, 0] = -MU * G / vx - RHO * CDA_F * vx / (2 * MASS)
    a[0, 1] = cf * s / (MASS * vx)
    a[0, 2] = cf * L_F * s / (MASS * vx) + vy
    a[1, 1] = -(cr + cf * c) / (MASS * vx)
    a[1, 2] = -(cf * L_F * c - cr * L_R) / (MASS * vx) - vx
    a[2, 1] = -(cf * L_F * c - L_R * cr) / (INERTIA * vx)
    a[2, 2] = -(cf * L_F**2 * c + L_R**2 * cr) / (INERTIA * vx)
    a[3, 0] = 1.0
    a[4, 2] = 1.0
    return a


def lpv_b(delta, cf=STIFFNESS):
    s, c = np.sin(delta), np.cos(delta)
    return np.array([[-s * cf / MASS, 1.0], [c * cf / MASS, 0.0],
                     [c * cf * L_F / INERTIA, 0.0], [0.0, 0.0], [0.0, 0.0]])


def vertices():
    return [[BOUNDS[j][(i >> j) & 1] for j in range(3)] for i in range(8)]


B_W = np.array([0.074, 0.192, 0.105, 0.0, 0.0])
LAT, LON = [1, 2, 4], [0, 3]


def block_hinf(idx, col, e, c, ru, alpha, lam, radii=None, ubar=None):
    """Polytopic H-inf state feedback for one block; returns (gamma, [K_i])."""
    n = len(idx)
    h = TS / SUBSTEPS
    cz = np.vstack([np.diag(c), np.zeros((1, n))])
    du = np.zeros((n + 1, 1))
    du[n, 0] = ru
    x = cp.Variable((n, n), symmetric=True)
    ws = [cp.Variable((1, n)) for _ in range(8)]
    gamma = cp.Variable()
    cons = [x >> (np.diag(np.asarray(radii) ** 2) if radii is not None else 1e-6 * np.eye(n))]
    for i, v in enumerate(vertices()):
        a = lpv_a(*v)[np.ix_(idx, idx)]
        b0 = lpv_b(0.0)[idx][:, [col]]
        bv = lpv_b(v[2])[idx][:, [col]]
        s = a @ x + b0 @ ws[i] + x @ a.T + ws[i].T @ b0.T
        blk = cp.bmat([[s, np.diag(e), x @ cz.T + ws[i].T @ du.T],
                       [np.diag(e), -gamma * np.eye(n), np.zeros((n, n + 1))],
                       [cz @ x + du @ ws[i], np.zeros((n + 1, n)), -gamma * np.eye(n + 1)]])
        cons.append((blk + blk.T) / 2 << 0)
        cons.append(s + 2 * alpha * x << 0)
        nn = (np.eye(n) + h * a) @ x + h * bv @ ws[i]
        cons.append(cp.bmat([[lam * x, nn], [nn.T, lam * x]]) >> 0)
        if ubar is not None:
            cons.append(cp.bmat([[np.array([[ubar ** 2]]), ws[i]], [ws[i].T, x]]) >> 0)
    prob = cp.Problem(cp.Minimize(gamma), cons)
    prob.solve(solver=cp.CLARABEL)
    if prob.status not in ("optimal", "optimal_inaccurate"):
        raise RuntimeError(f"LMI status {prob.status}")
    xi = np.linalg.inv(x.value)
    return float(gamma.value), [ws[i].value @ xi for i in range(8)]


def synthesize_hinf(args):
    g_lat, k_lat = block_hinf(LAT, 0, [B_W[1] / TS, B_W[2] / TS, 1e-3], args.lat_weights,
                              args.steer_weight, args.alpha, args.contraction)
    g_lon, k_lon = block_hinf(LON, 1, [B_W[0] / TS, 1e-3], args.lon_weights, args.accel_weight,
                              args.alpha, args.contraction, radii=args.lon_radii,
                              ubar=args.accel_budget)
    gains = []
    for i in range(8):
        k = np.zeros((2, 5))
        k[0, LAT] = k_lat[i][0]
        k[1, LON] = k_lon[i][0]
        gains.append(k)
    return gains, g_lat, g_lon


def closed_loop(gains):
    h = TS / SUBSTEPS
    return [np.linalg.matrix_power(np.eye(5) + h * (lpv_a(*v) + lpv_b(v[2]) @ gains[i]), SUBSTEPS)
            for i, v in enumerate(vertices())]


def terminal_weight(gains):
    q = np.diag([0.8 * 0.4 / 14.0**2, 0, 0.8 * 0.6 / 2.8**2, 0, 0]) + 1e-6 * np.eye(5)
    p = cp.Variable((5, 5), symmetric=True)
    cons = [p >> 1e-9 * np.eye(5)]
    for m in closed_loop(gains):
        d = p - m.T @ p @ m - q
        cons.append((d + d.T) / 2 >> 0)
    cp.Problem(cp.Minimize(cp.trace(p)), cons).solve(solver=cp.CLARABEL)
    if p.value is None:
        raise RuntimeError("terminal weight LMI failed")
    return 0.5 * (p.value + p.value.T)


def tube_image(gains, steps=5):
    """Largest |K_i Phi_steps| per input over the frozen vertex recursions."""
    worst = np.zeros(2)
    for m, k in zip(closed_loop(gains), gains):
        cur = np.diag(B_W)
        acc = cur.copy()
        for _ in range(steps):
            cur = m @ cur
            acc = np.hstack([acc, cur])
        worst = np.maximum(worst, np.abs(k @ acc).sum(axis=1))
    return worst


def synthesize_lqr():
    q = np.diag([0.8 * 0.4 / 14.0**2, 0, 0.8 * 0.6 / 2.8**2, 0, 0]) + 1e-6 * np.eye(5)
    r = np.diag([0.2 * 0.5 / 0.534**2, 0.2 * 0.5 / 15.0**2])
    b = lpv_b(0.0)
    gains = []
    for v in vertices():
        p = sl.solve_continuous_are(lpv_a(*v), b, q, r)
        gains.append(-np.linalg.solve(r, b.T @ p))
    return gains


def report(name, gains):
    h = TS / SUBSTEPS
    for i, v in enumerate(vertices()):
        cl = lpv_a(*v) + lpv_b(v[2]) @ gains[i]
        step = np.linalg.matrix_power(np.eye(5) + h * cl, SUBSTEPS)
        print(f"{name} vertex {i} {v}: max Re = {np.max(np.linalg.eigvals(cl).real):.4f}, "
              f"rho(Ts) = {np.max(np.abs(np.linalg.eigvals(step))):.5f}")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="data/reference_gains.json")
    ap.add_argument("--alpha", type=float, default=0.5, help="decay rate of both blocks")
    ap.add_argument("--contraction", type=float, default=0.999,
                    help="per-substep contraction factor in the X^-1 norm")
    ap.add_argument("--lat-weights", type=float, nargs=3, default=[0.1, 1.0, 1.0],
                    help="performance weights on v_y, omega, theta")
    ap.add_argument("--steer-weight", type=float, default=1.0)
    ap.add_argument("--lon-weights", type=float, nargs=2, default=[1.0, 1.0],
                    help="performance weights on v_x, x")
    ap.add_argument("--accel-weight", type=float, default=0.3)
    ap.add_argument("--lon-radii", type=float, nargs=2, default=[0.45, 0.04])
    ap.add_argument("--accel-budget", type=float, default=4.0)
    args = ap.parse_args()

    k_hinf, g_lat, g_lon = synthesize_hinf(args)
    p = terminal_weight(k_hinf)
    k_lqr = synthesize_lqr()
    report("hinf", k_hinf)
    report("lqr", k_lqr)
    rho = max(np.max(np.abs(np.linalg.eigvals(m))) for m in closed_loop(k_hinf))
    if rho >= 1.0:
        raise RuntimeError(f"discrete closed loop not contractive (rho = {rho})")
    gamma = max(g_lat, g_lon)
    print(f"gamma lateral = {g_lat:.6g}, longitudinal = {g_lon:.6g}, cond(P) = {np.linalg.cond(p):.4g}")
    print(f"5-step tube input image = {tube_image(k_hinf).round(4)}")

    doc = {
        "format": "zonotube-gains/1",
        "n": 5,
        "m": 2,
        "n_zeta": 3,
        "scheduling_variables": ["v_x", "v_y", "delta"],
        "bounds": [list(b) for b in BOUNDS],
        "vertex_order": [[(i >> j) & 1 for j in range(3)] for i in range(8)],
        "K": [k.tolist() for k in k_hinf],
        "K_lqr": [k.tolist() for k in k_lqr],
        "P": p.tolist(),
        "gamma": gamma,
        "design": {
            "stiffness": STIFFNESS,
            "Ts": TS,
            "substeps": SUBSTEPS,
            "structure": "steering on (v_y, omega, theta), acceleration on (v_x, x)",
            "decay_rate": args.alpha,
            "contraction": args.contraction,
            "gamma_lateral": g_lat,
            "gamma_longitudinal": g_lon,
            "lateral_weights": args.lat_weights,
            "steer_weight": args.steer_weight,
            "longitudinal_weights": args.lon_weights,
            "accel_weight": args.accel_weight,
            "accel_budget": args.accel_budget,
            "budget_radii": args.lon_radii,
        },
        "metadata": {
            "tool": "tools/make_reference_gains.py",
            "date": datetime.date.today().isoformat(),
        },
    }
    with open(args.out, "w") as f:
        json.dump(doc, f, indent=1)
        f.write("\n")
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
