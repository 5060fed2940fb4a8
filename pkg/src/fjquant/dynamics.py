"""Leapfrog integration of the discrete string on the D2-brane.

Interior nodes follow ``accel = (X_{n+1} - 2 X_n + X_{n-1})/eps^2 - m^2 X_n``.
Endpoints either obey the B-field boundary condition as a velocity
constraint, ``Xdot_0 = B^-1 (X_1 - X_0)/eps`` (and its mirror at ``n = N``),
or, for ``b = 0``, a reflecting Neumann condition.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from .stringmodel import LEFT, RIGHT, StringModelError, StringParams, boundary_residual

AUTO, BFIELD, NEUMANN = "auto", "bfield", "neumann"


class DynamicsError(ValueError):
    pass


@dataclass
class StringState:
    positions: np.ndarray
    velocities: np.ndarray
    time: float
    params: StringParams
    accelerations: Optional[np.ndarray] = None

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=float)
        self.velocities = np.asarray(self.velocities, dtype=float)
        shape = (self.params.N + 1, 2)
        if self.positions.shape != shape or self.velocities.shape != shape:
            raise DynamicsError(f"state arrays must have shape {shape}")
        if not (np.all(np.isfinite(self.positions)) and np.all(np.isfinite(self.velocities))):
            raise DynamicsError("state contains non-finite entries")


@dataclass
class Trajectory:
    times: np.ndarray
    positions: np.ndarray          # (snapshots, N+1, 2)
    energy: np.ndarray
    left_residual: np.ndarray
    right_residual: np.ndarray
    final: StringState


def _floats(p: StringParams):
    try:
        return p.floats()
    except StringModelError as exc:
        raise DynamicsError(str(exc)) from exc


def _mode(p: StringParams, mode: str) -> str:
    b, _, _ = _floats(p)
    if mode == AUTO:
        return BFIELD if b != 0 else NEUMANN
    if mode == BFIELD and b == 0:
        raise DynamicsError("B-constrained endpoints need b != 0")
    if mode not in (BFIELD, NEUMANN):
        raise DynamicsError(f"unknown endpoint mode {mode!r}")
    return mode


def _accel(X: np.ndarray, m: float, eps: float) -> np.ndarray:
    A = np.empty_like(X)
    A[1:-1] = (X[2:] - 2 * X[1:-1] + X[:-2]) / eps**2
    # reflecting ends (ghost node X_{-1} = X_1)
    A[0] = 2 * (X[1] - X[0]) / eps**2
    A[-1] = 2 * (X[-2] - X[-1]) / eps**2
    return A - m * m * X


def _gain(b: float, eps: float) -> np.ndarray:
    """G = B^-1 / eps, so the endpoint condition reads Xdot = G (X_1 - X_0)."""
    return np.array([[0.0, -1.0], [1.0, 0.0]]) / (b * eps)


def _constrain_velocities(X, V, b, eps):
    G = _gain(b, eps)
    V[0] = G @ (X[1] - X[0])
    V[-1] = G @ (X[-1] - X[-2])


def init_state(p: StringParams, profile: str = "zero", k: float = 1.0,
               amplitude: float = 1.0, samples=None, velocities=None,
               mode: str = AUTO) -> StringState:
    """Sample a named profile at sigma_n = n * eps."""
    b, m, eps = _floats(p)
    mode = _mode(p, mode)
    N = p.N
    sigma = eps * np.arange(N + 1)
    X = np.zeros((N + 1, 2))
    V = np.zeros((N + 1, 2))
    if profile == "zero":
        pass
    elif profile in ("standing", "standing_wave"):
        X[:, 0] = amplitude * np.cos(k * sigma)
    elif profile in ("plane", "plane_wave"):
        omega = math.sqrt(k * k + m * m)
        X[:, 0] = amplitude * np.cos(k * sigma)
        V[:, 0] = amplitude * omega * np.sin(k * sigma)
    elif profile == "custom":
        if samples is None:
            raise DynamicsError("custom profile needs samples")
        X = np.asarray(samples, dtype=float)
        if X.shape != (N + 1, 2):
            raise DynamicsError(f"custom samples must have shape {(N + 1, 2)}")
        if velocities is not None:
            V = np.asarray(velocities, dtype=float)
            if V.shape != X.shape:
                raise DynamicsError("custom velocities must match samples")
    else:
        raise DynamicsError(f"unknown profile {profile!r}")
    if mode == BFIELD:
        _constrain_velocities(X, V, b, eps)
    return StringState(X, V, 0.0, p, _accel(X, m, eps))


def step(s: StringState, dt: float, mode: str = AUTO) -> StringState:
    """One velocity-Verlet step."""
    b, m, eps = _floats(s.params)
    if not (0 < dt <= eps):
        raise DynamicsError(f"dt must satisfy 0 < dt <= eps ({eps})")
    mode = _mode(s.params, mode)
    X, V = s.positions, s.velocities
    A = s.accelerations if s.accelerations is not None else _accel(X, m, eps)
    Vh = V + 0.5 * dt * A
    Xn = X + dt * Vh
    if mode == BFIELD:
        # implicit midpoint on the endpoint constraint ODE (a rotation; explicit is unstable)
        G = _gain(b, eps)
        I = np.eye(2)
        mid1 = 0.5 * (X[1] + Xn[1])
        Xn[0] = np.linalg.solve(I + 0.5 * dt * G, (I - 0.5 * dt * G) @ X[0] + dt * G @ mid1)
        midN = 0.5 * (X[-2] + Xn[-2])
        Xn[-1] = np.linalg.solve(I - 0.5 * dt * G, (I + 0.5 * dt * G) @ X[-1] - dt * G @ midN)
    An = _accel(Xn, m, eps)
    Vn = Vh + 0.5 * dt * An
    if mode == BFIELD:
        _constrain_velocities(Xn, Vn, b, eps)
    return StringState(Xn, Vn, s.time + dt, s.params, An)


def energy(s: StringState) -> float:
    """Kinetic + gradient + mass energy, endpoints weighted 1/2 (reflecting ends)."""
    _, m, eps = _floats(s.params)
    w = np.ones(s.params.N + 1)
    w[0] = w[-1] = 0.5
    X, V = s.positions, s.velocities
    kin = eps * np.sum(w * np.sum(V * V, axis=1))
    grad = np.sum((X[1:] - X[:-1]) ** 2) / eps
    mass = eps * m * m * np.sum(w * np.sum(X * X, axis=1))
    return float(kin + grad + mass)


def simulate(s: StringState, steps: int, dt: float, mode: str = AUTO,
             every: int = 1) -> Trajectory:
    if steps < 1:
        raise DynamicsError("steps must be >= 1")
    if every < 1:
        raise DynamicsError("every must be >= 1")
    times, pos, en, lres, rres = [], [], [], [], []

    def record(st):
        times.append(st.time)
        pos.append(st.positions.copy())
        en.append(energy(st))
        lres.append(float(np.linalg.norm(boundary_residual(st, LEFT, st.params))))
        rres.append(float(np.linalg.norm(boundary_residual(st, RIGHT, st.params))))

    record(s)
    for i in range(1, steps + 1):
        s = step(s, dt, mode)
        if i % every == 0 or i == steps:
            record(s)
    return Trajectory(np.array(times), np.array(pos), np.array(en),
                      np.array(lres), np.array(rres), s)


def reverse(s: StringState) -> StringState:
    """Flip velocities (time reversal)."""
    return replace(s, velocities=-s.velocities)


# --- dispersion ---------------------------------------------------------------------

@dataclass
class ConvergenceResult:
    k: float
    m: float
    eps: List[float]
    omega2: List[float]
    errors: List[float]
    observed_order: float
    expected_omega2: float = field(init=False)

    def __post_init__(self):
        self.expected_omega2 = self.k ** 2 + self.m ** 2


def measure_omega2(k: float, m: float, eps: float, periods: float = 4.0,
                   dt_ratio: float = 0.25):
    """Simulate a standing mode cos(k sigma) and return (eps_used, measured omega^2).

    The string length is pi/k so that the mode is exact on the grid; the
    spacing is the nearest value l/N to the requested ``eps``.
    """
    if k > 0:
        N = max(2, round(math.pi / (k * eps)))
        eps_used = math.pi / (k * N)
    else:
        N = max(2, round(math.pi / eps))
        eps_used = math.pi / N
    p = StringParams(b=0.0, m=float(m), eps=eps_used, N=N)
    s = init_state(p, "standing", k=k, mode=NEUMANN)
    dt = dt_ratio * eps_used
    omega_ref = math.sqrt(k * k + m * m) or 1.0
    steps = max(50, int(math.ceil(periods * 2 * math.pi / omega_ref / dt)))
    traj = simulate(s, steps, dt, NEUMANN)
    sigma = eps_used * np.arange(N + 1)
    w = np.ones(N + 1)
    w[0] = w[-1] = 0.5
    q = traj.positions[:, :, 0] @ (w * np.cos(k * sigma))
    c = float(np.dot(q[1:-1], q[2:] + q[:-2]) / (2 * np.dot(q[1:-1], q[1:-1])))
    omega = math.acos(max(-1.0, min(1.0, c))) / dt
    return eps_used, omega * omega


def convergence_study(k: float, m: float, eps_list: Sequence[float], **kw) -> ConvergenceResult:
    """Measured omega^2 versus k^2 + m^2 over a sequence of spacings; fits the order."""
    eps_list = list(eps_list)
    if len(eps_list) < 3:
        raise DynamicsError("need at least 3 spacings")
    if any(a <= b for a, b in zip(eps_list, eps_list[1:])) or eps_list[-1] <= 0:
        raise DynamicsError("eps_list must be positive and strictly decreasing")
    used, om2 = [], []
    for e in eps_list:
        eu, w2 = measure_omega2(k, m, e, **kw)
        used.append(eu)
        om2.append(w2)
    target = k * k + m * m
    errors = [abs(w2 - target) for w2 in om2]
    logs = [(math.log(e), math.log(max(err, 1e-300))) for e, err in zip(used, errors)]
    lx = np.array([a for a, _ in logs])
    ly = np.array([b for _, b in logs])
    order = float(np.polyfit(lx, ly, 1)[0])
    return ConvergenceResult(k, m, used, om2, errors, order)


# --- CSV export ----------------------------------------------------------------------

def write_csv(traj: Trajectory, out_dir, prefix: str = "trajectory") -> List[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tpath = out / f"{prefix}.csv"
    dpath = out / f"{prefix}_diagnostics.csv"
    with tpath.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["time", "node", "X1", "X2"])
        for t, X in zip(traj.times, traj.positions):
            for n, (x1, x2) in enumerate(X):
                w.writerow([repr(float(t)), n, repr(float(x1)), repr(float(x2))])
    with dpath.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["time", "energy", "left_residual_norm", "right_residual_norm"])
        for row in zip(traj.times, traj.energy, traj.left_residual, traj.right_residual):
            w.writerow([repr(float(v)) for v in row])
    return [tpath, dpath]
