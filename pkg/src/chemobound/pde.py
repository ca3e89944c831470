"""Radially symmetric finite-volume solver for the chemotaxis system.

Method of lines on a ball in dimension n >= 3 with zero-flux boundaries.
Cell-centered unknowns on uniform radial shells; diffusion and the linear
decay of the two chemical fields are implicit (backward Euler), the
chemotactic advection of the cell density and the logistic source are
explicit with upwinding by the sign of the face velocity.  The face at
r = 0 has zero area, so the geometric 1/r factor is never evaluated.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import TextIO

import numpy as np
from scipy.linalg import solve_banded

from .errors import ParameterError
from .exponents import ModelParams


def unit_sphere_area(n: int) -> float:
    """Surface area of the unit (n-1)-sphere."""
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


@dataclass(frozen=True, eq=False)
class RadialGrid:
    n: int
    R: float
    M: int
    r_faces: np.ndarray      # M+1
    r_centers: np.ndarray    # M
    face_areas: np.ndarray   # M+1; zero at r=0
    shell_measures: np.ndarray  # M; sums to |Omega|
    dr: float

    @property
    def volume(self) -> float:
        return unit_sphere_area(self.n) * self.R ** self.n / self.n


def make_grid(n: int, R: float, M: int) -> RadialGrid:
    if n < 3:
        raise ParameterError(f"n must be >= 3, got {n}")
    if R <= 0 or M < 2:
        raise ParameterError(f"need R > 0 and M >= 2, got R={R}, M={M}")
    omega = unit_sphere_area(n)
    r_faces = np.linspace(0.0, R, M + 1)
    r_centers = 0.5 * (r_faces[:-1] + r_faces[1:])
    face_areas = omega * r_faces ** (n - 1)
    shell_measures = omega * np.diff(r_faces ** n) / n
    return RadialGrid(n=n, R=R, M=M, r_faces=r_faces, r_centers=r_centers,
                      face_areas=face_areas, shell_measures=shell_measures,
                      dr=R / M)


@dataclass
class FieldState:
    t: float
    u: np.ndarray
    v: np.ndarray
    w: np.ndarray


# --- initial profiles -------------------------------------------------------

@dataclass(frozen=True)
class ConstantProfile:
    u0: float
    v0: float
    w0: float


@dataclass(frozen=True)
class GaussianBump:
    amplitude: float
    width: float
    u_background: float = 0.0
    v0: float = 0.0
    w0: float = 0.0


@dataclass(frozen=True)
class TableProfile:
    u: np.ndarray
    v: np.ndarray
    w: np.ndarray


def init_state(grid: RadialGrid, profile) -> FieldState:
    if isinstance(profile, ConstantProfile):
        fields = [np.full(grid.M, x, dtype=float)
                  for x in (profile.u0, profile.v0, profile.w0)]
    elif isinstance(profile, GaussianBump):
        r = grid.r_centers
        u = profile.u_background + profile.amplitude * np.exp(
            -r ** 2 / (2.0 * profile.width ** 2))
        fields = [u, np.full(grid.M, profile.v0), np.full(grid.M, profile.w0)]
    elif isinstance(profile, TableProfile):
        fields = [np.asarray(x, dtype=float) for x in
                  (profile.u, profile.v, profile.w)]
        for f in fields:
            if f.shape != (grid.M,):
                raise ParameterError(
                    f"table profile must have {grid.M} entries, got {f.shape}")
    else:
        raise ParameterError(f"unknown profile type {type(profile).__name__}")
    for f in fields:
        if np.any(f < 0) or not np.all(np.isfinite(f)):
            raise ParameterError("initial profile must be nonnegative and finite")
    return FieldState(t=0.0, u=fields[0], v=fields[1], w=fields[2])


# --- spatial operators ------------------------------------------------------

def face_gradients(grid: RadialGrid, f: np.ndarray) -> np.ndarray:
    """One-sided radial gradients at faces; zero at both boundaries."""
    g = np.zeros(grid.M + 1)
    g[1:-1] = np.diff(f) / grid.dr
    return g


def cell_gradients(grid: RadialGrid, f: np.ndarray) -> np.ndarray:
    g = face_gradients(grid, f)
    return 0.5 * (g[:-1] + g[1:])


def _implicit_banded(grid: RadialGrid, dt: float, decay: float) -> np.ndarray:
    """Banded form of I + dt*decay - dt*L for the finite-volume Laplacian."""
    A, V, dr, M = grid.face_areas, grid.shell_measures, grid.dr, grid.M
    lower = A[1:-1] / (V[1:] * dr)    # coupling of cell i to i-1
    upper = A[1:-1] / (V[:-1] * dr)   # coupling of cell i to i+1
    diag = np.zeros(M)
    diag[:-1] += upper
    diag[1:] += lower
    ab = np.zeros((3, M))
    ab[0, 1:] = -dt * upper
    ab[1, :] = 1.0 + dt * decay + dt * diag
    ab[2, :-1] = -dt * lower
    return ab


def _advective_divergence(grid: RadialGrid, u, vel_faces):
    """Divergence of the upwinded advective flux u * vel (faces)."""
    flux = np.zeros(grid.M + 1)
    vel = vel_faces[1:-1]
    up = np.where(vel >= 0.0, u[:-1], u[1:])
    flux[1:-1] = grid.face_areas[1:-1] * vel * up
    return -np.diff(flux) / grid.shell_measures


def _logistic(params: ModelParams, u):
    out = params.mu1 * u
    if params.mu2 > 0:
        out = out - params.mu2 * u ** params.k_logistic
    return out


def _explicit_terms(grid: RadialGrid, params: ModelParams, state: FieldState):
    gv = face_gradients(grid, state.v)
    gw = face_gradients(grid, state.w)
    vel = params.chi * gv - params.xi * gw
    return _advective_divergence(grid, state.u, vel) + _logistic(params, state.u)


def step(state: FieldState, dt: float, grid: RadialGrid, params: ModelParams,
         scheme: str = "imex1") -> tuple[FieldState, int]:
    """One IMEX step; returns the new state and the negativity clip count."""
    if dt <= 0:
        raise ParameterError(f"dt must be positive, got {dt}")
    if scheme == "imex1":
        u_star = state.u + dt * _explicit_terms(grid, params, state)
        u_new = solve_banded((1, 1), _implicit_banded(grid, dt, 0.0), u_star)
        v_new = solve_banded((1, 1), _implicit_banded(grid, dt, params.alpha),
                             state.v + dt * params.beta * state.u)
        w_new = solve_banded((1, 1), _implicit_banded(grid, dt, params.gamma),
                             state.w + dt * params.delta * state.u)
    elif scheme == "imex2":
        # trapezoidal correction of the explicit terms and sources on top of
        # a predictor step; diffusion stays backward Euler within each solve
        pred, _ = step(state, dt, grid, params, scheme="imex1")
        expl = 0.5 * (_explicit_terms(grid, params, state)
                      + _explicit_terms(grid, params, pred))
        u_new = solve_banded((1, 1), _implicit_banded(grid, dt, 0.0),
                             state.u + dt * expl)
        v_new = solve_banded((1, 1), _implicit_banded(grid, dt, params.alpha),
                             state.v + 0.5 * dt * params.beta * (state.u + pred.u))
        w_new = solve_banded((1, 1), _implicit_banded(grid, dt, params.gamma),
                             state.w + 0.5 * dt * params.delta * (state.u + pred.u))
    else:
        raise ParameterError(f"unknown scheme {scheme!r}")

    clips = 0
    out = []
    for f in (u_new, v_new, w_new):
        if np.all(np.isfinite(f)):
            floor = -1e-10 * max(float(np.max(np.abs(f))), 1.0)
            clips += int(np.count_nonzero(f < floor))
            f = np.maximum(f, 0.0)
        out.append(f)
    return FieldState(t=state.t + dt, u=out[0], v=out[1], w=out[2]), clips


# --- diagnostics ------------------------------------------------------------

def mass(state: FieldState, grid: RadialGrid) -> float:
    return float(np.dot(grid.shell_measures, state.u))


def energy(state: FieldState, p: float, q: float, grid: RadialGrid) -> float:
    """(1/p) int u^p + (1/q) int |grad v|^q + (1/q) int |grad w|^q."""
    if p <= 0 or q <= 0:
        raise ParameterError(f"p, q must be positive, got p={p}, q={q}")
    V = grid.shell_measures
    term_u = float(np.dot(V, state.u ** p)) / p
    gv = np.abs(cell_gradients(grid, state.v))
    gw = np.abs(cell_gradients(grid, state.w))
    return term_u + (float(np.dot(V, gv ** q)) + float(np.dot(V, gw ** q))) / q


def norms(state: FieldState, grid: RadialGrid, p: float):
    """(||u||_p, ||u||_inf, max face gradient of v, of w)."""
    V = grid.shell_measures
    lp = float(np.dot(V, np.abs(state.u) ** p)) ** (1.0 / p)
    linf = float(np.max(np.abs(state.u)))
    gv = float(np.max(np.abs(face_gradients(grid, state.v))))
    gw = float(np.max(np.abs(face_gradients(grid, state.w))))
    return (lp, linf, gv, gw)


# --- time stepping driver ---------------------------------------------------

@dataclass(frozen=True)
class SolverConfig:
    t_final: float = 1.0
    dt_init: float = 1e-6
    dt_min: float = 1e-12
    dt_max: float = 1e-2
    cfl: float = 0.5
    growth: float = 1.2
    grow_after: int = 5
    blowup_threshold: float = 1e8
    max_steps: int = 2_000_000
    sample_every: int = 20
    scheme: str = "imex1"

    def to_json_dict(self) -> dict:
        return {k: getattr(self, k) for k in (
            "t_final", "dt_init", "dt_min", "dt_max", "cfl", "growth",
            "grow_after", "blowup_threshold", "max_steps", "sample_every",
            "scheme")}


@dataclass(frozen=True)
class BlowupReport:
    blew_up: bool
    t_detect: float | None
    trigger: str | None

    def to_json_dict(self) -> dict:
        return {"blew_up": self.blew_up, "t_detect": self.t_detect,
                "trigger": self.trigger}


@dataclass
class Trajectory:
    t: np.ndarray
    E_pq: np.ndarray
    Lp_u: np.ndarray
    Linf_u: np.ndarray
    gradinf_v: np.ndarray
    gradinf_w: np.ndarray
    mass: np.ndarray
    p: float
    q: float
    report: BlowupReport
    solver: SolverConfig
    clip_count: int
    steps: int
    final_state: FieldState

    def to_csv(self, stream: TextIO) -> None:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(["t", "E_pq", "Lp_u", "Linf_u", "gradinf_v",
                         "gradinf_w", "mass"])
        for row in zip(self.t, self.E_pq, self.Lp_u, self.Linf_u,
                       self.gradinf_v, self.gradinf_w, self.mass):
            writer.writerow([repr(float(x)) for x in row])


def _stable_dt(grid: RadialGrid, params: ModelParams, state: FieldState,
               cfg: SolverConfig) -> float:
    gv = face_gradients(grid, state.v)
    gw = face_gradients(grid, state.w)
    vel_max = float(np.max(np.abs(params.chi * gv - params.xi * gw)))
    # chemical gradients grow at up to (chi*beta + xi*delta)*|grad u| within
    # the step, so solve dt*(vel + dt*accel) = cfl*dr instead of using the
    # instantaneous velocity alone (vital while v, w are still flat)
    gu_max = float(np.max(np.abs(face_gradients(grid, state.u))))
    accel = (params.chi * params.beta + params.xi * params.delta) * gu_max
    limits = [cfg.dt_max]
    target = cfg.cfl * grid.dr
    if accel > 0:
        limits.append((math.sqrt(vel_max ** 2 + 4.0 * accel * target)
                       - vel_max) / (2.0 * accel))
    elif vel_max > 0:
        limits.append(target / vel_max)
    umax = float(np.max(state.u))
    rate = abs(params.mu1)
    if params.mu2 > 0 and umax > 0:
        rate += params.mu2 * params.k_logistic * umax ** (params.k_logistic - 1)
    if rate > 0:
        limits.append(cfg.cfl / rate)
    return min(limits)


def run(grid: RadialGrid, params: ModelParams, state0: FieldState,
        p: float, q: float, cfg: SolverConfig = SolverConfig()) -> Trajectory:
    """Adaptive time stepping with numerical blow-up detection.

    Blow-up is a reported outcome: the sup norm crossing blowup_threshold,
    a nonfinite state, or the step size falling below dt_min all set the
    flag with the corresponding trigger.
    """
    state = state0
    dt = cfg.dt_init
    samples = []
    clip_total = 0
    smooth = 0
    steps = 0

    def record(s: FieldState):
        lp, linf, gv, gw = norms(s, grid, p)
        samples.append((s.t, energy(s, p, q, grid), lp, linf, gv, gw,
                        mass(s, grid)))

    record(state)
    blew_up, t_detect, trigger = False, None, None
    while state.t < cfg.t_final and steps < cfg.max_steps:
        dt_cap = _stable_dt(grid, params, state, cfg)
        while dt > dt_cap:
            dt *= 0.5
        if dt < cfg.dt_min:
            blew_up, t_detect, trigger = True, state.t, "dt_underflow"
            break
        dt = min(dt, cfg.t_final - state.t)
        new_state, clips = step(state, dt, grid, params, cfg.scheme)
        if not (np.all(np.isfinite(new_state.u)) and
                np.all(np.isfinite(new_state.v)) and
                np.all(np.isfinite(new_state.w))):
            dt *= 0.5
            smooth = 0
            if dt < cfg.dt_min:
                blew_up, t_detect, trigger = True, state.t, "nonfinite_state"
                break
            continue
        state = new_state
        clip_total += clips
        steps += 1
        smooth += 1
        if smooth >= cfg.grow_after:
            dt = min(dt * cfg.growth, cfg.dt_max)
            smooth = 0
        if steps % cfg.sample_every == 0:
            record(state)
        if float(np.max(state.u)) > cfg.blowup_threshold:
            blew_up, t_detect, trigger = True, state.t, "linf_threshold"
            break

    if not samples or samples[-1][0] != state.t:
        record(state)
    cols = list(zip(*samples))
    return Trajectory(
        t=np.asarray(cols[0]), E_pq=np.asarray(cols[1]),
        Lp_u=np.asarray(cols[2]), Linf_u=np.asarray(cols[3]),
        gradinf_v=np.asarray(cols[4]), gradinf_w=np.asarray(cols[5]),
        mass=np.asarray(cols[6]), p=p, q=q,
        report=BlowupReport(blew_up, t_detect, trigger),
        solver=cfg, clip_count=clip_total, steps=steps, final_state=state)
