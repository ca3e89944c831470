"""Empirical checks of the inequalities behind the blow-up bound.

Test functions are radial profiles on the same shell grid the solver uses:
truncated random cosine series (zero slope at both ends by construction)
plus centered bumps.  The interpolation-inequality constant is estimated
from below as a running maximum of the defining ratio over samples, then
inflated by a safety factor before use; every report records the seed and
configuration that produced it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError
from .exponents import C1_coef, C3_coef, h_exponent, k_exponent
from .odi import OdiCoefficients, odi_rhs
from .pde import RadialGrid, Trajectory, cell_gradients


@dataclass(frozen=True)
class InequalityReport:
    samples: int
    violations: int
    worst_margin: float
    witness: str | None = None
    seed: int | None = None
    config: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {"samples": self.samples, "violations": self.violations,
                "worst_margin": self.worst_margin, "witness": self.witness,
                "seed": self.seed, "config": self.config}


@dataclass(frozen=True)
class SamplerConfig:
    n_samples: int = 1000
    max_modes: int = 12
    bump_fraction: float = 0.3
    ascent_steps: int = 60
    seed: int = 0
    report_tol: float = 1e-9


# --- discrete norms (shell quadrature, shared with the solver) --------------

def _integral(grid: RadialGrid, values: np.ndarray) -> np.ndarray:
    """Shell-quadrature integral; values is (..., M)."""
    return values @ grid.shell_measures


def _norm(grid: RadialGrid, F: np.ndarray, p: float) -> np.ndarray:
    return _integral(grid, np.abs(F) ** p) ** (1.0 / p)


def _grad(grid: RadialGrid, F: np.ndarray) -> np.ndarray:
    """Cell-centered radial gradient magnitude, rows of F."""
    F = np.atleast_2d(F)
    g = np.zeros((F.shape[0], grid.M + 1))
    g[:, 1:-1] = np.diff(F, axis=1) / grid.dr
    return np.abs(0.5 * (g[:, :-1] + g[:, 1:]))


def _cosine_matrix(grid: RadialGrid, max_modes: int) -> np.ndarray:
    k = np.arange(max_modes + 1)[:, None]
    return np.cos(k * math.pi * grid.r_centers[None, :] / grid.R)


def _sample_profiles(grid: RadialGrid, cfg: SamplerConfig,
                     rng: np.random.Generator):
    """(profiles, labels, cosine_coeffs or None per row)."""
    basis = _cosine_matrix(grid, cfg.max_modes)
    n_bump = int(cfg.bump_fraction * cfg.n_samples)
    n_cos = cfg.n_samples - n_bump - 1

    # one independent stream per profile family, so a smaller sample budget
    # is a prefix of a larger one and the running maximum stays monotone
    rng_coef, rng_scale, rng_width, rng_amp = rng.spawn(4)
    decay = 1.0 / (1.0 + np.arange(cfg.max_modes + 1)) ** 2
    coeffs = rng_coef.standard_normal((n_cos, cfg.max_modes + 1)) * decay
    scales = np.exp(rng_scale.uniform(-1.0, 3.0, size=(n_cos, 1)))
    coeffs *= scales
    cos_profiles = coeffs @ basis

    widths = rng_width.uniform(0.05, 0.5, size=n_bump) * grid.R
    amps = np.exp(rng_amp.uniform(-1.0, 3.0, size=n_bump))
    bumps = amps[:, None] * np.exp(
        -grid.r_centers[None, :] ** 2 / (2.0 * widths[:, None] ** 2))

    profiles = np.vstack([np.ones((1, grid.M)), cos_profiles, bumps])
    labels = (["constant"]
              + [f"cosine[{i}]" for i in range(n_cos)]
              + [f"bump[{i}]" for i in range(n_bump)])
    return profiles, labels, coeffs, basis


def estimate_gn_constant(grid: RadialGrid, p_gn: float, q_gn: float,
                         r_gn: float, s_gn: float,
                         sampler_cfg: SamplerConfig = SamplerConfig()) -> float:
    """Numerical lower estimate of the interpolation constant.

    Maximum over sampled profiles of
        ||f||_p^p / (||grad f||_r^{p a} ||f||_q^{p(1-a)} + ||f||_s^p),
    refined by local ascent in cosine-coefficient space.  Monotone
    nondecreasing in the sample budget for a fixed seed.
    """
    n = grid.n
    if not (r_gn >= 1 and 1 <= q_gn <= p_gn and s_gn >= 1):
        raise ParameterError("exponents must satisfy r >= 1, 1 <= q <= p, s >= 1")
    a = (1.0 / q_gn - 1.0 / p_gn) / (1.0 / q_gn + 1.0 / n - 1.0 / r_gn)
    if not 0.0 <= a <= 1.0:
        raise ParameterError(f"interpolation weight a={a} outside [0, 1]")
    rng = np.random.default_rng(sampler_cfg.seed)
    profiles, _, coeffs, basis = _sample_profiles(grid, sampler_cfg, rng)

    def ratio_rows(F):
        F = np.atleast_2d(F)
        num = _integral(grid, np.abs(F) ** p_gn)
        grad_r = _norm(grid, _grad(grid, F), r_gn)
        den = (grad_r ** (p_gn * a) * _norm(grid, F, q_gn) ** (p_gn * (1 - a))
               + _norm(grid, F, s_gn) ** p_gn)
        with np.errstate(invalid="ignore", divide="ignore"):
            out = np.where(den > 0, num / den, 0.0)
        return out

    ratios = ratio_rows(profiles)
    best = float(np.max(ratios))

    # local ascent from the best cosine sample (profiles row 1..n_cos)
    n_cos = coeffs.shape[0]
    cos_ratios = ratios[1:1 + n_cos]
    if n_cos > 0:
        c = coeffs[int(np.argmax(cos_ratios))].copy()
        sigma = 0.3
        current = float(ratio_rows(c @ basis)[0])
        for _ in range(sampler_cfg.ascent_steps):
            trial = c + sigma * rng.standard_normal(c.shape) * np.abs(c).max()
            val = float(ratio_rows(trial @ basis)[0])
            if val > current:
                c, current = trial, val
            else:
                sigma *= 0.9
        best = max(best, current)
    return best


def estimate_gn_for_eta(grid: RadialGrid, eta: float,
                        sampler_cfg: SamplerConfig = SamplerConfig(),
                        safety: float = 2.0) -> float:
    """Safety-inflated constant for the squared-field inequality at eta."""
    return safety * estimate_gn_constant(grid, 2.0 * eta, 2.0, 2.0, 2.0,
                                         sampler_cfg)


def check_embed_inequality(grid: RadialGrid, eta: float, epsilon: float,
                           C_GN: float,
                           sampler_cfg: SamplerConfig = SamplerConfig()
                           ) -> InequalityReport:
    """Sample-based one-sided check of
    int |f|^{2 eta} <= eps C1 int |grad f|^2 + C_GN (int f^2)^eta
                       + C3 eps^{-h} (int f^2)^{k}.
    """
    n = grid.n
    if not 1.0 < eta < 1.0 + 2.0 / n:
        raise ParameterError(f"eta={eta} outside (1, 1 + 2/{n})")
    if epsilon <= 0:
        raise ParameterError(f"epsilon must be positive, got {epsilon}")
    rng = np.random.default_rng(sampler_cfg.seed)
    profiles, labels, _, _ = _sample_profiles(grid, sampler_cfg, rng)

    c1 = float(C1_coef(eta, n))
    c3 = C3_coef(eta, n, C_GN)
    h = float(h_exponent(eta, n))
    k = float(k_exponent(eta, n))

    lhs = _integral(grid, np.abs(profiles) ** (2.0 * eta))
    grad_sq = _integral(grid, _grad(grid, profiles) ** 2)
    f_sq = _integral(grid, profiles ** 2)
    rhs = (epsilon * c1 * grad_sq + C_GN * f_sq ** eta
           + c3 * epsilon ** (-h) * f_sq ** k)
    margins = (rhs - lhs) / np.maximum(rhs, 1e-300)
    worst = int(np.argmin(margins))
    violations = int(np.count_nonzero(margins < -sampler_cfg.report_tol))
    return InequalityReport(
        samples=profiles.shape[0], violations=violations,
        worst_margin=float(margins[worst]),
        witness=labels[worst], seed=sampler_cfg.seed,
        config={"eta": eta, "epsilon": epsilon, "C_GN": C_GN,
                "n": n, "M": grid.M})


def check_remark_ordering(n: int, eta_grid) -> InequalityReport:
    """Strict chain k(eta) < eta/(2-eta) < n/(n-2) on (1, n/(n-1)) with
    triple equality at eta = n/(n-1) to 1e-12."""
    eta_star = n / (n - 1.0)
    limit = n / (n - 2.0)
    margins = []
    violations = 0
    witness = None
    samples = 0
    for eta in list(eta_grid) + [eta_star]:
        eta = float(eta)
        if not 1.0 < eta <= eta_star + 1e-15:
            raise ParameterError(f"eta={eta} outside (1, n/(n-1)]")
        samples += 1
        kv = float(k_exponent(eta, n))
        mid = eta / (2.0 - eta)
        if abs(eta - eta_star) <= 1e-13:
            err = max(abs(kv - mid), abs(mid - limit))
            margins.append(-err)
            if err > 1e-12:
                violations += 1
                witness = f"eta={eta} (equality point, err={err})"
        else:
            gap = min(mid - kv, limit - mid)
            margins.append(gap)
            if gap <= 0:
                violations += 1
                witness = f"eta={eta} (chain gap={gap})"
    return InequalityReport(samples=samples, violations=violations,
                            worst_margin=float(min(margins)),
                            witness=witness, seed=None, config={"n": n})


def _condition_C_mask(n, p, q, s1, s2):
    """Vectorized strict evaluation of the admissibility clauses."""
    ok = q > n
    ok &= q > 2
    ok &= s1 > np.maximum(1 + n / 2.0, q / 2.0)
    ok &= s1 < (1 + 2.0 / n) * q / 2.0
    ok &= s2 > np.maximum(q * (n + 2.0) / (2.0 * (q + n)), p / 2.0)
    ok &= s2 < np.minimum((1 + 2.0 / n) * p / 2.0, q / 2.0)
    ok &= p > n * q / (n + q)
    return ok


def _eta_mask(n, p, q, s1, s2):
    eta = np.stack([2 * s2 / p, s1 / (s1 - 1),
                    s2 * (q - 2) / (q * (s2 - 1)), 2 * s1 / q])
    return np.all((eta > 1.0) & (eta < 1.0 + 2.0 / n), axis=0)


def equivalence_bruteforce(n: int, trial_count: int,
                           seed: int = 0) -> InequalityReport:
    """Randomized check that the clause-form condition and the eta-interval
    condition agree on every sampled quadruple.  Half the samples come from
    a broad box, half concentrate near and inside the admissible region."""
    if n < 3:
        raise ParameterError(f"n must be >= 3, got {n}")
    rng = np.random.default_rng(seed)
    n_broad = trial_count // 2
    n_tight = trial_count - n_broad

    p_b = rng.uniform(0.2, 2.0 * n, n_broad)
    q_b = rng.uniform(0.2, 3.0 * n, n_broad)
    s1_b = rng.uniform(1.0 + 1e-6, 1.5 * n + 2.0, n_broad)
    s2_b = rng.uniform(1.0 + 1e-6, 1.5 * n, n_broad)

    q_t = rng.uniform(n, 3.0 * n, n_tight)
    p_t = (n * q_t / (n + q_t)) * rng.uniform(0.8, 2.0, n_tight)
    s1_lo = np.maximum(1 + n / 2.0, q_t / 2.0)
    s1_hi = (1 + 2.0 / n) * q_t / 2.0
    s1_t = s1_lo + (s1_hi - s1_lo) * rng.uniform(-0.5, 1.5, n_tight)
    s2_lo = np.maximum(q_t * (n + 2.0) / (2.0 * (q_t + n)), p_t / 2.0)
    s2_hi = np.minimum((1 + 2.0 / n) * p_t / 2.0, q_t / 2.0)
    s2_t = s2_lo + (s2_hi - s2_lo) * rng.uniform(-0.5, 1.5, n_tight)
    s1_t = np.maximum(s1_t, 1.0 + 1e-6)
    s2_t = np.maximum(s2_t, 1.0 + 1e-6)
    p_t = np.maximum(p_t, 1e-3)

    p = np.concatenate([p_b, p_t])
    q = np.concatenate([q_b, q_t])
    s1 = np.concatenate([s1_b, s1_t])
    s2 = np.concatenate([s2_b, s2_t])

    lhs = _condition_C_mask(n, p, q, s1, s2)
    rhs = _eta_mask(n, p, q, s1, s2)
    mismatch = lhs != rhs
    violations = int(np.count_nonzero(mismatch))
    witness = None
    if violations:
        i = int(np.argmax(mismatch))
        witness = (f"p={p[i]}, q={q[i]}, s1={s1[i]}, s2={s2[i]}: "
                   f"clauses={bool(lhs[i])}, etas={bool(rhs[i])}")
    return InequalityReport(samples=trial_count, violations=violations,
                            worst_margin=0.0 if violations == 0 else -1.0,
                            witness=witness, seed=seed,
                            config={"n": n, "trial_count": trial_count})


@dataclass(frozen=True)
class MonitorConfig:
    slack: float = 0.0        # absolute additive slack on the right side
    rel_floor: float = 1.0    # margin normalizer floor
    t_max: float | None = None


def odi_monitor(trajectory: Trajectory, coeffs: OdiCoefficients,
                monitor_cfg: MonitorConfig = MonitorConfig()) -> InequalityReport:
    """Check dE/dt <= F(E) + slack along a trajectory (centered differences).

    The check is conditional on the supplied constant dominating the true
    discrete interpolation constant; the report's config records it.
    """
    t, E = trajectory.t, trajectory.E_pq
    if monitor_cfg.t_max is not None:
        keep = t <= monitor_cfg.t_max
        t, E = t[keep], E[keep]
    if len(t) < 3:
        raise ParameterError("trajectory too short for centered differences")
    dEdt = (E[2:] - E[:-2]) / (t[2:] - t[:-2])
    F = np.asarray(odi_rhs(coeffs, E[1:-1]), dtype=float)
    rhs = F + monitor_cfg.slack
    margins = (rhs - dEdt) / np.maximum(np.abs(rhs), monitor_cfg.rel_floor)
    worst = int(np.argmin(margins))
    violations = int(np.count_nonzero(margins < 0))
    return InequalityReport(
        samples=len(margins), violations=violations,
        worst_margin=float(margins[worst]),
        witness=f"t={t[1 + worst]}" if violations else None,
        seed=None,
        config={"slack": monitor_cfg.slack, "C_GN": coeffs.C_GN,
                "epsilon": coeffs.epsilon,
                "caveat": "conditional on the supplied interpolation "
                          "constant dominating the true discrete one"})


@dataclass(frozen=True)
class ConcurrenceThresholds:
    energy: float
    linf: float


@dataclass(frozen=True)
class ConcurrenceReport:
    blew_up: bool
    crossed_energy: bool
    crossed_linf: bool
    t_energy: float | None
    t_linf: float | None
    lag: float | None
    t_detect: float | None

    def to_json_dict(self) -> dict:
        return {"blew_up": self.blew_up,
                "crossed_energy": self.crossed_energy,
                "crossed_linf": self.crossed_linf,
                "t_energy": self.t_energy, "t_linf": self.t_linf,
                "lag": self.lag, "t_detect": self.t_detect}


def concurrence_diagnostic(trajectory: Trajectory,
                           thresholds: ConcurrenceThresholds
                           ) -> ConcurrenceReport:
    """Lag between the energy and the sup norm crossing their thresholds.

    Purely diagnostic: reports crossings and the lag, asserts nothing."""
    def first_crossing(series, level):
        idx = np.nonzero(series > level)[0]
        return float(trajectory.t[idx[0]]) if idx.size else None

    t_e = first_crossing(trajectory.E_pq, thresholds.energy)
    t_l = first_crossing(trajectory.Linf_u, thresholds.linf)
    lag = (t_l - t_e) if (t_e is not None and t_l is not None) else None
    return ConcurrenceReport(
        blew_up=trajectory.report.blew_up,
        crossed_energy=t_e is not None, crossed_linf=t_l is not None,
        t_energy=t_e, t_linf=t_l, lag=lag,
        t_detect=trajectory.report.t_detect)
