"""Parameter algebra for the energy-method blow-up bound.

Everything here is exact arithmetic on the exponent quadruple (p, q, s1, s2):
the four derived eta exponents, the open-interval admissibility condition
equivalent to eta_i in (1, 1 + 2/n), the exponent/coefficient maps k, h, C1,
C3 entering the differential inequality, and the two closed-form parameter
selections that collapse all four eta to a single value.

All operations are pure and stateless.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence, TextIO

from .errors import ParameterError, SingularityError

Number = int | float | Fraction


def _is_exact(*values: Number) -> bool:
    return all(isinstance(v, (int, Fraction)) and not isinstance(v, bool)
               for v in values)


@dataclass(frozen=True)
class BallDomain:
    """Ball of given radius; convexity controls the boundary constant."""

    radius: float = 1.0
    convex: bool = True

    def __post_init__(self):
        if not self.radius > 0:
            raise ParameterError(f"domain radius must be positive, got {self.radius}")


@dataclass(frozen=True)
class ModelParams:
    """Physical coefficients of the chemotaxis system.

    chi: attraction strength, xi: repulsion strength; (alpha, beta) couple
    the attractant equation, (gamma, delta) the repellent equation.
    The logistic source is mu1*u - mu2*u**k_logistic.  boundary_c is the
    constant absorbing the boundary trace term on non-convex domains; it
    must be 0 when the domain is convex (the trace term vanishes there).
    """

    chi: float
    xi: float
    alpha: float = 1.0
    beta: float = 1.0
    gamma: float = 1.0
    delta: float = 1.0
    mu1: float = 0.0
    mu2: float = 0.0
    k_logistic: float = 1.1
    dim: int = 3
    domain: BallDomain = field(default_factory=BallDomain)
    boundary_c: float = 0.0

    def __post_init__(self):
        # chi = xi = 0 is allowed so pure-diffusion control runs can share
        # the same parameter type
        for name in ("chi", "xi"):
            if getattr(self, name) < 0:
                raise ParameterError(f"{name} must be nonnegative, got {getattr(self, name)}")
        for name in ("alpha", "beta", "gamma", "delta"):
            if not getattr(self, name) > 0:
                raise ParameterError(f"{name} must be positive, got {getattr(self, name)}")
        if self.mu2 < 0:
            raise ParameterError(f"mu2 must be nonnegative, got {self.mu2}")
        if self.dim < 3:
            raise ParameterError(f"dim must be >= 3, got {self.dim}")
        if self.mu2 > 0:
            k_hi = 7.0 / 6.0 if self.dim == 3 else 1.0 + 1.0 / (2 * (self.dim - 1))
            if not (1.0 < self.k_logistic < k_hi):
                raise ParameterError(
                    f"k_logistic must lie in (1, {k_hi}) for dim={self.dim} "
                    f"when mu2 > 0, got {self.k_logistic}")
        if self.boundary_c < 0:
            raise ParameterError(f"boundary_c must be nonnegative, got {self.boundary_c}")
        if self.domain.convex and self.boundary_c != 0:
            raise ParameterError("boundary_c must be 0 on a convex domain")


def compute_etas(p: Number, q: Number, s1: Number, s2: Number):
    """Four derived exponents (2*s2/p, s1/(s1-1), s2*(q-2)/(q*(s2-1)), 2*s1/q).

    Exact when all inputs are int/Fraction, float otherwise.
    """
    if not (p > 0 and q > 0):
        raise ParameterError(f"p, q must be positive, got p={p}, q={q}")
    if not (s1 > 1 and s2 > 1):
        raise ParameterError(f"s1, s2 must exceed 1, got s1={s1}, s2={s2}")
    if _is_exact(p, q, s1, s2):
        p, q, s1, s2 = (Fraction(x) for x in (p, q, s1, s2))
    eta0 = 2 * s2 / p
    eta1 = s1 / (s1 - 1)
    eta2 = s2 * (q - 2) / (q * (s2 - 1))
    eta3 = 2 * s1 / q
    return (eta0, eta1, eta2, eta3)


def etas_in_range(etas: Sequence[Number], n: int, slack: float = 0.0) -> bool:
    """True iff every eta lies strictly inside (1, 1 + 2/n).

    slack shrinks the interval symmetrically; on exact inputs leave it 0.
    """
    if n < 3:
        raise ParameterError(f"n must be >= 3, got {n}")
    if _is_exact(*etas) and slack == 0:
        lo, hi = 1, Fraction(n + 2, n)  # keep comparisons in exact arithmetic
    else:
        lo, hi = 1.0 + slack, 1.0 + 2.0 / n - slack
    return all(lo < e < hi for e in etas)


@dataclass(frozen=True)
class EnergyIndices:
    """Exponent quadruple with its derived eta values."""

    p: float
    q: float
    s1: float
    s2: float
    eta: tuple = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "eta", compute_etas(self.p, self.q, self.s1, self.s2))

    def admissible(self, n: int, slack: float = 0.0) -> bool:
        return check_condition_C(n, self.p, self.q, self.s1, self.s2, slack).admissible


@dataclass(frozen=True)
class Clause:
    name: str
    passed: bool
    margin: float


@dataclass(frozen=True)
class AdmissibilityReport:
    admissible: bool
    clauses: tuple[Clause, ...]
    etas: tuple | None
    margin: float

    def to_json_dict(self) -> dict:
        return {
            "admissible": self.admissible,
            "clauses": {c.name: {"passed": c.passed, "margin": c.margin}
                        for c in self.clauses},
            "etas": None if self.etas is None else [float(e) for e in self.etas],
            "margin": self.margin,
        }


def check_condition_C(n: int, p: Number, q: Number, s1: Number, s2: Number,
                      slack: float = 0.0) -> AdmissibilityReport:
    """Evaluate the open-interval admissibility condition on (p, q, s1, s2).

    All inequalities are strict; boundary equality is inadmissible.  Exact
    rational arithmetic is used when every input is int/Fraction, otherwise
    float comparisons with the given slack.  Note q > 2 is required on top
    of the four textbook clauses: the eta attached to s2 and q is only
    meaningful past q = 2 (its numerator changes sign there), and q <= 2
    empties the s2 interval anyway.
    """
    if n < 3:
        raise ParameterError(f"n must be >= 3, got {n}")
    exact = _is_exact(p, q, s1, s2) and slack == 0
    if exact:
        p, q, s1, s2 = (Fraction(x) for x in (p, q, s1, s2))
        two_over_n = Fraction(2, n)
        half = Fraction(1, 2)
    else:
        p, q, s1, s2 = float(p), float(q), float(s1), float(s2)
        two_over_n = 2.0 / n
        half = 0.5

    # (name, lower, value) meaning lower < value must hold strictly.
    strict = [
        ("q > n", n, q),
        ("q > 2", 2, q),
        ("s1 > max(1 + n/2, q/2)", max(1 + n * half, q * half), s1),
        ("s1 < (1 + 2/n) q/2", s1, (1 + two_over_n) * q * half),
        ("s2 > max(q(n+2)/(2(q+n)), p/2)",
         max(q * (n + 2) / (2 * (q + n)), p * half), s2),
        ("s2 < min((1 + 2/n) p/2, q/2)",
         s2, min((1 + two_over_n) * p * half, q * half)),
        ("p > nq/(n+q)", n * q / (n + q), p),
    ]
    clauses = []
    for name, lo, val in strict:
        margin = float(val - lo)
        clauses.append(Clause(name, (val - lo) > slack, margin))
    admissible = all(c.passed for c in clauses)
    try:
        etas = compute_etas(p, q, s1, s2)
    except ParameterError:
        etas = None
    margin = min(c.margin for c in clauses)
    return AdmissibilityReport(admissible, tuple(clauses), etas, margin)


def _check_eta_domain(eta: Number, n: int):
    if n < 3:
        raise ParameterError(f"n must be >= 3, got {n}")
    if eta < 1:
        raise ParameterError(f"eta must be >= 1, got {eta}")
    if not n + 2 - n * eta > 0:
        raise SingularityError(
            f"eta={eta} is at or past the singular point (n+2)/n for n={n}")


def k_exponent(eta: Number, n: int):
    """(n - eta(n-2)) / (n + 2 - n eta); the higher companion exponent."""
    _check_eta_domain(eta, n)
    if _is_exact(eta):
        eta = Fraction(eta)
    return (n - eta * (n - 2)) / (n + 2 - n * eta)


def h_exponent(eta: Number, n: int):
    """2(eta - 1) n / (n + 2 - n eta); the inverse-epsilon power."""
    _check_eta_domain(eta, n)
    if _is_exact(eta):
        eta = Fraction(eta)
    return 2 * (eta - 1) * n / (n + 2 - n * eta)


def C1_coef(eta: Number, n: int):
    """n (eta - 1) / 2; weight of the gradient term."""
    _check_eta_domain(eta, n)
    if _is_exact(eta):
        eta = Fraction(eta)
    return n * (eta - 1) / 2


def C3_coef(eta: Number, n: int, C_GN: float) -> float:
    """((n + 2 - n eta)/2) * C_GN**(2/(n + 2 - n eta))."""
    _check_eta_domain(eta, n)
    if not C_GN > 0:
        raise ParameterError(f"C_GN must be positive, got {C_GN}")
    eta = float(eta)
    denom = n + 2 - n * eta
    return (denom / 2.0) * C_GN ** (2.0 / denom)


def corollary1_parameters(p: Number, n: int):
    """Selection (q, s1, s2) = (2p, p+1, (p+1)/2) collapsing all eta to (p+1)/p.

    Requires p > n/2.
    """
    if n < 3:
        raise ParameterError(f"n must be >= 3, got {n}")
    if not 2 * p > n:
        raise ParameterError(f"p must exceed n/2 = {n/2}, got {p}")
    if _is_exact(p):
        p = Fraction(p)
    return (2 * p, p + 1, (p + 1) / 2)


def corollary2_parameters(n: int):
    """Selection (p, q, s1, s2) = (n-1, 2(n-1), n, n/2); all eta equal n/(n-1)."""
    if n < 3:
        raise ParameterError(f"n must be >= 3, got {n}")
    return (n - 1, 2 * (n - 1), n, Fraction(n, 2))


UNBOUNDED = math.inf


@dataclass(frozen=True)
class RegionRow:
    p: float
    q_low: float
    q_high: float  # UNBOUNDED sentinel when p >= n


def feasible_region_samples(n: int, p_grid: Iterable[Number]) -> list[RegionRow]:
    """Admissible q interval (n, n p/(n-p)) per p; unbounded above for p >= n.

    Grid points with p <= n/2 are dropped (empty interval there).
    """
    if n < 3:
        raise ParameterError(f"n must be >= 3, got {n}")
    rows = []
    for p in p_grid:
        if 2 * p <= n:
            continue
        if p >= n:
            rows.append(RegionRow(float(p), float(n), UNBOUNDED))
        else:
            rows.append(RegionRow(float(p), float(n), float(n * p / (n - p))))
    return rows


def write_region_csv(rows: Sequence[RegionRow], stream: TextIO) -> None:
    """Emit rows as `p,q_low,q_high` with the literal `inf` for no upper bound."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["p", "q_low", "q_high"])
    for row in rows:
        q_high = "inf" if math.isinf(row.q_high) else repr(row.q_high)
        writer.writerow([repr(row.p), repr(row.q_low), q_high])
