"""Mean-value polynomials, Poincare constants, and the mean-value Poincare
experiments on balls and annuli.

The mean-value polynomial P of degree N on a domain D is the unique
polynomial with  mean_D d^alpha (v - P) = 0  for all |alpha| <= N.  It is
built by the top-down recursion

    Q^N = sum_{|a|=N} x^a/a! mean_D d^a v,
    Q^i = Q^{i+1} + sum_{|a|=i} x^a/a! mean_D d^a (v - Q^{i+1}),

which zeroes the means order by order; coefficientwise d^a Q^i = d^a Q^0
for |a| >= i, and the discrete means vanish to roundoff because the same
spectral derivatives enter every level.

Poincare constants are extremal Rayleigh quotients of inverse restricted
operators, computed by inverse power iteration with an inner CG solve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product as _iterproduct
from typing import Optional

import numpy as np

from .cutoffs import DyadicCutoffFamily, evaluate
from .grid import DomainMask, Grid, GridFunction, annulus_mask, ball_mask, lp_norm
from .multipliers import abs_power_table, apply_table, derivative, frac_laplacian
from .singular import gagliardo_seminorm
from .solve import restricted_cg


class MeanValueError(ValueError):
    pass


def _indices_of_order(dim: int, order: int):
    out = []
    for combo in _iterproduct(range(order + 1), repeat=dim):
        if sum(combo) == order:
            out.append(combo)
    return out


def _indices_upto(dim: int, order: int):
    out = []
    for k in range(order + 1):
        out.extend(_indices_of_order(dim, k))
    return out


def _fact(alpha) -> float:
    out = 1.0
    for a in alpha:
        out *= math.factorial(a)
    return out


@dataclass
class MeanValuePolynomial:
    """Polynomial sum_a c_a x^a / a! in displacement coordinates about center."""

    grid: Grid
    center: np.ndarray
    degree: int
    coeffs: dict
    stages: list = field(default_factory=list)  # Q^i coefficient dicts, i = N..0

    def evaluate(self) -> np.ndarray:
        disp = self.grid.periodic_displacement(self.center)
        out = np.zeros(self.grid.shape)
        for alpha, c in self.coeffs.items():
            term = np.full(self.grid.shape, c / _fact(alpha))
            for a, k in enumerate(alpha):
                if k:
                    term = term * disp[a] ** k
            out += term
        return out

    def derivative_values(self, beta) -> np.ndarray:
        """d^beta P on the grid (exact polynomial differentiation)."""
        beta = tuple(beta)
        disp = self.grid.periodic_displacement(self.center)
        out = np.zeros(self.grid.shape)
        for alpha, c in self.coeffs.items():
            if any(b > a for a, b in zip(alpha, beta)):
                continue
            rem = tuple(a - b for a, b in zip(alpha, beta))
            term = np.full(self.grid.shape, c / _fact(rem))
            for a, k in enumerate(rem):
                if k:
                    term = term * disp[a] ** k
            out += term
        return out


def meanvalue_polynomial(
    v: GridFunction,
    D: DomainMask,
    degree: int,
    center=None,
    derivatives: Optional[dict] = None,
) -> MeanValuePolynomial:
    """Mean-value polynomial of v on D via the inductive recursion.

    degree is capped at 2 (covers all supported dimensions); derivatives may
    carry precomputed spectral d^alpha v arrays keyed by multiindex.
    """
    if degree > 2 or degree < 0:
        raise MeanValueError("degree must lie in {0, 1, 2}")
    if D.npoints == 0:
        raise MeanValueError("empty mask")
    grid = v.grid
    if center is None:
        center = grid.center
    center = np.atleast_1d(np.asarray(center, dtype=float))
    sel = D.values
    disp = grid.periodic_displacement(center)

    if derivatives is None:
        derivatives = {}
    for alpha in _indices_upto(grid.dim, degree):
        if alpha not in derivatives:
            derivatives[alpha] = derivative(v, alpha).values

    def poly_derivative_on_mask(coeffs, beta):
        out = np.zeros(int(np.count_nonzero(sel)))
        for alpha, c in coeffs.items():
            if any(b > a for a, b in zip(alpha, beta)):
                continue
            rem = tuple(a - b for a, b in zip(alpha, beta))
            term = np.full(out.shape, c / _fact(rem))
            for a, k in enumerate(rem):
                if k:
                    term = term * disp[a][sel] ** k
            out += term
        return out

    coeffs: dict = {}
    stages = []
    for i in range(degree, -1, -1):
        for alpha in _indices_of_order(grid.dim, i):
            residual = derivatives[alpha][sel] - poly_derivative_on_mask(coeffs, alpha)
            coeffs[alpha] = float(np.mean(residual))
        stages.append(dict(coeffs))
    return MeanValuePolynomial(grid, center, degree, coeffs, stages)


def meanvalue_residuals(v: GridFunction, D: DomainMask, P: MeanValuePolynomial) -> dict:
    """max_alpha |mean_D d^alpha (v - P)| normalized by ||d^alpha v||_{L2(D)}."""
    sel = D.values
    out = {}
    for alpha in _indices_upto(v.grid.dim, P.degree):
        dv = derivative(v, alpha).values
        resid = abs(float(np.mean(dv[sel] - P.derivative_values(alpha)[sel])))
        scale = float(np.sqrt(np.mean(dv[sel] ** 2))) + 1e-300
        out[alpha] = resid / scale
    return out


# -- Poincare constants ------------------------------------------------------

def poincare_constant(
    D: DomainMask,
    s: float,
    t: Optional[float] = None,
    max_power_iterations: int = 1000,
    rtol: float = 1e-8,
    cg_tol: float = 1e-12,
    cg_maxiter: int = 20000,
    seed: int = 0,
) -> dict:
    """Extremal constant sup ||Lap^s f|| / ||Lap^t f|| over f supported in D
    (s = 0 by default order pair (0, s): the plain Poincare constant
    sup ||f|| / ||Lap^s f||).

    Power iteration on the inverse restricted operator: each step solves
    (P_D Lap^{2t} P_D) u = B f by CG and converges when successive Rayleigh
    quotients differ by less than rtol (relative).
    """
    if t is None:
        s, t = 0.0, s
    if not (0 <= s <= t and t > 0):
        raise MeanValueError("orders must satisfy 0 <= s <= t, t > 0")
    grid = D.grid
    sel = D.values
    if not sel.any():
        raise MeanValueError("empty mask")

    table_A = abs_power_table(grid, 2.0 * t)
    table_B = abs_power_table(grid, 2.0 * s) if s > 0 else None

    def apply_A(u):
        return apply_table(u, table_A)

    def apply_B(u):
        if table_B is None:
            return u.copy()
        return apply_table(u, table_B)

    rng = np.random.default_rng(seed)
    f = np.zeros(grid.shape)
    f[sel] = rng.standard_normal(int(sel.sum()))
    f /= math.sqrt(float(np.sum(f * f)))
    lam_prev = 0.0
    iterations = 0
    for it in range(1, max_power_iterations + 1):
        iterations = it
        Bf = apply_B(f)
        Bf[~sel] = 0.0
        u, _, _ = restricted_cg(sel, apply_A, Bf, cg_tol, cg_maxiter)
        Bu = apply_B(u)
        Bu[~sel] = 0.0
        num = float(np.sum(u * Bu))
        den = float(np.sum(u * apply_A(u)))
        lam = num / den
        nrm = math.sqrt(float(np.sum(u * u)))
        f = u / nrm
        if it > 1 and abs(lam - lam_prev) <= rtol * abs(lam):
            return {"constant": math.sqrt(lam), "iterations": it, "s": s, "t": t}
        lam_prev = lam
    raise MeanValueError(
        f"power iteration did not converge within {max_power_iterations} iterations"
    )


# -- mean-value Poincare experiments ----------------------------------------

def mv_poincare_ratio(
    v: GridFunction,
    r: float,
    x,
    s: float,
    t: float,
    family: DyadicCutoffFamily,
    degree: Optional[int] = None,
) -> dict:
    """||Lap^s (eta_{r,x} (v-P))||_2 / (r^t [v]_{B_4r(x), s+t}) with P the
    mean-value polynomial of v on B_4r(x)."""
    grid = v.grid
    n = grid.dim
    if degree is None:
        degree = max(math.ceil(n / 2) - 1, 0)
    if not (0 <= s < degree + 1 and 0 <= t < degree + 1 - s):
        raise MeanValueError("orders must satisfy s in [0,N+1), t in [0,N+1-s)")
    D = ball_mask(grid, x, 4.0 * r)
    P = meanvalue_polynomial(v, D, degree, center=x)
    eta = evaluate(family, 0, r, x, grid, attach_mask=False)
    w = GridFunction(grid, eta.values * (v.values - P.evaluate()))
    num = lp_norm(frac_laplacian(w, s), 2) if s > 0 else lp_norm(w, 2)
    sem = gagliardo_seminorm(v, D, s + t)
    if sem == 0:
        raise MeanValueError("zero seminorm")
    return {"numerator": num, "denominator": r**t * sem, "ratio": num / (r**t * sem)}


def annulus_mv_poincare_ratio(
    v: GridFunction,
    r: float,
    x,
    k: int,
    s: float,
    t: float,
    family: DyadicCutoffFamily,
    degree: Optional[int] = None,
) -> dict:
    """Annulus variant: P on A_k = B_{2^{k+1}r} minus closure(B_{2^{k-1}r}),
    seminorm on the fattened annulus, normalizer (2^k r)^t."""
    grid = v.grid
    n = grid.dim
    if degree is None:
        degree = max(math.ceil(n / 2) - 1, 0)
    if not (0 <= s < degree + 1 and 0 <= t < degree + 1 - s):
        raise MeanValueError("orders must satisfy s in [0,N+1), t in [0,N+1-s)")
    if k < 1:
        raise MeanValueError("annulus index k must be >= 1")
    D = annulus_mask(grid, x, 2.0 ** (k - 1) * r, 2.0 ** (k + 1) * r)
    wide = annulus_mask(grid, x, 2.0 ** (k - 2) * r, 2.0 ** (k + 2) * r)
    P = meanvalue_polynomial(v, D, degree, center=x)
    eta = evaluate(family, k, r, x, grid, attach_mask=False)
    w = GridFunction(grid, eta.values * (v.values - P.evaluate()))
    num = lp_norm(frac_laplacian(w, s), 2) if s > 0 else lp_norm(w, 2)
    sem = gagliardo_seminorm(v, wide, s + t)
    if sem == 0:
        raise MeanValueError("zero seminorm")
    scale = (2.0**k * r) ** t
    return {"numerator": num, "denominator": scale * sem, "ratio": num / (scale * sem)}


def polynomial_gap_scan(
    v: GridFunction,
    r: float,
    x,
    k_max: int,
    family: DyadicCutoffFamily,
    degree: Optional[int] = None,
) -> dict:
    """Sup-norm gaps between the ball and annulus mean-value polynomials and
    the L^2 closeness of v to its ball polynomial, per dyadic scale.

    g_k = ||eta^k_r (P_{B_r} - P_{A_k})||_inf / ((1+k) ||Lap^{n/2} v||_2),
    e_k = ||eta^k_r (v - P_{B_2r})||_2 / ((2^k r)^{n/2} (1+k) ||Lap^{n/2} v||_2),
    with A_k = B_{2^{k+1}r} minus B_{2^k r}.
    """
    grid = v.grid
    n = grid.dim
    if degree is None:
        degree = max(math.ceil(n / 2) - 1, 0)
    if 2.0 ** (k_max + 1) * r > 0.5 * grid.box_length:
        raise MeanValueError("k_max support exceeds the box")
    lap_norm_v = lp_norm(frac_laplacian(v, n / 2.0), 2)
    if lap_norm_v == 0:
        raise MeanValueError("degenerate input")
    P_ball = meanvalue_polynomial(v, ball_mask(grid, x, r), degree, center=x)
    P_2ball = meanvalue_polynomial(v, ball_mask(grid, x, 2.0 * r), degree, center=x)
    diff_base = None
    g, e = [], []
    for k in range(1, k_max + 1):
        A_k = annulus_mask(grid, x, 2.0**k * r, 2.0 ** (k + 1) * r)
        P_ann = meanvalue_polynomial(v, A_k, degree, center=x)
        eta = evaluate(family, k, r, x, grid, attach_mask=False)
        gap = eta.values * (P_ball.evaluate() - P_ann.evaluate())
        g.append(float(np.max(np.abs(gap))) / ((1 + k) * lap_norm_v))
        err = GridFunction(grid, eta.values * (v.values - P_2ball.evaluate()))
        e.append(lp_norm(err, 2) / ((2.0**k * r) ** (n / 2.0) * (1 + k) * lap_norm_v))
    return {"g": g, "e": e, "lap_norm": lap_norm_v, "k_max": k_max}
