"""Closed-form evaluation of every theoretical stability/generalization bound.

All recursion solutions go through singularity-safe kernels:

    geometric_series(x, T)  = (x^T - 1)/(x - 1) = sum_{t<T} x^t
    double_geometric(x, T)  = (x^{2T} - x^T)/(x^2 - x) = x^{T-1} geom(x, T)
    power_ratio(a, b, T)    = (a^T - b^T)/(a - b)

with first-order-corrected branches near the removable points so the closed
forms match direct loop iteration to 1e-9 relative even at |x - 1| ~ 1e-12.

Recursion constants for T-step fixed-step SGD over N vertices with field
sizes NN_i (d_i = NN_i / N), certificate constants (lam, gamma, L, zeta,
B_Z, B_L):

  strongly convex:
    PZ_i = d_i a lam (gamma/(lam+gamma) - a) + a^2 lam / N
           + (1 - a lam gamma/(lam+gamma))
    PY_i = a B_Z zeta (NN_i - 1)/N + 2 a L / N
    valid when a^4 lam^2 + 2 a lam gamma/(lam+gamma) <= 1
  non-convex:
    PM   = (N-1)/N * a lam               (flagged divergent when PM > 1)
    PY_i as above

Expected stability:  E[beta_{2,i}] <= L * geom(PZ_i or PM, T) * PY_i.

Second-moment recursion v_t = PZ^2 v_{t-1} + 2 PY PZ m_{t-1} + PY^2 with
m_t the first-moment solution. Its exact solution is the squared first
moment, (PY geom(PZ, T))^2, equivalently the A/B/C/D difference-equation
solution with A = PZ^2, B = PZ, C = 2 PZ PY^2/(PZ-1), D = PY^2(PZ+1)/(1-PZ).
The looser sum form

    2 PY^2 (PZ^{2T} - PZ^T)/(PZ^2 - PZ) + PY^2 (1 - PZ^T)/(1 - PZ)^2

is what the high-probability expressions consume; both are reported. The
second ratio of the loose form has no finite limit at PZ = 1, so within
the branch width it falls back to the exact-solution limit (geom^2 = T^2);
this is recorded, not hidden.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .objectives import ConstantsCertificate

BRANCH_WIDTH = 1e-7

STRONGLY_CONVEX = "strongly-convex"
NON_CONVEX = "non-convex"


class BoundDomainError(ValueError):
    """Inputs outside the bound's stated domain (e.g. Dobrushin alpha >= 1)."""


# ---------------------------------------------------------------------------
# Singularity-safe kernels


def geometric_series(x: float, steps: int) -> float:
    """sum_{t=0}^{steps-1} x^t, continuous through x = 1."""
    if steps < 0:
        raise ValueError("steps must be >= 0")
    if steps == 0:
        return 0.0
    eps = x - 1.0
    if abs(eps) < BRANCH_WIDTH:
        # limit steps at x = 1, first-order correction keeps loop equivalence
        return steps + eps * steps * (steps - 1) / 2.0
    return (x**steps - 1.0) / eps


def double_geometric(x: float, steps: int) -> float:
    """(x^{2T} - x^T)/(x^2 - x) via the identity x^{T-1} * geom(x, T)."""
    if steps == 0:
        return 0.0
    return x ** (steps - 1) * geometric_series(x, steps)


def power_ratio(a: float, b: float, steps: int) -> float:
    """(a^T - b^T)/(a - b) = sum_{s<T} a^{T-1-s} b^s, continuous at a = b."""
    if steps == 0:
        return 0.0
    scale = max(1.0, abs(a), abs(b))
    if abs(a - b) < BRANCH_WIDTH * scale:
        mid = 0.5 * (a + b)
        return steps * mid ** (steps - 1)
    return (a**steps - b**steps) / (a - b)


def difference_equation_solution(a: float, b: float, c: float, d: float, steps: int) -> float:
    """Solution at T of v_t = a v_{t-1} + c b^{t-1} + d with v_0 = 0."""
    return c * power_ratio(b, a, steps) + d * geometric_series(a, steps)


# ---------------------------------------------------------------------------
# Parameters


@dataclass(frozen=True, eq=False)
class SgdBoundParams:
    certificate: ConstantsCertificate
    step_size: float
    steps: int
    n_vertices: int
    field_sizes: np.ndarray  # (N,) int, NN_i
    regime: str

    def __post_init__(self):
        if self.regime not in (STRONGLY_CONVEX, NON_CONVEX):
            raise ValueError(f"unknown regime {self.regime!r}")
        if self.regime == STRONGLY_CONVEX and self.certificate.strong_convexity <= 0:
            raise ValueError("strongly-convex regime needs strong_convexity > 0")
        if self.step_size <= 0:
            raise ValueError("step size must be > 0")
        if self.steps < 0:
            raise ValueError("steps must be >= 0")
        sizes = np.asarray(self.field_sizes, dtype=int)
        if sizes.shape != (self.n_vertices,):
            raise ValueError("field_sizes must have length n_vertices")
        if np.any(sizes < 1) or np.any(sizes > self.n_vertices):
            raise ValueError("field sizes must lie in [1, N]")
        object.__setattr__(self, "field_sizes", sizes)

    @property
    def d(self) -> np.ndarray:
        return self.field_sizes / float(self.n_vertices)


def params_from_sgd_config(certificate: ConstantsCertificate, config, n_vertices: int,
                           field_sizes, regime: str) -> SgdBoundParams:
    """Bound parameters from an SGD config; step schedules are refused."""
    if getattr(config, "step_schedule", None) is not None:
        raise ValueError("bounds are stated for a fixed step size; schedules are refused")
    return SgdBoundParams(
        certificate=certificate, step_size=config.step_size, steps=config.steps,
        n_vertices=n_vertices, field_sizes=field_sizes, regime=regime,
    )


def step_condition_value(p: SgdBoundParams) -> float:
    """a^4 lam^2 + 2 a lam gamma / (lam + gamma)."""
    lam = p.certificate.smoothness
    gamma = p.certificate.strong_convexity
    a = p.step_size
    return a**4 * lam**2 + 2.0 * a * lam * gamma / (lam + gamma)


def step_condition_ok(p: SgdBoundParams) -> bool:
    return step_condition_value(p) <= 1.0


# ---------------------------------------------------------------------------
# Recursion constants


def convex_recursion_constants(p: SgdBoundParams, i: int):
    """(PZ_i, PY_i) for the strongly convex recursion at vertex i."""
    if p.regime != STRONGLY_CONVEX:
        raise ValueError("convex recursion constants need the strongly-convex regime")
    cert = p.certificate
    lam, gamma = cert.smoothness, cert.strong_convexity
    a = p.step_size
    n = p.n_vertices
    d_i = p.field_sizes[i] / n
    pz = d_i * a * lam * (gamma / (lam + gamma) - a) + a**2 * lam / n + (
        1.0 - a * lam * gamma / (lam + gamma)
    )
    py = a * cert.sample_diameter * cert.gradient_data_lipschitz * (p.field_sizes[i] - 1) / n \
        + 2.0 * a * cert.lipschitz / n
    return float(pz), float(py)


def nonconvex_growth_constant(p: SgdBoundParams) -> float:
    """PM = (N - 1)/N * a * lam."""
    return (p.n_vertices - 1) / p.n_vertices * p.step_size * p.certificate.smoothness


def nonconvex_kick_constant(p: SgdBoundParams, i: int) -> float:
    cert = p.certificate
    n = p.n_vertices
    return float(
        p.step_size * cert.sample_diameter * cert.gradient_data_lipschitz
        * (p.field_sizes[i] - 1) / n
        + 2.0 * p.step_size * cert.lipschitz / n
    )


def _constants(p: SgdBoundParams, i: int):
    """(growth, kick) for vertex i in the active regime."""
    if p.regime == STRONGLY_CONVEX:
        return convex_recursion_constants(p, i)
    return nonconvex_growth_constant(p), nonconvex_kick_constant(p, i)


# ---------------------------------------------------------------------------
# Expected stability


def expected_stability_bound(p: SgdBoundParams, i: int | None = None) -> float | None:
    """L * geom(growth, T) * kick_i; sup over i when i is None.

    Returns None (not-applicable) when the strongly convex step-size
    condition fails.
    """
    if p.regime == STRONGLY_CONVEX and not step_condition_ok(p):
        return None
    lip = p.certificate.lipschitz
    if i is not None:
        growth, kick = _constants(p, i)
        return lip * geometric_series(growth, p.steps) * kick
    best = 0.0
    for j in range(p.n_vertices):
        growth, kick = _constants(p, j)
        best = max(best, lip * geometric_series(growth, p.steps) * kick)
    return best


# ---------------------------------------------------------------------------
# Second-moment bounds


@dataclass(frozen=True)
class VarianceBound:
    per_vertex_loose: np.ndarray  # loose sum form per vertex
    per_vertex_exact: np.ndarray  # exact recursion solution (squared first moment)
    total_loose: float
    total_exact: float


def _loose_second_ratio(z: float, steps: int) -> float:
    """(1 - z^T)/(1 - z)^2; no finite limit at z = 1, falls back to geom^2."""
    if abs(1.0 - z) < 1e-9:
        return geometric_series(z, steps) ** 2
    return (1.0 - z**steps) / (1.0 - z) ** 2


def variance_term_loose(growth: float, kick: float, steps: int) -> float:
    return 2.0 * kick**2 * double_geometric(growth, steps) \
        + kick**2 * _loose_second_ratio(growth, steps)


def variance_term_exact(growth: float, kick: float, steps: int) -> float:
    return (kick * geometric_series(growth, steps)) ** 2


def variance_abcd_coefficients(growth: float, kick: float):
    """A/B/C/D of the second-moment difference equation (growth != 1)."""
    a = growth**2
    b = growth
    c = 2.0 * growth * kick**2 / (growth - 1.0)
    d = kick**2 * (growth + 1.0) / (1.0 - growth)
    return a, b, c, d


def variance_bound(p: SgdBoundParams) -> VarianceBound:
    loose = np.empty(p.n_vertices)
    exact = np.empty(p.n_vertices)
    for i in range(p.n_vertices):
        growth, kick = _constants(p, i)
        loose[i] = variance_term_loose(growth, kick, p.steps)
        exact[i] = variance_term_exact(growth, kick, p.steps)
    return VarianceBound(
        per_vertex_loose=loose,
        per_vertex_exact=exact,
        total_loose=float(loose.sum()),
        total_exact=float(exact.sum()),
    )


# ---------------------------------------------------------------------------
# High-probability stability bounds


def highprob_stability_bound(p: SgdBoundParams, delta: float) -> float | None:
    """Non-asymptotic high-probability stability bound for the active regime.

    Chebyshev mass enters under 1/delta and the sub-Gaussian tail under
    log(2/delta) (the union-bound split). Returns None when the
    strongly-convex step-size condition fails.
    """
    if not 0.0 < delta < 1.0:
        raise BoundDomainError(f"delta must be in (0, 1), got {delta}")
    if p.regime == STRONGLY_CONVEX and not step_condition_ok(p):
        return None
    cert = p.certificate
    lip = cert.lipschitz
    var = variance_bound(p).total_loose
    log_term = math.log(2.0 / delta)
    if p.regime == STRONGLY_CONVEX:
        lam, gamma = cert.smoothness, cert.strong_convexity
        sup_env = 0.0
        for i in range(p.n_vertices):
            growth, kick = convex_recursion_constants(p, i)
            sup_env = max(sup_env, geometric_series(growth, p.steps) * kick)
        gap = (lam - gamma) * math.sqrt(log_term / 8.0)
        chebyshev = math.sqrt(var / delta)
        return (lip + gap) * sup_env + gap * (sup_env + chebyshev) ** 2
    growth = nonconvex_growth_constant(p)
    sup_kick = max(nonconvex_kick_constant(p, i) for i in range(p.n_vertices))
    expected = lip * geometric_series(growth, p.steps) * sup_kick
    return expected * (1.0 + math.sqrt(log_term / 2.0)) + lip * math.sqrt(log_term / delta * var)


# ---------------------------------------------------------------------------
# Generalization bounds


def concentration_tail(c_list, alpha_dob: float, t: float) -> float:
    """exp(-(1 - alpha) t^2 / (2 sum c_i^2)), clipped to [0, 1].

    Tail bound for functions with per-coordinate sensitivity c_i under a
    distribution satisfying the Dobrushin condition with coefficient alpha.
    Degenerate all-zero sensitivities with t > 0 return 0.
    """
    c = np.asarray(c_list, dtype=float)
    if np.any(c < 0):
        raise BoundDomainError("sensitivities must be >= 0")
    if t < 0:
        raise BoundDomainError("threshold t must be >= 0")
    if alpha_dob >= 1.0:
        raise BoundDomainError("Dobrushin coefficient must be < 1")
    denom = 2.0 * float(np.sum(c * c))
    if denom == 0.0:
        return 1.0 if t == 0.0 else 0.0
    return float(min(1.0, math.exp(-(1.0 - alpha_dob) * t * t / denom)))


def generalization_bound_single(beta1: float, beta2: float, loss_bound: float,
                                d_list, alpha_dob: float, delta: float) -> float:
    """Single-graph surplus: 2 dbar beta2 + tail term.

    surplus = 2 dbar beta2
            + sqrt(2 sum_i ((2 - 2 d_i) beta1 + d_i (beta2 + B_L))^2)
            * sqrt(log(1/delta) / (1 - alpha))
    """
    if not 0.0 <= alpha_dob < 1.0:
        raise BoundDomainError(f"Dobrushin coefficient must be in [0, 1), got {alpha_dob}")
    if not 0.0 < delta < 1.0:
        raise BoundDomainError(f"delta must be in (0, 1), got {delta}")
    if beta1 > beta2:
        raise BoundDomainError("need beta1 <= beta2")
    d = np.asarray(d_list, dtype=float)
    d_bar = float(d.sum())
    sens = (2.0 - 2.0 * d) * beta1 + d * (beta2 + loss_bound)
    tail = math.sqrt(2.0 * float(np.sum(sens**2))) * math.sqrt(
        math.log(1.0 / delta) / (1.0 - alpha_dob)
    )
    return 2.0 * d_bar * beta2 + tail


def generalization_bound_mgraph(mu: float, loss_bound: float, d_list, m: int,
                                alpha_dob: float, delta: float) -> float:
    """m-graph surplus: N mu + sqrt(2m sum_i ((2 - d_i/m) mu + d_i B_L/m)^2) * tail."""
    if m < 1:
        raise BoundDomainError("m must be >= 1")
    if not 0.0 <= alpha_dob < 1.0:
        raise BoundDomainError(f"Dobrushin coefficient must be in [0, 1), got {alpha_dob}")
    if not 0.0 < delta < 1.0:
        raise BoundDomainError(f"delta must be in (0, 1), got {delta}")
    d = np.asarray(d_list, dtype=float)
    n = d.size
    sens = (2.0 - d / m) * mu + d * loss_bound / m
    tail = math.sqrt(2.0 * m * float(np.sum(sens**2))) * math.sqrt(
        math.log(1.0 / delta) / (1.0 - alpha_dob)
    )
    return n * mu + tail


def sgd_generalization_bound(p: SgdBoundParams, delta: float) -> float | None:
    """High-probability generalization surplus for the active regime.

    surplus = [(2 - 1/N) sqrt(2N log(2/delta)) + 2] * sup_i envelope_i
            + (B_L / N) sqrt(2N log(2/delta))
    with the regime's per-vertex stability envelope inside the sup.
    """
    if not 0.0 < delta < 1.0:
        raise BoundDomainError(f"delta must be in (0, 1), got {delta}")
    if p.regime == STRONGLY_CONVEX and not step_condition_ok(p):
        return None
    cert = p.certificate
    n = p.n_vertices
    lip = cert.lipschitz
    prefactor = (2.0 - 1.0 / n) * math.sqrt(2.0 * n * math.log(2.0 / delta)) + 2.0
    tail = cert.loss_bound / n * math.sqrt(2.0 * n * math.log(2.0 / delta))

    sup_env = 0.0
    if p.regime == STRONGLY_CONVEX:
        lam, gamma = cert.smoothness, cert.strong_convexity
        for i in range(n):
            growth, kick = convex_recursion_constants(p, i)
            var_i = variance_term_loose(growth, kick, p.steps)
            env = lip * geometric_series(growth, p.steps) * kick \
                + math.sqrt(1.0 / (4.0 * delta)) * (lam - gamma) * (4.0 / delta * var_i)
            sup_env = max(sup_env, env)
    else:
        growth = nonconvex_growth_constant(p)
        for i in range(n):
            kick = nonconvex_kick_constant(p, i)
            var_i = variance_term_loose(growth, kick, p.steps)
            env = lip * geometric_series(growth, p.steps) * kick * (1.0 + math.sqrt(1.0 / delta)) \
                + math.sqrt(4.0 / delta * var_i)
            sup_env = max(sup_env, env)
    return prefactor * sup_env + tail


# ---------------------------------------------------------------------------
# Sparse-selection confidence


class SrmFloorError(BoundDomainError):
    """epsilon below the guarantee floor; carries the floor value."""

    def __init__(self, floor: float):
        super().__init__(f"epsilon must be >= the guarantee floor {floor}")
        self.floor = floor


def srm_epsilon_floor(beta2: float, lambda_slack: float, d_max: int) -> float:
    """sup over the degree grid of 2 (2 - lambda) d beta2."""
    return max(2.0 * (2.0 - lambda_slack) * d * beta2 for d in range(1, d_max + 1))


def srm_confidence(beta1: float, beta2: float, loss_bound: float, lambda_slack: float,
                   d_max: int, n_vertices: int, epsilon: float) -> float:
    """Failure probability of the sparse-selection oracle inequality.

    2 sum_{d=1}^{d_max} exp( -(eps/2 + (lambda - 2) d beta2)^2
                             / (2N ((2 - 2d) beta1 + d (beta2 + B_L))^2) ),
    clipped to [0, 1]. Degrees run over the integer grid 1..d_max; epsilon
    below the floor sup_d 2(2 - lambda) d beta2 is rejected.
    """
    if d_max < 1:
        raise BoundDomainError("d_max must be >= 1")
    floor = srm_epsilon_floor(beta2, lambda_slack, d_max)
    if epsilon < floor:
        raise SrmFloorError(floor)
    total = 0.0
    for d in range(1, d_max + 1):
        num = (epsilon / 2.0 + (lambda_slack - 2.0) * d * beta2) ** 2
        den = 2.0 * n_vertices * ((2.0 - 2.0 * d) * beta1 + d * (beta2 + loss_bound)) ** 2
        total += 0.0 if den == 0.0 else math.exp(-num / den)
    return float(min(1.0, 2.0 * total))


# ---------------------------------------------------------------------------
# Report assembly


def bound_report(p: SgdBoundParams, delta: float) -> dict:
    """JSON-serializable report of every bound with validity conditions.

    Failed conditions mark dependent bounds as null (not-applicable) rather
    than numeric; a divergent non-convex growth constant (PM > 1) stays
    numeric but is flagged.
    """
    cert = p.certificate
    conditions = {}
    per_vertex = []
    if p.regime == STRONGLY_CONVEX:
        value = step_condition_value(p)
        conditions["step-size: a^4 lam^2 + 2 a lam gamma/(lam+gamma) <= 1"] = {
            "value": value,
            "ok": bool(value <= 1.0),
        }
        rho_ok = p.step_size <= 2.0 / (cert.smoothness + cert.strong_convexity)
        conditions["contraction: a <= 2/(lam+gamma)"] = {
            "value": p.step_size,
            "ok": bool(rho_ok),
        }
    else:
        growth = nonconvex_growth_constant(p)
        conditions["convergence: PM <= 1"] = {"value": growth, "ok": bool(growth <= 1.0)}

    var = variance_bound(p)
    for i in range(p.n_vertices):
        g, k = _constants(p, i)
        per_vertex.append({
            "vertex": i,
            "growth": g,
            "kick": k,
            "expected_beta2": (
                None if expected_stability_bound(p, i) is None else expected_stability_bound(p, i)
            ),
            "variance_loose": float(var.per_vertex_loose[i]),
            "variance_exact": float(var.per_vertex_exact[i]),
        })

    return {
        "regime": p.regime,
        "n_vertices": p.n_vertices,
        "steps": p.steps,
        "step_size": p.step_size,
        "delta": delta,
        "certificate": {
            "smoothness": cert.smoothness,
            "strong_convexity": cert.strong_convexity,
            "lipschitz": cert.lipschitz,
            "gradient_data_lipschitz": cert.gradient_data_lipschitz,
            "loss_bound": cert.loss_bound,
            "sample_diameter": cert.sample_diameter,
            "weight_radius": cert.weight_radius,
        },
        "conditions": conditions,
        "per_vertex": per_vertex,
        "expected_beta2": expected_stability_bound(p),
        "variance_sum_loose": var.total_loose,
        "variance_sum_exact": var.total_exact,
        "highprob_beta2": highprob_stability_bound(p, delta),
        "generalization_surplus": sgd_generalization_bound(p, delta),
    }
