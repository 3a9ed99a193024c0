"""One-layer linear equivariant GNN with an adjacency-masked ridge objective.

The model predicts yhat = A~ X w with a fixed weight vector w and a learned
matrix A~ supported on the admissible mask Pi (j allowed in row i iff j is
in Xi(i); the mask is symmetric, the fitted values need not be). The
training objective is

    f(A~) = 0.5 ||y - A~ X w||^2 + 0.5 gamma ||A~||_F^2 .

Two solvers ship:

- fit_projected_closed_form: the masked projection of the unconstrained
  stationary point, A~ = Pi o ( y v' (v v' + gamma I)^{-1} ) with v = X w,
  evaluated through the rank-one identity y v' / (gamma + ||v||^2) (no
  matrix inversion). This formula is canonical for the stability-scaling
  and discrepancy experiments.
- fit_exact_rowwise: the support-constrained minimizer; rows decouple into
  scalar ridge problems, A~_{ij} = y_i v_j 1[j in Xi(i)] /
  (gamma + sum_{k in Xi(i)} v_k^2). Its objective value never exceeds the
  projected formula's.

Stability experiments replace one training vertex (label endpoint or a
first-order feature bump), refit, and measure worst-case test loss
differences |(yhat_j - y'_j)^2 - (yhat^i_j - y'_j)^2|. The difference is
affine in the test label, so the sup over y'_j in [-B_y, B_y] is attained
at an endpoint and computed exactly; the sup over test features is lower
estimated by Monte Carlo draws plus sign-corner candidates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graphs import ReceptiveFieldMap, mask_from_fields
from .seeding import child_rng


class SupportError(ValueError):
    """A matrix has mass outside the admissible mask."""


@dataclass(frozen=True, eq=False)
class GnnProblem:
    features: np.ndarray  # (n, m), row norms <= b_x
    labels: np.ndarray  # (n,), sup norm <= b_y
    weight: np.ndarray  # (m,), norm <= b_w
    mask: np.ndarray  # (n, n) bool, symmetric
    ridge: float  # gamma > 0
    b_x: float = 1.0
    b_y: float = 1.0
    b_w: float = 1.0

    def __post_init__(self):
        x = np.asarray(self.features, dtype=float)
        y = np.asarray(self.labels, dtype=float)
        w = np.asarray(self.weight, dtype=float)
        mask = np.asarray(self.mask, dtype=bool)
        n = x.shape[0]
        if y.shape != (n,) or mask.shape != (n, n):
            raise ValueError("labels/mask sizes must match the feature rows")
        if w.shape != (x.shape[1],):
            raise ValueError("weight length must match the feature columns")
        if self.ridge <= 0:
            raise ValueError("ridge parameter must be > 0")
        if not np.array_equal(mask, mask.T):
            raise ValueError("mask must be symmetric")
        tol = 1e-9
        if np.any(np.linalg.norm(x, axis=1) > self.b_x + tol):
            raise ValueError("feature row norm exceeds b_x")
        if np.any(np.abs(y) > self.b_y + tol):
            raise ValueError("label magnitude exceeds b_y")
        if np.linalg.norm(w) > self.b_w + tol:
            raise ValueError("weight norm exceeds b_w")
        object.__setattr__(self, "features", x)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "weight", w)
        object.__setattr__(self, "mask", mask)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def v(self) -> np.ndarray:
        """v = X w, the per-vertex projected features."""
        return self.features @ self.weight


@dataclass(frozen=True, eq=False)
class GnnSolution:
    a_tilde: np.ndarray
    method: str
    objective_value: float


def _objective_value(p: GnnProblem, a: np.ndarray) -> float:
    resid = p.labels - a @ p.v
    return float(0.5 * resid @ resid + 0.5 * p.ridge * np.sum(a * a))


def fit_projected_closed_form(p: GnnProblem) -> GnnSolution:
    """Masked projection of the unconstrained ridge stationary point."""
    v = p.v
    a = np.outer(p.labels, v) / (p.ridge + float(v @ v))
    a = np.where(p.mask, a, 0.0)
    return GnnSolution(a_tilde=a, method="projected-closed-form",
                       objective_value=_objective_value(p, a))


def fit_exact_rowwise(p: GnnProblem) -> GnnSolution:
    """Support-constrained minimizer; rows decouple into scalar ridges."""
    v = p.v
    a = np.zeros((p.n, p.n))
    for i in range(p.n):
        row_mask = p.mask[i]
        denom = p.ridge + float(np.sum(v[row_mask] ** 2))
        a[i, row_mask] = p.labels[i] * v[row_mask] / denom
    return GnnSolution(a_tilde=a, method="exact-rowwise",
                       objective_value=_objective_value(p, a))


def gnn_objective(p: GnnProblem, sol: GnnSolution) -> float:
    """0.5 ||y - A~ X w||^2 + 0.5 gamma ||A~||_F^2; rejects support violations."""
    a = sol.a_tilde
    if np.any((a != 0.0) & ~p.mask):
        raise SupportError("solution has mass outside the admissible mask")
    return _objective_value(p, a)


def full_objective_gradient(p: GnnProblem, sol: GnnSolution) -> np.ndarray:
    """-y v' + A~ (v v' + gamma I), the unmasked objective gradient."""
    v = p.v
    a = sol.a_tilde
    return -np.outer(p.labels, v) + (a @ v)[:, None] * v[None, :] + p.ridge * a


def masked_objective_gradient(p: GnnProblem, sol: GnnSolution) -> np.ndarray:
    """Pi o [ -y v' + A~ (v v' + gamma I) ], the masked first-order condition."""
    return np.where(p.mask, full_objective_gradient(p, sol), 0.0)


def predictions(a_tilde: np.ndarray, test_features: np.ndarray, weight: np.ndarray) -> np.ndarray:
    return a_tilde @ (test_features @ weight)


# ---------------------------------------------------------------------------
# Stability experiments

LABEL_MODE = "label"
FEATURE_MODE = "feature-first-order"

_SOLVERS = {"projected": fit_projected_closed_form, "rowwise": fit_exact_rowwise}


@dataclass(frozen=True, eq=False)
class GnnStabilityResult:
    n: int
    kind: str
    beta1_i: np.ndarray
    beta2_i: np.ndarray
    beta1: float
    beta2: float
    discrepancy: float
    gap_inf: float  # inf_i (beta2_i - beta1_i)
    gap_sup: float  # sup_i (beta2_i - beta1_i)
    sup_d: float
    inf_d: float
    trials: int
    seed: int


def _rows_in_ball(rng: np.random.Generator, count: int, dim: int, radius: float) -> np.ndarray:
    rows = rng.normal(size=(count, dim))
    rows /= np.linalg.norm(rows, axis=1, keepdims=True)
    rows *= radius * rng.random((count, 1)) ** (1.0 / dim)
    return rows


def _loss_diff_sup_label(pred_base: np.ndarray, pred_pert: np.ndarray, b_y: float) -> np.ndarray:
    """sup over y' in [-B_y, B_y] of |(p - y')^2 - (q - y')^2| per vertex.

    (p - y')^2 - (q - y')^2 = (p - q)(p + q - 2 y') is affine in y', so the
    sup sits at an endpoint: |p - q| (|p + q| + 2 B_y).
    """
    return np.abs(pred_base - pred_pert) * (np.abs(pred_base + pred_pert) + 2.0 * b_y)


def _test_feature_candidates(rng, n, dim, b_x, weight, pairs, n_draws):
    """Monte Carlo test feature sets plus sign-corner candidates.

    Corners set every row to +-b_x along the weight direction; sign
    patterns come from the dominant rows of each fitted difference (which
    drive the first factor of the loss-difference product) and from the
    matching rows of the base+perturbed sum (the second factor). Rows where
    the difference is negligible contribute nothing to the product, so only
    the leading rows spawn corners.
    """
    cands = [_rows_in_ball(rng, n, dim, b_x) for _ in range(n_draws)]
    wn = float(np.linalg.norm(weight))
    if wn == 0.0:
        return cands
    unit = weight / wn
    for delta, summed in pairs:
        norms = np.linalg.norm(delta, axis=1)
        top = float(norms.max())
        if top == 0.0:
            continue
        rows = np.nonzero(norms >= 0.25 * top)[0]
        rows = rows[np.argsort(norms[rows])[::-1][:8]]
        for j in rows:
            for source in (delta[j], summed[j]):
                if np.any(source != 0.0):
                    signs = np.where(source >= 0.0, 1.0, -1.0)
                    cands.append(np.outer(signs, b_x * unit))
    return cands


def gnn_stability_experiment(rf: ReceptiveFieldMap, kind: str, trials: int,
                             eps_feature: float, seed: int, solver: str = "projected",
                             n_test_draws: int = 32, ridge: float = 1.0,
                             b_x: float = 1.0, b_y: float = 1.0, b_w: float = 1.0,
                             dim: int = 3) -> GnnStabilityResult:
    """Estimate per-vertex type-1/type-2 stability of the masked ridge fit.

    label mode: y_i replaced by each endpoint of [-B_y, B_y].
    feature mode: row i bumped by eps_feature along the weight direction
    (first-order regime; eps, >= 0.1 b_x is rejected). Estimates are lower
    bounds of the definitional suprema.
    """
    if kind not in (LABEL_MODE, FEATURE_MODE):
        raise ValueError(f"unknown perturbation kind {kind!r}")
    if kind == FEATURE_MODE and eps_feature >= 0.1 * b_x:
        raise ValueError("feature bump must stay below 0.1 b_x (first-order regime)")
    fit = _SOLVERS[solver]
    mask = mask_from_fields(rf)
    n = rf.n
    beta1_i = np.zeros(n)
    beta2_i = np.zeros(n)
    outside = [rf.outside(i) for i in range(n)]

    for trial in range(trials):
        rng = child_rng(seed, "gnn-trial", trial)
        base_radius = b_x - eps_feature if kind == FEATURE_MODE else b_x
        x = _rows_in_ball(rng, n, dim, base_radius)
        y = rng.uniform(-b_y, b_y, size=n)
        w = _rows_in_ball(rng, 1, dim, b_w)[0]
        base = GnnProblem(features=x, labels=y, weight=w, mask=mask, ridge=ridge,
                          b_x=b_x, b_y=b_y, b_w=b_w)
        a_base = fit(base).a_tilde

        for i in range(n):
            perturbed = []
            if kind == LABEL_MODE:
                for endpoint in (-b_y, b_y):
                    y_p = y.copy()
                    y_p[i] = endpoint
                    perturbed.append(GnnProblem(features=x, labels=y_p, weight=w,
                                                mask=mask, ridge=ridge,
                                                b_x=b_x, b_y=b_y, b_w=b_w))
            else:
                wn = float(np.linalg.norm(w))
                bump = (w / wn if wn > 0 else np.eye(dim)[0]) * eps_feature
                x_p = x.copy()
                x_p[i] = x_p[i] + bump
                perturbed.append(GnnProblem(features=x_p, labels=y, weight=w,
                                            mask=mask, ridge=ridge,
                                            b_x=b_x, b_y=b_y, b_w=b_w))

            fits = [fit(q).a_tilde for q in perturbed]
            pairs = [(a_p - a_base, a_p + a_base) for a_p in fits]
            cands = _test_feature_candidates(rng, n, dim, b_x, w, pairs, n_test_draws)
            for x_test in cands:
                vt = x_test @ w
                p_base = a_base @ vt
                for a_p in fits:
                    sup_y = _loss_diff_sup_label(p_base, a_p @ vt, b_y)
                    beta2_i[i] = max(beta2_i[i], float(sup_y.max()))
                    if outside[i].size:
                        beta1_i[i] = max(beta1_i[i], float(sup_y[outside[i]].max()))

    gaps = beta2_i - beta1_i
    return GnnStabilityResult(
        n=n, kind=kind, beta1_i=beta1_i, beta2_i=beta2_i,
        beta1=float(beta1_i.max()), beta2=float(beta2_i.max()),
        discrepancy=float(beta2_i.max() - beta1_i.max()),
        gap_inf=float(gaps.min()), gap_sup=float(gaps.max()),
        sup_d=rf.sup_d, inf_d=float(rf.d.min()),
        trials=trials, seed=seed,
    )


# ---------------------------------------------------------------------------
# Sweeps


def density_mask_fields(n: int, p: float, seed: int) -> ReceptiveFieldMap:
    """Receptive fields of an Erdos-Renyi style symmetric mask with density p."""
    from .graphs import erdos_renyi_graph, one_hop_receptive_fields

    return one_hop_receptive_fields(erdos_renyi_graph(n, p, seed))


def scaling_sweep(n: int, densities, replicates: int, trials: int, seed: int,
                  kind: str = LABEL_MODE, eps_feature: float = 0.05, **kwargs):
    """beta2 vs sup_d over a density sweep; one record per (density, replicate)."""
    records = []
    for di, p in enumerate(densities):
        for rep in range(replicates):
            rf = density_mask_fields(n, p, child_seed_int(seed, "mask", di, rep))
            res = gnn_stability_experiment(
                rf, kind, trials, eps_feature,
                child_seed_int(seed, "exp", di, rep), **kwargs
            )
            records.append({
                "n": n, "density": p, "replicate": rep,
                "sup_d": res.sup_d, "inf_d": res.inf_d,
                "beta1": res.beta1, "beta2": res.beta2,
                "discrepancy": res.discrepancy,
            })
    return records


def child_seed_int(master: int, *path) -> int:
    """Stable derived integer seed for nested experiment stages."""
    from .seeding import child_seed

    return int(child_seed(master, *path).generate_state(1, np.uint32)[0])


def loglog_slope(xs, ys) -> float:
    """Least-squares slope of log(y) against log(x)."""
    lx = np.log(np.asarray(xs, dtype=float))
    ly = np.log(np.asarray(ys, dtype=float))
    lx = lx - lx.mean()
    return float((lx @ (ly - ly.mean())) / (lx @ lx))
