"""Stochastic gradient descent over vertex objectives, with coupled runs.

The update is w_{t+1} = G(w_t, alpha, n_t) = project(w_t - alpha * grad
f(S_{n_t}, w_t)) with n_t drawn uniformly from [N] with replacement. A
coupled run executes the same index stream and initialization on two sample
sets differing at exactly one vertex i and records the weight deviations
delta^i w_t = w_t - w_t^i per step, together with the case label of each
step:

- "hit":  i is in the sampled vertex's receptive field and n_t != i
- "self": n_t = i
- "miss": i is outside the sampled receptive field

Per-step deviation envelopes for the strongly convex and the smooth
non-convex regimes can be rechecked against a recorded trace, and the
contraction properties of G itself can be stress-tested over random pairs.
Projection is 1-Lipschitz, so every envelope survives it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graphs import ReceptiveFieldMap
from .objectives import FieldObjective
from .sampling import SampleSet
from .seeding import child_rng


class SgdDivergenceError(RuntimeError):
    """Non-finite gradient encountered; carries step diagnostics."""


@dataclass(frozen=True)
class SgdConfig:
    step_size: float
    steps: int
    seed: int
    projection_radius: float | None = None  # defaults to the certificate radius
    step_schedule: object = None  # optional t -> alpha hook; bounds refuse schedules

    def __post_init__(self):
        if self.step_size < 0:
            raise ValueError("step size must be >= 0")
        if self.steps < 0:
            raise ValueError("step count must be >= 0")

    def alpha_at(self, t: int) -> float:
        if self.step_schedule is not None:
            return float(self.step_schedule(t))
        return self.step_size


@dataclass(frozen=True, eq=False)
class Trajectory:
    weights: np.ndarray  # (T+1, dim)
    indices: np.ndarray  # (T,)
    config: SgdConfig

    @property
    def final(self) -> np.ndarray:
        return self.weights[-1]


@dataclass(frozen=True, eq=False)
class CoupledTrace:
    base: Trajectory
    perturbed: Trajectory
    vertex: int  # the replaced vertex i
    delta_norms: np.ndarray  # (T+1,), ||delta^i w_t||
    case_labels: tuple  # length T, entries in {"hit", "self", "miss"}


def project(w: np.ndarray, radius: float) -> np.ndarray:
    norm = float(np.linalg.norm(w))
    if norm > radius:
        return w * (radius / norm)
    return w


def _radius(obj: FieldObjective, cfg: SgdConfig) -> float:
    if cfg.projection_radius is not None:
        return float(cfg.projection_radius)
    return obj.certificate.weight_radius


def sgd_step(w, alpha, i, z: SampleSet, rf: ReceptiveFieldMap, obj: FieldObjective,
             radius: float | None = None) -> np.ndarray:
    """One projected update G(w, alpha, i) on vertex i's objective."""
    if not 0 <= i < z.n:
        raise ValueError(f"vertex index {i} out of range")
    g = obj.gradient(z, rf, i, w)
    if not np.all(np.isfinite(g)):
        raise SgdDivergenceError(f"non-finite gradient at vertex {i}, w={w}")
    w_next = w - alpha * g
    if radius is None:
        radius = obj.certificate.weight_radius
    return project(w_next, radius)


def draw_indices(cfg: SgdConfig, n: int) -> np.ndarray:
    """The seeded uniform index stream n_1..n_T (with replacement)."""
    rng = child_rng(cfg.seed, "indices")
    return rng.integers(0, n, size=cfg.steps)


def train(z: SampleSet, rf: ReceptiveFieldMap, obj: FieldObjective, cfg: SgdConfig) -> Trajectory:
    """Run SGD from w_0 = 0 and record the full trajectory."""
    bound = obj.bind(z, rf)
    radius = _radius(obj, cfg)
    indices = draw_indices(cfg, z.n)
    w = np.zeros(obj.dim)
    weights = np.empty((cfg.steps + 1, obj.dim))
    weights[0] = w
    for t, i in enumerate(indices):
        g = bound.gradient(int(i), w)
        if not np.all(np.isfinite(g)):
            raise SgdDivergenceError(f"non-finite gradient at step {t}, vertex {i}")
        w = project(w - cfg.alpha_at(t) * g, radius)
        weights[t + 1] = w
    return Trajectory(weights=weights, indices=indices, config=cfg)


def train_pooled(sets, rf: ReceptiveFieldMap, obj: FieldObjective, cfg: SgdConfig) -> np.ndarray:
    """SGD over the pooled vertices of m sample sets; returns final weights.

    The index stream is uniform over the m*N pooled vertices; each visit
    takes a gradient step on that vertex's objective within its own graph
    copy. With m = 1 this is exactly the single-graph run.
    """
    bounds = [obj.bind(z, rf) for z in sets]
    radius = _radius(obj, cfg)
    n = sets[0].n
    total = len(sets) * n
    rng = child_rng(cfg.seed, "indices")
    pooled = rng.integers(0, total, size=cfg.steps)
    w = np.zeros(obj.dim)
    for t, k in enumerate(pooled):
        bound = bounds[int(k) // n]
        g = bound.gradient(int(k) % n, w)
        if not np.all(np.isfinite(g)):
            raise SgdDivergenceError(f"non-finite gradient at step {t}")
        w = project(w - cfg.alpha_at(t) * g, radius)
    return w


def case_label(rf: ReceptiveFieldMap, vertex: int, sampled: int) -> str:
    if sampled == vertex:
        return "self"
    if vertex in rf.xi[sampled]:
        return "hit"
    return "miss"


def coupled_train(z: SampleSet, z_pert: SampleSet, rf: ReceptiveFieldMap,
                  obj: FieldObjective, cfg: SgdConfig) -> CoupledTrace:
    """Run the shared-stream coupling on a pair differing at one vertex."""
    differing = z.differing_vertices(z_pert)
    if differing.size != 1:
        raise ValueError(
            f"coupled runs need sets differing at exactly one vertex, got {differing.tolist()}"
        )
    vertex = int(differing[0])
    bound = obj.bind(z, rf)
    bound_p = obj.bind(z_pert, rf)
    radius = _radius(obj, cfg)
    indices = draw_indices(cfg, z.n)

    w = np.zeros(obj.dim)
    wp = np.zeros(obj.dim)
    weights = np.empty((cfg.steps + 1, obj.dim))
    weights_p = np.empty((cfg.steps + 1, obj.dim))
    weights[0] = w
    weights_p[0] = wp
    deltas = np.empty(cfg.steps + 1)
    deltas[0] = 0.0
    labels = []
    for t, i in enumerate(indices):
        i = int(i)
        alpha = cfg.alpha_at(t)
        g = bound.gradient(i, w)
        gp = bound_p.gradient(i, wp)
        if not (np.all(np.isfinite(g)) and np.all(np.isfinite(gp))):
            raise SgdDivergenceError(f"non-finite gradient at step {t}, vertex {i}")
        w = project(w - alpha * g, radius)
        wp = project(wp - alpha * gp, radius)
        weights[t + 1] = w
        weights_p[t + 1] = wp
        deltas[t + 1] = float(np.linalg.norm(w - wp))
        labels.append(case_label(rf, vertex, i))

    base = Trajectory(weights=weights, indices=indices, config=cfg)
    pert = Trajectory(weights=weights_p, indices=indices.copy(), config=cfg)
    return CoupledTrace(base=base, perturbed=pert, vertex=vertex,
                        delta_norms=deltas, case_labels=tuple(labels))


def first_hit_time(trace_indices: np.ndarray, rf: ReceptiveFieldMap, vertex: int) -> int:
    """First step t >= 1 whose sampled receptive field contains the vertex.

    Returns steps + 1 if the vertex's field is never encountered; the tail
    P(Gamma > t) equals (1 - d_i)^t under uniform sampling.
    """
    for t, sampled in enumerate(trace_indices, start=1):
        if vertex in rf.xi[int(sampled)]:
            return t
    return len(trace_indices) + 1


# ---------------------------------------------------------------------------
# Per-step case envelopes


@dataclass(frozen=True)
class EnvelopeReport:
    regime: str
    margins: np.ndarray  # rhs - lhs per step; negative entries are violations
    labels: tuple
    regime_a_active: bool  # strongly convex: which hit-case branch applies
    ok: bool


def strongly_convex_hit_regime(alpha: float, lam: float, gamma: float) -> bool:
    """True when alpha^4 lam^2 + 2 alpha lam gamma / (lam + gamma) <= 1."""
    return alpha**4 * lam**2 + 2.0 * alpha * lam * gamma / (lam + gamma) <= 1.0


def envelope_check(trace: CoupledTrace, obj: FieldObjective, tol: float = 1e-9) -> EnvelopeReport:
    """Recheck every recorded step against its case bound.

    Strongly convex regime (contraction rho = 1 - alpha*lam*gamma/(lam+gamma)):
        hit  : alpha^2 lam d_prev + alpha B_Z zeta     (first branch)
               rho d_prev + alpha B_Z zeta             (second branch)
        self : d_prev + 2 alpha L
        miss : rho d_prev
    Smooth non-convex regime:
        hit  : (1 + alpha lam) d_prev + alpha B_Z zeta
        self : d_prev + 2 alpha L
        miss : (1 + alpha lam) d_prev

    The hit-case branch is chosen globally from the fixed step size. Both
    branch conditions overlap at equality; the active one is recorded.
    """
    cert = obj.certificate
    cfg = trace.base.config
    if cfg.step_schedule is not None:
        raise ValueError("envelopes are stated for a fixed step size; schedules are refused")
    alpha = cfg.step_size
    lam = cert.smoothness
    gamma = cert.strong_convexity
    strongly = getattr(obj, "strongly_convex", False) and gamma > 0
    regime_a = strongly_convex_hit_regime(alpha, lam, gamma) if strongly else False
    kick = alpha * cert.sample_diameter * cert.gradient_data_lipschitz
    self_kick = 2.0 * alpha * cert.lipschitz

    n_steps = len(trace.case_labels)
    margins = np.empty(n_steps)
    for t in range(n_steps):
        prev = trace.delta_norms[t]
        cur = trace.delta_norms[t + 1]
        label = trace.case_labels[t]
        if strongly:
            rho = 1.0 - alpha * lam * gamma / (lam + gamma)
            if label == "self":
                rhs = prev + self_kick
            elif label == "miss":
                rhs = rho * prev
            else:
                rhs = (alpha**2 * lam * prev + kick) if regime_a else (rho * prev + kick)
        else:
            grow = 1.0 + alpha * lam
            if label == "self":
                rhs = prev + self_kick
            elif label == "miss":
                rhs = grow * prev
            else:
                rhs = grow * prev + kick
        margins[t] = rhs - cur

    return EnvelopeReport(
        regime="strongly-convex" if strongly else "non-convex",
        margins=margins,
        labels=trace.case_labels,
        regime_a_active=regime_a,
        ok=bool(np.all(margins >= -tol)),
    )


# ---------------------------------------------------------------------------
# Contraction stress test for the raw update map


@dataclass(frozen=True)
class ContractionReport:
    max_ratio: float  # over all sampled pairs
    max_ratio_convex: float | None  # checked when alpha <= 2/lam and convex
    max_ratio_strongly: float | None  # checked when alpha <= 2/(lam+gamma)
    bound_general: float  # 1 + alpha lam
    bound_strongly: float | None  # 1 - alpha lam gamma / (lam + gamma)
    trials: int


def contraction_check(obj: FieldObjective, alpha: float, trials: int, seed: int) -> ContractionReport:
    """Empirical Lipschitz ratios of the unprojected update map G.

    Verifies three clauses on random (w, w', instance) triples: the general
    (1 + alpha lam) bound, the 1-bound for convex objectives with
    alpha <= 2/lam, and the strong-convexity contraction for
    alpha <= 2/(lam + gamma).
    """
    cert = obj.certificate
    lam = cert.smoothness
    gamma = cert.strong_convexity
    rng = child_rng(seed, "contraction")
    convex = getattr(obj, "convex", False)
    strongly = getattr(obj, "strongly_convex", False) and gamma > 0

    worst = 0.0
    for _ in range(trials):
        x, y = obj._random_field(rng)
        u = obj.field_feature(x)
        w1, w2 = obj._random_w(rng, 2)
        dw = np.linalg.norm(w1 - w2)
        if dw < 1e-12:
            continue
        g1 = w1 - alpha * obj.grad_uy(u, y, w1)
        g2 = w2 - alpha * obj.grad_uy(u, y, w2)
        worst = max(worst, float(np.linalg.norm(g1 - g2) / dw))

    return ContractionReport(
        max_ratio=worst,
        max_ratio_convex=worst if (convex and alpha <= 2.0 / lam) else None,
        max_ratio_strongly=worst if (strongly and alpha <= 2.0 / (lam + gamma)) else None,
        bound_general=1.0 + alpha * lam,
        bound_strongly=(1.0 - alpha * lam * gamma / (lam + gamma)) if strongly else None,
        trials=trials,
    )
