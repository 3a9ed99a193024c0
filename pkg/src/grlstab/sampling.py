"""Vertex samplers: i.i.d. baseline and a binary-spin Gibbs family.

The Gibbs family P(s) ~ exp(0.5 s'Js + h's) over s in {-1,+1}^N is the
concrete weakly dependent distribution used throughout: its single-site
conditionals are logistic, Glauber dynamics mixes fast in the weak-coupling
regime, and the Dobrushin influence coefficient

    alpha = sup_{i != j} sup_{s_-i-j, s_j, s_j'}
            TV( P(s_i | rest, s_j), P(s_i | rest, s_j') )

is exactly enumerable at desk scale. Spins are embedded into vertex samples
Z_i = (X_i, Y_i) through a fixed per-vertex unit direction (X_i = s_i B_X q_i)
so the embedded sample process inherits the spin coefficient: the features
determine the spins, hence conditional laws are pushforwards under a fixed
injective map and total variation is preserved.

Perturbed sets Z^Lambda replace the samples indexed by Lambda and keep every
other coordinate bit-identical, which realizes the single-vertex sets Z^i
used by the stability definitions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graphs import ReceptiveFieldMap
from .seeding import child_rng


class CapacityError(ValueError):
    """Problem size exceeds what exact enumeration supports."""


@dataclass(frozen=True, eq=False)
class VertexSample:
    x: np.ndarray  # feature vector, ||x|| <= B_X
    y: float  # label, |y| <= B_y


@dataclass(frozen=True, eq=False)
class SampleSet:
    """Per-vertex feature/label pairs with perturbation lineage.

    ``perturbed`` records the index set Lambda of replaced vertices relative
    to the parent draw; a freshly sampled set has an empty Lambda.
    ``spins`` keeps the underlying binary configuration for Gibbs-born sets
    (needed for conditional resampling and exhaustive enumeration).
    """

    features: np.ndarray  # (n, dim)
    labels: np.ndarray  # (n,)
    sampler_id: str
    seed: int
    perturbed: frozenset = frozenset()
    spins: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    def sample(self, i: int) -> VertexSample:
        return VertexSample(x=self.features[i].copy(), y=float(self.labels[i]))

    def differing_vertices(self, other: "SampleSet") -> np.ndarray:
        """Indices where the two sets disagree in feature or label."""
        if self.features.shape != other.features.shape:
            raise ValueError("sample sets have mismatched shapes")
        feat_diff = np.any(self.features != other.features, axis=1)
        lab_diff = self.labels != other.labels
        return np.nonzero(feat_diff | lab_diff)[0]


def sample_space_diameter(b_x: float, b_y: float) -> float:
    """sup ||Z_i - Z_j|| over the admissible sample space."""
    return float(np.hypot(2.0 * b_x, 2.0 * b_y))


# ---------------------------------------------------------------------------
# i.i.d. baseline sampler


@dataclass(frozen=True, eq=False)
class IidSampler:
    """Product-measure sampler: Dobrushin coefficient zero by construction.

    Features are uniform on the box [-B_X/sqrt(dim), B_X/sqrt(dim)]^dim so
    ||X_i|| <= B_X; the label is the fixed bounded rule
    y_i = clamp(sum(X_i)/sqrt(dim) + noise, +-B_y), a function of the own
    feature only, which keeps the coordinates independent.
    """

    rf: ReceptiveFieldMap
    dim: int
    b_x: float = 1.0
    b_y: float = 1.0
    label_noise: float = 0.0

    @property
    def id(self) -> str:
        return f"iid(dim={self.dim},bx={self.b_x},by={self.b_y})"

    @property
    def n(self) -> int:
        return self.rf.n

    def diameter(self) -> float:
        return sample_space_diameter(self.b_x, self.b_y)

    def _draw_rows(self, rng: np.random.Generator, count: int):
        half = self.b_x / np.sqrt(self.dim)
        x = rng.uniform(-half, half, size=(count, self.dim))
        y = np.clip(x.sum(axis=1) / np.sqrt(self.dim), -self.b_y, self.b_y)
        if self.label_noise > 0.0:
            y = y + rng.uniform(-self.label_noise, self.label_noise, size=count)
            y = np.clip(y, -self.b_y, self.b_y)
        return x, y

    def sample(self, seed: int) -> SampleSet:
        rng = child_rng(seed, "iid-draw")
        x, y = self._draw_rows(rng, self.n)
        return SampleSet(features=x, labels=y, sampler_id=self.id, seed=int(seed))

    def replace(self, z: SampleSet, indices, seed: int, mode: str = "fresh-marginal") -> SampleSet:
        """Redraw the vertices in Lambda; marginal and conditional coincide here."""
        if mode not in ("fresh-marginal", "fresh-conditional"):
            raise ValueError(f"unknown replacement mode {mode!r}")
        indices = sorted(int(i) for i in set(indices))
        if any(i < 0 or i >= z.n for i in indices):
            raise ValueError("replacement index out of range")
        features = z.features.copy()
        labels = z.labels.copy()
        if indices:
            rng = child_rng(seed, "iid-replace")
            x, y = self._draw_rows(rng, len(indices))
            features[indices] = x
            labels[indices] = y
        return SampleSet(
            features=features,
            labels=labels,
            sampler_id=z.sampler_id,
            seed=z.seed,
            perturbed=frozenset(indices),
            spins=None,
        )


def sample_iid(rf: ReceptiveFieldMap, dim: int, seed: int, b_x: float = 1.0, b_y: float = 1.0) -> SampleSet:
    return IidSampler(rf=rf, dim=dim, b_x=b_x, b_y=b_y).sample(seed)


# ---------------------------------------------------------------------------
# Binary-spin Gibbs family


@dataclass(frozen=True, eq=False)
class IsingSpec:
    """Binary-spin Gibbs measure plus the maps from spins to vertex samples.

    P(s) ~ exp(0.5 s'Js + h's) with symmetric zero-diagonal coupling J.
    Feature map: X_i = s_i * B_X * q_i with q_i a fixed unit basis direction
    (identity columns, cycled when feature_dim < n). Label rules:

    - "field-mean": y_i = clamp(mean of spins over Xi(i), +-B_y); labels
      depend on the receptive field, exercising the learning problem.
    - "self": y_i = clamp(s_i, +-B_y); single-coordinate replacements stay
      inside the binary cube, which exhaustive oracles require.
    """

    coupling: np.ndarray  # (n, n) symmetric, zero diagonal
    external_field: np.ndarray  # (n,)
    rf: ReceptiveFieldMap
    feature_dim: int = 3
    b_x: float = 1.0
    b_y: float = 1.0
    label_rule: str = "field-mean"

    def __post_init__(self):
        j = np.asarray(self.coupling, dtype=float)
        h = np.asarray(self.external_field, dtype=float)
        if j.ndim != 2 or j.shape[0] != j.shape[1]:
            raise ValueError("coupling must be square")
        if j.shape[0] != self.rf.n or h.shape != (self.rf.n,):
            raise ValueError("coupling/field sizes must match the receptive-field map")
        if not np.all(np.isfinite(j)) or not np.all(np.isfinite(h)):
            raise ValueError("coupling and field entries must be finite")
        if not np.allclose(j, j.T):
            raise ValueError("coupling must be symmetric")
        if np.any(np.diag(j) != 0.0):
            raise ValueError("coupling diagonal must be zero")
        if self.label_rule not in ("field-mean", "self"):
            raise ValueError(f"unknown label rule {self.label_rule!r}")
        if self.feature_dim < 1:
            raise ValueError("feature_dim must be >= 1")
        object.__setattr__(self, "coupling", j)
        object.__setattr__(self, "external_field", h)

    @property
    def n(self) -> int:
        return self.rf.n

    def diameter(self) -> float:
        return sample_space_diameter(self.b_x, self.b_y)

    def feature_directions(self) -> np.ndarray:
        """(n, feature_dim) unit directions q_i (identity columns, cycled)."""
        q = np.zeros((self.n, self.feature_dim))
        q[np.arange(self.n), np.arange(self.n) % self.feature_dim] = 1.0
        return q

    def features_from_spins(self, spins: np.ndarray) -> np.ndarray:
        """Map spin configurations (..., n) to features (..., n, feature_dim)."""
        spins = np.asarray(spins, dtype=float)
        return spins[..., :, None] * (self.b_x * self.feature_directions())

    def labels_from_spins(self, spins: np.ndarray) -> np.ndarray:
        spins = np.asarray(spins, dtype=float)
        if self.label_rule == "self":
            return np.clip(spins, -self.b_y, self.b_y)
        out = np.empty_like(spins)
        for i in range(self.n):
            members = list(self.rf.xi[i])
            out[..., i] = np.clip(spins[..., members].mean(axis=-1), -self.b_y, self.b_y)
        return out

    def sample_set_from_spins(self, spins: np.ndarray, seed: int, perturbed=frozenset()) -> SampleSet:
        spins = np.asarray(spins, dtype=int)
        if spins.shape != (self.n,):
            raise ValueError("expected a single spin configuration")
        return SampleSet(
            features=self.features_from_spins(spins),
            labels=self.labels_from_spins(spins),
            sampler_id=f"ising(rule={self.label_rule})",
            seed=int(seed),
            perturbed=frozenset(perturbed),
            spins=spins.copy(),
        )


def _sigmoid(t: np.ndarray) -> np.ndarray:
    out = np.empty_like(t, dtype=float)
    pos = t >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-t[pos]))
    e = np.exp(t[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def glauber_spins(
    spec: IsingSpec, sweeps: int, rng: np.random.Generator, n_chains: int = 1
) -> np.ndarray:
    """Run independent single-site Glauber chains; returns (n_chains, n) spins.

    One sweep visits every site once in index order; each visit resamples the
    spin from its exact conditional P(s_i = +1 | rest) = sigmoid(2(J_i.s + h_i)).
    """
    n = spec.n
    spins = rng.choice(np.array([-1, 1], dtype=np.int8), size=(n_chains, n))
    j = spec.coupling
    h = spec.external_field
    for _ in range(sweeps):
        for site in range(n):
            local = spins @ j[site] + h[site]
            p_up = _sigmoid(2.0 * local)
            spins[:, site] = np.where(rng.random(n_chains) < p_up, 1, -1).astype(np.int8)
    return spins.astype(int)


@dataclass(frozen=True, eq=False)
class IsingSampler:
    """Approximate Gibbs sampler via Glauber dynamics with fixed burn-in."""

    spec: IsingSpec
    sweeps: int = 1000
    min_sweeps: int = 1000

    def __post_init__(self):
        if self.sweeps < self.min_sweeps:
            raise ValueError(
                f"sweeps={self.sweeps} below burn-in threshold {self.min_sweeps}"
            )

    @property
    def id(self) -> str:
        return f"glauber(sweeps={self.sweeps},rule={self.spec.label_rule})"

    @property
    def n(self) -> int:
        return self.spec.n

    @property
    def rf(self) -> ReceptiveFieldMap:
        return self.spec.rf

    def diameter(self) -> float:
        return self.spec.diameter()

    def sample(self, seed: int) -> SampleSet:
        spins = glauber_spins(self.spec, self.sweeps, child_rng(seed, "glauber"), 1)[0]
        return self.spec.sample_set_from_spins(spins, seed)

    def sample_spins_batch(self, n_chains: int, seed: int) -> np.ndarray:
        """(n_chains, n) independent approximate Gibbs draws, vectorized."""
        return glauber_spins(self.spec, self.sweeps, child_rng(seed, "glauber-batch"), n_chains)

    def sample_batch(self, n_chains: int, seed: int):
        spins = self.sample_spins_batch(n_chains, seed)
        return [self.spec.sample_set_from_spins(spins[k], seed) for k in range(n_chains)]

    def replace(self, z: SampleSet, indices, seed: int, mode: str = "fresh-conditional") -> SampleSet:
        """Replace the vertices in Lambda.

        fresh-conditional resamples each spin in Lambda from the exact Gibbs
        conditional given the current remaining configuration (one Glauber
        touch per site, in index order). fresh-marginal takes the Lambda
        coordinates of an independent fresh chain, i.e. a draw from the
        joint marginal over Lambda.
        """
        if mode not in ("fresh-marginal", "fresh-conditional"):
            raise ValueError(f"unknown replacement mode {mode!r}")
        if z.spins is None:
            raise ValueError("sample set does not carry spins; not Gibbs-born")
        indices = sorted(int(i) for i in set(indices))
        if any(i < 0 or i >= z.n for i in indices):
            raise ValueError("replacement index out of range")
        spins = z.spins.copy()
        if indices:
            rng = child_rng(seed, "ising-replace", mode)
            if mode == "fresh-conditional":
                for site in indices:
                    local = float(spins @ self.spec.coupling[site] + self.spec.external_field[site])
                    p_up = float(_sigmoid(np.array([2.0 * local]))[0])
                    spins[site] = 1 if rng.random() < p_up else -1
            else:
                fresh = glauber_spins(self.spec, self.sweeps, rng, 1)[0]
                spins[indices] = fresh[indices]
        new = self.spec.sample_set_from_spins(spins, z.seed, perturbed=indices)
        # Keep unreplaced coordinates bit-identical to the parent: labels of
        # vertices outside Lambda were computed from the parent configuration.
        features = z.features.copy()
        labels = z.labels.copy()
        if indices:
            features[indices] = new.features[indices]
            labels[indices] = new.labels[indices]
        return SampleSet(
            features=features,
            labels=labels,
            sampler_id=z.sampler_id,
            seed=z.seed,
            perturbed=frozenset(indices),
            spins=spins,
        )


def glauber_sample(spec: IsingSpec, sweeps: int, seed: int, min_sweeps: int = 1000) -> SampleSet:
    return IsingSampler(spec=spec, sweeps=sweeps, min_sweeps=min_sweeps).sample(seed)


# ---------------------------------------------------------------------------
# Exact enumeration (desk scale)

ENUMERATION_LIMIT = 12


def enumerate_spin_configs(n: int) -> np.ndarray:
    """All 2^n configurations in {-1,+1}^n, one per row, lexicographic."""
    if n > ENUMERATION_LIMIT:
        raise CapacityError(f"enumeration limited to n <= {ENUMERATION_LIMIT}, got {n}")
    bits = (np.arange(2**n)[:, None] >> np.arange(n)[::-1]) & 1
    return (2 * bits - 1).astype(int)


def gibbs_log_weights(spec: IsingSpec, configs: np.ndarray) -> np.ndarray:
    s = configs.astype(float)
    return 0.5 * np.einsum("ki,ij,kj->k", s, spec.coupling, s) + s @ spec.external_field


def gibbs_probabilities(spec: IsingSpec) -> np.ndarray:
    """Exact Gibbs probabilities over enumerate_spin_configs(spec.n)."""
    logw = gibbs_log_weights(spec, enumerate_spin_configs(spec.n))
    logw -= logw.max()
    w = np.exp(logw)
    return w / w.sum()


def exact_magnetization(spec: IsingSpec) -> np.ndarray:
    configs = enumerate_spin_configs(spec.n)
    p = gibbs_probabilities(spec)
    return p @ configs.astype(float)


def dobrushin_exact(spec: IsingSpec) -> float:
    """Exact Dobrushin influence coefficient by full enumeration.

    alpha = max over ordered pairs (i, j), i != j, over all conditioning
    configurations of the remaining n-2 spins, of the total variation
    between the two single-site conditionals of s_i as s_j flips. For the
    logistic conditional this is |sigmoid(2(b + J_ij)) - sigmoid(2(b - J_ij))|
    with b the local field at i from the conditioning spins.
    """
    n = spec.n
    if n > ENUMERATION_LIMIT:
        raise CapacityError(
            f"dobrushin_exact supports n <= {ENUMERATION_LIMIT}; "
            "use dobrushin_upper_bound for larger specs"
        )
    if n < 2:
        return 0.0
    j = spec.coupling
    h = spec.external_field
    alpha = 0.0
    for i in range(n):
        others = [k for k in range(n) if k != i]
        for jdx in others:
            rest = [k for k in others if k != jdx]
            if rest:
                rest_configs = enumerate_spin_configs(len(rest)).astype(float)
                b = rest_configs @ j[i, rest] + h[i]
            else:
                b = np.array([h[i]])
            p_plus = _sigmoid(2.0 * (b + j[i, jdx]))
            p_minus = _sigmoid(2.0 * (b - j[i, jdx]))
            influence = float(np.max(np.abs(p_plus - p_minus)))
            alpha = max(alpha, influence)
    return alpha


def dobrushin_upper_bound(spec: IsingSpec) -> float:
    """max_i sum_{j != i} tanh(|J_ij|).

    Each pairwise influence of the logistic conditional is at most
    tanh(|J_ij|) (attained at zero local field), so this row-sum dominates
    the exact pairwise coefficient for any binary Gibbs measure.
    """
    t = np.tanh(np.abs(spec.coupling))
    np.fill_diagonal(t, 0.0)
    return float(t.sum(axis=1).max()) if spec.n > 1 else 0.0


# ---------------------------------------------------------------------------
# Empirical pairwise influence (Monte Carlo conditional-TV proxy)


def pairwise_influence_proxy(signs: np.ndarray, i: int, j: int):
    """TV between P(sign_i = +1 | sign_j = +1) and (... | sign_j = -1).

    ``signs`` is a (draws, n) matrix of +-1 statistics (spins, or feature
    signs for continuous samplers). Returns (tv_estimate, standard_error);
    the SE is the binomial SE of the difference of the two conditional
    frequencies. A product measure has influence zero for every pair.
    """
    signs = np.asarray(signs)
    up = signs[:, j] > 0
    down = ~up
    n_up, n_down = int(up.sum()), int(down.sum())
    if n_up == 0 or n_down == 0:
        raise ValueError("conditioning value never observed; need more draws")
    p = float(np.mean(signs[up, i] > 0))
    q = float(np.mean(signs[down, i] > 0))
    se = float(np.sqrt(p * (1 - p) / n_up + q * (1 - q) / n_down))
    return abs(p - q), se
