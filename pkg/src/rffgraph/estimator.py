"""Online group-sparse estimation of nonlinear VAR topology in feature space.

Every lagged sample y_{n'}[t-p] is lifted through a 2D-dimensional random
Fourier feature block; the blocks for all (p, n') are stacked, in
lexicographic order of (p, n', d), into one feature vector z_t of length
2*P*N*D.  Node n's one-step-ahead prediction is alpha_n^T z_t, and after
each sample every (n', p) coefficient group of every node is updated with
a closed-form gradient-plus-group-soft-threshold step:

    u      = group - step * grad_group
    group' = u * max(0, 1 - step * lam / ||u||)

which is the exact minimizer of the linearized loss plus a squared
proximity term (weight 1/(2*step)) plus the group-lasso penalty.  Groups
whose ||u|| falls at or below step * lam become exactly zero, so the
iterates are genuinely sparse.  The per-sample work is Theta(N^2 P D),
independent of how many samples have been seen.

Step-size convention: EstimatorConfig.gamma is the proximal damping
weight, i.e. the squared-proximity term carries weight gamma/2 and the
resulting gradient step is 1/gamma.  Large gamma therefore means strong
damping and small steps.  (The raw step size itself is the `gamma`
argument of the low-level update functions.)
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigError, DivergenceError
from .kernels import GaussianKernel, RFFMap, sample_frequencies
from .generator import TimeSeries

ALPHA_LIMIT = 1e12  # coefficient magnitude beyond which the run is declared divergent


def group_norms(x: np.ndarray) -> np.ndarray:
    """Euclidean norms over the last axis, scaled to avoid overflow.

    Equivalent to np.linalg.norm(x, axis=-1) but safe for entries whose
    squares would overflow.
    """
    m = np.max(np.abs(x), axis=-1, keepdims=True)
    safe = np.where(m > 0, m, 1.0)
    scaled = x / safe
    return safe[..., 0] * np.sqrt(np.einsum("...d,...d->...", scaled, scaled))


@dataclass(frozen=True)
class EstimatorConfig:
    """Shapes, regularization, and feature-map seeds for one estimator.

    gamma is the proximal damping weight (per-iteration step = 1/gamma);
    lam is the group-lasso regularizer weight applied at every iteration.
    schedule: "constant" keeps the step at 1/gamma; "sqrt_decay" divides
    it by sqrt(k) at the k-th update.
    """

    N: int
    P: int
    D: int
    lam: float = 0.1
    gamma: float = 1000.0
    kernel_variance: float = 0.1
    rff_seed: int = 0
    schedule: str = "constant"
    per_slot_maps: bool = False

    def __post_init__(self):
        if self.N < 1 or self.P < 1 or self.D < 1:
            raise ConfigError(f"N, P, D must be positive, got ({self.N}, {self.P}, {self.D})")
        if self.lam < 0:
            raise ConfigError(f"lam must be nonnegative, got {self.lam}")
        if self.gamma <= 0:
            raise ConfigError(f"gamma must be positive, got {self.gamma}")
        if self.kernel_variance <= 0:
            raise ConfigError(f"kernel_variance must be positive, got {self.kernel_variance}")
        if self.schedule not in ("constant", "sqrt_decay"):
            raise ConfigError(f"unknown schedule {self.schedule!r}")

    def step_size(self, k: int) -> float:
        """Step applied at the k-th update (k >= 1)."""
        base = 1.0 / self.gamma
        if self.schedule == "sqrt_decay":
            return base / np.sqrt(k)
        return base


class FeatureMaps:
    """Random feature maps assigned to every (lag, source-node) slot.

    Holds a (P, N, D) frequency array; slot (p, n') lifts y_{n'}[t-p-1]
    through its own frequency row.  By default one map is shared by all
    slots.
    """

    def __init__(self, maps, N: int, P: int):
        self.N = N
        self.P = P
        if isinstance(maps, RFFMap):
            self.shared = True
            self.maps = maps
            self.D = maps.D
            self.frequencies = np.broadcast_to(maps.frequencies, (P, N, maps.D))
        else:
            self.shared = False
            self.maps = [list(row) for row in maps]
            if len(self.maps) != P or any(len(row) != N for row in self.maps):
                raise ConfigError("per-slot maps must form a (P, N) grid")
            self.D = self.maps[0][0].D
            if any(m.D != self.D for row in self.maps for m in row):
                raise ConfigError("all feature maps must share the same D")
            self.frequencies = np.stack(
                [np.stack([m.frequencies for m in row]) for row in self.maps]
            )

    @classmethod
    def from_config(cls, cfg: EstimatorConfig) -> "FeatureMaps":
        kernel = GaussianKernel(cfg.kernel_variance)
        if not cfg.per_slot_maps:
            return cls(sample_frequencies(kernel, cfg.D, cfg.rff_seed), cfg.N, cfg.P)
        grid = [
            [sample_frequencies(kernel, cfg.D, cfg.rff_seed + p * cfg.N + n) for n in range(cfg.N)]
            for p in range(cfg.P)
        ]
        return cls(grid, cfg.N, cfg.P)


@dataclass
class CoefficientState:
    """Stacked coefficients for all nodes at one iteration.

    alpha[n, p, n', :] is node n's length-2D group for source n' at lag
    p+1; alpha[n].ravel() is exactly the stacked vector in lexicographic
    (p, n', d) order.
    """

    alpha: np.ndarray  # (N, P, N, 2D)
    t: int = 0

    @classmethod
    def zeros(cls, N: int, P: int, D: int, t: int = 0) -> "CoefficientState":
        return cls(alpha=np.zeros((N, P, N, 2 * D)), t=t)

    @property
    def shape(self):
        return self.alpha.shape

    def group(self, n: int, n_src: int, p: int) -> np.ndarray:
        """The (n', p) coefficient group of node n; p is the lag, 1-based."""
        return self.alpha[n, p - 1, n_src]

    def stacked(self, n: int) -> np.ndarray:
        return self.alpha[n].ravel()


def build_feature_vector(history: np.ndarray, maps: FeatureMaps) -> np.ndarray:
    """Lift the lag window into the stacked feature array of shape (P, N, 2D).

    history[p, n'] must hold y_{n'}[t - (p+1)] (row 0 = newest past
    sample).  Block (p, n') of the result equals the feature map of slot
    (p, n') evaluated at history[p, n']; .ravel() yields the stacked
    2*P*N*D vector.
    """
    history = np.asarray(history, dtype=float)
    if history.shape != (maps.P, maps.N):
        raise ValueError(f"history must have shape (P, N) = {(maps.P, maps.N)}, got {history.shape}")
    if not np.isfinite(history).all():
        raise ValueError("history contains non-finite values")
    arg = history[:, :, None] * maps.frequencies
    return np.concatenate([np.sin(arg), np.cos(arg)], axis=-1) / np.sqrt(maps.D)


def predict(alpha_n: np.ndarray, z: np.ndarray) -> float:
    """One-step-ahead prediction alpha_n^T z."""
    a = np.asarray(alpha_n, dtype=float).ravel()
    zz = np.asarray(z, dtype=float).ravel()
    if a.shape != zz.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {zz.shape}")
    return float(a @ zz)


def instantaneous_loss(alpha_n: np.ndarray, z: np.ndarray, y: float) -> float:
    """Half squared prediction error at one sample."""
    r = y - predict(alpha_n, z)
    return 0.5 * r * r


def gradient(alpha_n: np.ndarray, z: np.ndarray, y: float) -> np.ndarray:
    """Gradient of the instantaneous loss: z * (alpha_n^T z - y).

    Returned with the same shape as alpha_n; always collinear with z.
    """
    a = np.asarray(alpha_n, dtype=float)
    zz = np.asarray(z, dtype=float)
    r = predict(a, zz) - y
    return (zz * r).reshape(a.shape)


def comid_group_update(group: np.ndarray, grad_group: np.ndarray, gamma: float,
                       lam: float) -> np.ndarray:
    """Closed-form group update: gradient step then multidimensional shrinkage.

    gamma is the raw step size applied to the gradient; the shrinkage
    threshold is gamma * lam.  Groups whose shifted point u =
    group - gamma * grad_group satisfies ||u|| <= gamma * lam come back as
    exact zero vectors.
    """
    if gamma <= 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    if lam < 0:
        raise ValueError(f"lam must be nonnegative, got {lam}")
    g = np.asarray(group, dtype=float)
    v = np.asarray(grad_group, dtype=float)
    if g.shape != v.shape:
        raise ValueError(f"dimension mismatch: {g.shape} vs {v.shape}")
    if not (np.isfinite(g).all() and np.isfinite(v).all()):
        raise ValueError("non-finite inputs")
    u = g - gamma * v
    return _shrink_groups(u, gamma * lam)


def _shrink_groups(u: np.ndarray, thr: float) -> np.ndarray:
    """Vectorized shrinkage over the last axis of u (groups of size 2D)."""
    norms = group_norms(u)
    safe = np.where(norms > thr, norms, 1.0)
    factor = np.where(norms > thr, 1.0 - thr / safe, 0.0)
    return u * factor[..., None]


def online_step(state: CoefficientState, history: np.ndarray, sample: np.ndarray,
                maps: FeatureMaps, gamma: float, lam: float):
    """One full estimation step for all nodes from a new sample vector.

    history is the (P, N) lag window preceding `sample`; gamma is the raw
    step size for this iteration.  Builds z_t once, then updates each of
    the N*P groups of every node independently (the update is separable
    across groups).  Returns (new_state, predictions, losses), where
    predictions[n] = alpha_n^T z_t computed before the update.
    """
    sample = np.asarray(sample, dtype=float)
    N, P = maps.N, maps.P
    if sample.shape != (N,):
        raise ValueError(f"sample must have shape ({N},), got {sample.shape}")
    z = build_feature_vector(history, maps)
    yhat = np.einsum("npqd,pqd->n", state.alpha, z)
    resid = yhat - sample
    losses = 0.5 * resid * resid
    grad = resid[:, None, None, None] * z[None]
    u = state.alpha - gamma * grad
    alpha = _shrink_groups(u, gamma * lam)
    if not np.isfinite(alpha).all() or np.abs(alpha).max() > ALPHA_LIMIT:
        raise DivergenceError(f"estimator diverged at iteration {state.t + 1}")
    return CoefficientState(alpha=alpha, t=state.t + 1), yhat, losses


@dataclass
class EstimateSeries:
    """Per-sample outputs of an online run.

    group_norms[t, n, n', p] is the pseudo-adjacency entry
    ||alpha_{n,n'}^{(p)}[t]||_2 recorded *after* the update at time t;
    predictions and losses are NaN during the warm-up rows (t < P).
    """

    predictions: np.ndarray  # (N, T)
    losses: np.ndarray  # (N, T)
    group_norms: np.ndarray  # (T, N, N, P)
    state: CoefficientState
    config: EstimatorConfig


class OnlineEstimator:
    """Streaming driver: buffers the lag window and applies online_step.

    Feed samples oldest-first through step(); the first P samples only
    fill the warm-up buffer and return None.
    """

    def __init__(self, cfg: EstimatorConfig, maps: FeatureMaps | None = None,
                 state: CoefficientState | None = None, history: np.ndarray | None = None):
        self.cfg = cfg
        self.maps = maps if maps is not None else FeatureMaps.from_config(cfg)
        self.state = state if state is not None else CoefficientState.zeros(cfg.N, cfg.P, cfg.D)
        # history[p] = p+1 samples ago; filled once warm-up completes
        self._history = None if history is None else np.array(history, dtype=float)
        self._warm = 0 if self._history is None else cfg.P

    @property
    def warmed_up(self) -> bool:
        return self._warm >= self.cfg.P

    @property
    def history(self) -> np.ndarray | None:
        return None if self._history is None else self._history.copy()

    def step(self, sample: np.ndarray):
        """Ingest one sample; returns (predictions, losses) or None during warm-up."""
        sample = np.asarray(sample, dtype=float)
        if sample.shape != (self.cfg.N,):
            raise ValueError(f"sample must have shape ({self.cfg.N},), got {sample.shape}")
        if not self.warmed_up:
            if self._history is None:
                self._history = np.zeros((self.cfg.P, self.cfg.N))
            self._history[1:] = self._history[:-1]
            self._history[0] = sample
            self._warm += 1
            return None
        k = self.state.t + 1
        self.state, yhat, losses = online_step(
            self.state, self._history, sample, self.maps, self.cfg.step_size(k), self.cfg.lam
        )
        self._history[1:] = self._history[:-1]
        self._history[0] = sample
        return yhat, losses

    def pseudo_adjacency(self) -> np.ndarray:
        """Current per-group norms arranged as (n, n', p)."""
        return np.transpose(group_norms(self.state.alpha), (0, 2, 1))

    def run(self, values: np.ndarray) -> EstimateSeries:
        """Consume a whole (N, T) series and record the estimate trajectory."""
        values = np.asarray(values, dtype=float)
        N, T = values.shape
        if N != self.cfg.N:
            raise ValueError(f"series has {N} nodes, config expects {self.cfg.N}")
        if T < self.cfg.P + 1:
            raise ValueError(f"series too short: need more than P={self.cfg.P} samples")
        preds = np.full((N, T), np.nan)
        losses = np.full((N, T), np.nan)
        norms = np.zeros((T, N, N, self.cfg.P))
        for t in range(T):
            out = self.step(values[:, t])
            if out is not None:
                preds[:, t], losses[:, t] = out
            norms[t] = self.pseudo_adjacency()
        return EstimateSeries(predictions=preds, losses=losses, group_norms=norms,
                              state=self.state, config=self.cfg)


@dataclass
class BatchResult:
    """Proximal-gradient solution of the batch group-lasso problem."""

    state: CoefficientState
    objectives: np.ndarray  # (N, iterations used) per-node objective traces
    converged: bool


def batch_oracle(data, cfg: EstimatorConfig, iterations: int = 2000,
                 tolerance: float = 1e-9, maps: FeatureMaps | None = None) -> BatchResult:
    """Minimize the full-batch objective per node by proximal gradient.

    Objective: 0.5 * sum_tau (y_n[tau] - alpha_n^T z_tau)^2
               + cfg.lam * sum_groups ||group||_2.
    The step is 1/L with L the largest eigenvalue of sum_tau z z^T,
    estimated by power iteration.  Stops when the relative objective
    decrease falls below `tolerance`; warns if that never happens within
    `iterations`.
    """
    values = data.values if isinstance(data, TimeSeries) else np.asarray(data, dtype=float)
    N, T = values.shape
    if T <= cfg.P:
        raise ValueError(f"need T > P, got T={T}, P={cfg.P}")
    if maps is None:
        maps = FeatureMaps.from_config(cfg)
    K = 2 * cfg.P * cfg.N * cfg.D
    Z = np.empty((T - cfg.P, K))
    for i, t in enumerate(range(cfg.P, T)):
        hist = values[:, t - cfg.P : t][:, ::-1].T
        Z[i] = build_feature_vector(hist, maps).ravel()
    G = Z.T @ Z
    # power iteration for the Lipschitz constant
    v = np.full(K, 1.0 / np.sqrt(K))
    lip = 1.0
    for _ in range(200):
        w = G @ v
        lip = float(np.linalg.norm(w))
        if lip == 0:
            break
        v = w / lip
    step = 1.0 / max(lip * 1.02, 1e-12)

    n_groups = cfg.N * cfg.P
    gdim = 2 * cfg.D
    alpha = np.zeros((N, cfg.P, cfg.N, gdim))
    obj_traces = []
    converged = True
    for n in range(N):
        y = values[n, cfg.P :]
        c = Z.T @ y
        yty = float(y @ y)
        a = np.zeros(K)
        objs = []
        prev = np.inf
        for _ in range(iterations):
            grad = G @ a - c
            u = (a - step * grad).reshape(n_groups, gdim)
            a = _shrink_groups(u, step * cfg.lam).ravel()
            quad = 0.5 * (a @ (G @ a) - 2.0 * (c @ a) + yty)
            obj = quad + cfg.lam * group_norms(a.reshape(n_groups, gdim)).sum()
            objs.append(obj)
            if prev - obj < tolerance * max(abs(prev), 1.0):
                break
            prev = obj
        else:
            converged = False
            warnings.warn(f"batch_oracle: node {n} did not converge in {iterations} iterations")
        alpha[n] = a.reshape(cfg.P, cfg.N, gdim)
        obj_traces.append(np.array(objs))
    maxlen = max(len(o) for o in obj_traces)
    padded = np.full((N, maxlen), np.nan)
    for n, o in enumerate(obj_traces):
        padded[n, : len(o)] = o
    return BatchResult(state=CoefficientState(alpha=alpha, t=T - cfg.P),
                       objectives=padded, converged=converged)


def linear_baseline_step(alpha: np.ndarray, history: np.ndarray, sample: np.ndarray,
                         gamma: float, lam: float):
    """Online step with raw lagged samples as features and scalar groups.

    alpha has shape (N, P, N): one coefficient per (node, lag, source).
    Same gradient-plus-shrinkage update as online_step, with each
    coefficient its own group (soft-thresholding).
    """
    history = np.asarray(history, dtype=float)
    sample = np.asarray(sample, dtype=float)
    N = alpha.shape[0]
    if history.shape != alpha.shape[1:]:
        raise ValueError(f"history must have shape {alpha.shape[1:]}, got {history.shape}")
    yhat = np.einsum("npq,pq->n", alpha, history)
    resid = yhat - sample
    losses = 0.5 * resid * resid
    u = alpha - gamma * resid[:, None, None] * history[None]
    new_alpha = _shrink_groups(u[..., None], gamma * lam)[..., 0]
    if not np.isfinite(new_alpha).all() or np.abs(new_alpha).max() > ALPHA_LIMIT:
        raise DivergenceError("linear baseline diverged")
    return new_alpha, yhat, losses


class LinearBaseline:
    """Linear online comparator: identity features, per-coefficient shrinkage.

    Mirrors OnlineEstimator's warm-up and stepping contract; its
    pseudo-adjacency is |alpha| arranged as (n, n', p).
    """

    def __init__(self, N: int, P: int, lam: float = 0.1, gamma: float = 1000.0,
                 schedule: str = "constant"):
        if gamma <= 0 or lam < 0:
            raise ConfigError("gamma must be positive and lam nonnegative")
        self.N, self.P, self.lam, self.gamma = N, P, lam, gamma
        self.schedule = schedule
        self.alpha = np.zeros((N, P, N))
        self.t = 0
        self._history = None
        self._warm = 0

    def step_size(self, k: int) -> float:
        base = 1.0 / self.gamma
        return base / np.sqrt(k) if self.schedule == "sqrt_decay" else base

    @property
    def warmed_up(self) -> bool:
        return self._warm >= self.P

    def step(self, sample: np.ndarray):
        sample = np.asarray(sample, dtype=float)
        if not self.warmed_up:
            if self._history is None:
                self._history = np.zeros((self.P, self.N))
            self._history[1:] = self._history[:-1]
            self._history[0] = sample
            self._warm += 1
            return None
        self.t += 1
        self.alpha, yhat, losses = linear_baseline_step(
            self.alpha, self._history, sample, self.step_size(self.t), self.lam
        )
        self._history[1:] = self._history[:-1]
        self._history[0] = sample
        return yhat, losses

    def pseudo_adjacency(self) -> np.ndarray:
        return np.transpose(np.abs(self.alpha), (0, 2, 1))

    def run(self, values: np.ndarray) -> EstimateSeries:
        values = np.asarray(values, dtype=float)
        N, T = values.shape
        preds = np.full((N, T), np.nan)
        losses = np.full((N, T), np.nan)
        norms = np.zeros((T, N, N, self.P))
        for t in range(T):
            out = self.step(values[:, t])
            if out is not None:
                preds[:, t], losses[:, t] = out
            norms[t] = self.pseudo_adjacency()
        return EstimateSeries(predictions=preds, losses=losses, group_norms=norms,
                              state=CoefficientState(alpha=self.alpha[..., None].copy(), t=self.t),
                              config=None)


class GrowingDictionaryEstimator:
    """Reference online kernel learner whose per-step cost grows with t.

    Keeps every past lag window as a dictionary atom and predicts with a
    kernel expansion over all of them, adding one atom per step (no
    window, no budget).  Exists to contrast its growing iteration cost
    against the fixed-cost estimator; the learning rule is plain
    kernel-weighted stochastic gradient on the newest atom.
    """

    def __init__(self, N: int, P: int, kernel_variance: float = 1.0, eta: float = 0.1):
        self.N, self.P = N, P
        self.kernel_variance = kernel_variance
        self.eta = eta
        self._atoms = []  # list of (N*P,) lag vectors
        self._weights = []  # list of (N,) coefficient columns
        self._history = None
        self._warm = 0

    @property
    def warmed_up(self) -> bool:
        return self._warm >= self.P

    @property
    def dictionary_size(self) -> int:
        return len(self._atoms)

    def step(self, sample: np.ndarray):
        sample = np.asarray(sample, dtype=float)
        if not self.warmed_up:
            if self._history is None:
                self._history = np.zeros((self.P, self.N))
            self._history[1:] = self._history[:-1]
            self._history[0] = sample
            self._warm += 1
            return None
        x = self._history.ravel()
        if self._atoms:
            A = np.asarray(self._atoms)
            W = np.asarray(self._weights)  # (m, N)
            d2 = ((A - x) ** 2).sum(axis=1)
            k = np.exp(-d2 / (2.0 * self.kernel_variance))
            yhat = W.T @ k
        else:
            yhat = np.zeros(self.N)
        err = sample - yhat
        self._atoms.append(x.copy())
        self._weights.append(self.eta * err)
        self._history[1:] = self._history[:-1]
        self._history[0] = sample
        return yhat, 0.5 * err * err
