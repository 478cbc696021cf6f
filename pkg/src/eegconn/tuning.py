"""Hyperparameter search: random sampling, hyperband, Bayesian optimization.

All three optimizers share one objective contract: a callable
f(hp, resource, seed) -> validation accuracy in [0, 1], where resource is a
training-epoch budget. Failed evaluations score -inf and the search goes on;
only an all-failed search raises.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.stats import norm

from .errors import ConfigError, NumericError

LEARNING_RATE_BOUNDS = (1e-4, 1e-2)


@dataclass(frozen=True)
class HyperParams:
    dropout_a: float
    dropout_b: float
    dropout_c: float
    dense_units: int
    activation: str
    learning_rate: float

    def as_dict(self) -> dict:
        return {
            "dropout_a": self.dropout_a,
            "dropout_b": self.dropout_b,
            "dropout_c": self.dropout_c,
            "dense_units": self.dense_units,
            "activation": self.activation,
            "learning_rate": self.learning_rate,
        }


DEFAULT_HYPERPARAMS = HyperParams(
    dropout_a=0.25,
    dropout_b=0.10,
    dropout_c=0.10,
    dense_units=160,
    activation="relu",
    learning_rate=1e-3,
)


@dataclass
class SearchSpace:
    """The tunable domain: three discrete dropout grids, a dense-width grid,
    a categorical activation, and a log-uniform learning rate."""

    dropout_a_values: tuple = tuple(round(0.05 * i, 2) for i in range(11))
    dropout_b_values: tuple = (0.0, 0.05, 0.10, 0.15, 0.20)
    dropout_c_values: tuple = (0.0, 0.05, 0.10, 0.15, 0.20)
    dense_units_values: tuple = tuple(range(32, 513, 32))
    activations: tuple = ("relu", "tanh", "sigmoid")
    learning_rate_bounds: tuple = LEARNING_RATE_BOUNDS

    def sample(self, rng: np.random.Generator) -> HyperParams:
        lo, hi = self.learning_rate_bounds
        return HyperParams(
            dropout_a=float(rng.choice(self.dropout_a_values)),
            dropout_b=float(rng.choice(self.dropout_b_values)),
            dropout_c=float(rng.choice(self.dropout_c_values)),
            dense_units=int(rng.choice(self.dense_units_values)),
            activation=str(rng.choice(self.activations)),
            learning_rate=float(np.exp(rng.uniform(math.log(lo), math.log(hi)))),
        )

    def contains(self, hp: HyperParams) -> bool:
        lo, hi = self.learning_rate_bounds
        return (
            hp.dropout_a in self.dropout_a_values
            and hp.dropout_b in self.dropout_b_values
            and hp.dropout_c in self.dropout_c_values
            and hp.dense_units in self.dense_units_values
            and hp.activation in self.activations
            and lo <= hp.learning_rate <= hi
        )

    def to_unit(self, hp: HyperParams) -> np.ndarray:
        """Embed a point in [0,1]^d: ordinal dims min-max scaled (learning
        rate in log scale), activation one-hot."""
        lo, hi = self.learning_rate_bounds
        v = [
            hp.dropout_a / max(self.dropout_a_values),
            hp.dropout_b / max(self.dropout_b_values),
            hp.dropout_c / max(self.dropout_c_values),
            (hp.dense_units - min(self.dense_units_values))
            / (max(self.dense_units_values) - min(self.dense_units_values)),
            (math.log(hp.learning_rate) - math.log(lo))
            / (math.log(hi) - math.log(lo)),
        ]
        v.extend(1.0 if hp.activation == a else 0.0 for a in self.activations)
        return np.asarray(v)


def sample(space: SearchSpace, rng: np.random.Generator) -> HyperParams:
    return space.sample(rng)


@dataclass
class Trial:
    trial_id: int
    hp: HyperParams
    resource: int
    score: float
    seed: int
    error: str | None = None


def _trial_seed(master_seed: int, trial_id: int) -> int:
    return int(np.random.SeedSequence([master_seed, trial_id]).generate_state(1)[0])


def _evaluate(objective, trial_id, hp, resource, seed) -> Trial:
    try:
        score = float(objective(hp, resource, seed))
    except Exception as exc:  # failures are logged, not fatal
        return Trial(trial_id, hp, resource, -math.inf, seed, error=str(exc))
    return Trial(trial_id, hp, resource, score, seed)


def _best_trial(trials) -> Trial:
    finished = [t for t in trials if t.error is None]
    if not finished:
        raise NumericError("every tuning trial failed; see trial log errors")
    best = finished[0]
    for t in finished[1:]:
        if t.score > best.score:  # ties keep the earliest trial
            best = t
    return best


def random_search(objective, space: SearchSpace, n_trials: int, rng, *, resource: int = 30):
    """Evaluate n_trials independent samples at full resource; returns
    (best trial, full log)."""
    if n_trials < 1:
        raise ConfigError(f"n_trials must be >= 1, got {n_trials}")
    rng, master_seed = _as_rng(rng)
    trials = []
    for i in range(n_trials):
        hp = space.sample(rng)
        trials.append(_evaluate(objective, i, hp, resource, _trial_seed(master_seed, i)))
    return _best_trial(trials), trials


def _as_rng(rng):
    """Accept either a seed or a Generator; returns (generator, log seed)."""
    if isinstance(rng, np.random.Generator):
        seed = int(rng.integers(2**31 - 1))
        return np.random.default_rng(seed), seed
    return np.random.default_rng(int(rng)), int(rng)


# -- hyperband -----------------------------------------------------------------


def hyperband_schedule(max_resource: int, eta: int):
    """Closed-form bracket plan: list of (s, [(n_i, r_i), ...]) with r_i the
    real-valued resource of rung i in bracket s."""
    if eta < 2:
        raise ConfigError(f"eta must be >= 2, got {eta}")
    if max_resource < eta:
        raise ConfigError(f"max resource must be >= eta, got {max_resource}")
    s_max = 0  # floor(log_eta R), computed in exact integer arithmetic
    while eta ** (s_max + 1) <= max_resource:
        s_max += 1
    brackets = []
    for s in range(s_max, -1, -1):
        n = math.ceil((s_max + 1) / (s + 1) * eta**s)
        r = max_resource * float(eta) ** (-s)
        rungs = [(n // eta**i, r * eta**i) for i in range(s + 1)]
        brackets.append((s, rungs))
    return brackets


def _epochs_of(resource: float) -> int:
    return max(1, int(math.floor(resource + 1e-9)))


def hyperband(objective, space: SearchSpace, max_resource: int, eta: int, rng):
    """Successive halving over brackets: start many configurations cheaply,
    keep the top 1/eta of each rung at eta-times the resource. Survivors are
    re-evaluated (retrained) at the larger budget. Returns (best, log)."""
    rng, master_seed = _as_rng(rng)
    trials = []
    next_id = 0
    for s, rungs in hyperband_schedule(max_resource, eta):
        n0 = rungs[0][0]
        configs = []
        for _ in range(n0):
            hp = space.sample(rng)
            configs.append((next_id, hp, _trial_seed(master_seed, next_id)))
            next_id += 1
        for i, (n_i, r_i) in enumerate(rungs):
            epochs = _epochs_of(r_i)
            rung_results = []
            for cfg_id, hp, seed in configs[:n_i]:
                trial = _evaluate(objective, cfg_id, hp, epochs, seed)
                trials.append(trial)
                rung_results.append((trial.score, cfg_id, hp, seed))
            if i + 1 < len(rungs):
                keep = rungs[i + 1][0]
                # stable: ties keep the earlier config
                rung_results.sort(key=lambda t: (-t[0], t[1]))
                configs = [(cid, hp, seed) for _, cid, hp, seed in rung_results[:keep]]
    return _best_trial(trials), trials


# -- Bayesian optimization -------------------------------------------------------


class GaussianProcess:
    """Squared-exponential GP with fixed hyperparameters (unit signal
    variance, shared length scale, constant observation noise)."""

    def __init__(self, length_scale: float = 0.2, noise: float = 1e-6):
        self.length_scale = length_scale
        self.noise = noise
        self._x = None
        self._chol = None
        self._alpha = None

    def _kernel(self, a, b):
        d2 = np.sum((a[:, None, :] - b[None, :, :]) ** 2, axis=-1)
        return np.exp(-0.5 * d2 / self.length_scale**2)

    def fit(self, x, y):
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        y = np.asarray(y, dtype=np.float64)
        gram = self._kernel(x, x) + self.noise * np.eye(len(x))
        for jitter in (0.0, 1e-10, 1e-8, 1e-6, 1e-4):
            try:
                self._chol = cho_factor(gram + jitter * np.eye(len(x)), lower=True)
                break
            except np.linalg.LinAlgError:
                continue
        else:
            raise NumericError("GP Gram matrix is not positive definite")
        self._x = x
        self._alpha = cho_solve(self._chol, y)
        return self

    def posterior(self, xq):
        """Mean and variance at query points [m, d]."""
        if self._x is None:
            raise ConfigError("GP queried before fit")
        xq = np.atleast_2d(np.asarray(xq, dtype=np.float64))
        kq = self._kernel(xq, self._x)
        mean = kq @ self._alpha
        v = cho_solve(self._chol, kq.T)
        var = 1.0 + self.noise - np.sum(kq * v.T, axis=1)
        return mean, np.maximum(var, 0.0)


def expected_improvement(mean, var, best):
    """EI for maximization; zero wherever the posterior is (numerically)
    deterministic."""
    sd = np.sqrt(var)
    out = np.zeros_like(mean)
    ok = sd > 1e-12
    z = (mean[ok] - best) / sd[ok]
    out[ok] = sd[ok] * (z * norm.cdf(z) + norm.pdf(z))
    return out


def bayes_opt(
    objective,
    space: SearchSpace,
    n_init: int,
    n_iter: int,
    rng,
    *,
    resource: int = 30,
    n_candidates: int = 512,
):
    """GP-guided search: after n_init random evaluations, each iteration
    fits the surrogate on standardized scores and evaluates the candidate
    (of n_candidates random grid points) with the highest expected
    improvement. Returns (best observed trial, log)."""
    if n_init < 2:
        raise ConfigError(f"n_init must be >= 2, got {n_init}")
    if n_iter < 0:
        raise ConfigError(f"n_iter must be >= 0, got {n_iter}")
    rng, master_seed = _as_rng(rng)
    trials = []
    for i in range(n_init):
        hp = space.sample(rng)
        trials.append(_evaluate(objective, i, hp, resource, _trial_seed(master_seed, i)))
    for i in range(n_init, n_init + n_iter):
        finished = [t for t in trials if t.error is None]
        if len(finished) >= 2:
            x = np.vstack([space.to_unit(t.hp) for t in finished])
            y = np.asarray([t.score for t in finished])
            sd = y.std()
            y_std = (y - y.mean()) / (sd if sd > 0 else 1.0)
            gp = GaussianProcess().fit(x, y_std)
            cands = [space.sample(rng) for _ in range(n_candidates)]
            xq = np.vstack([space.to_unit(hp) for hp in cands])
            mean, var = gp.posterior(xq)
            ei = expected_improvement(mean, var, float(y_std.max()))
            hp = cands[int(np.argmax(ei))]
        else:  # not enough signal for a surrogate yet
            hp = space.sample(rng)
        trials.append(_evaluate(objective, i, hp, resource, _trial_seed(master_seed, i)))
    return _best_trial(trials), trials


# -- log export ------------------------------------------------------------------


def trials_to_rows(trials):
    """Rows for the trial-log CSV (one dict per evaluation)."""
    rows = []
    for t in trials:
        row = {"trial_id": t.trial_id}
        row.update(t.hp.as_dict())
        row.update(
            {
                "resource": t.resource,
                "score": t.score,
                "seed": t.seed,
                "error": t.error or "",
            }
        )
        rows.append(row)
    return rows
