"""Maximum conditional likelihood estimation.

The conditional likelihood of the observed ordering, given the multiset of
values with the first and last d positions frozen, is an exponential family
over interior permutations whose normalizer cancels all intractable marginal
terms.  Sampling runs a Metropolis-Hastings chain over interior
transpositions (the exchange algorithm); estimation is Fisher scoring with
the chain's moment estimates of the sufficient statistic.

One chain is strictly sequential; independent chains with different seeds
may run in parallel.  Fisher scoring consumes one chain per iteration, with
per-sample statistics retained instead of permutations (memory O(L K)).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .core import DependenceSpec, TimeSeries, _swap_delta_rows, _term_factor_tuples, total_statistic
from .exceptions import (
    IllConditionedError,
    InsufficientInteriorError,
    ShapeMismatchError,
)

__all__ = [
    "InteriorPermutation",
    "ExchangeConfig",
    "ScoringConfig",
    "ExchangeResult",
    "McleResult",
    "log_ratio_swap",
    "exchange_sample",
    "fisher_scoring",
]


@dataclass(frozen=True, eq=False)
class InteriorPermutation:
    """A permutation of {0..n-1} fixing the first and last d positions."""

    order: np.ndarray
    d: int

    def __post_init__(self):
        order = np.asarray(self.order, dtype=np.intp)
        n = len(order)
        if self.d < 0 or n < 2 * self.d:
            raise ShapeMismatchError(f"invalid frozen margin d={self.d} for n={n}")
        if not np.array_equal(np.sort(order), np.arange(n)):
            raise ValueError("order is not a permutation of 0..n-1")
        fixed = np.concatenate([np.arange(self.d), np.arange(n - self.d, n)])
        if not np.array_equal(order[fixed], fixed):
            raise ValueError("first/last d positions must stay fixed")
        order = order.copy()
        order.setflags(write=False)
        object.__setattr__(self, "order", order)

    @classmethod
    def identity(cls, n: int, d: int) -> "InteriorPermutation":
        return cls(order=np.arange(n), d=d)

    @property
    def n(self) -> int:
        return len(self.order)


@dataclass(frozen=True)
class ExchangeConfig:
    """Chain length, burn-in (default n_samples // 10), thinning, seed."""

    n_samples: int = 10_000
    burn_in: int | None = None
    thin: int = 1
    seed: int | None = None

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValueError(f"n_samples must be >= 1, got {self.n_samples}")
        if self.burn_in is not None and self.burn_in < 0:
            raise ValueError(f"burn_in must be >= 0, got {self.burn_in}")
        if self.thin < 1:
            raise ValueError(f"thin must be >= 1, got {self.thin}")

    @property
    def effective_burn_in(self) -> int:
        return self.n_samples // 10 if self.burn_in is None else self.burn_in


@dataclass(frozen=True)
class ScoringConfig:
    max_iters: int = 30
    grad_tol: float = 0.01
    step_damping: float = 1.0
    ridge: float | None = None  # None: 1e-8 * tr(G) / K

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.grad_tol <= 0:
            raise ValueError(f"grad_tol must be > 0, got {self.grad_tol}")
        if not (0.0 < self.step_damping <= 1.0):
            raise ValueError(f"step_damping must be in (0, 1], got {self.step_damping}")
        if self.ridge is not None and self.ridge < 0:
            raise ValueError(f"ridge must be >= 0, got {self.ridge}")


@dataclass(frozen=True, eq=False)
class ExchangeResult:
    stats: np.ndarray  # (L, K) sufficient statistics of the sampled orderings
    acceptance_rate: float
    n_steps: int


@dataclass(frozen=True, eq=False)
class McleResult:
    theta: np.ndarray
    iterations: int
    final_acceptance_rate: float
    score_norm_trace: tuple[float, ...]
    theta_trace: tuple[tuple[float, ...], ...]
    acceptance_trace: tuple[float, ...]
    converged: bool
    wall_time_s: float

    def __post_init__(self):
        if not (0.0 <= self.final_acceptance_rate <= 1.0):
            raise ValueError("acceptance rate must lie in [0, 1]")


def log_ratio_swap(theta, delta) -> float:
    """Log conditional-likelihood ratio of a proposed transposition: the
    normalizers cancel, leaving theta . delta."""
    theta = np.asarray(theta, dtype=float)
    delta = np.asarray(delta, dtype=float)
    if theta.shape != delta.shape:
        raise ShapeMismatchError(f"theta shape {theta.shape} != delta shape {delta.shape}")
    return float(theta @ delta)


def _validate_theta(spec: DependenceSpec, theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (spec.n_terms,):
        raise ShapeMismatchError(
            f"theta shape {theta.shape} does not match K = {spec.n_terms}"
        )
    if not np.all(np.isfinite(theta)):
        raise ValueError("theta contains non-finite values")
    return theta


_RECOMPUTE_EVERY = 8192  # refresh the running statistic to kill float drift
_PROPOSAL_BLOCK = 4096


def exchange_sample(
    spec: DependenceSpec,
    series: TimeSeries,
    theta,
    config: ExchangeConfig = ExchangeConfig(),
    rng: np.random.Generator | None = None,
) -> ExchangeResult:
    """Metropolis-Hastings over interior transpositions targeting the
    conditional law of orderings under dependence weights ``theta``.

    Proposals are uniform over interior pairs; a move is accepted with
    probability min(1, exp(theta . delta)).  After burn-in the sufficient
    statistic of the current ordering is recorded every ``thin`` steps (the
    statistic, not the permutation, is retained).  The acceptance rate is
    reported over all proposals including burn-in.
    """
    theta = _validate_theta(spec, theta)
    d = spec.order
    n = series.n
    m = n - 2 * d
    if m < 2:
        raise InsufficientInteriorError(
            f"need at least 2 interior positions, got {m} (n={n}, d={d})"
        )
    if rng is None:
        rng = np.random.default_rng(config.seed)

    rows = series.rows()
    terms = _term_factor_tuples(spec)
    K = spec.n_terms
    th = [float(v) for v in theta]
    order = list(range(n))
    current = [float(v) for v in total_statistic(spec, series)]

    burn = config.effective_burn_in
    total_steps = burn + config.n_samples * config.thin
    stats = np.empty((config.n_samples, K))
    accepted = 0
    recorded = 0

    block_a = block_b = block_logu = None
    block_pos = _PROPOSAL_BLOCK  # force refill on first step
    for step in range(total_steps):
        if block_pos == _PROPOSAL_BLOCK:
            block_a = rng.integers(0, m, size=_PROPOSAL_BLOCK)
            block_b = rng.integers(0, m - 1, size=_PROPOSAL_BLOCK)
            block_logu = np.log(rng.random(size=_PROPOSAL_BLOCK))
            block_pos = 0
        a = block_a[block_pos]
        b = block_b[block_pos]
        logu = block_logu[block_pos]
        block_pos += 1
        if b >= a:
            b += 1
        s1, s2 = (a, b) if a < b else (b, a)
        s1 += d
        s2 += d

        delta = _swap_delta_rows(rows, order, d, terms, s1, s2)
        logr = 0.0
        for k in range(K):
            logr += th[k] * delta[k]
        if logu <= logr:
            order[s1], order[s2] = order[s2], order[s1]
            for k in range(K):
                current[k] += delta[k]
            accepted += 1

        if (step + 1) % _RECOMPUTE_EVERY == 0:
            permuted = TimeSeries(series.data[order], kinds=series.kinds)
            current = [float(v) for v in total_statistic(spec, permuted)]

        offset = step + 1 - burn
        if offset >= 1 and offset % config.thin == 0 and recorded < config.n_samples:
            stats[recorded] = current
            recorded += 1

    return ExchangeResult(
        stats=stats, acceptance_rate=accepted / total_steps, n_steps=total_steps
    )


def fisher_scoring(
    spec: DependenceSpec,
    series: TimeSeries,
    theta0=None,
    exchange_config: ExchangeConfig = ExchangeConfig(),
    scoring_config: ScoringConfig = ScoringConfig(),
    moment_fn=None,
) -> McleResult:
    """Maximize the conditional likelihood by Fisher scoring.

    Each iteration estimates the mean and covariance of the sufficient
    statistic under the current weights (from one exchange chain, or from
    ``moment_fn(theta) -> (mu, cov)`` when supplied, e.g. exact enumeration)
    and updates theta by (cov + ridge I)^{-1} (H_obs - mu): the score of the
    conditional log-likelihood is the observed statistic minus its model
    expectation.  The step is damped by halving whenever the score norm
    increased relative to the previous iteration.

    Stops when ||H_obs - mu|| < grad_tol * (1 + ||H_obs||) or at max_iters.
    """
    start = time.perf_counter()
    K = spec.n_terms
    h_obs = total_statistic(spec, series)
    theta = np.zeros(K) if theta0 is None else _validate_theta(spec, theta0).copy()
    rng = np.random.default_rng(exchange_config.seed)

    score_norms: list[float] = []
    thetas: list[tuple[float, ...]] = []
    acc_rates: list[float] = []
    converged = False
    damping = scoring_config.step_damping
    prev_norm = math.inf
    h_scale = 1.0 + float(np.linalg.norm(h_obs))
    iterations = 0

    for _ in range(scoring_config.max_iters):
        iterations += 1
        if moment_fn is not None:
            mu, cov = moment_fn(theta)
            mu = np.asarray(mu, dtype=float)
            cov = np.atleast_2d(np.asarray(cov, dtype=float))
            acc = 1.0
        else:
            chain = exchange_sample(spec, series, theta, exchange_config, rng=rng)
            mu = chain.stats.mean(axis=0)
            centered = chain.stats - mu
            cov = centered.T @ centered / len(chain.stats)
            acc = chain.acceptance_rate

        score = h_obs - mu
        snorm = float(np.linalg.norm(score))
        score_norms.append(snorm)
        thetas.append(tuple(float(v) for v in theta))
        acc_rates.append(acc)

        if snorm < scoring_config.grad_tol * h_scale:
            converged = True
            break

        ridge = scoring_config.ridge
        if ridge is None:
            ridge = 1e-8 * float(np.trace(cov)) / K
        step = None
        bump = ridge
        for _ in range(6):
            try:
                step = np.linalg.solve(cov + bump * np.eye(K), score)
                break
            except np.linalg.LinAlgError:
                bump = max(bump * 10.0, 1e-12)
        if step is None or not np.all(np.isfinite(step)):
            raise IllConditionedError(
                f"moment covariance not invertible (trace {np.trace(cov):.3g}, "
                f"ridge {bump:.3g}); the chain may be degenerate"
            )

        if snorm > prev_norm:
            damping = max(damping * 0.5, scoring_config.step_damping / 16.0)
        else:
            damping = min(scoring_config.step_damping, damping * 1.5)
        theta = theta + damping * step
        prev_norm = snorm

    return McleResult(
        theta=theta,
        iterations=iterations,
        final_acceptance_rate=acc_rates[-1] if acc_rates else 1.0,
        score_norm_trace=tuple(score_norms),
        theta_trace=tuple(thetas),
        acceptance_trace=tuple(acc_rates),
        converged=converged,
        wall_time_s=time.perf_counter() - start,
    )
