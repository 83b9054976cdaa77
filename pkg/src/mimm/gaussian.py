"""Gaussian autoregressive ground truth: simulation, transforms between the
classical and minimum-information parametrizations, Fisher information, and
divergence rates between conditionally Gaussian kernels.

The minimum-information parametrization of a stationary AR/VAR process pairs
the dependence weights (theta) with the stationary variance, replacing the
classical (coefficients, noise variance) pair.  Both directions of the
transform are implemented here; the VAR(1) inverse runs through a quadratic
matrix equation solved by a damped fixed-point iteration with a Newton
fallback.

All functions are pure; simulators take explicit seeds and return
bit-identical output for identical inputs on one platform.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .core import TimeSeries
from .exceptions import (
    ContractError,
    NoSolutionFoundError,
    ParameterDomainError,
    ShapeMismatchError,
    StationarityError,
)

__all__ = [
    "ClassicalARParams",
    "ClassicalVARParams",
    "MinInfoARParams",
    "MinInfoVARParams",
    "GaussianKernel",
    "DependenceKernel",
    "simulate_ar",
    "simulate_var",
    "ar1_to_mininfo",
    "mininfo_to_ar1",
    "ar2_to_mininfo",
    "mininfo_to_ar2",
    "ard_to_mininfo",
    "mininfo_to_ard",
    "var1_to_mininfo",
    "mininfo_to_var1",
    "ar1_fisher_info",
    "dependence_kernel",
    "divergence_rate",
    "stationary_variance",
    "stationary_cov_var1",
    "kernel_from_ar1",
    "kernel_from_var1",
    "params_to_text",
    "params_from_text",
]


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=float)
    arr.setflags(write=False)
    return arr


def companion_matrix(phi: np.ndarray) -> np.ndarray:
    """Companion form of a scalar AR(d) recursion."""
    d = len(phi)
    F = np.zeros((d, d))
    F[0, :] = phi
    if d > 1:
        F[1:, :-1] = np.eye(d - 1)
    return F


def _spectral_radius(mat: np.ndarray) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(mat))))


def _check_spd(mat: np.ndarray, name: str, sym_tol: float = 1e-12) -> None:
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ShapeMismatchError(f"{name} must be square, got shape {mat.shape}")
    scale = max(1.0, float(np.abs(mat).max()))
    if np.abs(mat - mat.T).max() > sym_tol * scale:
        raise ParameterDomainError(f"{name} is not symmetric within {sym_tol}")
    if np.min(np.linalg.eigvalsh((mat + mat.T) / 2.0)) <= 0.0:
        raise ParameterDomainError(f"{name} is not positive definite")


@dataclass(frozen=True, eq=False)
class ClassicalARParams:
    """AR(d) coefficients and noise variance; stationarity is enforced."""

    phi: np.ndarray
    sigma2: float

    def __post_init__(self):
        phi = np.atleast_1d(np.asarray(self.phi, dtype=float))
        if phi.ndim != 1 or len(phi) < 1:
            raise ShapeMismatchError("phi must be a non-empty vector")
        if not np.all(np.isfinite(phi)):
            raise ParameterDomainError("phi contains non-finite values")
        if not (np.isfinite(self.sigma2) and self.sigma2 > 0):
            raise ParameterDomainError(f"sigma2 must be positive, got {self.sigma2}")
        rho = _spectral_radius(companion_matrix(phi))
        if rho >= 1.0:
            raise StationarityError(
                f"AR coefficients are non-stationary (companion spectral radius {rho:.6g})"
            )
        object.__setattr__(self, "phi", _readonly(phi))
        object.__setattr__(self, "sigma2", float(self.sigma2))

    @property
    def order(self) -> int:
        return len(self.phi)


@dataclass(frozen=True, eq=False)
class ClassicalVARParams:
    """VAR(d) coefficient matrices and noise covariance; stationarity enforced."""

    A: np.ndarray  # (d, p, p)
    Sigma: np.ndarray  # (p, p)

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        if A.ndim == 2:
            A = A[None, :, :]
        if A.ndim != 3 or A.shape[1] != A.shape[2]:
            raise ShapeMismatchError(f"A must be (d, p, p), got shape {A.shape}")
        d, p, _ = A.shape
        Sigma = np.asarray(self.Sigma, dtype=float)
        if Sigma.shape != (p, p):
            raise ShapeMismatchError(f"Sigma shape {Sigma.shape} does not match p={p}")
        _check_spd(Sigma, "Sigma")
        comp = np.zeros((d * p, d * p))
        comp[:p, :] = np.concatenate(list(A), axis=1)
        if d > 1:
            comp[p:, : (d - 1) * p] = np.eye((d - 1) * p)
        rho = _spectral_radius(comp)
        if rho >= 1.0:
            raise StationarityError(
                f"VAR coefficients are non-stationary (companion spectral radius {rho:.6g})"
            )
        object.__setattr__(self, "A", _readonly(A))
        object.__setattr__(self, "Sigma", _readonly(Sigma))

    @property
    def order(self) -> int:
        return self.A.shape[0]

    @property
    def dim(self) -> int:
        return self.A.shape[1]


@dataclass(frozen=True, eq=False)
class MinInfoARParams:
    """Dependence weights plus stationary variance; the domain is all of
    R^d x (0, inf) for d <= 2 (no stationarity-style constraint)."""

    theta: np.ndarray
    tau2: float

    def __post_init__(self):
        theta = np.atleast_1d(np.asarray(self.theta, dtype=float))
        if theta.ndim != 1 or len(theta) < 1:
            raise ShapeMismatchError("theta must be a non-empty vector")
        if not np.all(np.isfinite(theta)):
            raise ParameterDomainError("theta contains non-finite values")
        if not (np.isfinite(self.tau2) and self.tau2 > 0):
            raise ParameterDomainError(f"tau2 must be positive, got {self.tau2}")
        object.__setattr__(self, "theta", _readonly(theta))
        object.__setattr__(self, "tau2", float(self.tau2))

    @property
    def order(self) -> int:
        return len(self.theta)


@dataclass(frozen=True, eq=False)
class MinInfoVARParams:
    """Dependence weight matrix plus stationary covariance for VAR(1)."""

    Theta: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        Theta = np.asarray(self.Theta, dtype=float)
        B = np.asarray(self.B, dtype=float)
        if Theta.ndim != 2 or Theta.shape[0] != Theta.shape[1]:
            raise ShapeMismatchError(f"Theta must be square, got {Theta.shape}")
        if B.shape != Theta.shape:
            raise ShapeMismatchError("Theta and B must have the same shape")
        if not np.all(np.isfinite(Theta)):
            raise ParameterDomainError("Theta contains non-finite values")
        _check_spd(B, "B")
        object.__setattr__(self, "Theta", _readonly(Theta))
        object.__setattr__(self, "B", _readonly(B))

    @property
    def dim(self) -> int:
        return self.Theta.shape[0]


@dataclass(frozen=True, eq=False)
class GaussianKernel:
    """First-order conditionally Gaussian kernel y | x ~ N(mean_map @ x, noise_cov).

    ``stationary_cov`` is optional; when present it must satisfy the
    stationarity equation B = F B F' + S to 1e-8 (relative).
    """

    mean_map: np.ndarray
    noise_cov: np.ndarray
    stationary_cov: np.ndarray | None = None

    def __post_init__(self):
        F = np.atleast_2d(np.asarray(self.mean_map, dtype=float))
        S = np.atleast_2d(np.asarray(self.noise_cov, dtype=float))
        if F.shape != S.shape or F.shape[0] != F.shape[1]:
            raise ShapeMismatchError("mean_map and noise_cov must be square and matching")
        _check_spd(S, "noise_cov")
        object.__setattr__(self, "mean_map", _readonly(F))
        object.__setattr__(self, "noise_cov", _readonly(S))
        if self.stationary_cov is not None:
            B = np.atleast_2d(np.asarray(self.stationary_cov, dtype=float))
            _check_spd(B, "stationary_cov")
            resid = np.linalg.norm(B - F @ B @ F.T - S, "fro")
            if resid > 1e-8 * max(1.0, np.linalg.norm(B, "fro")):
                raise ParameterDomainError(
                    f"stationary_cov violates B = F B F' + S (residual {resid:.3g})"
                )
            object.__setattr__(self, "stationary_cov", _readonly(B))

    @property
    def dim(self) -> int:
        return self.mean_map.shape[0]


@dataclass(frozen=True)
class DependenceKernel:
    """Scalar stationary kernel in exponential form:

        p(y | x) = exp(theta*x*y + cross*(y**2 - x**2) - decay*y**2 - log_norm)

    ``cross`` and ``log_norm`` are determined by (theta, decay); the
    stationary law is N(0, 1 / (2*sqrt(decay**2 - theta**2))).
    """

    theta: float
    decay: float
    cross: float
    log_norm: float

    def log_density(self, y, x):
        y = np.asarray(y, dtype=float)
        x = np.asarray(x, dtype=float)
        return (
            self.theta * x * y
            + self.cross * (y**2 - x**2)
            - self.decay * y**2
            - self.log_norm
        )

    @property
    def stationary_var(self) -> float:
        return 1.0 / (2.0 * math.sqrt(self.decay**2 - self.theta**2))

    def as_gaussian(self) -> GaussianKernel:
        root = math.sqrt(self.decay**2 - self.theta**2)
        slope = self.theta / (self.decay + root)
        noise = 1.0 / (self.decay + root)
        return GaussianKernel(
            mean_map=[[slope]],
            noise_cov=[[noise]],
            stationary_cov=[[self.stationary_var]],
        )


def dependence_kernel(theta: float, decay: float) -> DependenceKernel:
    """Construct the scalar stationary kernel with bilinear dependence weight
    ``theta`` and quadratic decay ``decay`` (> |theta|).

    The cross coefficient is the root (decay - sqrt(decay**2 - theta**2)) / 2
    that makes the kernel integrate to one for every conditioning value; the
    log normalizer equals log(2*pi*noise_var) / 2.
    """
    theta = float(theta)
    decay = float(decay)
    if not (np.isfinite(theta) and np.isfinite(decay)) or decay <= abs(theta):
        raise ParameterDomainError(f"need decay > |theta|, got theta={theta}, decay={decay}")
    root = math.sqrt(decay**2 - theta**2)
    cross = 0.5 * (decay - root)
    noise = 1.0 / (decay + root)
    log_norm = 0.5 * math.log(2.0 * math.pi * noise)
    return DependenceKernel(theta=theta, decay=decay, cross=cross, log_norm=log_norm)


# ---------------------------------------------------------------------------
# simulation


def simulate_ar(params: ClassicalARParams, n: int, burn_in: int = 0, seed=None) -> TimeSeries:
    """Simulate n observations of the AR(d) recursion.

    For d <= 2 the initial state is drawn from the exact stationary law
    (closed-form variance); for d >= 3 the chain starts at zero and a burn-in
    of at least 500 steps is enforced.
    """
    if n < 1:
        raise ParameterDomainError(f"n must be >= 1, got {n}")
    if burn_in < 0:
        raise ParameterDomainError(f"burn_in must be >= 0, got {burn_in}")
    rng = np.random.default_rng(seed)
    phi = params.phi
    d = params.order
    sig = math.sqrt(params.sigma2)

    if d == 1:
        tau2 = params.sigma2 / (1.0 - phi[0] ** 2)
        state = [math.sqrt(tau2) * rng.standard_normal()]
    elif d == 2:
        tau2 = ar2_to_mininfo(params).tau2
        rho1 = phi[0] / (1.0 - phi[1])
        cov = tau2 * np.array([[1.0, rho1], [rho1, 1.0]])
        chol = np.linalg.cholesky(cov)
        init = chol @ rng.standard_normal(2)
        state = [init[1], init[0]]  # state[0] = most recent
    else:
        burn_in = max(burn_in, 500)
        state = [0.0] * d

    steps = burn_in + n
    eps = rng.standard_normal(steps) * sig
    phis = [float(v) for v in phi]
    out = np.empty(steps)
    for t in range(steps):
        val = eps[t]
        for i in range(d):
            val += phis[i] * state[i]
        out[t] = val
        state.insert(0, val)
        state.pop()
    return TimeSeries(out[burn_in:])


def stationary_cov_var1(A: np.ndarray, Sigma: np.ndarray) -> np.ndarray:
    """Stationary covariance of a VAR(1): solves B = A B A' + Sigma.

    Dense Kronecker solve for p <= 8; truncated power accumulation of
    sum_k A**k Sigma (A')**k otherwise.
    """
    A = np.asarray(A, dtype=float)
    Sigma = np.asarray(Sigma, dtype=float)
    p = A.shape[0]
    rho = _spectral_radius(A)
    if rho >= 1.0:
        raise StationarityError(f"spectral radius {rho:.6g} >= 1")
    if p <= 8:
        eye = np.eye(p * p)
        vecB = np.linalg.solve(eye - np.kron(A, A), Sigma.reshape(-1, order="F"))
        B = vecB.reshape(p, p, order="F")
    else:
        depth = max(10, int(math.ceil(math.log(1e-16) / math.log(max(rho, 1e-12)))))
        B = np.zeros_like(Sigma)
        term = Sigma.copy()
        for _ in range(depth):
            B += term
            term = A @ term @ A.T
    return (B + B.T) / 2.0


def simulate_var(params: ClassicalVARParams, n: int, burn_in: int = 0, seed=None) -> TimeSeries:
    """Simulate n observations of the VAR(d) recursion; exact stationary
    initial state for d = 1, zero start with burn-in >= 500 otherwise."""
    if n < 1:
        raise ParameterDomainError(f"n must be >= 1, got {n}")
    if burn_in < 0:
        raise ParameterDomainError(f"burn_in must be >= 0, got {burn_in}")
    rng = np.random.default_rng(seed)
    A = params.A
    d, p, _ = A.shape
    chol_noise = np.linalg.cholesky(params.Sigma)

    if d == 1:
        B = stationary_cov_var1(A[0], params.Sigma)
        state = [np.linalg.cholesky(B) @ rng.standard_normal(p)]
    else:
        burn_in = max(burn_in, 500)
        state = [np.zeros(p) for _ in range(d)]

    steps = burn_in + n
    eps = rng.standard_normal((steps, p)) @ chol_noise.T
    out = np.empty((steps, p))
    for t in range(steps):
        val = eps[t].copy()
        for k in range(d):
            val += A[k] @ state[k]
        out[t] = val
        state.insert(0, val)
        state.pop()
    return TimeSeries(out[burn_in:])


# ---------------------------------------------------------------------------
# AR transforms


def stationary_variance(params: ClassicalARParams) -> float:
    """Stationary variance of an AR(d) via the companion-form Lyapunov solve."""
    d = params.order
    F = companion_matrix(params.phi)
    Q = np.zeros((d, d))
    Q[0, 0] = params.sigma2
    gamma = scipy.linalg.solve_discrete_lyapunov(F, Q)
    return float(gamma[0, 0])


def ar1_to_mininfo(params: ClassicalARParams) -> MinInfoARParams:
    """AR(1): theta = phi / sigma2, tau2 = sigma2 / (1 - phi**2)."""
    if params.order != 1:
        raise ShapeMismatchError(f"expected AR(1), got order {params.order}")
    phi = float(params.phi[0])
    theta = phi / params.sigma2
    tau2 = params.sigma2 / (1.0 - phi**2)
    return MinInfoARParams(theta=[theta], tau2=tau2)


def mininfo_to_ar1(params: MinInfoARParams) -> ClassicalARParams:
    """Closed-form inverse of :func:`ar1_to_mininfo`; defined on all of
    R x (0, inf)."""
    if params.order != 1:
        raise ShapeMismatchError(f"expected 1 dependence weight, got {params.order}")
    theta = float(params.theta[0])
    tau2 = params.tau2
    root = math.sqrt(1.0 + 4.0 * theta**2 * tau2**2)
    sigma2 = 2.0 * tau2 / (1.0 + root)
    phi = 2.0 * theta * tau2 / (1.0 + root)
    return ClassicalARParams(phi=[phi], sigma2=sigma2)


def ar2_to_mininfo(params: ClassicalARParams) -> MinInfoARParams:
    """AR(2) closed form: theta1 = phi1 (1 - phi2) / sigma2, theta2 = phi2 / sigma2."""
    if params.order != 2:
        raise ShapeMismatchError(f"expected AR(2), got order {params.order}")
    phi1, phi2 = (float(v) for v in params.phi)
    s2 = params.sigma2
    theta1 = phi1 * (1.0 - phi2) / s2
    theta2 = phi2 / s2
    tau2 = (1.0 - phi2) * s2 / ((1.0 + phi2) * (1.0 - phi1 - phi2) * (1.0 + phi1 - phi2))
    return MinInfoARParams(theta=[theta1, theta2], tau2=tau2)


def _ar2_t_max(theta1: float, theta2: float) -> float:
    """Largest admissible noise variance t: the first boundary hit of the
    stationarity triangle along t -> (theta1 t / (1 - theta2 t), theta2 t).

    Candidate hits are the first positive roots of the three side margins,
    written through q2(t) = (1 - theta2 t)**2 - theta1 t and
    q3(t) = (1 - theta2 t)**2 + theta1 t, plus the pole at 1/theta2 for
    theta2 > 0 and the side 1 + phi2 = 0 for theta2 < 0.
    """
    candidates = []
    if theta2 < 0.0:
        candidates.append(-1.0 / theta2)
    elif theta2 > 0.0:
        candidates.append(1.0 / theta2)

    def quad_roots(a, b, c):
        # a t**2 + b t + c = 0, smallest positive root if any
        if a == 0.0:
            if b == 0.0:
                return
            r = -c / b
            if r > 0.0:
                yield r
            return
        disc = b * b - 4.0 * a * c
        if disc < 0.0:
            return
        sq = math.sqrt(disc)
        for r in ((-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)):
            if r > 0.0:
                yield r

    a = theta2**2
    candidates.extend(quad_roots(a, -(2.0 * theta2 + theta1), 1.0))  # q2
    candidates.extend(quad_roots(a, -(2.0 * theta2 - theta1), 1.0))  # q3
    return min(candidates) if candidates else math.inf


def mininfo_to_ar2(params: MinInfoARParams) -> ClassicalARParams:
    """AR(2) inverse: solve 1/tau2 = g(t) for the noise variance t.

    g(t) = (1 - theta2**2 t**2)/t - (1 + theta2 t) theta1**2 t / (1 - theta2 t)**3
    is strictly decreasing from +inf to 0 on (0, t_max), so bracketed
    bisection converges unconditionally; then phi1 = theta1 t / (1 - theta2 t)
    and phi2 = theta2 t.
    """
    if params.order != 2:
        raise ShapeMismatchError(f"expected 2 dependence weights, got {params.order}")
    theta1, theta2 = (float(v) for v in params.theta)
    tau2 = params.tau2

    if theta1 == 0.0 and theta2 == 0.0:
        return ClassicalARParams(phi=[0.0, 0.0], sigma2=tau2)

    def g(t):
        return (1.0 - theta2**2 * t**2) / t - (
            (1.0 + theta2 * t) * theta1**2 * t / (1.0 - theta2 * t) ** 3
        )

    target = 1.0 / tau2
    t_max = _ar2_t_max(theta1, theta2)
    hi_cap = t_max if math.isfinite(t_max) else max(tau2 * 4.0, 1.0)

    lo = min(tau2, hi_cap) * 0.5
    while g(lo) <= target:
        lo *= 0.5
        if lo < 1e-300:
            raise NoSolutionFoundError("AR(2) inverse: failed to bracket from below")
    if math.isfinite(t_max):
        hi = lo
        gap = t_max - lo
        while True:
            cand = t_max - gap * 0.5
            gap *= 0.5
            if cand > lo and g(cand) < target:
                hi = cand
                break
            if gap < 1e-300:
                raise NoSolutionFoundError("AR(2) inverse: failed to bracket from above")
    else:
        hi = max(lo * 2.0, tau2 * 2.0)
        while g(hi) >= target:
            hi *= 2.0
            if hi > 1e300:
                raise NoSolutionFoundError("AR(2) inverse: failed to bracket from above")

    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if g(mid) > target:
            lo = mid
        else:
            hi = mid
    t = 0.5 * (lo + hi)
    phi1 = theta1 * t / (1.0 - theta2 * t)
    phi2 = theta2 * t
    return ClassicalARParams(phi=[phi1, phi2], sigma2=t)


def _theta_from_phi(phi: np.ndarray, sigma2: float) -> np.ndarray:
    """Dependence weights of an AR(d): theta_i collects the x_t x_{t-i}
    coefficient of the kernel exponent,
    (phi_i - sum_{j<k, k-j=i} phi_j phi_k) / sigma2."""
    d = len(phi)
    theta = np.empty(d)
    for i in range(1, d + 1):
        cross = 0.0
        for j in range(1, d + 1):
            k = j + i
            if k <= d:
                cross += phi[j - 1] * phi[k - 1]
        theta[i - 1] = (phi[i - 1] - cross) / sigma2
    return theta


def ard_to_mininfo(params: ClassicalARParams) -> MinInfoARParams:
    """General AR(d) forward transform; the stationary variance comes from
    the companion-form Lyapunov solve."""
    theta = _theta_from_phi(params.phi, params.sigma2)
    return MinInfoARParams(theta=theta, tau2=stationary_variance(params))


def mininfo_to_ard(params: MinInfoARParams, max_iters: int = 200, tol: float = 1e-9) -> ClassicalARParams:
    """Numerical inverse of :func:`ard_to_mininfo` for d >= 3.

    Damped Newton on the d+1 residuals (theta definitions plus the
    stationary-variance equation, the latter scaled by 1/tau2) with a
    finite-difference Jacobian.  Best effort: the result is returned only if
    the residual drops below ``tol`` and the coefficients are stationary.
    """
    d = params.order
    if d < 3:
        raise ShapeMismatchError(f"use the closed-form inverses for d <= 2, got d={d}")
    theta = params.theta
    tau2 = params.tau2

    def residual(x):
        phi, s2 = x[:d], x[d]
        if s2 <= 0.0:
            return None
        if _spectral_radius(companion_matrix(phi)) >= 1.0 - 1e-10:
            return None
        r = np.empty(d + 1)
        r[:d] = _theta_from_phi(phi, s2) - theta
        F = companion_matrix(phi)
        Q = np.zeros((d, d))
        Q[0, 0] = s2
        gamma = scipy.linalg.solve_discrete_lyapunov(F, Q)
        r[d] = (gamma[0, 0] - tau2) / tau2
        return r

    # AR(1)-style shrinkage sets the scale of the initial guess
    shrink = 2.0 / (1.0 + math.sqrt(1.0 + 4.0 * float(theta @ theta) * tau2**2))
    phi0 = theta * tau2 * shrink
    while _spectral_radius(companion_matrix(phi0)) >= 0.95:
        phi0 = phi0 * 0.9
    x = np.concatenate([phi0, [tau2]])
    r = residual(x)
    if r is None:
        x = np.concatenate([np.zeros(d), [tau2]])
        r = residual(x)

    for _ in range(max_iters):
        norm_r = float(np.linalg.norm(r, np.inf))
        if norm_r < tol:
            break
        jac = np.empty((d + 1, d + 1))
        for j in range(d + 1):
            h = 1e-7 * (1.0 + abs(x[j]))
            xp = x.copy()
            xp[j] += h
            xm = x.copy()
            xm[j] -= h
            rp, rm = residual(xp), residual(xm)
            if rp is None or rm is None:
                h *= 0.01
                xp, xm = x.copy(), x.copy()
                xp[j] += h
                xm[j] -= h
                rp, rm = residual(xp), residual(xm)
                if rp is None or rm is None:
                    raise NoSolutionFoundError("AR(d) inverse: Jacobian left the feasible region")
            jac[:, j] = (rp - rm) / (2.0 * h)
        try:
            step = np.linalg.solve(jac, -r)
        except np.linalg.LinAlgError as err:
            raise NoSolutionFoundError(f"AR(d) inverse: singular Jacobian ({err})") from err
        lam = 1.0
        for _ in range(40):
            cand = x + lam * step
            rc = residual(cand)
            if rc is not None and np.linalg.norm(rc, np.inf) < norm_r:
                x, r = cand, rc
                break
            lam *= 0.5
        else:
            raise NoSolutionFoundError("AR(d) inverse: damped Newton stalled")
    else:
        raise NoSolutionFoundError(
            f"AR(d) inverse: no convergence after {max_iters} iterations"
        )
    return ClassicalARParams(phi=x[:d], sigma2=float(x[d]))


def mininfo_to_ar(params: MinInfoARParams) -> ClassicalARParams:
    """Dispatch to the closed forms for d <= 2 and the Newton inverse beyond."""
    if params.order == 1:
        return mininfo_to_ar1(params)
    if params.order == 2:
        return mininfo_to_ar2(params)
    return mininfo_to_ard(params)


# ---------------------------------------------------------------------------
# VAR(1) transforms


def var1_to_mininfo(params: ClassicalVARParams) -> MinInfoVARParams:
    """VAR(1) forward transform: Theta = A' Sigma^{-1}, B from the
    stationarity equation."""
    if params.order != 1:
        raise ShapeMismatchError(f"expected VAR(1), got order {params.order}")
    A = params.A[0]
    Sigma = params.Sigma
    Theta = np.linalg.solve(Sigma, A).T
    B = stationary_cov_var1(A, Sigma)
    return MinInfoVARParams(Theta=Theta, B=B)


def _floor_pd(mat: np.ndarray, floor: float = 1e-12) -> np.ndarray:
    vals, vecs = np.linalg.eigh((mat + mat.T) / 2.0)
    if vals[0] > floor:
        return (mat + mat.T) / 2.0
    vals = np.maximum(vals, floor)
    return (vecs * vals) @ vecs.T


def mininfo_to_var1(
    params: MinInfoVARParams,
    max_fixed_point: int = 10_000,
    max_newton: int = 100,
    rtol: float = 1e-13,
) -> ClassicalVARParams:
    """VAR(1) inverse: recover (A, Sigma) from (Theta, B).

    Solves the quadratic matrix equation B = Sigma Theta' B Theta Sigma + Sigma
    for Sigma by a damped fixed-point iteration
    Sigma <- (1-gamma) Sigma + gamma (B - Sigma Theta' B Theta Sigma),
    starting at Sigma = B, symmetrizing each iterate and flooring eigenvalues
    at 1e-12; gamma is halved whenever the residual fails to decrease.  A
    damped Newton on the residual map takes over if the fixed point has not
    converged after ``max_fixed_point`` iterations.  Then A = Sigma Theta'.

    The default ``rtol`` of 1e-13 pushes the residual to near machine level
    so that classical -> minimum-information -> classical round trips land
    within 1e-10 in parameter space; a stalled line search still returns the
    iterate when its residual is below 1e-10 * ||B||.
    """
    Theta = params.Theta
    B = params.B
    p = params.dim
    C = Theta.T @ B @ Theta  # PSD
    norm_b = np.linalg.norm(B, "fro")
    tol = rtol * norm_b

    def resid_mat(S):
        return B - S - S @ C @ S

    Sigma = B.copy()
    gamma = 1.0
    res = resid_mat(Sigma)
    res_norm = np.linalg.norm(res, "fro")
    for _ in range(max_fixed_point):
        if res_norm < tol:
            A = Sigma @ Theta.T
            return ClassicalVARParams(A=A[None], Sigma=Sigma)
        cand = (1.0 - gamma) * Sigma + gamma * (B - Sigma @ C @ Sigma)
        cand = _floor_pd(cand)
        cand_res = resid_mat(cand)
        cand_norm = np.linalg.norm(cand_res, "fro")
        if cand_norm < res_norm:
            Sigma, res_norm = cand, cand_norm
            gamma = min(1.0, gamma * 1.2)
        else:
            gamma *= 0.5
            if gamma < 1e-8:
                break

    # Newton fallback on R(Sigma) = Sigma + Sigma C Sigma - B = 0
    eye = np.eye(p * p)
    for _ in range(max_newton):
        res = resid_mat(Sigma)
        res_norm = np.linalg.norm(res, "fro")
        if res_norm < tol:
            A = Sigma @ Theta.T
            return ClassicalVARParams(A=A[None], Sigma=Sigma)
        SC = Sigma @ C
        jac = eye + np.kron(SC, np.eye(p)) + np.kron(np.eye(p), SC)
        try:
            step = np.linalg.solve(jac, res.reshape(-1, order="F"))
        except np.linalg.LinAlgError as err:
            raise NoSolutionFoundError(f"VAR(1) inverse: singular Jacobian ({err})") from err
        step = step.reshape(p, p, order="F")
        lam = 1.0
        for _ in range(40):
            cand = _floor_pd(Sigma + lam * step)
            if np.linalg.norm(resid_mat(cand), "fro") < res_norm:
                Sigma = cand
                break
            lam *= 0.5
        else:
            if res_norm < 1e-10 * norm_b:  # stalled at numerical floor
                A = Sigma @ Theta.T
                return ClassicalVARParams(A=A[None], Sigma=Sigma)
            raise NoSolutionFoundError("VAR(1) inverse: Newton stalled")
    raise NoSolutionFoundError("VAR(1) inverse: no convergence")


# ---------------------------------------------------------------------------
# Fisher information and divergence rates


def ar1_fisher_info(theta: float, tau2: float) -> np.ndarray:
    """Fisher information of the AR(1) minimum-information parametrization.

    The (theta, tau2) block is diagonal: the dependence weight and the
    stationary variance are orthogonal parameters.
    """
    if not (np.isfinite(tau2) and tau2 > 0):
        raise ParameterDomainError(f"tau2 must be positive, got {tau2}")
    theta = float(theta)
    root = math.sqrt(1.0 + 4.0 * theta**2 * tau2**2)
    g_theta = 2.0 * tau2**2 / (root * (1.0 + root))
    g_tau2 = 1.0 / (2.0 * tau2**2 * root)
    return np.array([[g_theta, 0.0], [0.0, g_tau2]])


def kernel_from_ar1(params: ClassicalARParams, stationary: bool = True) -> GaussianKernel:
    """Package an AR(1) as a conditionally Gaussian kernel."""
    if params.order != 1:
        raise ShapeMismatchError(f"expected AR(1), got order {params.order}")
    phi = float(params.phi[0])
    cov = [[params.sigma2 / (1.0 - phi**2)]] if stationary else None
    return GaussianKernel(mean_map=[[phi]], noise_cov=[[params.sigma2]], stationary_cov=cov)


def kernel_from_var1(params: ClassicalVARParams, stationary: bool = True) -> GaussianKernel:
    if params.order != 1:
        raise ShapeMismatchError(f"expected VAR(1), got order {params.order}")
    A = params.A[0]
    cov = stationary_cov_var1(A, params.Sigma) if stationary else None
    return GaussianKernel(mean_map=A, noise_cov=params.Sigma, stationary_cov=cov)


def divergence_rate(p: GaussianKernel, q: GaussianKernel) -> float:
    """Divergence rate between stationary conditionally Gaussian kernels:
    the conditional KL divergence of q from p averaged over p's stationary law.

    Closed form:
        (log det Sq - log det Sp - p + tr(Sq^{-1} Sp)
         + tr(Bp (Fp - Fq)' Sq^{-1} (Fp - Fq))) / 2
    """
    if p.stationary_cov is None:
        raise ContractError("divergence_rate needs p.stationary_cov")
    if p.dim != q.dim:
        raise ShapeMismatchError(f"kernel dimensions differ: {p.dim} vs {q.dim}")
    dim = p.dim
    Sp, Sq = p.noise_cov, q.noise_cov
    dF = p.mean_map - q.mean_map
    sign_q, logdet_q = np.linalg.slogdet(Sq)
    sign_p, logdet_p = np.linalg.slogdet(Sp)
    if sign_q <= 0 or sign_p <= 0:
        raise ParameterDomainError("noise covariances must be positive definite")
    cho = scipy.linalg.cho_factor(Sq)
    trace_ratio = float(np.trace(scipy.linalg.cho_solve(cho, Sp)))
    mean_term = float(np.trace(p.stationary_cov @ dF.T @ scipy.linalg.cho_solve(cho, dF)))
    return 0.5 * (logdet_q - logdet_p - dim + trace_ratio + mean_term)


# ---------------------------------------------------------------------------
# flat key-value serialization (consumed by the command line tools)


def params_to_text(params) -> str:
    """Serialize a parameter record to flat `key=value` lines (1-based indices)."""
    lines = []
    if isinstance(params, ClassicalARParams):
        for i, v in enumerate(params.phi, start=1):
            lines.append(f"phi.{i}={float(v)!r}")
        lines.append(f"sigma2={float(params.sigma2)!r}")
    elif isinstance(params, MinInfoARParams):
        for i, v in enumerate(params.theta, start=1):
            lines.append(f"theta.{i}={float(v)!r}")
        lines.append(f"tau2={float(params.tau2)!r}")
    elif isinstance(params, ClassicalVARParams):
        d, p, _ = params.A.shape
        for k in range(d):
            for i in range(p):
                for j in range(p):
                    lines.append(f"A.{k + 1}.{i + 1}.{j + 1}={float(params.A[k, i, j])!r}")
        for i in range(p):
            for j in range(p):
                lines.append(f"Sigma.{i + 1}.{j + 1}={float(params.Sigma[i, j])!r}")
    elif isinstance(params, MinInfoVARParams):
        p = params.dim
        for i in range(p):
            for j in range(p):
                lines.append(f"Theta.{i + 1}.{j + 1}={float(params.Theta[i, j])!r}")
        for i in range(p):
            for j in range(p):
                lines.append(f"B.{i + 1}.{j + 1}={float(params.B[i, j])!r}")
    else:
        raise TypeError(f"cannot serialize {type(params)!r}")
    return "\n".join(lines) + "\n"


def params_from_text(text: str):
    """Parse the flat key-value format back into the matching record."""
    entries: dict[str, float] = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition("=")
        entries[key.strip()] = float(value)

    def collect(prefix, rank):
        found = {}
        for key, value in entries.items():
            if not key.startswith(prefix + "."):
                continue
            idx = tuple(int(tok) for tok in key[len(prefix) + 1 :].split("."))
            if len(idx) != rank:
                raise ValueError(f"bad index arity in {key!r}")
            found[idx] = value
        return found

    if "sigma2" in entries and any(k.startswith("phi.") for k in entries):
        phis = collect("phi", 1)
        phi = [phis[(i,)] for i in range(1, len(phis) + 1)]
        return ClassicalARParams(phi=phi, sigma2=entries["sigma2"])
    if "tau2" in entries and any(k.startswith("theta.") for k in entries):
        thetas = collect("theta", 1)
        theta = [thetas[(i,)] for i in range(1, len(thetas) + 1)]
        return MinInfoARParams(theta=theta, tau2=entries["tau2"])
    if any(k.startswith("A.") for k in entries):
        avals = collect("A", 3)
        sv = collect("Sigma", 2)
        d = max(idx[0] for idx in avals)
        p = max(idx[1] for idx in avals)
        A = np.empty((d, p, p))
        for (k, i, j), v in avals.items():
            A[k - 1, i - 1, j - 1] = v
        Sigma = np.empty((p, p))
        for (i, j), v in sv.items():
            Sigma[i - 1, j - 1] = v
        return ClassicalVARParams(A=A, Sigma=Sigma)
    if any(k.startswith("Theta.") for k in entries):
        tv = collect("Theta", 2)
        bv = collect("B", 2)
        p = max(idx[0] for idx in tv)
        Theta = np.empty((p, p))
        for (i, j), v in tv.items():
            Theta[i - 1, j - 1] = v
        B = np.empty((p, p))
        for (i, j), v in bv.items():
            B[i - 1, j - 1] = v
        return MinInfoVARParams(Theta=Theta, B=B)
    raise ValueError("unrecognized parameter record")
