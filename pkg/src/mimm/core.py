"""Shared substrate: time-series container, monomial dependence functions,
sufficient statistics, and incremental swap updates.

Index conventions are 0-based throughout.  A window at time ``t`` stacks the
rows ``x_t, x_{t-1}, ..., x_{t-d}`` (row 0 is the current observation).  The
swappable interior of a series of length ``n`` under a spec of order ``d`` is
the position range ``d <= i <= n - d - 1``: the first ``d`` and last ``d``
positions stay frozen under conditional inference.

All containers are immutable after construction and safe to share across
threads; every operation is a pure function.  Statistic summation relies on
numpy's pairwise accumulation, which keeps totals reproducible to ~1e-12
regardless of how callers shard the work.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .exceptions import (
    BoundaryViolationError,
    DegenerateScaleError,
    InsufficientDataError,
    ShapeMismatchError,
)

__all__ = [
    "MonomialTerm",
    "DependenceSpec",
    "TimeSeries",
    "ar_spec",
    "kron_spec",
    "interior_range",
    "window_statistics",
    "total_statistic",
    "swap_delta",
    "swap_deltas",
    "standard_scale",
]

VALID_KINDS = ("real", "binary")


@dataclass(frozen=True)
class MonomialTerm:
    """One entry of a dependence function: a monomial in lagged components.

    ``factors`` is a tuple of ``(lag, component, exponent)`` triples.  The
    constructor canonicalizes: factors are sorted by ``(lag, component)`` and
    duplicates of the same ``(lag, component)`` pair are merged by adding
    exponents, so equality and hashing are well-defined.
    """

    factors: tuple[tuple[int, int, int], ...]

    def __post_init__(self):
        if len(self.factors) == 0:
            raise ValueError("a monomial term needs at least one factor")
        merged: dict[tuple[int, int], int] = {}
        for factor in self.factors:
            if len(factor) != 3:
                raise ValueError(f"factor must be (lag, component, exponent): {factor!r}")
            lag, comp, exp = (int(v) for v in factor)
            if lag < 0:
                raise ValueError(f"lag must be >= 0, got {lag}")
            if comp < 0:
                raise ValueError(f"component must be >= 0, got {comp}")
            if exp < 1:
                raise ValueError(f"exponent must be >= 1, got {exp}")
            merged[(lag, comp)] = merged.get((lag, comp), 0) + exp
        canon = tuple((lag, comp, exp) for (lag, comp), exp in sorted(merged.items()))
        object.__setattr__(self, "factors", canon)

    @property
    def max_lag(self) -> int:
        return max(lag for lag, _, _ in self.factors)

    @property
    def has_current(self) -> bool:
        """True when the term involves the lag-0 (current) observation."""
        return any(lag == 0 for lag, _, _ in self.factors)

    def label(self) -> str:
        """Serialized form, e.g. ``0:0^1*1:0^1`` for x_t * x_{t-1}."""
        return "*".join(f"{lag}:{comp}^{exp}" for lag, comp, exp in self.factors)

    @classmethod
    def parse(cls, text: str) -> "MonomialTerm":
        factors = []
        for piece in text.strip().split("*"):
            head, _, exp = piece.partition("^")
            lag_s, _, comp_s = head.partition(":")
            try:
                factors.append((int(lag_s), int(comp_s), int(exp) if exp else 1))
            except ValueError as err:
                raise ValueError(f"cannot parse monomial factor {piece!r}") from err
        return cls(tuple(factors))


@dataclass(frozen=True)
class DependenceSpec:
    """A dependence function: ``order`` lags, ``dim`` components, K monomials.

    Every term must touch the current observation (lag 0); a term without a
    lag-0 factor only shifts the conditional law by a constant and is
    rejected as unidentifiable.
    """

    order: int
    dim: int
    terms: tuple[MonomialTerm, ...]

    def __post_init__(self):
        if self.order < 1:
            raise ValueError(f"order must be >= 1, got {self.order}")
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")
        terms = tuple(self.terms)
        if len(terms) == 0:
            raise ValueError("a dependence spec needs at least one term")
        for term in terms:
            if not isinstance(term, MonomialTerm):
                raise TypeError(f"terms must be MonomialTerm, got {type(term)!r}")
            if term.max_lag > self.order:
                raise ValueError(f"term {term.label()} exceeds order {self.order}")
            if any(comp >= self.dim for _, comp, _ in term.factors):
                raise ValueError(f"term {term.label()} exceeds dimension {self.dim}")
            if not term.has_current:
                raise ValueError(
                    f"term {term.label()} has no lag-0 factor; it would only add "
                    "a constant shift to the conditional model"
                )
        object.__setattr__(self, "terms", terms)

    @property
    def n_terms(self) -> int:
        return len(self.terms)

    def evaluate(self, window) -> np.ndarray:
        """Evaluate all K monomials on one window (row 0 = current value)."""
        win = np.asarray(window, dtype=float)
        if win.ndim == 1:
            if self.dim != 1:
                raise ShapeMismatchError(f"1-d window but spec dimension is {self.dim}")
            win = win[:, None]
        if win.shape != (self.order + 1, self.dim):
            raise ShapeMismatchError(
                f"window shape {win.shape} does not match (order+1, dim) = "
                f"({self.order + 1}, {self.dim})"
            )
        out = np.empty(self.n_terms)
        for k, term in enumerate(self.terms):
            value = 1.0
            for lag, comp, exp in term.factors:
                base = win[lag, comp]
                value *= base if exp == 1 else base**exp
            out[k] = value
        return out

    def to_text(self) -> str:
        """Line-oriented serialization: one term per line."""
        return "\n".join(term.label() for term in self.terms) + "\n"

    @classmethod
    def from_text(cls, text: str, order: int | None = None, dim: int | None = None) -> "DependenceSpec":
        """Parse the line format; order/dim default to the smallest valid values."""
        terms = tuple(
            MonomialTerm.parse(line)
            for line in text.splitlines()
            if line.strip() and not line.lstrip().startswith("#")
        )
        if not terms:
            raise ValueError("no terms found in spec text")
        if order is None:
            order = max(term.max_lag for term in terms)
        if dim is None:
            dim = 1 + max(comp for term in terms for _, comp, _ in term.factors)
        return cls(order=order, dim=dim, terms=terms)

    @classmethod
    def load(cls, path, order=None, dim=None) -> "DependenceSpec":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_text(fh.read(), order=order, dim=dim)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_text())


def ar_spec(order: int) -> DependenceSpec:
    """Univariate autoregressive-type dependence: terms x_t * x_{t-i}."""
    terms = tuple(MonomialTerm(((0, 0, 1), (i, 0, 1))) for i in range(1, order + 1))
    return DependenceSpec(order=order, dim=1, terms=terms)


def kron_spec(dim: int, blocks) -> DependenceSpec:
    """Kronecker-product dependence over ``dim`` components.

    Each block ``(lag, exp_now, exp_lag)`` contributes the dim**2 monomials
    ``x_{t,i}**exp_now * x_{t-lag,j}**exp_lag`` with i outer and j inner,
    matching the column-stacking vectorization of the coefficient matrix.
    """
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    blocks = list(blocks)
    if not blocks:
        raise ValueError("need at least one (lag, exp_now, exp_lag) block")
    terms = []
    for lag, exp_now, exp_lag in blocks:
        if lag < 1 or exp_now < 1 or exp_lag < 1:
            raise ValueError(f"invalid block {(lag, exp_now, exp_lag)!r}: all entries must be >= 1")
        for i in range(dim):
            for j in range(dim):
                terms.append(MonomialTerm(((0, i, exp_now), (lag, j, exp_lag))))
    order = max(lag for lag, _, _ in blocks)
    return DependenceSpec(order=order, dim=dim, terms=tuple(terms))


class TimeSeries:
    """An n-by-p block of observations with per-column kind tags.

    ``data`` is stored as a read-only float array; binary-tagged columns must
    contain only 0/1 values and every entry must be finite.
    """

    __slots__ = ("data", "kinds", "_rows")

    def __init__(self, data, kinds=None):
        arr = np.array(data, dtype=float)
        if arr.ndim == 1:
            arr = arr[:, None]
        if arr.ndim != 2:
            raise ShapeMismatchError(f"series must be 2-d, got shape {arr.shape}")
        n, p = arr.shape
        if n < 1 or p < 1:
            raise ShapeMismatchError(f"series must be non-empty, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("series contains non-finite entries")
        if kinds is None:
            kinds = ("real",) * p
        kinds = tuple(kinds)
        if len(kinds) != p:
            raise ShapeMismatchError(f"{len(kinds)} kind tags for {p} columns")
        for j, kind in enumerate(kinds):
            if kind not in VALID_KINDS:
                raise ValueError(f"unknown column kind {kind!r} (column {j})")
            if kind == "binary" and not np.all(np.isin(arr[:, j], (0.0, 1.0))):
                raise ValueError(f"binary column {j} has values outside {{0, 1}}")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)
        object.__setattr__(self, "kinds", kinds)
        object.__setattr__(self, "_rows", None)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def p(self) -> int:
        return self.data.shape[1]

    def rows(self):
        """Tuple-of-tuples view cached for scalar hot loops."""
        if self._rows is None:
            object.__setattr__(self, "_rows", tuple(map(tuple, self.data)))
        return self._rows

    def __len__(self) -> int:
        return self.n

    def __repr__(self) -> str:
        return f"TimeSeries(n={self.n}, p={self.p}, kinds={self.kinds})"

    @classmethod
    def from_csv(cls, path, kinds=None, header="auto") -> "TimeSeries":
        """Load a CSV with one row per time step and p numeric columns.

        ``header='auto'`` skips the first line when it does not parse as
        numbers.  Column kinds come from the caller (e.g. a sidecar config);
        the default is all-real.
        """
        with open(path, "r", encoding="utf-8") as fh:
            first = fh.readline()
        skip = 0
        if header == "auto":
            tokens = [tok for tok in first.strip().split(",") if tok != ""]
            try:
                [float(tok) for tok in tokens]
            except ValueError:
                skip = 1
        elif header is True:
            skip = 1
        data = np.loadtxt(path, delimiter=",", skiprows=skip, ndmin=2)
        return cls(data, kinds=kinds)

    def to_csv(self, path, header=None) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            if header:
                fh.write(",".join(header) + "\n")
            for row in self.data:
                fh.write(",".join(repr(float(v)) for v in row) + "\n")


def interior_range(n: int, d: int) -> range:
    """Swappable interior positions: d <= i <= n - d - 1 (0-based)."""
    return range(d, n - d)


def _check_series(spec: DependenceSpec, series: TimeSeries) -> None:
    if series.p != spec.dim:
        raise ShapeMismatchError(
            f"series has {series.p} columns but spec dimension is {spec.dim}"
        )
    if series.n < spec.order + 1:
        raise InsufficientDataError(
            f"series length {series.n} < order + 1 = {spec.order + 1}"
        )


def window_statistics(spec: DependenceSpec, series: TimeSeries) -> np.ndarray:
    """Per-window dependence values, shape (n - d, K); row i is the window at
    time t = d + i."""
    _check_series(spec, series)
    X = series.data
    n = series.n
    d = spec.order
    t = np.arange(d, n)
    win = X[t[:, None] - np.arange(d + 1)[None, :], :]  # (n-d, d+1, p)
    out = np.empty((n - d, spec.n_terms))
    for k, term in enumerate(spec.terms):
        acc = np.ones(n - d)
        for lag, comp, exp in term.factors:
            col = win[:, lag, comp]
            acc = acc * (col if exp == 1 else col**exp)
        out[:, k] = acc
    return out


def total_statistic(spec: DependenceSpec, series: TimeSeries) -> np.ndarray:
    """Sufficient statistic H: the K-vector sum of h over all n - d windows."""
    return window_statistics(spec, series).sum(axis=0)


def _check_swap_indices(n: int, d: int, s1: int, s2: int) -> None:
    if s1 >= s2:
        raise BoundaryViolationError(f"need s1 < s2, got ({s1}, {s2})")
    if s1 < d or s2 > n - d - 1:
        raise BoundaryViolationError(
            f"swap ({s1}, {s2}) outside the interior [{d}, {n - d - 1}] for n={n}, d={d}"
        )


def _affected_windows(d: int, s1: int, s2: int):
    """Window times touching position s1 or s2, without duplicates."""
    return itertools.chain(
        range(s1, s1 + d + 1), range(max(s2, s1 + d + 1), s2 + d + 1)
    )


def _swap_delta_rows(rows, order, d, terms, s1, s2):
    """Scalar-path swap delta on tuple rows.

    ``rows`` is the cached tuple view of the data, ``order`` a list mapping
    position -> data index (or None for identity).  Returns the list
    H(swapped) - H(current) re-evaluating only affected windows.  Shared by
    the public wrapper, the pair statistics, and the exchange sampler.
    """
    if order is None:
        i1, i2 = s1, s2
    else:
        i1, i2 = order[s1], order[s2]
    r1, r2 = rows[i1], rows[i2]
    delta = [0.0] * len(terms)
    for t in _affected_windows(d, s1, s2):
        for k, factors in enumerate(terms):
            before = 1.0
            after = 1.0
            for lag, comp, exp in factors:
                pos = t - lag
                if order is None:
                    row = rows[pos]
                else:
                    row = rows[order[pos]]
                if pos == s1:
                    swapped = r2
                elif pos == s2:
                    swapped = r1
                else:
                    swapped = row
                if exp == 1:
                    before *= row[comp]
                    after *= swapped[comp]
                else:
                    before *= row[comp] ** exp
                    after *= swapped[comp] ** exp
            delta[k] += after - before
    return delta


def _term_factor_tuples(spec: DependenceSpec):
    return tuple(term.factors for term in spec.terms)


def swap_delta(spec: DependenceSpec, series: TimeSeries, s1: int, s2: int, order=None) -> np.ndarray:
    """Change of the sufficient statistic under the transposition of interior
    positions s1 < s2, evaluated against the current ordering.

    Only the at most 2(d+1) windows containing s1 or s2 are re-evaluated;
    the series itself is never permuted.  ``order`` is a position -> data
    index map (None means identity).
    """
    _check_series(spec, series)
    _check_swap_indices(series.n, spec.order, s1, s2)
    if order is not None:
        order = [int(i) for i in order]
        if len(order) != series.n:
            raise ShapeMismatchError("order length does not match series length")
    delta = _swap_delta_rows(
        series.rows(), order, spec.order, _term_factor_tuples(spec), s1, s2
    )
    return np.asarray(delta)


def swap_deltas(spec: DependenceSpec, series: TimeSeries, s1, s2, window_stats=None) -> np.ndarray:
    """Vectorized swap deltas for identity ordering: row b is
    H(swap s1[b], s2[b]) - H(identity), shape (B, K).

    Precomputed ``window_statistics`` may be passed to amortize repeated
    calls.  Used by the pseudo-likelihood fitters; agrees with
    :func:`swap_delta` to ~1e-12 (summation order differs).
    """
    _check_series(spec, series)
    d = spec.order
    X = series.data
    n = series.n
    s1 = np.atleast_1d(np.asarray(s1, dtype=np.intp))
    s2 = np.atleast_1d(np.asarray(s2, dtype=np.intp))
    if s1.shape != s2.shape or s1.ndim != 1:
        raise ShapeMismatchError("s1 and s2 must be 1-d arrays of equal length")
    if np.any(s1 >= s2):
        raise BoundaryViolationError("need s1 < s2 elementwise")
    if np.any(s1 < d) or np.any(s2 > n - d - 1):
        raise BoundaryViolationError("swap indices outside the swappable interior")
    if window_stats is None:
        window_stats = window_statistics(spec, series)

    lags = np.arange(d + 1)
    t1 = s1[:, None] + lags[None, :]
    t2 = s2[:, None] + lags[None, :]
    valid2 = t2 > (s1[:, None] + d)  # drop windows already counted around s1
    times = np.concatenate([t1, t2], axis=1)  # (B, 2(d+1))
    valid = np.concatenate([np.ones_like(t1, dtype=bool), valid2], axis=1)

    pos = times[:, :, None] - lags[None, None, :]  # (B, W, d+1)
    vals = X[pos]  # (B, W, d+1, p)
    m1 = (pos == s1[:, None, None])[..., None]
    m2 = (pos == s2[:, None, None])[..., None]
    swapped = np.where(m1, X[s2][:, None, None, :], vals)
    swapped = np.where(m2, X[s1][:, None, None, :], swapped)

    ident = window_stats[times - d]  # (B, W, K)
    out = np.empty((len(s1), spec.n_terms))
    for k, term in enumerate(spec.terms):
        acc = np.ones(times.shape)
        for lag, comp, exp in term.factors:
            col = swapped[:, :, lag, comp]
            acc = acc * (col if exp == 1 else col**exp)
        out[:, k] = ((acc - ident[:, :, k]) * valid).sum(axis=1)
    return out


def standard_scale(series: TimeSeries) -> TimeSeries:
    """Standardize real columns to zero mean and unit variance; binary
    columns pass through unchanged.

    Uses the population convention (divide by n), so the two-point column
    (0, 2) maps exactly to (-1, 1).
    """
    data = series.data.copy()
    for j, kind in enumerate(series.kinds):
        if kind != "real":
            continue
        col = data[:, j]
        mean = col.mean()
        sd = np.sqrt(np.mean((col - mean) ** 2))
        if sd == 0.0 or not np.isfinite(sd):
            raise DegenerateScaleError(f"real column {j} has zero standard deviation")
        data[:, j] = (col - mean) / sd
    return TimeSeries(data, kinds=series.kinds)
