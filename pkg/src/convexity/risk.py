"""Risk measures and the capital-allocation loss surface.

A business line with loss X (cdf F) holding capital x pays the expected
uncovered loss E[(X - x)+] = int_x^inf (1 - F(t)) dt plus a holding penalty
(1 - p) x (linear) or (1 - p) x^alpha (power). Lines are combined with a
weighted generalized mean of order beta.

Two loss distributions are supported: ``uniform01`` with closed forms, and
tabulated cdfs interpolated linearly between nodes (a repeated abscissa
encodes a jump). Table integrals use the trapezoid rule on the nodes, which
is exact for the piecewise-linear cdf.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import DomainError, InputError
from .field import DEFAULT_DELTA, ScalarField

BETA_EPS = 1e-9
SMALL_BETA = 1e-3
WEIGHT_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class LossDistribution:
    kind: str
    t: Optional[np.ndarray] = None
    cdf_values: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.kind == "uniform01":
            return
        if self.kind != "table":
            raise InputError(f"unknown distribution kind {self.kind!r}")
        t = np.asarray(self.t, dtype=float)
        F = np.asarray(self.cdf_values, dtype=float)
        if t.ndim != 1 or t.shape != F.shape or t.size < 2:
            raise InputError("table cdf needs matching 1-D node arrays of length >= 2")
        if np.any(np.diff(t) < 0) or np.any(np.diff(F) < 0):
            raise InputError("table cdf nodes and values must be non-decreasing")
        if abs(F[0]) > 1e-12 or abs(F[-1] - 1.0) > 1e-12:
            raise InputError("table cdf must run from 0 to 1")
        F = F.copy()
        F[0], F[-1] = 0.0, 1.0
        t = t.copy()
        t.setflags(write=False)
        F.setflags(write=False)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "cdf_values", F)

    @property
    def support(self):
        if self.kind == "uniform01":
            return 0.0, 1.0
        return float(self.t[0]), float(self.t[-1])

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "uniform01":
            return np.clip(x, 0.0, 1.0)
        return _table_cdf(self.t, self.cdf_values, x)


UNIFORM01 = LossDistribution("uniform01")


def table_distribution(t: Sequence[float], cdf_values: Sequence[float]) -> LossDistribution:
    return LossDistribution("table", np.asarray(t, float), np.asarray(cdf_values, float))


def _table_cdf(t, F, x):
    # right-continuous piecewise-linear interpolation
    j = np.clip(np.searchsorted(t, x, side="right") - 1, 0, t.size - 2)
    t0, t1 = t[j], t[j + 1]
    F0, F1 = F[j], F[j + 1]
    width = t1 - t0
    frac = np.where(width > 0, (x - t0) / np.where(width > 0, width, 1.0), 1.0)
    out = F0 + np.clip(frac, 0.0, 1.0) * (F1 - F0)
    out = np.where(x < t[0], 0.0, out)
    return np.where(x >= t[-1], 1.0, out)


def expected_shortfall(dist: LossDistribution, x):
    """E[(X - x)+] written as the tail integral of 1 - F from x."""
    x = np.asarray(x, dtype=float)
    lo, hi = dist.support
    if np.any(x < lo):
        raise DomainError(f"capital below the support's left bound {lo}")
    if dist.kind == "uniform01":
        return np.where(x >= 1.0, 0.0, 0.5 * (1.0 - x) ** 2)
    t, F = dist.t, dist.cdf_values
    # tail[k] = int_{t_k}^{t_max} (1 - F)
    seg = 0.5 * np.diff(t) * ((1.0 - F[:-1]) + (1.0 - F[1:]))
    tail = np.concatenate([np.cumsum(seg[::-1])[::-1], [0.0]])
    j = np.clip(np.searchsorted(t, x, side="right"), 1, t.size - 1)
    Fx = _table_cdf(t, F, x)
    first = 0.5 * (t[j] - x) * ((1.0 - Fx) + (1.0 - F[j]))
    out = first + tail[j]
    return np.where(x >= hi, 0.0, out)


def value_at_risk(dist: LossDistribution, p: float) -> float:
    """inf{x : F(x) >= p}."""
    if not 0.0 < p < 1.0:
        raise InputError(f"p must lie in (0, 1), got {p}")
    if dist.kind == "uniform01":
        return float(p)
    t, F = dist.t, dist.cdf_values
    k = int(np.searchsorted(F, p, side="left"))
    if k == 0:
        return float(t[0])
    t0, t1, F0, F1 = t[k - 1], t[k], F[k - 1], F[k]
    if t1 == t0:
        return float(t1)
    return float(t0 + (p - F0) / (F1 - F0) * (t1 - t0))


def average_value_at_risk(dist: LossDistribution, p: float) -> float:
    """(1 / (1 - p)) * int_p^1 VaR_u du.

    ``p = 0`` is accepted and gives the mean.
    """
    if not 0.0 <= p < 1.0:
        raise InputError(f"p must lie in [0, 1), got {p}")
    if dist.kind == "uniform01":
        return 0.5 * (1.0 + p)
    t, F = dist.t, dist.cdf_values
    total = 0.0
    for k in range(t.size - 1):
        u0, u1 = F[k], F[k + 1]
        if u1 <= u0 or u1 <= p:
            continue
        # quantile is linear from t[k] to t[k+1] over levels [u0, u1]
        a = max(p, u0)
        va = t[k] + (a - u0) / (u1 - u0) * (t[k + 1] - t[k])
        total += 0.5 * (u1 - a) * (va + t[k + 1])
    return total / (1.0 - p)


# --------------------------------------------------------------------------
# business lines


@dataclass(frozen=True)
class LineSpec:
    distribution: LossDistribution
    p: float = 0.99
    alpha: float = 1.0
    penalty: str = "linear"

    def __post_init__(self):
        if not 0.0 < self.p < 1.0:
            raise InputError(f"p must lie in (0, 1), got {self.p}")
        if not self.alpha > 0:
            raise InputError(f"alpha must be positive, got {self.alpha}")
        if self.penalty not in ("linear", "power"):
            raise InputError(f"unknown penalty kind {self.penalty!r}")


def line_total_loss(spec: LineSpec, x):
    """Expected shortfall at capital ``x`` plus the holding penalty."""
    x = np.asarray(x, dtype=float)
    if spec.penalty == "power":
        if np.any(x < 0):
            raise DomainError("power penalty needs non-negative capital")
        penalty = (1.0 - spec.p) * x ** spec.alpha
    else:
        penalty = (1.0 - spec.p) * x
    return expected_shortfall(spec.distribution, x) + penalty


def line_loss_derivatives(spec: LineSpec, x):
    """First and second derivatives of the line loss, uniform01 only.

    Closed forms used as references for finite differences.
    """
    if spec.distribution.kind != "uniform01":
        raise InputError("closed-form derivatives exist only for uniform01")
    x = np.asarray(x, dtype=float)
    inside = x < 1.0
    d1 = np.where(inside, -(1.0 - x), 0.0)
    d2 = np.where(inside, 1.0, 0.0)
    c = 1.0 - spec.p
    if spec.penalty == "power":
        a = spec.alpha
        d1 = d1 + c * a * x ** (a - 1.0)
        d2 = d2 + c * a * (a - 1.0) * x ** (a - 2.0)
    else:
        d1 = d1 + c
    return d1, d2


# --------------------------------------------------------------------------
# aggregation


def _check_weights(weights) -> np.ndarray:
    w = np.asarray(weights, dtype=float).reshape(-1)
    if w.size == 0 or np.any(w < 0) or abs(float(np.sum(w)) - 1.0) > WEIGHT_TOL:
        raise InputError(f"weights must be non-negative and sum to 1, got {w.tolist()}")
    return w


def generalized_mean(values, weights, beta: float):
    """Weighted power mean (sum_i w_i v_i^beta)^(1/beta) over the last axis.

    For ``|beta| < 1e-9`` the geometric mean exp(sum_i w_i log v_i) is used;
    below ``|beta| < 1e-3`` the power form is evaluated through expm1/log1p.
    """
    v = np.asarray(values, dtype=float)
    w = _check_weights(weights)
    if v.shape[-1:] != w.shape:
        raise InputError(f"{w.size} weights for values of shape {v.shape}")
    integral_beta = float(beta).is_integer() and beta > 0
    if not integral_beta and np.any(v <= 0):
        raise DomainError(f"generalized mean of order {beta} needs positive values")
    if abs(beta) < BETA_EPS:
        acc = 0.0
        for i in range(w.size):
            acc = acc + w[i] * np.log(v[..., i])
        return np.exp(acc)
    if abs(beta) < SMALL_BETA:
        # (sum w v^b)^(1/b) with v^b = 1 + expm1(b log v): avoids raising a
        # number within rounding of 1 to a huge power
        acc = 0.0
        for i in range(w.size):
            acc = acc + w[i] * np.expm1(beta * np.log(v[..., i]))
        return np.exp(np.log1p(acc) / beta)
    acc = 0.0
    for i in range(w.size):
        acc = acc + w[i] * v[..., i] ** beta
    with np.errstate(all="ignore"):
        out = np.power(acc, 1.0 / beta)
    if not np.all(np.isfinite(out)):
        raise DomainError(f"generalized mean of order {beta} is not finite here")
    return out


@dataclass(frozen=True)
class AggregateSpec:
    lines: tuple
    weights: tuple
    beta: float

    def __post_init__(self):
        object.__setattr__(self, "lines", tuple(self.lines))
        w = _check_weights(self.weights)
        object.__setattr__(self, "weights", tuple(float(x) for x in w))
        if len(self.lines) != len(self.weights):
            raise InputError(f"{len(self.lines)} lines but {len(self.weights)} weights")


def two_line_spec(beta: float, p: float = 0.99, alpha: float = 0.25, weights=(0.5, 0.5)):
    """Uniform(0,1) losses with power penalties, one line per weight."""
    line = LineSpec(UNIFORM01, p=p, alpha=alpha, penalty="power")
    w = tuple(float(x) for x in weights)
    return AggregateSpec(lines=(line,) * len(w), weights=w, beta=float(beta))


def aggregate_field(spec: AggregateSpec, delta: float = DEFAULT_DELTA) -> ScalarField:
    lines = spec.lines
    w = np.asarray(spec.weights)
    beta = spec.beta

    def fn(x):
        vals = np.stack([line_total_loss(l, x[..., i]) for i, l in enumerate(lines)], axis=-1)
        return generalized_mean(vals, w, beta)

    lo = [l.distribution.support[0] + delta for l in lines]
    hi = [l.distribution.support[1] - delta for l in lines]
    return ScalarField(
        len(lines),
        fn,
        name=f"h_beta[beta={beta!r}]",
        domain_hint=(lo, hi),
        params={"beta": beta, "weights": spec.weights, "spec": spec, "delta": delta},
    )
