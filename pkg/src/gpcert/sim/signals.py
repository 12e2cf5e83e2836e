"""Seeded test signals: filtered random steps and rate-limited Gaussian steps.

Both signals are piecewise analytic, so they can be evaluated exactly at any
integrator stage time.  A signal is stored as per-segment arrays; segment
``k`` covers ``[k * hold, (k + 1) * hold)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, NamedTuple

import numpy as np
from numba import njit
from pydantic import BaseModel, ConfigDict, model_validator


def as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _n_segments(hold: float, duration: float) -> int:
    if not math.isfinite(hold):
        return 1
    return int(math.floor(duration / hold)) + 2


@njit(cache=True)
def _segment(t_seg, hold, n):
    if not math.isfinite(hold):
        return 0
    # the guard absorbs round-off when t_seg sits on a switch instant
    k = int(math.floor(t_seg / hold + 1e-9))
    if k < 0:
        return 0
    if k >= n:
        return n - 1
    return k


@njit(cache=True)
def eval_filtered(t, hold, T1, targets, starts, t_seg):
    """Value and rate of a first-order filtered step sequence at time ``t``.

    The segment is selected by ``t_seg``, so an integrator step that starts
    before a switch instant sees the left limit over its whole length.
    """
    k = _segment(t_seg, hold, targets.shape[0])
    r = targets[k]
    if T1 <= 0.0:
        return r, 0.0
    tau = t - k * hold if math.isfinite(hold) else t
    x = tau / T1
    if x > 50.0:
        # settled to below double precision
        return r, 0.0
    val = r + (starts[k] - r) * math.exp(-x)
    return val, (r - val) / T1


@njit(cache=True)
def eval_ramp(t, hold, rate, targets, starts, t_seg):
    """Value and rate of a ramp-to-target step sequence at time ``t``; see ``eval_filtered``."""
    k = _segment(t_seg, hold, targets.shape[0])
    g = targets[k]
    if not math.isfinite(rate):
        return g, 0.0
    c = starts[k]
    d = g - c
    tau = t - k * hold if math.isfinite(hold) else t
    moved = rate * tau
    if moved >= abs(d):
        return g, 0.0
    s = 1.0 if d > 0 else -1.0
    return c + s * moved, s * rate


@dataclass(frozen=True)
class FilteredSteps:
    """Piecewise-constant targets passed through ``T1 y' = r - y``."""

    targets: np.ndarray
    hold: float
    T1: float
    starts: np.ndarray

    @classmethod
    def build(cls, targets, hold: float, T1: float, y0: float | None = None) -> "FilteredSteps":
        targets = np.asarray(targets, dtype=float)
        starts = np.empty_like(targets)
        starts[0] = targets[0] if y0 is None else y0
        decay = math.exp(-hold / T1) if (T1 > 0 and math.isfinite(hold)) else 0.0
        for k in range(1, len(targets)):
            starts[k] = targets[k - 1] + (starts[k - 1] - targets[k - 1]) * decay
        return cls(targets, float(hold), float(T1), starts)

    def evaluate(self, t: float) -> tuple[float, float]:
        return eval_filtered(float(t), self.hold, self.T1, self.targets, self.starts, float(t))

    def arrays(self):
        return self.hold, self.T1, self.targets, self.starts


@dataclass(frozen=True)
class RampSteps:
    """Targets held for ``hold`` seconds and approached at slope ``rate``."""

    targets: np.ndarray
    hold: float
    rate: float
    starts: np.ndarray

    @classmethod
    def build(cls, targets, hold: float, rate: float, z0: float = 0.0) -> "RampSteps":
        if not rate > 0:
            raise ValueError("rate limit must be positive")
        targets = np.asarray(targets, dtype=float)
        starts = np.empty_like(targets)
        starts[0] = z0
        for k in range(1, len(targets)):
            if math.isfinite(rate):
                starts[k] = eval_ramp(hold, hold, rate, targets[k - 1 : k], starts[k - 1 : k], 0.0)[0]
            else:
                starts[k] = targets[k - 1]
        return cls(targets, float(hold), float(rate), starts)

    def evaluate(self, t: float) -> tuple[float, float]:
        return eval_ramp(float(t), self.hold, self.rate, self.targets, self.starts, float(t))

    def arrays(self):
        return self.hold, self.rate, self.targets, self.starts


class SampledSignal(NamedTuple):
    t: np.ndarray
    value: np.ndarray
    rate: np.ndarray


def _sample(sig, T_s: float, duration: float) -> SampledSignal:
    t = T_s * np.arange(int(round(duration / T_s)) + 1)
    vals = np.array([sig.evaluate(ti) for ti in t]).reshape(-1, 2)
    return SampledSignal(t, vals[:, 0], vals[:, 1])


def reference_signal(seed, T_y: float, T1: float, lo: float, hi: float, duration: float) -> FilteredSteps:
    if not lo < hi:
        raise ValueError("need lo < hi")
    rng = as_rng(seed)
    targets = rng.uniform(lo, hi, _n_segments(T_y, duration))
    return FilteredSteps.build(targets, T_y, T1)


def generate_reference(seed, T_y: float, T1: float, lo: float, hi: float, T_s: float, duration: float) -> SampledSignal:
    """Uniform random steps every ``T_y`` through a first-order low-pass ``T1``.

    The filter starts settled at the first draw; ``y_r'`` comes from the
    filter state equation, not from differencing.
    """
    return _sample(reference_signal(seed, T_y, T1, lo, hi, duration), T_s, duration)


def disturbance_signal(seed, T_z: float, sigma: float, rate_limit: float, duration: float, z0: float = 0.0) -> RampSteps:
    rng = as_rng(seed)
    targets = sigma * rng.standard_normal(_n_segments(T_z, duration))
    return RampSteps.build(targets, T_z, rate_limit, z0)


def generate_disturbance(seed, T_z: float, sigma: float, rate_limit: float, T_s: float, duration: float) -> SampledSignal:
    """Gaussian targets every ``T_z`` approached at slope ``rate_limit`` from 0."""
    return _sample(disturbance_signal(seed, T_z, sigma, rate_limit, duration), T_s, duration)


class _Spec(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class StepSignalSpec(_Spec):
    """Filtered uniform steps in ``[lo, hi]`` or a constant ``value``."""

    kind: Literal["uniform_steps", "constant"] = "uniform_steps"
    lo: float | None = None
    hi: float | None = None
    hold: float = 1.0
    T1: float = 1e-3
    value: float | None = None

    @model_validator(mode="after")
    def _check(self):
        if self.kind == "constant" and self.value is None:
            raise ValueError("constant signal needs 'value'")
        if self.kind == "uniform_steps":
            if self.lo is None or self.hi is None or not self.lo < self.hi:
                raise ValueError("uniform_steps needs lo < hi")
            if not self.hold > 0:
                raise ValueError("hold must be positive")
        if self.T1 < 0:
            raise ValueError("T1 must be non-negative")
        return self

    def build(self, rng, duration: float) -> FilteredSteps:
        if self.kind == "constant":
            return FilteredSteps.build([self.value], math.inf, 0.0)
        return reference_signal(rng, self.hold, self.T1, self.lo, self.hi, duration)


class RampSignalSpec(_Spec):
    """Rate-limited Gaussian steps, a constant, or zero."""

    kind: Literal["gaussian_ramp", "constant", "zero"] = "gaussian_ramp"
    sigma: float = 1.0
    hold: float = 1.0
    rate_limit: float = 1.0
    z0: float = 0.0
    value: float | None = None

    @model_validator(mode="after")
    def _check(self):
        if self.kind == "gaussian_ramp" and not (self.rate_limit > 0 and self.hold > 0 and self.sigma >= 0):
            raise ValueError("gaussian_ramp needs rate_limit > 0, hold > 0, sigma >= 0")
        if self.kind == "constant" and self.value is None:
            raise ValueError("constant signal needs 'value'")
        return self

    def build(self, rng, duration: float) -> RampSteps:
        if self.kind == "zero":
            return RampSteps.build([0.0], math.inf, math.inf, 0.0)
        if self.kind == "constant":
            return RampSteps.build([self.value], math.inf, math.inf, self.value)
        return disturbance_signal(rng, self.hold, self.sigma, self.rate_limit, duration, self.z0)
