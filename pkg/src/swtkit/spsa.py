"""Simultaneous-perturbation stochastic approximation (SPSA)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import OptimizationAborted, ValidationError


@dataclass
class IterationRecord:
    step: int
    theta: np.ndarray
    cost: float
    accepted: bool = True
    spectrum: Optional[np.ndarray] = None


@dataclass
class OptimizationTrace:
    iterations: list[IterationRecord] = field(default_factory=list)
    final_theta: Optional[np.ndarray] = None
    converged: bool = False
    seed: int = 0
    message: str = ""
    gains: dict = field(default_factory=dict)

    @property
    def final_cost(self) -> float:
        for rec in reversed(self.iterations):
            if rec.accepted:
                return rec.cost
        return float("nan")

    @property
    def best(self) -> IterationRecord:
        return min(self.iterations, key=lambda r: r.cost)


@dataclass(frozen=True)
class SpsaOptions:
    a: Optional[float] = None  # None: calibrate so the first step is ~target_step
    c: float = 0.1
    A: Optional[float] = None  # None: max_iter / 10
    alpha: float = 0.602
    gamma: float = 0.101
    max_iter: int = 200
    patience: int = 20
    seed: int = 0
    target_step: float = 0.1
    calibration_samples: int = 5
    rel_improvement: float = 1e-4
    blocking: bool = False

    def __post_init__(self):
        if self.max_iter < 1 or self.patience < 1:
            raise ValidationError("max_iter and patience must be positive")
        for name in ("c", "alpha", "gamma", "target_step"):
            if getattr(self, name) <= 0:
                raise ValidationError(f"{name} must be positive")
        if self.a is not None and self.a <= 0:
            raise ValidationError("a must be positive")


def calibrate_a(cost, theta0: np.ndarray, opts: SpsaOptions, stability: float,
                rng: np.random.Generator) -> float:
    """Pick ``a`` so the first update has magnitude about ``target_step``.

    The same perturbed evaluations give a curvature estimate ``h`` along
    random directions; ``a`` is capped at ``(A + 1)**alpha / (d * h)`` so the
    first step cannot overshoot a steep minimum.  This keeps a start at an
    exact minimum (zero gradient) from being amplified by round-off.
    """
    base = cost(theta0)
    dim = theta0.size
    mags, curvs = [], []
    for _ in range(opts.calibration_samples):
        delta = rng.choice((-1.0, 1.0), size=theta0.shape)
        plus, minus = cost(theta0 + opts.c * delta), cost(theta0 - opts.c * delta)
        mags.append(abs(plus - minus) / (2 * opts.c))
        curvs.append((plus + minus - 2 * base) / (opts.c ** 2 * dim))
    mean_mag, mean_curv = float(np.mean(mags)), float(np.mean(curvs))
    if not (math.isfinite(mean_mag) and math.isfinite(mean_curv)):
        raise OptimizationAborted("non-finite cost during gain calibration")
    scale = (stability + 1) ** opts.alpha
    a = opts.target_step * scale / mean_mag if mean_mag > 1e-12 else opts.target_step * scale
    if mean_curv > 1e-12:
        a = min(a, scale / (dim * mean_curv))
    return a


def spsa_minimize(cost: Callable[[np.ndarray], float], theta0, options: SpsaOptions | None = None,
                  snapshot: Callable[[np.ndarray], np.ndarray] | None = None, **overrides) -> OptimizationTrace:
    """Minimize ``cost`` with Rademacher-perturbation SPSA.

    Gains follow ``a_k = a / (A + k + 1)**alpha`` and ``c_k = c / (k + 1)**gamma``.
    The run stops after ``max_iter`` iterations or once the best cost has
    not improved by a relative ``rel_improvement`` for ``patience``
    iterations (``converged = True``).  Iteration 0 records ``theta0``.
    """
    opts = options or SpsaOptions()
    if overrides:
        opts = SpsaOptions(**{**opts.__dict__, **overrides})
    theta = np.asarray(theta0, dtype=float).copy()
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(int(opts.seed))))
    stability = opts.max_iter / 10 if opts.A is None else opts.A
    trace = OptimizationTrace(seed=int(opts.seed))

    def evaluate(x):
        value = float(cost(x))
        if not math.isfinite(value):
            trace.message = f"non-finite cost at step {len(trace.iterations)}"
            trace.final_theta = theta.copy()
            raise OptimizationAborted(trace.message, trace)
        return value

    a = opts.a if opts.a is not None else calibrate_a(evaluate, theta, opts, stability, rng)
    trace.gains = {"a": a, "c": opts.c, "A": stability, "alpha": opts.alpha, "gamma": opts.gamma}

    current = evaluate(theta)
    trace.iterations.append(IterationRecord(0, theta.copy(), current, True,
                                            None if snapshot is None else snapshot(theta)))
    best = current
    stale = 0
    for k in range(opts.max_iter):
        ak = a / (stability + k + 1) ** opts.alpha
        ck = opts.c / (k + 1) ** opts.gamma
        delta = rng.choice((-1.0, 1.0), size=theta.shape)
        diff = evaluate(theta + ck * delta) - evaluate(theta - ck * delta)
        grad = diff / (2 * ck) * delta  # 1/delta_i == delta_i for +-1 entries
        candidate = theta - ak * grad
        value = evaluate(candidate)
        accepted = not opts.blocking or value <= current
        if accepted:
            theta, current = candidate, value
        trace.iterations.append(IterationRecord(
            k + 1, candidate.copy(), value, accepted,
            None if snapshot is None else snapshot(candidate)))
        if current < best - opts.rel_improvement * max(abs(best), 1e-12):
            best = current
            stale = 0
        else:
            stale += 1
            if stale >= opts.patience:
                trace.converged = True
                trace.message = f"no relative improvement for {opts.patience} iterations"
                break
    else:
        trace.message = "reached max_iter"
    trace.final_theta = theta.copy()
    return trace
