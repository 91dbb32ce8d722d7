"""Bundled first-order methods, each wrapped as an oracle-game algorithm.

All methods start at the origin and spend their whole budget through
``next_query``: line-search probes and smoothing samples are oracle queries
like any other, so a game of T queries really is T oracle calls.

Solver names registered for the harness: "subgrad", "steepest", "smoothed",
"goldstein".
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from nearstat.errors import DegenerateInputError
from nearstat.oracle_game import (
    CLASS_LINEAR_SPAN,
    CLASS_RANDOMIZED,
    AlgorithmDescriptor,
    QueryPolicy,
)
from nearstat.stationarity import min_norm_point
from nearstat.vectorspace import sample_ball

SCHEDULE_CONSTANT = "constant"
SCHEDULE_INVERSE_SQRT = "inverse_sqrt"
SCHEDULE_LINE_SEARCH = "exact_line_search_quadratic"

_PROBE_SCALE = 1e-3


@dataclass(frozen=True)
class StepSchedule:
    """Step-size rule eta_t for t = 1, 2, ...; scale must be positive."""

    kind: str = SCHEDULE_CONSTANT
    scale: float = 0.1

    def __post_init__(self):
        if self.kind not in (SCHEDULE_CONSTANT, SCHEDULE_INVERSE_SQRT, SCHEDULE_LINE_SEARCH):
            raise DegenerateInputError(f"unknown schedule kind {self.kind!r}")
        if self.scale <= 0.0:
            raise DegenerateInputError("schedule scale must be positive")

    def step(self, t: int) -> float:
        if self.kind == SCHEDULE_CONSTANT:
            return self.scale
        if self.kind == SCHEDULE_INVERSE_SQRT:
            return self.scale / math.sqrt(t)
        raise DegenerateInputError("line-search schedules have no fixed step size")

    def as_params(self) -> dict:
        return {"kind": self.kind, "scale": self.scale}


class _SubgradientPolicy(QueryPolicy):
    """x_{t+1} = x_t - eta_t g_t, derived from the transcript alone."""

    def __init__(self, d: int, schedule: StepSchedule):
        self.d = d
        self.schedule = schedule

    def next_query(self, entries):
        if not entries:
            return np.zeros(self.d)
        t = len(entries)
        x, reply = entries[-1]
        return x - self.schedule.step(t) * reply.subgrad


def subgradient_method(schedule: StepSchedule | None = None) -> AlgorithmDescriptor:
    schedule = schedule if schedule is not None else StepSchedule()
    return AlgorithmDescriptor(
        name="subgrad",
        class_tag=CLASS_LINEAR_SPAN,
        params={"schedule": schedule.as_params()},
        factory=lambda d, rng: _SubgradientPolicy(d, schedule),
    )


class _SteepestPolicy(QueryPolicy):
    """Exact line search on a quadratic, one value probe per step.

    Queries alternate iterate, probe: the probe at x + s d (d = -g) pins the
    curvature of the one-dimensional restriction, giving the exact minimizing
    step eta = ||g||^2 / (2 kappa) with kappa = (f_probe - f - s g.d) / s^2.
    """

    def __init__(self, d: int):
        self.d = d

    @staticmethod
    def _resolvable(x, g) -> bool:
        # the probe offset s*g must move the value by more than the
        # floating-point resolution of points at ||x|| scale, otherwise the
        # curvature estimate is pure cancellation noise
        return float(np.linalg.norm(g)) > 1e-9 * max(1.0, float(np.linalg.norm(x)))

    def next_query(self, entries):
        if not entries:
            return np.zeros(self.d)
        if len(entries) % 2 == 1:
            x, reply = entries[-1]
            if not self._resolvable(x, reply.subgrad):
                return x.copy()
            s = _PROBE_SCALE * max(1.0, float(np.linalg.norm(x)))
            return x - s * reply.subgrad
        (x, reply), (probe, probe_reply) = entries[-2], entries[-1]
        g = reply.subgrad
        gn2 = float(g @ g)
        if not self._resolvable(x, g):
            return x.copy()
        s = _PROBE_SCALE * max(1.0, float(np.linalg.norm(x)))
        kappa = (probe_reply.value - reply.value + s * gn2) / (s * s)
        if not np.isfinite(kappa) or kappa <= 0.0:
            raise DegenerateInputError(
                f"line-search curvature {kappa!r} is unusable; oracle is not a"
                " strictly convex quadratic along the probe direction"
            )
        return x - (gn2 / (2.0 * kappa)) * g


def steepest_descent_exact() -> AlgorithmDescriptor:
    return AlgorithmDescriptor(
        name="steepest",
        class_tag=CLASS_LINEAR_SPAN,
        params={"schedule": {"kind": SCHEDULE_LINE_SEARCH, "scale": 1.0}},
        factory=lambda d, rng: _SteepestPolicy(d),
    )


def smoothed_estimates(oracle, x, offsets) -> tuple[np.ndarray, np.ndarray]:
    """Values and subgradients of ``oracle`` at ``x + offsets`` (rows).

    The raw per-sample arrays let callers couple estimators across nearby
    base points by reusing one offset batch.
    """
    x = np.asarray(x, dtype=float)
    offsets = np.atleast_2d(np.asarray(offsets, dtype=float))
    values = np.empty(len(offsets))
    grads = np.empty_like(offsets)
    for i, off in enumerate(offsets):
        reply = oracle(x + off)
        values[i] = reply.value
        grads[i] = reply.subgrad
    return values, grads


class _SmoothedPolicy(QueryPolicy):
    """Steps along the negative ball-average of sampled subgradients."""

    def __init__(self, d: int, rng, delta: float, samples_per_step: int, schedule: StepSchedule):
        if rng is None:
            raise DegenerateInputError("smoothed method needs an rng")
        self.d = d
        self.rng = rng
        self.delta = delta
        self.samples = samples_per_step
        self.schedule = schedule
        self.center = np.zeros(d)
        self.pending = 0
        self.steps_done = 0

    def next_query(self, entries):
        if self.pending == self.samples:
            grads = np.stack([reply.subgrad for _, reply in entries[-self.samples :]])
            self.steps_done += 1
            self.center = self.center - self.schedule.step(self.steps_done) * grads.mean(axis=0)
            self.pending = 0
        self.pending += 1
        return self.center + sample_ball(self.d, self.delta, self.rng)


def smoothed_gradient_method(
    delta: float, samples_per_step: int, schedule: StepSchedule | None = None
) -> AlgorithmDescriptor:
    if delta <= 0.0:
        raise DegenerateInputError("smoothing radius must be positive")
    if samples_per_step < 1:
        raise DegenerateInputError("need at least one sample per step")
    schedule = schedule if schedule is not None else StepSchedule()
    return AlgorithmDescriptor(
        name="smoothed",
        class_tag=CLASS_RANDOMIZED,
        params={
            "delta": delta,
            "samples_per_step": samples_per_step,
            "schedule": schedule.as_params(),
        },
        factory=lambda d, rng: _SmoothedPolicy(d, rng, delta, samples_per_step, schedule),
    )


class _GoldsteinPolicy(QueryPolicy):
    """Minimum-norm hull step over delta-ball subgradients, with early stop.

    Each round queries the center then the ball samples (or a fixed stencil),
    solves for the minimum-norm convex combination, and either stops (all
    further queries sit at the center) or steps along its negation.
    """

    def __init__(self, d, rng, delta, samples_per_step, schedule, eps_stop, stencil):
        self.d = d
        self.delta = delta
        self.schedule = schedule
        self.eps_stop = eps_stop
        self.rng = rng
        self.stencil = None
        if stencil is not None:
            self.stencil = [np.asarray(o, dtype=float) for o in stencil]
            for off in self.stencil:
                if float(np.linalg.norm(off)) > delta + 1e-12:
                    raise DegenerateInputError("stencil offset outside the delta-ball")
            self.round_size = 1 + len(self.stencil)
        else:
            if rng is None:
                raise DegenerateInputError("ball sampling needs an rng")
            self.round_size = 1 + samples_per_step
        self.center = np.zeros(d)
        self.pending = 0
        self.steps_done = 0
        self.stopped = False
        self.stop_step: int | None = None
        self.min_norm_history: list[float] = []

    def next_query(self, entries):
        if self.stopped:
            return self.center.copy()
        if self.pending == self.round_size:
            grads = [reply.subgrad for _, reply in entries[-self.round_size :]]
            result = min_norm_point(grads)
            self.min_norm_history.append(result.norm)
            self.steps_done += 1
            if result.norm <= self.eps_stop:
                self.stopped = True
                self.stop_step = self.steps_done
                self.pending = 0
                return self.center.copy()
            self.center = self.center - self.schedule.step(self.steps_done) * result.point
            self.pending = 0
        self.pending += 1
        if self.pending == 1:
            return self.center.copy()
        if self.stencil is not None:
            return self.center + self.stencil[self.pending - 2]
        return self.center + sample_ball(self.d, self.delta, self.rng)


def goldstein_descent(
    delta: float,
    samples_per_step: int = 32,
    schedule: StepSchedule | None = None,
    eps_stop: float = 1e-8,
    stencil=None,
) -> AlgorithmDescriptor:
    if delta <= 0.0:
        raise DegenerateInputError("ball radius must be positive")
    if stencil is None and samples_per_step < 1:
        raise DegenerateInputError("need at least one sample per step")
    if eps_stop < 0.0:
        raise DegenerateInputError("stopping threshold must be nonnegative")
    schedule = schedule if schedule is not None else StepSchedule()
    return AlgorithmDescriptor(
        name="goldstein",
        class_tag=CLASS_RANDOMIZED,
        params={
            "delta": delta,
            "samples_per_step": samples_per_step,
            "schedule": schedule.as_params(),
            "eps_stop": eps_stop,
            "stencil": None if stencil is None else [list(map(float, o)) for o in stencil],
        },
        factory=lambda d, rng: _GoldsteinPolicy(
            d, rng, delta, samples_per_step, schedule, eps_stop, stencil
        ),
    )


SOLVERS = {
    "subgrad": subgradient_method,
    "steepest": steepest_descent_exact,
    "smoothed": smoothed_gradient_method,
    "goldstein": goldstein_descent,
}


def build_solver(name: str, **params) -> AlgorithmDescriptor:
    """Construct a bundled solver by registry name.

    ``schedule`` may be passed as a dict of :class:`StepSchedule` fields.
    """
    if name not in SOLVERS:
        raise DegenerateInputError(f"unknown solver {name!r}; choose from {sorted(SOLVERS)}")
    if isinstance(params.get("schedule"), dict):
        params["schedule"] = StepSchedule(**params["schedule"])
    return SOLVERS[name](**params)
