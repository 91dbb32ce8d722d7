"""Certifiers for three stationarity notions on Lipschitz functions.

- eps-stationarity: some subgradient at x has norm <= eps.
- (delta, eps)-stationarity: the convex hull of subgradients collected in the
  closed delta-ball of x contains an element of norm <= eps.  Computed by
  Wolfe's minimum-norm-point algorithm over sampled subgradients; sampling
  makes this one-sided (a small hull element certifies, a large value refutes
  nothing), which the certificate records as ``sound_direction``.
- near-approximate stationarity: a lower bound on the distance from x to any
  point that is eps-stationary for small eps, obtained from the value gap of a
  clamped channel instance and its Lipschitz constant.

Analytic per-region lower bounds on channel subgradient norms live here too.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from nearstat.errors import ClampRegionError, DegenerateInputError, DimensionMismatchError
from nearstat.vectorspace import as_vector, sample_ball
from nearstat.zoo import (
    REGION_CLAMP_ACTIVE,
    REGION_CLAMP_BOUNDARY,
    REGION_HINGE_BOUNDARY,
    ChannelInstance,
)

_SQRT2 = math.sqrt(2.0)

KIND_EPS_WITNESS = "eps_stationary_witness"
KIND_DELTA_EPS_WITNESS = "delta_eps_witness"
KIND_NEAR_DISTANCE = "near_distance_lower_bound"
KIND_SUBDIFF_NORM = "subdiff_norm_lower_bound"
WITNESS_KINDS = frozenset({KIND_EPS_WITNESS, KIND_DELTA_EPS_WITNESS})

DEDUP_TOL = 1e-14
DEFAULT_WOLFE_TOL = 1e-10


@dataclass(frozen=True)
class ConstantsTable:
    """The explicit constants carried by the hardness statements."""

    lipschitz_channel: float = 7.0
    stationarity_threshold: float = 1.0 / (2.0 * _SQRT2)
    value_gap: float = 1.5
    distance_bound: float = 1.0 / 7.0
    lipschitz_spiral_ball: float = 2.0 * math.pi


DEFAULT_CONSTANTS = ConstantsTable()


@dataclass(frozen=True)
class MinNormResult:
    """Closest point to the origin in the convex hull of the input set."""

    coefficients: np.ndarray
    point: np.ndarray
    norm: float
    iterations: int
    converged: bool


def _affine_min_norm(P: np.ndarray) -> np.ndarray:
    """Coefficients (summing to 1, sign-unconstrained) minimizing ||a @ P||."""
    m = len(P)
    gram = P @ P.T
    kkt = np.zeros((m + 1, m + 1))
    kkt[:m, :m] = gram
    kkt[:m, m] = 1.0
    kkt[m, :m] = 1.0
    rhs = np.zeros(m + 1)
    rhs[m] = 1.0
    try:
        sol = np.linalg.solve(kkt, rhs)
    except np.linalg.LinAlgError:
        sol = np.linalg.lstsq(kkt, rhs, rcond=None)[0]
    return sol[:m]


def _dedup(P: np.ndarray) -> tuple[np.ndarray, list[int]]:
    """Representative rows of P and, per input row, its representative's position."""
    reps: list[int] = []
    owner: list[int] = []
    for i, p in enumerate(P):
        for pos, r in enumerate(reps):
            if np.max(np.abs(p - P[r])) <= DEDUP_TOL:
                owner.append(pos)
                break
        else:
            owner.append(len(reps))
            reps.append(i)
    return P[reps], owner


def min_norm_point(points, tol: float = DEFAULT_WOLFE_TOL) -> MinNormResult:
    """Wolfe's minimum-norm-point algorithm over the convex hull of ``points``.

    ``converged`` means the Wolfe gap <point, point - candidate> fell below
    ``tol``; hitting the iteration cap returns the best iterate with
    ``converged = False``.
    """
    try:
        P_in = np.atleast_2d(np.asarray(points, dtype=float))
    except ValueError as exc:
        raise DimensionMismatchError(f"points must share a common dimension: {exc}") from exc
    if P_in.size == 0:
        raise DegenerateInputError("min_norm_point needs a nonempty point set")
    if P_in.ndim != 2:
        raise DimensionMismatchError("points must share a common dimension")
    if not np.all(np.isfinite(P_in)):
        raise DegenerateInputError("min_norm_point got non-finite points")
    if tol <= 0.0:
        raise DegenerateInputError("tolerance must be positive")

    P, owner = _dedup(P_in)
    m = len(P)
    norms = np.linalg.norm(P, axis=1)

    def finish(active: list[int], lam: np.ndarray, iterations: int, converged: bool):
        point = lam @ P[active]
        coeffs = np.zeros(len(P_in))
        rep_coeff = np.zeros(m)
        rep_coeff[active] = np.maximum(lam, 0.0)
        for i, pos in enumerate(owner):
            if rep_coeff[pos] > 0.0:
                coeffs[i] = rep_coeff[pos]
                rep_coeff[pos] = 0.0
        return MinNormResult(
            coefficients=coeffs,
            point=point,
            norm=float(np.linalg.norm(point)),
            iterations=iterations,
            converged=converged,
        )

    start = int(np.argmin(norms))
    if norms[start] <= DEDUP_TOL:
        return finish([start], np.array([1.0]), 0, True)

    active = [start]
    lam = np.array([1.0])
    x = P[start].copy()
    cap = 50 * m
    iterations = 0
    converged = False
    while iterations < cap:
        iterations += 1
        dots = P @ x
        j = int(np.argmin(dots))
        gap = float(x @ x - dots[j])
        if gap <= tol:
            converged = True
            break
        if j in active:
            # Numerical stall: x is already affine-optimal over the active
            # set, so no further progress is possible.
            converged = gap <= 1e-8 * max(1.0, float(x @ x))
            break
        active.append(j)
        lam = np.append(lam, 0.0)
        while True:
            alpha = _affine_min_norm(P[active])
            if np.all(alpha > DEDUP_TOL):
                lam = alpha
                break
            shrinking = alpha < lam
            with np.errstate(divide="ignore", invalid="ignore"):
                ratios = np.where(shrinking, lam / (lam - alpha), np.inf)
            theta = min(1.0, float(np.min(ratios)))
            lam = (1.0 - theta) * lam + theta * alpha
            lam[lam < DEDUP_TOL] = 0.0
            keep = lam > 0.0
            if not np.any(keep):
                keep[int(np.argmax(alpha))] = True
                lam[keep] = 1.0
            active = [a for a, k in zip(active, keep) if k]
            lam = lam[keep]
            lam = lam / lam.sum()
        x = lam @ P[active]
    return finish(active, lam, iterations, converged)


def min_norm_brute_oracle(points) -> float:
    """Exact hull minimum norm by subset enumeration; test oracle only."""
    P = np.atleast_2d(np.asarray(points, dtype=float))
    m, d = P.shape
    if m > 6 or d > 5:
        raise DegenerateInputError("brute oracle is limited to <= 6 points in dim <= 5")
    best = math.inf
    for mask in range(1, 1 << m):
        idx = [i for i in range(m) if mask >> i & 1]
        a = _affine_min_norm(P[idx])
        if np.all(a >= -1e-12):
            best = min(best, float(np.linalg.norm(a @ P[idx])))
    return best


# ---------------------------------------------------------------------------
# certificates
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Witness:
    """A convex combination certifying a small hull element."""

    points: list
    subgradients: list
    coefficients: list


@dataclass(frozen=True)
class StationarityCertificate:
    kind: str
    value: float
    certified: bool
    sound_direction: str
    witness: Witness | None = None
    constants_used: ConstantsTable = field(default=DEFAULT_CONSTANTS)

    def __post_init__(self):
        if self.value < 0.0:
            raise DegenerateInputError("certificate value must be nonnegative")
        expect_witness = self.kind in WITNESS_KINDS and self.certified
        if expect_witness != (self.witness is not None):
            raise DegenerateInputError(
                "witness must be present exactly for certified witness kinds"
            )

    def to_json(self) -> dict:
        doc = {
            "kind": self.kind,
            "value": self.value,
            "certified": self.certified,
            "sound_direction": self.sound_direction,
            "constants": asdict(self.constants_used),
            "witness": None,
        }
        if self.witness is not None:
            doc["witness"] = {
                "points": [list(map(float, p)) for p in self.witness.points],
                "subgradients": [list(map(float, g)) for g in self.witness.subgradients],
                "coefficients": [float(c) for c in self.witness.coefficients],
            }
        return doc

    def to_json_str(self) -> str:
        return json.dumps(self.to_json())


def certify_eps_stationary(
    oracle, x, eps: float, constants: ConstantsTable = DEFAULT_CONSTANTS
) -> StationarityCertificate:
    """Certificate from the single subgradient the oracle returns at x."""
    x = as_vector(x)
    if eps < 0.0:
        raise DegenerateInputError("eps must be nonnegative")
    reply = oracle(x)
    value = float(np.linalg.norm(reply.subgrad))
    certified = value <= eps
    witness = None
    if certified:
        witness = Witness(
            points=[x.copy()], subgradients=[np.asarray(reply.subgrad)], coefficients=[1.0]
        )
    return StationarityCertificate(
        kind=KIND_EPS_WITNESS,
        value=value,
        certified=certified,
        sound_direction="stationarity_only",
        witness=witness,
        constants_used=constants,
    )


def certify_delta_eps(
    oracle,
    x,
    delta: float,
    eps: float,
    sampling,
    rng_state: np.random.Generator | None = None,
    constants: ConstantsTable = DEFAULT_CONSTANTS,
) -> StationarityCertificate:
    """Hull-minimum-norm certificate over subgradients sampled in the delta-ball.

    ``sampling`` is either an integer (that many uniform draws from the ball,
    plus the center) or a sequence of offsets from x (a stencil, each of norm
    at most delta).  A value <= eps certifies (delta, eps)-stationarity; a
    larger value certifies nothing, which is why ``sound_direction`` says
    ``stationarity_only``.
    """
    x = as_vector(x)
    if delta <= 0.0:
        raise DegenerateInputError("delta must be positive")
    if eps < 0.0:
        raise DegenerateInputError("eps must be nonnegative")
    d = len(x)
    if isinstance(sampling, (int, np.integer)):
        if sampling < 0:
            raise DegenerateInputError("sample count must be nonnegative")
        if rng_state is None:
            raise DegenerateInputError("ball sampling needs an rng")
        offsets = [np.zeros(d)] + [sample_ball(d, delta, rng_state) for _ in range(sampling)]
    else:
        offsets = [as_vector(o) for o in sampling]
        if not offsets:
            raise DegenerateInputError("stencil sampling needs at least one offset")
    points = []
    for off in offsets:
        if off.shape != (d,):
            raise DimensionMismatchError("stencil offset dimension mismatch")
        if float(np.linalg.norm(off)) > delta + 1e-12:
            raise DegenerateInputError("sampled point left the delta-ball")
        points.append(x + off)
    grads = [np.asarray(oracle(p).subgrad) for p in points]
    result = min_norm_point(grads, tol=DEFAULT_WOLFE_TOL)
    certified = result.converged and result.norm <= eps
    witness = None
    if certified:
        witness = Witness(
            points=points, subgradients=grads, coefficients=list(result.coefficients)
        )
    return StationarityCertificate(
        kind=KIND_DELTA_EPS_WITNESS,
        value=result.norm,
        certified=certified,
        sound_direction="stationarity_only",
        witness=witness,
        constants_used=constants,
    )


def subdiff_norm_lower_bound(
    instance: ChannelInstance, x, constants: ConstantsTable = DEFAULT_CONSTANTS
) -> StationarityCertificate:
    """Per-region lower bound on subgradient norms of a channel instance.

    1 at the origin, at -w and at differentiable points; 1/sqrt(2) on the
    hinge boundary; composed instances scale by the smallest singular value of
    the square-root matrix, 1/sqrt(2) for the chain family.  Points in a clamp
    region are rejected: arbitrarily small subgradients live there.
    """
    x = as_vector(x)
    region = instance.region(x)
    if region in (REGION_CLAMP_ACTIVE, REGION_CLAMP_BOUNDARY):
        raise ClampRegionError(f"no positive bound holds in region {region!r}")
    bound = 1.0 / _SQRT2 if region == REGION_HINGE_BOUNDARY else 1.0
    if instance.affine is not None:
        bound /= _SQRT2
    return StationarityCertificate(
        kind=KIND_SUBDIFF_NORM,
        value=bound,
        certified=True,
        sound_direction="refutation_only",
        constants_used=constants,
    )


def near_stationarity_distance_lb(
    instance: ChannelInstance, x, constants: ConstantsTable = DEFAULT_CONSTANTS
) -> StationarityCertificate:
    """Distance from x to the nearest point that could be near-stationary.

    On a clamped instance every eps-stationary point (eps below the instance's
    threshold) sits at the clamp value, so the value gap divided by the
    Lipschitz constant 7 lower-bounds the distance from x to all of them.
    """
    if instance.clamp is None:
        raise DegenerateInputError("distance certificates need a clamped instance")
    x = as_vector(x)
    value = instance.eval(x).value
    bound = max(0.0, (value - instance.clamp) / constants.lipschitz_channel)
    return StationarityCertificate(
        kind=KIND_NEAR_DISTANCE,
        value=bound,
        certified=True,
        sound_direction="refutation_only",
        constants_used=constants,
    )
