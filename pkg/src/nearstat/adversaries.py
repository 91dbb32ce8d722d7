"""Hard-instance builders: the chain quadratic, the lazy rotation oracle, and
the channel composer that picks w against a given algorithm.

The chain quadratic in dimension d (first T coordinates active) is

    g(x) = (1/8) (x_1^2 + sum_i (x_i - x_{i+1})^2 + (k-1) x_T^2 - 2 x_1)
           + ||x||^2 / 2 + b
         = (x - x*)^T M (x - x*),

with k = (sqrt(2)+3)/(sqrt(2)+1), minimizer coordinates x*_i = q^i for
q = (sqrt(2)-1)/(sqrt(2)+1), b = q/8, and M = (A + 4 I)/8 for the tridiagonal
A implied by the chain form.  All evaluations use the chain form directly,
O(T + d) per query, never a dense matrix.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from nearstat.errors import (
    AdversaryConstructionError,
    BudgetExhaustedError,
    DegenerateInputError,
    DimensionMismatchError,
)
from nearstat.oracle_game import (
    CLASS_DETERMINISTIC,
    CLASS_LINEAR_SPAN,
    AlgorithmDescriptor,
    play,
    validate_span,
)
from nearstat.vectorspace import (
    OrthonormalFrame,
    as_vector,
    extend_orthonormal,
    sample_sphere,
)
from nearstat.zoo import (
    AffineMap,
    ChannelInstance,
    FirstOrderReply,
    NormDistance,
    sqrt_oracle,
)

_SQRT2 = math.sqrt(2.0)
CHAIN_END_WEIGHT = (_SQRT2 + 3.0) / (_SQRT2 + 1.0)  # k
CHAIN_RATIO = (_SQRT2 - 1.0) / (_SQRT2 + 1.0)  # q

# Below this, ||w|| drops into a range where double precision starts eating
# the construction's slack.
W_NORM_FLOOR = 1e-11


@dataclass(frozen=True)
class HardQuadratic:
    """Parameters of the chain quadratic embedded in dimension d >= T."""

    T: int
    d: int
    k: float = CHAIN_END_WEIGHT
    q: float = CHAIN_RATIO
    b: float = field(default=CHAIN_RATIO / 8.0)

    def __post_init__(self):
        if self.T < 2:
            raise DegenerateInputError("chain quadratic needs T >= 2")
        if self.d < self.T:
            raise DegenerateInputError("chain quadratic needs d >= T")
        q, k = self.q, self.k
        if abs(1.0 - 6.0 * q + q * q) > 1e-14 or abs((k + 4.0) * q - 1.0) > 1e-14:
            raise DegenerateInputError("chain parameter identities violated")
        if float(self.x_star @ self.x_star) >= (_SQRT2 - 1.0) / 2.0:
            raise DegenerateInputError("minimizer norm bound violated")

    @property
    def x_star(self) -> np.ndarray:
        out = np.zeros(self.d)
        out[: self.T] = self.q ** np.arange(1, self.T + 1)
        return out


def _chain_head(c: np.ndarray, k: float) -> tuple[float, np.ndarray]:
    """Value and derivative of the un-scaled chain part at head coordinates c."""
    diffs = c[:-1] - c[1:]
    val = c[0] * c[0] + float(diffs @ diffs) + (k - 1.0) * c[-1] * c[-1] - 2.0 * c[0]
    dc = np.zeros_like(c)
    dc[0] = 2.0 * c[0] - 2.0
    dc[:-1] += 2.0 * diffs
    dc[1:] -= 2.0 * diffs
    dc[-1] += 2.0 * (k - 1.0) * c[-1]
    return val, dc


def chain_value_grad(hq: HardQuadratic, x: np.ndarray) -> tuple[float, np.ndarray]:
    x = as_vector(x)
    if x.shape != (hq.d,):
        raise DimensionMismatchError(f"expected dimension {hq.d}, got {x.shape}")
    head_val, dc = _chain_head(x[: hq.T], hq.k)
    value = head_val / 8.0 + 0.5 * float(x @ x) + hq.b
    grad = x.copy()
    grad[: hq.T] += dc / 8.0
    return value, grad


def chain_quadratic_oracle(hq: HardQuadratic):
    """First-order oracle for g; everywhere differentiable."""

    def oracle(x):
        value, grad = chain_value_grad(hq, x)
        return FirstOrderReply(value, grad, True)

    return oracle


# ---------------------------------------------------------------------------
# spectrum check via Sturm-sequence bisection (own small routine, independent
# of the eigensolver used for the square root)
# ---------------------------------------------------------------------------


def _tridiag_count_below(diag: np.ndarray, off: np.ndarray, x: float) -> int:
    """Number of eigenvalues of the symmetric tridiagonal matrix below x."""
    pivmin = 1e-300
    count = 0
    dcur = diag[0] - x
    if dcur == 0.0:
        dcur = -pivmin
    if dcur < 0.0:
        count += 1
    for i in range(1, len(diag)):
        dcur = (diag[i] - x) - off[i - 1] * off[i - 1] / dcur
        if dcur == 0.0:
            dcur = -pivmin
        if dcur < 0.0:
            count += 1
    return count


def _tridiag_extremes(diag: np.ndarray, off: np.ndarray, tol: float = 1e-13) -> tuple[float, float]:
    n = len(diag)
    radius = np.zeros(n)
    radius[:-1] += np.abs(off)
    radius[1:] += np.abs(off)
    lo = float(np.min(diag - radius)) - 1.0
    hi = float(np.max(diag + radius)) + 1.0

    def kth_smallest(kth: int) -> float:
        a, bnd = lo, hi
        while bnd - a > tol * max(1.0, abs(a), abs(bnd)):
            mid = 0.5 * (a + bnd)
            if _tridiag_count_below(diag, off, mid) >= kth:
                bnd = mid
            else:
                a = mid
        return 0.5 * (a + bnd)

    return kth_smallest(1), kth_smallest(n)


def chain_tridiagonal(hq: HardQuadratic) -> tuple[np.ndarray, np.ndarray]:
    """Diagonal and off-diagonal of the T x T block of M = (A + 4I)/8."""
    diag_a = np.full(hq.T, 2.0)
    diag_a[-1] = hq.k
    diag_m = (diag_a + 4.0) / 8.0
    off_m = np.full(hq.T - 1, -1.0 / 8.0)
    return diag_m, off_m


def chain_spectrum_check(hq: HardQuadratic) -> tuple[float, float]:
    """Extremal eigenvalues of the embedded M (tail coordinates contribute 1/2)."""
    if hq.T > 64:
        raise DegenerateInputError("spectrum check is a test utility; T <= 64")
    diag_m, off_m = chain_tridiagonal(hq)
    lo, hi = _tridiag_extremes(diag_m, off_m)
    if hq.d > hq.T:
        lo, hi = min(lo, 0.5), max(hi, 0.5)
    return lo, hi


# ---------------------------------------------------------------------------
# M^(1/2) and the affine maps handed to the zoo
# ---------------------------------------------------------------------------


@functools.lru_cache(maxsize=32)
def _block_sqrt(T: int) -> np.ndarray:
    """Symmetric square root of the T x T tridiagonal block of M, cached per T."""
    diag_m, off_m = chain_tridiagonal(HardQuadratic(T=T, d=T))
    lam, vecs = scipy.linalg.eigh_tridiagonal(diag_m, off_m)
    if lam[0] <= 0.0:
        raise AdversaryConstructionError("chain block lost positive definiteness")
    root = (vecs * np.sqrt(lam)) @ vecs.T
    return 0.5 * (root + root.T)


def affine_map_from_parameters(
    T: int, d: int, rotation_frame=None, hq: HardQuadratic | None = None
) -> AffineMap:
    """AffineMap for x -> M^(1/2)(x - x*), natural or rotated coordinates."""
    hq = hq if hq is not None else HardQuadratic(T=T, d=d)
    block = _block_sqrt(hq.T)
    tail_scale = 1.0 / _SQRT2
    if rotation_frame is None:

        def sqrt_apply(v: np.ndarray) -> np.ndarray:
            out = v * tail_scale
            out[: hq.T] = block @ v[: hq.T]
            return out

        return AffineMap(
            x_star=hq.x_star,
            sqrt_apply=sqrt_apply,
            quad_oracle=chain_quadratic_oracle(hq),
            provenance={"T": hq.T, "d": hq.d, "k": hq.k},
        )

    U = np.asarray(rotation_frame, dtype=float)
    if U.shape != (hq.T, hq.d):
        raise DimensionMismatchError("rotation frame must be T x d")
    head_star = hq.x_star[: hq.T]
    target = U.T @ head_star

    def sqrt_apply_rot(v: np.ndarray) -> np.ndarray:
        c = U @ v
        return (v - U.T @ c) * tail_scale + U.T @ (block @ c)

    def rotated_oracle(x):
        x = as_vector(x)
        c = U @ x
        head_val, dc = _chain_head(c, hq.k)
        value = head_val / 8.0 + 0.5 * float(x @ x) + hq.b
        grad = x + (U.T @ dc) / 8.0
        return FirstOrderReply(value, grad, True)

    return AffineMap(
        x_star=target,
        sqrt_apply=sqrt_apply_rot,
        quad_oracle=rotated_oracle,
        provenance={"T": hq.T, "d": hq.d, "k": hq.k, "rotation_frame": U.tolist()},
    )


def msqrt_apply(source, x: np.ndarray) -> np.ndarray:
    """Apply M^(1/2) of a HardQuadratic or of an existing AffineMap."""
    if isinstance(source, HardQuadratic):
        source = affine_map_from_parameters(source.T, source.d, hq=source)
    x = as_vector(x)
    if x.shape != (source.dim,):
        raise DimensionMismatchError("dimension mismatch in msqrt application")
    return source.sqrt_apply(x)


def norm_distance_instance(hq: HardQuadratic) -> NormDistance:
    """The distance-to-minimizer function paired with the chain quadratic."""
    return NormDistance(map=affine_map_from_parameters(hq.T, hq.d, hq=hq))


# ---------------------------------------------------------------------------
# lazy rotation oracle
# ---------------------------------------------------------------------------


@dataclass
class RotationBuilder:
    """State of the resisting rotation game: rows chosen so far plus queries seen.

    Row u_t is selected orthogonal to u_1..u_{t-1} and to every query up to
    and including x_t, so all chain terms involving unselected rows vanish and
    the oracle never has to represent them.  Needs d >= 2T for the selections
    to exist.
    """

    base: HardQuadratic
    frame: OrthonormalFrame = field(init=False)
    seen_queries: list[np.ndarray] = field(init=False, default_factory=list)

    def __post_init__(self):
        if self.base.d < 2 * self.base.T:
            raise DegenerateInputError("rotation construction needs d >= 2T")
        self.frame = OrthonormalFrame(self.base.d)

    def materialized_map(self) -> AffineMap:
        """Commit to U after all T queries; the map's x_star is the rotated minimizer."""
        if len(self.frame) < self.base.T:
            raise AdversaryConstructionError("materialization requires all T queries")
        return affine_map_from_parameters(
            self.base.T, self.base.d, rotation_frame=self.frame.matrix(), hq=self.base
        )


def rotation_oracle(rb: RotationBuilder):
    """Stateful oracle answering g(Ux) while choosing the rotation rows lazily."""

    def oracle(x) -> FirstOrderReply:
        hq = rb.base
        x = as_vector(x)
        if x.shape != (hq.d,):
            raise DimensionMismatchError(f"expected dimension {hq.d}, got {x.shape}")
        if len(rb.seen_queries) >= hq.T:
            raise BudgetExhaustedError("rotation oracle answers at most T queries")
        u = extend_orthonormal(rb.frame, avoid=rb.seen_queries + [x])
        rb.frame.append(u)
        rb.seen_queries.append(x.copy())
        t = len(rb.frame)
        U = rb.frame.matrix()
        c = np.zeros(hq.T)
        c[:t] = U @ x
        head_val, dc = _chain_head(c, hq.k)
        value = head_val / 8.0 + 0.5 * float(x @ x) + hq.b
        grad = x + (U.T @ dc[:t]) / 8.0
        return FirstOrderReply(value, grad, True)

    return oracle


# ---------------------------------------------------------------------------
# channel composer
# ---------------------------------------------------------------------------

MODE_DETERMINISTIC = "deterministic_orthogonal"
MODE_RANDOMIZED = "randomized_sphere"


@dataclass
class ChannelAdversaryConfig:
    """How to pick w when composing the channel on top of the hard quadratic."""

    mode: str = MODE_DETERMINISTIC
    w_norm: float | None = None  # default exp(-T)/300, resolved at build time
    base: NormDistance | None = None  # override the quadratic base (e.g. a rotated one)

    def __post_init__(self):
        if self.mode not in (MODE_DETERMINISTIC, MODE_RANDOMIZED):
            raise DegenerateInputError(f"unknown adversary mode {self.mode!r}")

    def resolve_w_norm(self, T: int) -> float:
        w_norm = self.w_norm if self.w_norm is not None else math.exp(-T) / 300.0
        if w_norm <= 0.0 or w_norm < W_NORM_FLOOR:
            raise DegenerateInputError(
                f"w_norm {w_norm:.3e} below the {W_NORM_FLOOR:.0e} underflow guard"
            )
        return w_norm


def build_channel_instance(
    cfg: ChannelAdversaryConfig,
    algorithm: AlgorithmDescriptor,
    T: int,
    d: int,
    rng_state: dict[str, np.random.Generator] | None = None,
) -> tuple[ChannelInstance, dict]:
    """Run the algorithm on the distance function, then pick w against its iterates.

    ``rng_state`` may carry generators under the keys ``"algorithm"`` (consumed
    by randomized solvers) and ``"adversary"`` (consumed by randomized w
    selection).  Returns the clamped composed channel instance plus
    diagnostics: the distance-function transcript and iterates, distances to
    the minimizer, the alignments of w with the mapped iterate directions, and
    the per-iterate coincidence hypothesis

        alignment_t <= 1/(2 sqrt 2) - exp(-T) / (100 * distance_t),

    under which the composed function agrees with the distance function at x_t.
    """
    if T < 2 or T > 20:
        raise DegenerateInputError("channel adversary supports 2 <= T <= 20")
    rng_state = rng_state or {}
    w_norm = cfg.resolve_w_norm(T)
    if cfg.mode == MODE_DETERMINISTIC:
        if d < 2 * T:
            raise DegenerateInputError("deterministic mode needs d >= 2T")
        if algorithm.class_tag not in (CLASS_DETERMINISTIC, CLASS_LINEAR_SPAN):
            raise DegenerateInputError(
                "deterministic mode requires a deterministic algorithm class"
            )
    if d < T:
        raise DegenerateInputError("need d >= T")

    base = cfg.base if cfg.base is not None else norm_distance_instance(HardQuadratic(T=T, d=d))
    if base.dim != d:
        raise DimensionMismatchError("base instance dimension does not match d")
    if base.map.quad_oracle is None:
        raise DegenerateInputError("base instance lacks the quadratic oracle")

    transcript = play(
        algorithm, sqrt_oracle(base.map.quad_oracle), T, d, rng=rng_state.get("algorithm")
    )
    if algorithm.class_tag == CLASS_LINEAR_SPAN:
        ok, bad_index = validate_span(transcript)
        if not ok:
            raise AdversaryConstructionError(
                f"algorithm {algorithm.name!r} left the declared span at query {bad_index}"
            )

    x_star = base.map.x_star
    iterates = transcript.queries
    distances = np.array([float(np.linalg.norm(x - x_star)) for x in iterates])
    floor = math.exp(-T)
    if distances.min() < floor:
        raise AdversaryConstructionError(
            f"iterate got within {distances.min():.3e} < exp(-T) of the minimizer; "
            "the base lower bound failed"
        )

    directions = np.stack([base.map.sqrt_apply(x - x_star) for x in iterates])
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)

    if cfg.mode == MODE_DETERMINISTIC:
        w_dir = extend_orthonormal(None, avoid=list(directions), dim=d)
        w = w_norm * w_dir
    else:
        adversary_rng = rng_state.get("adversary")
        if adversary_rng is None:
            raise DegenerateInputError("randomized_sphere mode needs an adversary rng")
        w = sample_sphere(d, w_norm, adversary_rng)

    w_bar = w / np.linalg.norm(w)
    alignments = directions @ w_bar
    hypothesis_margin = 1.0 / (2.0 * _SQRT2) - floor / (100.0 * distances)
    instance = ChannelInstance(w=w, clamp=-1.0, affine=base.map)
    diagnostics = {
        "mode": cfg.mode,
        "w_norm": w_norm,
        "transcript": transcript,
        "iterates": [x.tolist() for x in iterates],
        "distances": distances.tolist(),
        "alignments": alignments.tolist(),
        "max_alignment": float(alignments.max()),
        "coincidence_hypothesis": (alignments <= hypothesis_margin).tolist(),
    }
    return instance, diagnostics
