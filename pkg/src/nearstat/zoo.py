"""Test functions: the spiral, the channel family, distance compositions, Warga's example.

Every function exposes a first-order oracle returning a value, one Clarke
subgradient and a differentiability flag.  At nondifferentiable points a fixed
canonical element is returned so that runs replay exactly:

- channel at the origin: ``-2 * wbar``; at ``-w``: ``-3 * wbar``,
- channel on the hinge boundary: the inactive-branch gradient ``ybar``,
- clamp boundary: the unclamped branch element; strictly clamped: zero,
- Warga kinks: the midpoint element obtained from the ``sign(0) = 0`` convention.

Scalar evaluation goes through the batch implementations where one exists, so
sampled property checks exercise the same arithmetic as oracle queries.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from nearstat.errors import DegenerateInputError, DimensionMismatchError
from nearstat.vectorspace import as_vector

# Absolute tolerance on the defining equalities of nondifferentiable regions.
REGION_TOL = 1e-12

REGION_ORIGIN = "origin"
REGION_MINUS_W = "minus_w"
REGION_HINGE_INACTIVE = "hinge_inactive"
REGION_HINGE_ACTIVE = "hinge_active"
REGION_HINGE_BOUNDARY = "hinge_boundary"
REGION_CLAMP_ACTIVE = "clamp_active"
REGION_CLAMP_BOUNDARY = "clamp_boundary"


@dataclass(frozen=True)
class FirstOrderReply:
    """One oracle answer: function value, a subgradient, differentiability flag."""

    value: float
    subgrad: np.ndarray
    differentiable: bool

    def __post_init__(self):
        object.__setattr__(self, "value", float(self.value))
        object.__setattr__(self, "subgrad", np.asarray(self.subgrad, dtype=float))
        if not np.isfinite(self.value) or not np.all(np.isfinite(self.subgrad)):
            raise DegenerateInputError("oracle reply has non-finite entries")


Oracle = Callable[[np.ndarray], FirstOrderReply]


# ---------------------------------------------------------------------------
# spiral
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Spiral:
    """f(u, v) = (2*delta + u) * sin(pi * v / (2*delta)) on the plane.

    The plain variant is smooth everywhere; ``extended`` tapers it to zero
    outside the ball of radius ``2*delta`` (constant zero beyond ``4*delta``)
    with kinks on the two seam circles.  Lipschitz constant ``2*pi`` on the
    closed ``2*delta`` ball; the extension stays globally Lipschitz.
    """

    delta: float = 1.0
    extended: bool = False

    def __post_init__(self):
        if self.delta <= 0:
            raise DegenerateInputError("spiral delta must be positive")

    @property
    def dim(self) -> int:
        return 2

    @property
    def lipschitz_constant(self) -> float:
        # 2*pi holds on the 2*delta ball; the taper adds a radial term <= 2.
        return 2.0 * math.pi + (2.0 if self.extended else 0.0)

    def eval_batch(self, X: np.ndarray):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != 2:
            raise DimensionMismatchError("spiral is a function on the plane")
        d = self.delta
        u, v = X[:, 0], X[:, 1]
        theta = (math.pi / (2.0 * d)) * v
        amp = 2.0 * d + u
        vals = amp * np.sin(theta)
        grads = np.stack([np.sin(theta), (math.pi / (2.0 * d)) * amp * np.cos(theta)], axis=1)
        diffs = np.ones(len(X), dtype=bool)
        if not self.extended:
            return vals, grads, diffs

        r = np.linalg.norm(X, axis=1)
        inner_seam = np.abs(r - 2.0 * d) <= REGION_TOL
        outer_seam = np.abs(r - 4.0 * d) <= REGION_TOL
        middle = (r > 2.0 * d) & ~inner_seam
        far = (r >= 4.0 * d) & ~outer_seam & middle
        middle &= ~far

        if np.any(middle):
            idx = np.where(middle)[0]
            Xi = X[idx]
            ri = r[idx]
            xbar = Xi / ri[:, None]
            P = 2.0 * d * xbar
            fp, gp, _ = self.eval_batch_inner(P)
            phi = 2.0 - ri / (2.0 * d)
            vals[idx] = phi * fp
            radial = np.einsum("ij,ij->i", xbar, gp)
            tangential = gp - radial[:, None] * xbar
            grads[idx] = (-fp / (2.0 * d))[:, None] * xbar + (
                phi * (2.0 * d) / ri
            )[:, None] * tangential
        if np.any(far):
            vals[far] = 0.0
            grads[far] = 0.0
        diffs[inner_seam | outer_seam] = False
        return vals, grads, diffs

    def eval_batch_inner(self, X: np.ndarray):
        """The untapered branch, used for seam limits and taper composition."""
        plain = Spiral(self.delta, extended=False)
        return plain.eval_batch(X)

    def eval(self, x) -> FirstOrderReply:
        x = as_vector(x)
        vals, grads, diffs = self.eval_batch(x[None, :])
        return FirstOrderReply(vals[0], grads[0], bool(diffs[0]))

    __call__ = eval


# ---------------------------------------------------------------------------
# Warga's example
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Warga:
    """f(u, v) = ||u| + v| + u/2; the origin is Clarke stationary but not a local min."""

    @property
    def dim(self) -> int:
        return 2

    @property
    def lipschitz_constant(self) -> float:
        return 2.5

    def eval_batch(self, X: np.ndarray):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != 2:
            raise DimensionMismatchError("warga is a function on the plane")
        u, v = X[:, 0], X[:, 1]
        a = np.abs(u) + v
        vals = np.abs(a) + 0.5 * u
        su, sa = np.sign(u), np.sign(a)
        grads = np.stack([sa * su + 0.5, sa], axis=1)
        diffs = (u != 0.0) & (a != 0.0)
        return vals, grads, diffs

    def eval(self, x) -> FirstOrderReply:
        x = as_vector(x)
        vals, grads, diffs = self.eval_batch(x[None, :])
        return FirstOrderReply(vals[0], grads[0], bool(diffs[0]))

    __call__ = eval


# ---------------------------------------------------------------------------
# sqrt transform of a nonnegative oracle
# ---------------------------------------------------------------------------


def sqrt_reply(reply: FirstOrderReply, dim: int) -> FirstOrderReply:
    v = reply.value
    if v < 0.0:
        raise DegenerateInputError(f"sqrt transform got negative value {v!r}")
    if v == 0.0:
        return FirstOrderReply(0.0, np.zeros(dim), False)
    root = math.sqrt(v)
    return FirstOrderReply(root, reply.subgrad / (2.0 * root), reply.differentiable)


def sqrt_oracle_transform(reply: FirstOrderReply, query) -> FirstOrderReply:
    """Reply of ``sqrt(f)`` at ``query`` given the reply of a nonnegative ``f``."""
    return sqrt_reply(reply, len(as_vector(query)))


def sqrt_oracle(oracle: Oracle) -> Oracle:
    def wrapped(x):
        return sqrt_reply(oracle(x), len(x))

    return wrapped


# ---------------------------------------------------------------------------
# affine pre-composition support
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class AffineMap:
    """The map ``x -> M^(1/2) (x - x_star)`` plus the matching quadratic oracle.

    ``sqrt_apply`` applies ``M^(1/2)``; ``quad_oracle`` (optional) evaluates
    ``||M^(1/2)(x - x_star)||^2`` in its native form so square-root composed
    evaluations can share its exact arithmetic.  ``provenance`` carries the
    construction parameters for serialization.
    """

    x_star: np.ndarray
    sqrt_apply: Callable[[np.ndarray], np.ndarray]
    quad_oracle: Oracle | None = None
    provenance: dict | None = None

    def __post_init__(self):
        self.x_star = as_vector(self.x_star)

    @property
    def dim(self) -> int:
        return len(self.x_star)

    def apply_m(self, v: np.ndarray) -> np.ndarray:
        """Apply ``M`` as ``M^(1/2)`` twice."""
        return self.sqrt_apply(self.sqrt_apply(v))


def identity_map(x_star) -> AffineMap:
    x_star = as_vector(x_star)
    return AffineMap(x_star=x_star, sqrt_apply=lambda v: v, provenance={"identity": True})


@dataclass(eq=False)
class NormDistance:
    """f(x) = ||M^(1/2) (x - x_star)||; gradient ``M (x - x_star) / f(x)`` away from x_star."""

    map: AffineMap

    @property
    def dim(self) -> int:
        return self.map.dim

    @property
    def lipschitz_constant(self) -> float:
        # Largest singular value of M^(1/2); 1 for the chain family.
        return 1.0

    def eval(self, x) -> FirstOrderReply:
        x = as_vector(x)
        if x.shape != self.map.x_star.shape:
            raise DimensionMismatchError("query dimension does not match the instance")
        y = self.map.sqrt_apply(x - self.map.x_star)
        ny = float(np.linalg.norm(y))
        if ny == 0.0:
            return FirstOrderReply(0.0, np.zeros(self.dim), False)
        return FirstOrderReply(ny, self.map.sqrt_apply(y) / ny, True)

    __call__ = eval


# ---------------------------------------------------------------------------
# the channel family
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class ChannelInstance:
    """g_w(x) = ||x|| - max(4 wbar.(x + w) - 2 ||x + w||, 0), optionally clamped below
    and optionally pre-composed with an affine map.

    ``clamp`` turns the instance into ``max(clamp, g_w(.))``; ``affine`` turns
    the argument into ``M^(1/2) (x - x_star)``.  7-Lipschitz in all variants.
    """

    w: np.ndarray
    clamp: float | None = None
    affine: AffineMap | None = None

    def __post_init__(self):
        self.w = as_vector(self.w)
        if np.linalg.norm(self.w) == 0.0:
            raise DegenerateInputError("channel parameter w must be nonzero")
        if self.affine is not None and self.affine.dim != len(self.w):
            raise DimensionMismatchError("affine map dimension does not match w")

    @property
    def dim(self) -> int:
        return len(self.w)

    @property
    def lipschitz_constant(self) -> float:
        return 7.0

    @property
    def w_norm(self) -> float:
        return float(np.linalg.norm(self.w))

    @property
    def w_bar(self) -> np.ndarray:
        return self.w / self.w_norm

    def mapped_point(self, x: np.ndarray) -> np.ndarray:
        if self.affine is None:
            return x
        return self.affine.sqrt_apply(x - self.affine.x_star)

    def _pieces(self, x: np.ndarray):
        """Region string plus the unclamped value and its y-space subgradient."""
        y = self.mapped_point(x)
        wbar = self.w_bar
        s = y + self.w
        ny = float(np.linalg.norm(y))
        ns = float(np.linalg.norm(s))
        hinge = 4.0 * float(wbar @ s) - 2.0 * ns
        raw = ny - max(hinge, 0.0)
        if ny <= REGION_TOL:
            sub, grad_y, sub_diff = REGION_ORIGIN, -2.0 * wbar, False
        elif ns <= REGION_TOL:
            sub, grad_y, sub_diff = REGION_MINUS_W, -3.0 * wbar, False
        elif abs(hinge) <= REGION_TOL:
            sub, grad_y, sub_diff = REGION_HINGE_BOUNDARY, y / ny, False
        elif hinge > 0.0:
            sub, grad_y, sub_diff = REGION_HINGE_ACTIVE, y / ny - (4.0 * wbar - 2.0 * s / ns), True
        else:
            sub, grad_y, sub_diff = REGION_HINGE_INACTIVE, y / ny, True
        if self.clamp is not None:
            if raw < self.clamp - REGION_TOL:
                return REGION_CLAMP_ACTIVE, raw, grad_y, True
            if abs(raw - self.clamp) <= REGION_TOL:
                return REGION_CLAMP_BOUNDARY, raw, grad_y, False
        return sub, raw, grad_y, sub_diff

    def region(self, x) -> str:
        x = as_vector(x)
        return self._pieces(x)[0]

    def eval(self, x) -> FirstOrderReply:
        x = as_vector(x)
        if x.shape != (self.dim,):
            raise DimensionMismatchError("query dimension does not match the instance")
        region, raw, grad_y, diff = self._pieces(x)
        if region == REGION_CLAMP_ACTIVE:
            return FirstOrderReply(self.clamp, np.zeros(self.dim), True)
        if (
            region == REGION_HINGE_INACTIVE
            and self.affine is not None
            and self.affine.quad_oracle is not None
        ):
            # ||y|| equals sqrt of the underlying quadratic here; reuse its
            # arithmetic so composed runs reproduce the plain distance oracle
            # bit for bit.
            return sqrt_reply(self.affine.quad_oracle(x), self.dim)
        value = raw if region != REGION_CLAMP_BOUNDARY else max(self.clamp, raw)
        grad = grad_y if self.affine is None else self.affine.sqrt_apply(grad_y)
        return FirstOrderReply(value, grad, diff)

    __call__ = eval

    def eval_batch(self, X: np.ndarray):
        """Vectorized evaluation for plain (non-composed) instances.

        Returns ``(values, grads, differentiable, regions)`` over the rows of X.
        """
        if self.affine is not None:
            raise DegenerateInputError("batch evaluation supports plain instances only")
        Y = np.atleast_2d(np.asarray(X, dtype=float))
        if Y.shape[1] != self.dim:
            raise DimensionMismatchError("query dimension does not match the instance")
        wbar = self.w_bar
        S = Y + self.w
        ny = np.linalg.norm(Y, axis=1)
        ns = np.linalg.norm(S, axis=1)
        hinge = 4.0 * (S @ wbar) - 2.0 * ns
        raw = ny - np.maximum(hinge, 0.0)

        n = len(Y)
        grads = np.zeros_like(Y)
        diffs = np.zeros(n, dtype=bool)
        regions = np.empty(n, dtype="<U16")

        at_origin = ny <= REGION_TOL
        at_minus_w = ~at_origin & (ns <= REGION_TOL)
        on_boundary = ~at_origin & ~at_minus_w & (np.abs(hinge) <= REGION_TOL)
        active = ~at_origin & ~at_minus_w & ~on_boundary & (hinge > 0.0)
        inactive = ~at_origin & ~at_minus_w & ~on_boundary & ~active

        regions[at_origin] = REGION_ORIGIN
        regions[at_minus_w] = REGION_MINUS_W
        regions[on_boundary] = REGION_HINGE_BOUNDARY
        regions[active] = REGION_HINGE_ACTIVE
        regions[inactive] = REGION_HINGE_INACTIVE

        grads[at_origin] = -2.0 * wbar
        grads[at_minus_w] = -3.0 * wbar
        safe_ny = np.where(ny > 0.0, ny, 1.0)
        ybar = Y / safe_ny[:, None]
        grads[on_boundary | inactive] = ybar[on_boundary | inactive]
        if np.any(active):
            sbar = S[active] / ns[active, None]
            grads[active] = ybar[active] - (4.0 * wbar - 2.0 * sbar)
        diffs[active | inactive] = True

        values = raw.copy()
        if self.clamp is not None:
            clamped = raw < self.clamp - REGION_TOL
            boundary = ~clamped & (np.abs(raw - self.clamp) <= REGION_TOL)
            values[clamped] = self.clamp
            grads[clamped] = 0.0
            diffs[clamped] = True
            regions[clamped] = REGION_CLAMP_ACTIVE
            values[boundary] = np.maximum(self.clamp, raw[boundary])
            diffs[boundary] = False
            regions[boundary] = REGION_CLAMP_BOUNDARY
        return values, grads, diffs, regions


def clamped_channel(w, drop: float = 1.0) -> ChannelInstance:
    """The channel clamped at its origin value minus ``drop`` (default 1)."""
    w = as_vector(w)
    base = ChannelInstance(w=w)
    level = base.eval(np.zeros(len(w))).value - drop
    return ChannelInstance(w=w, clamp=level)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

_SCHEMA_FIELDS = ("kind", "delta", "w", "clamp", "x_star", "chain", "rotation_frame")


def instance_to_json(obj) -> dict:
    """Serialize a zoo instance to the fixed-field document format."""
    doc = {k: None for k in _SCHEMA_FIELDS}
    if isinstance(obj, Spiral):
        doc["kind"] = "spiral_extended" if obj.extended else "spiral"
        doc["delta"] = obj.delta
        return doc
    if isinstance(obj, Warga):
        doc["kind"] = "warga"
        return doc
    if isinstance(obj, NormDistance):
        doc["kind"] = "norm_distance"
        doc.update(_map_fields(obj.map))
        return doc
    if isinstance(obj, ChannelInstance):
        doc["kind"] = "channel" if obj.affine is None else "channel_composed"
        doc["w"] = obj.w.tolist()
        doc["clamp"] = obj.clamp
        if obj.affine is not None:
            doc.update(_map_fields(obj.affine))
        return doc
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _map_fields(m: AffineMap) -> dict:
    prov = m.provenance or {}
    fields = {"x_star": m.x_star.tolist(), "chain": None, "rotation_frame": None}
    if "T" in prov:
        fields["chain"] = {"T": prov["T"], "d": prov["d"], "k": prov["k"]}
    if prov.get("rotation_frame") is not None:
        fields["rotation_frame"] = [list(row) for row in prov["rotation_frame"]]
    return fields


def _map_from_fields(doc: dict) -> AffineMap:
    from nearstat import adversaries

    x_star = as_vector(doc["x_star"])
    if doc.get("chain") is None:
        return identity_map(x_star)
    chain = doc["chain"]
    frame = doc.get("rotation_frame")
    m = adversaries.affine_map_from_parameters(
        T=int(chain["T"]), d=int(chain["d"]), rotation_frame=frame
    )
    if abs(chain["k"] - adversaries.CHAIN_END_WEIGHT) > 1e-12:
        raise DegenerateInputError("chain end weight in document does not match construction")
    if not np.allclose(m.x_star, x_star, rtol=0.0, atol=1e-12):
        raise DegenerateInputError("serialized x_star does not match chain parameters")
    return m


def instance_from_json(doc: dict):
    kind = doc.get("kind")
    if kind in ("spiral", "spiral_extended"):
        return Spiral(delta=float(doc["delta"]), extended=(kind == "spiral_extended"))
    if kind == "warga":
        return Warga()
    if kind == "norm_distance":
        return NormDistance(map=_map_from_fields(doc))
    if kind == "channel":
        clamp = doc.get("clamp")
        return ChannelInstance(w=as_vector(doc["w"]), clamp=None if clamp is None else float(clamp))
    if kind == "channel_composed":
        clamp = doc.get("clamp")
        return ChannelInstance(
            w=as_vector(doc["w"]),
            clamp=None if clamp is None else float(clamp),
            affine=_map_from_fields(doc),
        )
    raise DegenerateInputError(f"unknown function kind {kind!r}")


def instance_to_json_str(obj) -> str:
    return json.dumps(instance_to_json(obj))


def instance_from_json_str(text: str):
    return instance_from_json(json.loads(text))
