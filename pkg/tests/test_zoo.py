import math

import numpy as np
import pytest

from nearstat.errors import DegenerateInputError, DimensionMismatchError
from nearstat.zoo import (
    REGION_CLAMP_ACTIVE,
    REGION_CLAMP_BOUNDARY,
    REGION_HINGE_ACTIVE,
    REGION_HINGE_BOUNDARY,
    REGION_HINGE_INACTIVE,
    REGION_MINUS_W,
    REGION_ORIGIN,
    ChannelInstance,
    FirstOrderReply,
    NormDistance,
    Spiral,
    Warga,
    clamped_channel,
    identity_map,
    instance_from_json,
    instance_from_json_str,
    instance_to_json,
    instance_to_json_str,
    sqrt_oracle,
    sqrt_reply,
)


def test_reply_coercion_and_finiteness():
    r = FirstOrderReply(1, [1, 2], True)
    assert r.value == 1.0 and r.subgrad.dtype == float
    with pytest.raises(DegenerateInputError):
        FirstOrderReply(np.inf, [0.0], True)
    with pytest.raises(DegenerateInputError):
        FirstOrderReply(0.0, [np.nan], True)


# ---------------------------------------------------------------------------
# spiral
# ---------------------------------------------------------------------------


def test_spiral_hand_values():
    f = Spiral(delta=1.0)
    r = f.eval([0.0, 1.0])
    assert r.value == pytest.approx(2.0, abs=1e-15)
    assert np.allclose(r.subgrad, [1.0, 0.0], atol=1e-15)
    r0 = f.eval([0.0, 0.0])
    assert r0.value == 0.0
    assert np.allclose(r0.subgrad, [0.0, math.pi], atol=1e-15)
    r2 = f.eval([0.5, 1.0 / 3.0])
    assert r2.value == pytest.approx(2.5 * math.sin(math.pi / 6.0), rel=1e-15)


def test_spiral_gradient_norm_bounds_sampled():
    rng = np.random.default_rng(5)
    f = Spiral(delta=0.7)
    # unit-gradient floor on the delta ball, 2*pi cap on the 2*delta ball
    X = rng.normal(size=(4000, 2))
    X *= (0.7 * rng.random(4000) ** 0.5 / np.linalg.norm(X, axis=1))[:, None]
    _, grads, _ = f.eval_batch(X)
    norms = np.linalg.norm(grads, axis=1)
    assert norms.min() >= 1.0 - 1e-9
    X2 = 2.0 * X
    _, grads2, _ = f.eval_batch(X2)
    assert np.linalg.norm(grads2, axis=1).max() <= 2.0 * math.pi + 1e-9


def test_spiral_extension_matches_inside_and_vanishes_far():
    f = Spiral(delta=1.0, extended=True)
    plain = Spiral(delta=1.0)
    rng = np.random.default_rng(9)
    X = rng.uniform(-1.2, 1.2, size=(100, 2))
    vals_e, grads_e, _ = f.eval_batch(X)
    vals_p, grads_p, _ = plain.eval_batch(X)
    inside = np.linalg.norm(X, axis=1) < 2.0
    assert np.array_equal(vals_e[inside], vals_p[inside])
    assert np.array_equal(grads_e[inside], grads_p[inside])
    far = f.eval([5.0, 1.0])
    assert far.value == 0.0 and np.array_equal(far.subgrad, [0.0, 0.0])


def test_spiral_extension_continuity_and_seams():
    f = Spiral(delta=1.0, extended=True)
    x = np.array([0.6, 0.8])  # unit direction
    for r in (2.0, 4.0):
        lo = f.eval((r - 1e-9) * x).value
        hi = f.eval((r + 1e-9) * x).value
        assert abs(hi - lo) < 1e-7
        assert not f.eval(r * x).differentiable
    # taper factor is 1/2 at radius 3*delta
    inner = f.eval(2.0 * x).value
    mid = f.eval(3.0 * x).value
    assert mid == pytest.approx(0.5 * inner, rel=1e-12)


def test_spiral_rejects_bad_inputs():
    with pytest.raises(DegenerateInputError):
        Spiral(delta=0.0)
    with pytest.raises(DimensionMismatchError):
        Spiral().eval_batch(np.zeros((3, 4)))


# ---------------------------------------------------------------------------
# Warga's function
# ---------------------------------------------------------------------------


def test_warga_hand_values():
    f = Warga()
    assert f.eval([1.0, 1.0]).value == 2.5
    assert f.eval([-1.0, 2.0]).value == 2.5
    r = f.eval([1.0, 1.0])
    assert np.array_equal(r.subgrad, [1.5, 1.0]) and r.differentiable
    # u = 0 uses sign(0) = 0 and is flagged nondifferentiable
    r0 = f.eval([0.0, 1.0])
    assert np.array_equal(r0.subgrad, [0.5, 1.0]) and not r0.differentiable
    assert f.eval([0.0, 0.0]).value == 0.0


def test_warga_descent_direction_exists_at_origin():
    # the origin is not a local minimum: moving along (-1, -1) decreases f
    f = Warga()
    assert f.eval([-0.1, -0.1]).value == pytest.approx(-0.05, abs=1e-15)


# ---------------------------------------------------------------------------
# sqrt transform and norm-distance instances
# ---------------------------------------------------------------------------


def test_sqrt_reply_cases():
    r = sqrt_reply(FirstOrderReply(4.0, [8.0, 0.0], True), 2)
    assert r.value == 2.0 and np.array_equal(r.subgrad, [2.0, 0.0])
    z = sqrt_reply(FirstOrderReply(0.0, [1.0, 1.0], True), 2)
    assert z.value == 0.0 and np.array_equal(z.subgrad, [0.0, 0.0])
    assert not z.differentiable
    with pytest.raises(DegenerateInputError):
        sqrt_reply(FirstOrderReply(-1e-9, [0.0], True), 1)


def test_sqrt_oracle_gives_unit_gradients_of_distance():
    def quad(x):
        return FirstOrderReply(float(x @ x), 2.0 * x, True)

    dist = sqrt_oracle(quad)
    rng = np.random.default_rng(1)
    for _ in range(30):
        x = rng.normal(size=3)
        r = dist(x)
        assert r.value == pytest.approx(np.linalg.norm(x), rel=1e-15)
        assert np.linalg.norm(r.subgrad) == pytest.approx(1.0, abs=1e-14)


def test_identity_norm_distance():
    nd = NormDistance(identity_map([1.0, -2.0]))
    assert nd.lipschitz_constant == 1.0
    r = nd.eval([1.0, 0.0])
    assert r.value == 2.0 and np.array_equal(r.subgrad, [0.0, 1.0])
    at_star = nd.eval([1.0, -2.0])
    assert at_star.value == 0.0 and not at_star.differentiable
    with pytest.raises(DimensionMismatchError):
        nd.eval([0.0, 0.0, 0.0])


# ---------------------------------------------------------------------------
# channel family
# ---------------------------------------------------------------------------


def test_channel_canonical_regions_and_values():
    g = ChannelInstance(w=[0.3, 0.0])
    r0 = g.eval([0.0, 0.0])
    assert r0.value == pytest.approx(-0.6, abs=1e-15)
    assert np.array_equal(r0.subgrad, [-2.0, 0.0])
    assert g.region([0.0, 0.0]) == REGION_ORIGIN

    rm = g.eval([-0.3, 0.0])
    assert rm.value == pytest.approx(0.3, abs=1e-15)
    assert np.array_equal(rm.subgrad, [-3.0, 0.0])
    assert g.region([-0.3, 0.0]) == REGION_MINUS_W

    # deep in the channel: x + w = wbar
    ra = g.eval([0.7, 0.0])
    assert g.region([0.7, 0.0]) == REGION_HINGE_ACTIVE
    assert ra.value == pytest.approx(-1.3, abs=1e-15)
    assert np.allclose(ra.subgrad, [-1.0, 0.0], atol=1e-15)

    # behind the channel the function is the plain norm
    rb = g.eval([-1.0, 0.0])
    assert g.region([-1.0, 0.0]) == REGION_HINGE_INACTIVE
    assert rb.value == 1.0 and np.array_equal(rb.subgrad, [-1.0, 0.0])

    # x + w on the 60-degree cone around w: the hinge vanishes identically
    xb = np.array([0.5 - 0.3, math.sqrt(3.0) / 2.0])
    assert g.region(xb) == REGION_HINGE_BOUNDARY
    assert np.linalg.norm(g.eval(xb).subgrad) == pytest.approx(1.0, abs=1e-14)


def test_channel_gradient_norms_never_small():
    rng = np.random.default_rng(12)
    g = ChannelInstance(w=[0.2, -0.4, 0.1])
    X = rng.uniform(-1.5, 1.5, size=(5000, 3))
    _, grads, _, _ = g.eval_batch(X)
    assert np.linalg.norm(grads, axis=1).min() >= 1.0 / math.sqrt(2.0) - 1e-9


def test_channel_lipschitz_ratio_sampled():
    rng = np.random.default_rng(13)
    g = ChannelInstance(w=[0.3, 0.0])
    A = rng.uniform(-2, 2, size=(3000, 2))
    B = rng.uniform(-2, 2, size=(3000, 2))
    va, _, _, _ = g.eval_batch(A)
    vb, _, _, _ = g.eval_batch(B)
    gaps = np.linalg.norm(A - B, axis=1)
    assert (np.abs(va - vb) <= 7.0 * gaps + 1e-12).all()


def test_channel_eval_matches_eval_batch():
    rng = np.random.default_rng(14)
    g = ChannelInstance(w=[0.25, -0.1], clamp=-1.0)
    X = np.vstack([rng.uniform(-1, 1, size=(200, 2)), [[0.0, 0.0]], [[-0.25, 0.1]]])
    vals, grads, diffs, regions = g.eval_batch(X)
    for i, x in enumerate(X):
        r = g.eval(x)
        assert r.value == pytest.approx(vals[i], abs=1e-13)
        assert np.allclose(r.subgrad, grads[i], atol=1e-13)
        assert r.differentiable == bool(diffs[i]) or regions[i] == REGION_CLAMP_ACTIVE
        assert g.region(x) == regions[i]


def test_channel_clamp_floor():
    g = ChannelInstance(w=[0.3, 0.0], clamp=-1.0)
    r = g.eval([0.7, 0.0])  # raw value -1.3 sits below the floor
    assert g.region([0.7, 0.0]) == REGION_CLAMP_ACTIVE
    assert r.value == -1.0 and np.array_equal(r.subgrad, [0.0, 0.0])
    # the clamp never moves values above the floor elsewhere
    assert g.eval([0.0, 0.0]).value == pytest.approx(-0.6, abs=1e-15)


def test_clamped_channel_drop_level():
    w = [0.025, 0.0]
    g = clamped_channel(w, drop=1.0)
    origin_value = ChannelInstance(w=w).eval([0.0, 0.0]).value
    assert g.clamp == pytest.approx(origin_value - 1.0, abs=1e-15)


def test_channel_rejects_zero_w():
    with pytest.raises(DegenerateInputError):
        ChannelInstance(w=[0.0, 0.0])


# ---------------------------------------------------------------------------
# serialization round trips
# ---------------------------------------------------------------------------


@pytest.mark.parametrize(
    "obj",
    [
        Spiral(delta=0.5),
        Spiral(delta=1.0, extended=True),
        Warga(),
        ChannelInstance(w=[0.3, 0.0]),
        ChannelInstance(w=[0.1, -0.2, 0.05], clamp=-1.0),
    ],
)
def test_json_round_trip_evaluates_identically(obj):
    doc = instance_to_json(obj)
    back = instance_from_json(doc)
    rng = np.random.default_rng(21)
    for _ in range(20):
        x = rng.uniform(-2, 2, size=obj.dim)
        a, b = obj.eval(x), back.eval(x)
        assert a.value == b.value
        assert np.array_equal(a.subgrad, b.subgrad)
        assert a.differentiable == b.differentiable


def test_json_string_round_trip():
    g = ChannelInstance(w=[0.3, 0.0], clamp=-1.0)
    text = instance_to_json_str(g)
    back = instance_from_json_str(text)
    assert back.clamp == g.clamp
    assert np.array_equal(back.w, g.w)


def test_json_rejects_unknown_kind():
    with pytest.raises(DegenerateInputError):
        instance_from_json({"kind": "mystery"})
