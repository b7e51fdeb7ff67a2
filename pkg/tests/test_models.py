import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from vortlab import models
from vortlab.geometry import EllipseDomain, EllipsoidForm, PeriodicBox, RectangleDomain, build_masked_grid, unit_disk
from vortlab.models import (
    GaugeError,
    ModelSpec,
    biot_savart_2d,
    convection_term,
    curl_3d,
    divergence,
    grad_u_3d,
    rhs,
    rhs_clm,
    rhs_perturbed,
    rhs_system32,
    rhs_zero_order_2d,
    rhs_zero_order_3d,
    skew_symmetry_residual,
    velocity_from_vorticity_3d,
)

seeds = st.integers(0, 2**32 - 1)


def smooth_field(box, rng, kmax=3, comps=None):
    """Random zero-mean trigonometric field with |k_i| <= kmax."""
    shape = box.shape if comps is None else (comps, *box.shape)
    X = box.mesh()
    out = np.zeros(shape)
    view = out[None] if comps is None else out
    for c in range(view.shape[0]):
        for _ in range(6):
            k = rng.integers(-kmax, kmax + 1, size=box.dim)
            if not k.any():
                continue
            phase = rng.uniform(0, 2 * np.pi)
            view[c] += rng.standard_normal() * np.cos(sum(ki * x for ki, x in zip(k, X)) + phase)
    return out


def solenoidal_3d(box, rng):
    """curl of a random smooth field: divergence-free, zero mean."""
    return curl_3d(smooth_field(box, rng, comps=3), box)


# --------------------------------------------------------------- ModelSpec


def test_spec_domain_validation():
    box2 = PeriodicBox(2, 16)
    ModelSpec("model1", build_masked_grid(unit_disk(), 16))
    ModelSpec("model1", RectangleDomain(8))
    ModelSpec("model1", box2)
    with pytest.raises(ValueError):
        ModelSpec("zero_order_3d", box2)
    with pytest.raises(ValueError):
        ModelSpec("perturbed", RectangleDomain(8))
    with pytest.raises(ValueError):
        ModelSpec("clm", box2)
    with pytest.raises(ValueError):
        ModelSpec("system32", box2)
    with pytest.raises(ValueError, match="unknown model"):
        ModelSpec("model9", box2)


def test_state_shapes():
    assert ModelSpec("system32", RectangleDomain(8)).state_shape == (2, 8, 8)
    assert ModelSpec("zero_order_3d", PeriodicBox(3, 8)).state_shape == (3, 8, 8, 8)
    assert ModelSpec("perturbed", PeriodicBox(2, 8), diffusion=True).stiff


# ---------------------------------------------------------- zero-order 2D


@pytest.mark.parametrize("dom", [EllipseDomain(2.0, 0.0, 1.0), EllipseDomain(1.0, 1.0, 1.0)])
def test_model1_constant_on_ellipse(dom):
    g = build_masked_grid(dom, 64)
    c0 = 1.7
    r = rhs_zero_order_2d(1, 1, np.full((64, 64), c0), g)
    assert np.allclose(r[g.interior], dom.a / (dom.a + dom.c) * c0**2, atol=1e-10)


def test_model1prime_constant_on_disk():
    g = build_masked_grid(unit_disk(), 64)
    r = rhs_zero_order_2d(1, 2, np.full((64, 64), 3.0), g)
    assert np.abs(r[g.bulk(3)]).max() <= 1e-10


def test_model1_sine_mode_on_rectangle():
    dom = RectangleDomain(32)
    X1, X2 = dom.mesh()
    w = np.sin(X1) * np.sin(X2)
    r = rhs_zero_order_2d(1, 1, w, dom)
    assert np.allclose(r, 0.5 * np.sin(X1) ** 2 * np.sin(X2) ** 2, atol=1e-14)


# ---------------------------------------------------------------- system32


def test_system32_constants_on_disk():
    g = build_masked_grid(unit_disk(), 64)
    c1, c2 = 1.3, -0.4
    w = np.stack([np.full((64, 64), c1), np.full((64, 64), c2)])
    r = rhs_system32(w, g)
    want = (1.5 * c1 * c1 + 0.5 * c1 * c2, 0.5 * c1 * c1 + 1.5 * c1 * c2)
    for comp in range(2):
        assert np.allclose(r[comp][g.interior], want[comp], atol=1e-10)


def test_system32_zero_and_shape():
    dom = RectangleDomain(16)
    assert not rhs_system32(np.zeros((2, 16, 16)), dom).any()
    with pytest.raises(ValueError):
        rhs_system32(np.zeros((3, 16, 16)), dom)


@given(seed=seeds)
def test_system32_matrix_symmetry(seed):
    # rhs = M(w1) w; read M column by column and check M_12 = M_21
    dom = RectangleDomain(24)
    rng = np.random.default_rng(seed)
    w1 = rng.uniform(0.5, 1.5, (24, 24))
    w2 = rng.uniform(0.5, 1.5, (24, 24))
    col1 = rhs_system32(np.stack([w1, np.zeros_like(w1)]), dom, dealias=False) / w1
    col2 = (rhs_system32(np.stack([w1, w2]), dom, dealias=False) - col1 * w1) / w2
    assert np.allclose(col1[1], col2[0], atol=1e-12)
    assert np.allclose(col1[0], col2[1], atol=1e-12)


# ------------------------------------------------------------ Biot-Savart 2D


def test_biot_savart_closed_form():
    box = PeriodicBox(2, 32)
    X1, X2 = box.mesh()
    u = biot_savart_2d(np.cos(X1) + np.cos(X2), box)
    assert np.allclose(u[0], -np.sin(X2), atol=1e-14)
    assert np.allclose(u[1], np.sin(X1), atol=1e-14)


def test_biot_savart_zero():
    box = PeriodicBox(2, 16)
    assert not biot_savart_2d(np.zeros(box.shape), box).any()


@given(seed=seeds)
def test_biot_savart_div_free_and_curl(seed):
    box = PeriodicBox(2, 32)
    w = smooth_field(box, np.random.default_rng(seed), kmax=5)
    u = biot_savart_2d(w, box)
    assert np.abs(divergence(u, box)).max() <= 1e-12 * max(1.0, np.abs(w).max())
    g1 = models.gradient(u[1], box)[0]
    g2 = models.gradient(u[0], box)[1]
    assert np.allclose(g1 - g2, w, atol=1e-12)


def test_biot_savart_gauge_error():
    box = PeriodicBox(2, 16)
    with pytest.raises(GaugeError):
        biot_savart_2d(np.full(box.shape, 0.5), box)
    u = biot_savart_2d(np.full(box.shape, 0.5), box, strict=False)
    assert np.abs(u).max() < 1e-15


# ------------------------------------------------------------- perturbed


def test_perturbed_zero_for_all_flags():
    box = PeriodicBox(2, 16)
    for conv in (False, True):
        for diff in (False, True):
            assert not rhs_perturbed(np.zeros(box.shape), box, conv, diff).any()


def test_convection_cancels_on_symmetric_datum():
    box = PeriodicBox(2, 32)
    X1, X2 = box.mesh()
    assert np.abs(convection_term(np.cos(X1) + np.cos(X2), box)).max() <= 1e-13


def test_diffusion_only_rhs_is_laplacian():
    box = PeriodicBox(2, 32)
    X1, X2 = box.mesh()
    w = np.cos(X1 + X2)
    r = rhs_perturbed(w, box, convection=False, diffusion=True, reaction=False)
    assert np.allclose(r, -2 * w, atol=1e-12)


def test_no_flags_falls_back_to_model1():
    box = PeriodicBox(2, 16)
    w = smooth_field(box, np.random.default_rng(3))
    assert np.array_equal(rhs_perturbed(w, box, False, False), rhs_zero_order_2d(1, 1, w, box))


# ------------------------------------------------------------------ 3D


def _u0(box):
    X1, X2, X3 = box.mesh()
    u0 = np.stack([np.sin(X3), np.sin(X1), np.sin(X2)])
    # G0[m, i] = d_m u0_i
    Z = np.zeros_like(X1)
    G0 = np.array([[Z, np.cos(X1), Z], [Z, Z, np.cos(X2)], [np.cos(X3), Z, Z]])
    w = np.stack([np.cos(X2), np.cos(X3), np.cos(X1)])
    return u0, G0, w


def test_grad_u_reproduces_direct_gradient():
    box = PeriodicBox(3, 16)
    u0, G0, w = _u0(box)
    assert np.allclose(curl_3d(u0, box), w, atol=1e-13)
    assert np.abs(grad_u_3d(w, box) - G0).max() <= 1e-12


def test_grad_u_zero():
    box = PeriodicBox(3, 8)
    assert not grad_u_3d(np.zeros((3, *box.shape)), box).any()


@given(seed=seeds)
def test_grad_u_traceless(seed):
    box = PeriodicBox(3, 12)
    w = solenoidal_3d(box, np.random.default_rng(seed))
    G = grad_u_3d(w, box)
    assert np.abs(G[0, 0] + G[1, 1] + G[2, 2]).max() <= 1e-12 * max(1.0, np.abs(w).max())


def _index_form(w, box):
    """-(delta^i_{jl} Z_jm w_l) assembled from an independent k_j k_m / |k|^2."""
    n = box.n
    k = np.fft.fftfreq(n, 1.0 / n) * 2 * np.pi / box.length
    K = np.meshgrid(k, k, k, indexing="ij")
    k2 = K[0] ** 2 + K[1] ** 2 + K[2] ** 2
    k2[0, 0, 0] = 1.0
    W = np.fft.fftn(w, axes=(1, 2, 3))
    Zw = np.empty((3, 3, 3, n, n, n))  # Zw[j, m, l] = Z_jm w_l
    for j in range(3):
        for m in range(3):
            mult = K[j] * K[m] / k2
            mult[0, 0, 0] = 0.0
            for l in range(3):
                Zw[j, m, l] = np.fft.ifftn(mult * W[l]).real
    return -np.einsum("ijl,jml...->mi...", models.LEVI_CIVITA, Zw)


@given(seed=seeds)
def test_grad_u_matches_index_form(seed):
    box = PeriodicBox(3, 8)
    w = smooth_field(box, np.random.default_rng(seed), kmax=2, comps=3)
    assert np.abs(grad_u_3d(w, box) - _index_form(w, box)).max() <= 1e-12 * max(1.0, np.abs(w).max())


def test_rhs_3d_matches_hand_assembly():
    box = PeriodicBox(3, 16)
    _, G0, w = _u0(box)
    want = np.einsum("mi...,i...->m...", G0, w)
    assert np.abs(rhs_zero_order_3d(w, box) - want).max() <= 1e-10


@given(seed=seeds)
def test_rhs_3d_quadratic(seed):
    box = PeriodicBox(3, 8)
    w = smooth_field(box, np.random.default_rng(seed), kmax=2, comps=3)
    assert np.allclose(rhs_zero_order_3d(2 * w, box), 4 * rhs_zero_order_3d(w, box), atol=1e-12)


def test_rhs_3d_zero():
    box = PeriodicBox(3, 8)
    assert not rhs_zero_order_3d(np.zeros((3, *box.shape)), box).any()


def test_reconstruction_of_solenoidal_field():
    box = PeriodicBox(3, 16)
    u0, _, w = _u0(box)
    rec = velocity_from_vorticity_3d(w, box)
    assert rec.div_norm <= 1e-12
    assert rec.curl_mismatch <= 1e-10
    assert np.allclose(rec.u, u0, atol=1e-13)


def test_reconstruction_reports_gradient_mismatch():
    box = PeriodicBox(3, 16)
    X1, _, _ = box.mesh()
    w = np.stack([-np.sin(X1), np.zeros_like(X1), np.zeros_like(X1)])  # grad cos x1
    rec = velocity_from_vorticity_3d(w, box)
    assert rec.curl_mismatch > 0.1
    assert rec.div_norm <= 1e-12


def test_reconstruction_of_zero():
    box = PeriodicBox(3, 8)
    rec = velocity_from_vorticity_3d(np.zeros((3, *box.shape)), box)
    assert not rec.u.any() and rec.div_norm == 0 and rec.curl_mismatch == 0


@given(seed=seeds)
def test_reconstruction_div_free_spectrally(seed):
    box = PeriodicBox(3, 12)
    w = smooth_field(box, np.random.default_rng(seed), comps=3)
    u = velocity_from_vorticity_3d(w, box).u
    k = box.wavenumbers
    div_hat = sum(1j * k[a] * np.fft.rfftn(u[a]) for a in range(3))
    assert np.abs(div_hat).max() <= 1e-10 * max(1.0, np.abs(np.fft.rfftn(w)).max())


def test_3d_shape_checked():
    with pytest.raises(ValueError):
        grad_u_3d(np.zeros((2, 8, 8, 8)), PeriodicBox(3, 8))


# ----------------------------------------------------------------- skew


def test_skew_ball():
    assert np.allclose(skew_symmetry_residual(np.eye(3) / 3, [1.0, 2.0, 3.0]), 0.0, atol=1e-15)


@given(seed=seeds)
def test_skew_random(seed):
    rng = np.random.default_rng(seed)
    A = EllipsoidForm.random(rng)
    c = rng.standard_normal(3) * rng.uniform(0.1, 10)
    assert np.abs(skew_symmetry_residual(A, c)).max() <= 1e-14 * max(1.0, float(c @ c))


def test_skew_zero_vector():
    A = EllipsoidForm.random(np.random.default_rng(1))
    assert not skew_symmetry_residual(A, np.zeros(3)).any()


# ------------------------------------------------------------------ CLM


def test_clm_closed_forms():
    box = PeriodicBox(1, 32)
    (x,) = box.mesh()
    assert np.allclose(rhs_clm(np.sin(x), box), -0.5 * np.sin(2 * x), atol=1e-14)
    assert np.allclose(rhs_clm(np.cos(x), box), 0.5 * np.sin(2 * x), atol=1e-14)
    assert not rhs_clm(np.zeros_like(x), box).any()


# -------------------------------------------------------------- scaling


SCALING_SPECS = [
    ("model1", lambda: RectangleDomain(16)),
    ("model1prime", lambda: PeriodicBox(2, 16)),
    ("system32", lambda: build_masked_grid(EllipseDomain(1.0, 0.5, 2.0), 24)),
    ("zero_order_3d", lambda: PeriodicBox(3, 8)),
    ("clm", lambda: PeriodicBox(1, 32)),
    ("perturbed", lambda: PeriodicBox(2, 16)),
]


@pytest.mark.parametrize("variant,make", SCALING_SPECS)
@given(seed=seeds, lam=st.floats(-3.0, 3.0))
def test_rhs_is_quadratic(variant, make, seed, lam):
    spec = ModelSpec(variant, make())
    rng = np.random.default_rng(seed)
    w = rng.standard_normal(spec.state_shape)
    if variant in ("zero_order_3d", "perturbed", "clm", "model1prime"):
        w = w - w.mean(axis=tuple(range(-spec.domain.dim, 0)), keepdims=True)
    base = rhs(spec, w)
    assert np.allclose(rhs(spec, lam * w), lam**2 * base, atol=1e-10 * max(1.0, np.abs(base).max()))


@given(seed=seeds, lam=st.floats(-3.0, 3.0))
def test_perturbed_linear_plus_quadratic(seed, lam):
    box = PeriodicBox(2, 16)
    w = smooth_field(box, np.random.default_rng(seed))
    full = ModelSpec("perturbed", box, convection=True, diffusion=True)
    lin = rhs_perturbed(w, box, convection=False, diffusion=True, reaction=False)
    quad = rhs(full, w) - lin
    got = rhs(full, lam * w)
    assert np.allclose(got, lam * lin + lam**2 * quad, atol=1e-10 * max(1.0, np.abs(got).max()))
