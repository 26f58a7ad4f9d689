import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from phsdcs.core import CoefficientPyramid, Image
from phsdcs.sensing import (
    FOURIER,
    PIXEL,
    ComposedOperator,
    MeasurementVector,
    SamplingMask,
    apply,
    apply_adjoint,
    full_mask,
    measure,
    measure_adjoint,
    pixel_mask,
    radial_mask,
)
from phsdcs.transform import analyze, make_handle


def rel_dot_error(lhs, rhs, scale):
    return abs(lhs - rhs) / scale


def complex_normal(rng, shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


# -- radial masks ------------------------------------------------------------------

def test_single_horizontal_line():
    mask = radial_mask(8, 1, 8, hermitian=False)
    assert mask.m == 8
    assert set(map(tuple, mask.indices)) == {(0, v) for v in range(8)}


def test_two_lines_share_dc():
    mask = radial_mask(8, 2, 8, hermitian=False)
    assert mask.m == 15
    expected = {(0, v) for v in range(8)} | {(u, 0) for u in range(8)}
    assert set(map(tuple, mask.indices)) == expected


def test_first_occurrence_order():
    mask = radial_mask(8, 1, 8, hermitian=False)
    # offsets -4..3 wrapped into DFT order
    np.testing.assert_array_equal(mask.indices[:, 1], [4, 5, 6, 7, 0, 1, 2, 3])


def test_fifty_line_mask_size():
    mask = radial_mask(256, 50, 100, hermitian=False)
    assert abs(mask.m - 5020) <= 0.1 * 5020
    assert radial_mask(256, 50, 100, hermitian=True).m >= mask.m


def test_mask_is_deterministic():
    a = radial_mask(64, 12, 40)
    b = radial_mask(64, 12, 40, seed=99)
    assert a.to_text() == b.to_text()
    assert a.mask_id == b.mask_id


@settings(max_examples=30, deadline=None)
@given(logn=st.integers(1, 6), lines=st.integers(1, 20), data=st.data())
def test_hermitian_closure_and_distinctness(logn, lines, data):
    n = 2 ** logn
    ppl = data.draw(st.integers(1, n))
    mask = radial_mask(n, lines, ppl, hermitian=True)
    pts = set(map(tuple, mask.indices.tolist()))
    assert len(pts) == mask.m
    assert all(((-u) % n, (-v) % n) in pts for u, v in pts)


@pytest.mark.parametrize("args", [(12, 2, 4), (8, 0, 4), (8, 2, 0), (8, 2, 9)])
def test_radial_mask_errors(args):
    with pytest.raises(ValueError):
        radial_mask(*args)


def test_mask_validation():
    with pytest.raises(ValueError, match="distinct"):
        SamplingMask((4, 4), FOURIER, [[0, 0], [0, 0]])
    with pytest.raises(ValueError, match="outside"):
        SamplingMask((4, 4), FOURIER, [[4, 0]])
    with pytest.raises(ValueError):
        SamplingMask((4, 4), "wavelet", [[0, 0]])


def test_mask_text_format():
    mask = SamplingMask((4, 8), PIXEL, [[1, 2], [3, 7]])
    assert mask.to_text() == "mask 4 8 pixel 2\n1 2\n3 7\n"
    assert len(mask.mask_id) == 16


# -- measure and its adjoint ---------------------------------------------------------

def test_constant_image_dc():
    mask = SamplingMask((8, 8), FOURIER, [[0, 0]])
    y = measure(Image(np.full((8, 8), 3.0)), mask)
    np.testing.assert_allclose(y.values, [3.0 * 8], atol=1e-12)
    assert y.mask_id == mask.mask_id


def test_pixel_mask_is_restriction(rng):
    img = Image(rng.uniform(0, 255, (8, 8)))
    mask = pixel_mask((8, 8), 10, seed=3)
    expected = [img.pixels[u, v] for u, v in mask.indices]
    np.testing.assert_array_equal(measure(img, mask).values, expected)


def test_zero_cases():
    mask = radial_mask(8, 3, 8)
    assert not np.any(measure(Image(np.zeros((8, 8))), mask).values)
    assert not np.any(measure_adjoint(MeasurementVector(np.zeros(mask.m), mask.mask_id), mask).values)


def test_dimension_errors():
    mask = radial_mask(8, 3, 8)
    with pytest.raises(ValueError):
        measure(Image(np.zeros((4, 4))), mask)
    with pytest.raises(ValueError):
        measure_adjoint(np.zeros(mask.m + 1), mask)


@pytest.mark.parametrize("n", [8, 32, 64])
@pytest.mark.parametrize("domain", [FOURIER, PIXEL])
def test_measure_dot_test(rng, n, domain):
    mask = radial_mask(n, 6, n) if domain == FOURIER else pixel_mask((n, n), n * n // 4, seed=1)
    for _ in range(100):
        x = rng.standard_normal((n, n))
        y = complex_normal(rng, mask.m)
        lhs = np.vdot(y, measure(Image(x), mask).values)
        rhs = np.vdot(measure_adjoint(MeasurementVector(y, ""), mask).values, x)
        assert rel_dot_error(lhs, rhs, np.linalg.norm(x) * np.linalg.norm(y)) <= 1e-12


def test_full_mask_is_identity(rng):
    mask = full_mask((16, 16))
    x = rng.standard_normal((16, 16))
    back = measure_adjoint(measure(Image(x), mask), mask).values
    np.testing.assert_allclose(back, x, atol=1e-12)


# -- composed operator ---------------------------------------------------------------

@pytest.mark.parametrize("kind", ["phsd", "daub2d"])
@pytest.mark.parametrize("n", [8, 32, 64])
def test_apply_dot_test(rng, kind, n):
    op = ComposedOperator(radial_mask(n, 8, n), make_handle(kind, n, n, 2, 3))
    for _ in range(100):
        b = complex_normal(rng, (n, n))
        y = complex_normal(rng, op.m)
        lhs = np.vdot(y, op.matvec(b))
        rhs = np.vdot(op.rmatvec(y), b)
        assert rel_dot_error(lhs, rhs, np.linalg.norm(b) * np.linalg.norm(y)) <= 1e-10


@pytest.mark.parametrize("kind", ["phsd", "daub2d"])
@pytest.mark.parametrize("mask", [radial_mask(32, 10, 32), pixel_mask((32, 32), 300, seed=4)])
def test_rows_are_orthonormal(rng, kind, mask):
    op = ComposedOperator(mask, make_handle(kind, 32, 32, 2, 3))
    for _ in range(5):
        y = complex_normal(rng, op.m)
        assert np.linalg.norm(op.matvec(op.rmatvec(y)) - y) <= 1e-10 * np.linalg.norm(y)


def test_full_mask_apply_measures_image(rng):
    handle = make_handle("phsd", 16, 16, 2, 3)
    mask = full_mask((16, 16))
    op = ComposedOperator(mask, handle)
    x = rng.standard_normal((16, 16))
    beta = op.wrap(analyze(handle, x))
    np.testing.assert_allclose(apply(op, beta).values, measure(Image(x), mask).values, atol=1e-12)


def test_hermitian_adjoint_keeps_conjugate_symmetry(rng):
    n = 16
    mask = radial_mask(n, 5, n, hermitian=True)
    op = ComposedOperator(mask, make_handle("phsd", n, n, 2, 3))
    y = measure(Image(rng.uniform(0, 1, (n, n))), mask)
    v = apply_adjoint(op, y).values
    # real image data => Phi^H Theta^H y is the analysis of a real array
    mirror = np.conj(v[:, (-np.arange(n)) % n])
    np.testing.assert_allclose(v, mirror, atol=1e-12)


def test_apply_zero_and_tag_check():
    op = ComposedOperator(radial_mask(8, 3, 8), make_handle("phsd", 8, 8, 2, 2))
    zero = op.wrap(np.zeros((8, 8)))
    assert not np.any(apply(op, zero).values)
    with pytest.raises(ValueError):
        apply(op, CoefficientPyramid(np.zeros((8, 8)), 2, "daub2d-p2"))
    with pytest.raises(ValueError):
        ComposedOperator(radial_mask(16, 3, 8), make_handle("phsd", 8, 8, 2, 2))
