import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from ogstv.image import to_vector
from ogstv.operators import (
    Kernel,
    KernelError,
    apply_psf_periodic,
    apply_spectrum,
    degrade,
    difference_kernel,
    gaussian_noise,
    grad_x,
    grad_x_adjoint,
    grad_y,
    grad_y_adjoint,
    identity_kernel,
    make_average_kernel,
    make_gaussian_kernel,
    psf_spectrum,
    read_kernel,
    write_kernel,
)
from ogstv.operators import _splitmix64


def explicit_bccb(kernel, n):
    """Correlation matrix assembled entry by entry from the kernel weights."""
    ar, ac = kernel.anchor
    m = np.zeros((n * n, n * n))
    for i in range(n):
        for j in range(n):
            for (a, b), w in np.ndenumerate(kernel.weights):
                src = ((i + a - ar) % n, (j + b - ac) % n)
                m[j * n + i, src[1] * n + src[0]] += w
    return m


M22 = np.array([[1.0, 2.0], [3.0, 4.0]])


class TestGradients:
    def test_constant_maps_to_zero(self):
        c = np.full((5, 5), 3.7)
        assert not grad_x(c).any() and not grad_y(c).any()

    def test_grad_x_by_hand(self):
        np.testing.assert_array_equal(grad_x(M22), [[2, 2], [-2, -2]])

    def test_grad_y_by_hand(self):
        np.testing.assert_array_equal(grad_y(M22), [[1, -1], [1, -1]])

    def test_column_sums_vanish(self, rng):
        x = rng.standard_normal((6, 6))
        np.testing.assert_allclose(grad_x(x).sum(axis=0), 0, atol=1e-12)
        np.testing.assert_allclose(grad_y(x).sum(axis=1), 0, atol=1e-12)

    def test_grad_x_is_difference_correlation(self, rng):
        for _ in range(5):
            x = rng.standard_normal((8, 8))
            assert np.abs(grad_x(x) - apply_psf_periodic(x, difference_kernel(0))).max() <= 1e-12
            assert np.abs(grad_y(x) - apply_psf_periodic(x, difference_kernel(1))).max() <= 1e-12

    def test_transpose_symmetry(self, rng):
        x = rng.standard_normal((7, 7))
        np.testing.assert_array_equal(grad_y(x.T), grad_x(x).T)

    @pytest.mark.parametrize("fwd, adj", [(grad_x, grad_x_adjoint), (grad_y, grad_y_adjoint)])
    def test_adjoint_inner_product(self, rng, fwd, adj):
        for _ in range(50):
            u, w = rng.standard_normal((2, 16, 16))
            lhs = np.vdot(fwd(u), w)
            rhs = np.vdot(u, adj(w))
            assert abs(lhs - rhs) <= 1e-10 * np.linalg.norm(u) * np.linalg.norm(w)

    def test_adjoint_trivial_cases(self):
        assert not grad_x_adjoint(np.zeros((4, 4))).any()
        assert not grad_x_adjoint(grad_x(np.full((4, 4), 2.0))).any()


class TestKernels:
    def test_gaussian_size_one(self):
        k = make_gaussian_kernel(1, 0.3)
        assert k.weights.tolist() == [[1.0]]

    def test_gaussian_flat_limit(self):
        k = make_gaussian_kernel(3, 1e6)
        assert np.abs(k.weights - 1 / 9).max() <= 1e-9

    def test_gaussian_7x7_center_weight(self):
        total = 0.0
        for x in range(-3, 4):
            for y in range(-3, 4):
                total += math.exp(-(x * x + y * y) / 8.0)
        k = make_gaussian_kernel(7, 2.0)
        assert k.anchor == (3, 3)
        assert k.weights[3, 3] == pytest.approx(1.0 / total, rel=1e-14)
        assert k.weights.sum() == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("size, std", [(4, 1.0), (0, 1.0), (3, 0.0), (3, -1.0)])
    def test_gaussian_bad_args(self, size, std):
        with pytest.raises(KernelError):
            make_gaussian_kernel(size, std)

    def test_average(self):
        k = make_average_kernel(9)
        assert k.shape == (9, 9) and np.all(k.weights == 1 / 81)
        assert k.anchor == (4, 4)
        assert make_average_kernel(1) == identity_kernel()
        # even sizes anchor at 1-based ceil(size/2)
        assert make_average_kernel(4).anchor == (1, 1)

    def test_average_preserves_constants(self):
        c = np.full((12, 12), 17.0)
        np.testing.assert_allclose(apply_psf_periodic(c, make_average_kernel(9)), c, rtol=1e-14)

    def test_anchor_validation(self):
        with pytest.raises(KernelError):
            Kernel(np.ones((2, 2)), (2, 0))
        with pytest.raises(KernelError):
            Kernel(np.array([[np.inf]]))

    def test_text_roundtrip(self, tmp_path):
        for k in (make_gaussian_kernel(7, 2.0), make_average_kernel(4), difference_kernel(1)):
            p = tmp_path / "k.txt"
            write_kernel(k, p)
            assert read_kernel(p) == k

    def test_text_format(self, tmp_path):
        p = tmp_path / "k.txt"
        p.write_text("1 2 1 2\n0.25 0.75\n")
        k = read_kernel(p)
        assert k.anchor == (0, 1) and k.weights.tolist() == [[0.25, 0.75]]
        p.write_text("2 2 1 1\n1 2\n")
        with pytest.raises(KernelError):
            read_kernel(p)


class TestPeriodicBlur:
    def test_identity(self, rng):
        x = rng.standard_normal((5, 5))
        np.testing.assert_array_equal(apply_psf_periodic(x, identity_kernel()), x)

    def test_constant_image(self):
        c = np.full((8, 8), 9.0)
        out = apply_psf_periodic(c, make_gaussian_kernel(5, 1.3))
        np.testing.assert_allclose(out, c, rtol=1e-13)

    def test_mean_preserved(self, rng):
        x = rng.uniform(0, 255, (16, 16))
        out = apply_psf_periodic(x, make_gaussian_kernel(7, 2.0))
        assert abs(out.mean() - x.mean()) <= 1e-12 * 255

    @pytest.mark.parametrize("anchor", [(0, 0), (1, 1), (2, 0)])
    def test_matches_explicit_bccb(self, rng, anchor):
        k = Kernel(rng.standard_normal((3, 3)), anchor)
        for _ in range(3):
            x = rng.standard_normal((8, 8))
            dense = explicit_bccb(k, 8) @ to_vector(x)
            assert np.abs(to_vector(apply_psf_periodic(x, k)) - dense).max() <= 1e-10

    def test_correlation_not_convolution(self):
        # asymmetric kernel: out[i] = x[i + 1] for weight 1 one row below the anchor
        k = Kernel(np.array([[0.0], [1.0]]), (0, 0))
        x = np.arange(9.0).reshape(3, 3)
        np.testing.assert_array_equal(apply_psf_periodic(x, k), np.roll(x, -1, axis=0))

    def test_kernel_too_large(self):
        with pytest.raises(KernelError):
            apply_psf_periodic(np.zeros((4, 4)), make_average_kernel(5))
        with pytest.raises(KernelError):
            psf_spectrum(make_average_kernel(5), 4)


class TestSpectrum:
    def test_identity_all_ones(self):
        np.testing.assert_array_equal(psf_spectrum(identity_kernel(), 6), np.ones((6, 6)))

    def test_dc_gain(self):
        s = psf_spectrum(make_gaussian_kernel(7, 2.0), 16)
        assert s[0, 0] == pytest.approx(1.0, abs=1e-12)

    def test_difference_closed_form(self):
        n = 10
        s = psf_spectrum(difference_kernel(0), n)
        r = np.arange(n)[:, None]
        expected = np.abs(1 - np.exp(-2j * np.pi * r / n)) * np.ones((1, n))
        np.testing.assert_allclose(np.abs(s), expected, atol=1e-12)

    @pytest.mark.parametrize(
        "kernel",
        [make_gaussian_kernel(7, 2.0), make_average_kernel(4), difference_kernel(0), Kernel(np.arange(6.0).reshape(2, 3), (1, 2))],
    )
    def test_dft_pathway(self, rng, kernel):
        x = rng.standard_normal((12, 12))
        out = apply_spectrum(x, psf_spectrum(kernel, 12))
        assert np.abs(out - apply_psf_periodic(x, kernel)).max() <= 1e-10

    def test_parseval(self, rng):
        x = rng.standard_normal((9, 9))
        assert np.sum(np.abs(np.fft.fft2(x)) ** 2) == pytest.approx(81 * np.sum(x * x), rel=1e-12)


class TestNoise:
    def test_zero_noise_is_pure_blur(self, rng):
        x = rng.uniform(0, 255, (8, 8))
        k = make_gaussian_kernel(3, 1.0)
        np.testing.assert_array_equal(degrade(x, k, 0.0, 1), apply_psf_periodic(x, k))
        np.testing.assert_array_equal(degrade(x, identity_kernel(), 0.0, 1), x)

    def test_sample_std(self):
        f = np.zeros((256, 256))
        g = degrade(f, identity_kernel(), 15.0, 3)
        assert abs((g - f).std() - 15.0) <= 0.5
        assert abs((g - f).mean()) <= 0.2

    def test_deterministic(self):
        a = gaussian_noise(33, 2.0, 42)
        b = gaussian_noise(33, 2.0, 42)
        assert a.tobytes() == b.tobytes()
        assert not np.array_equal(a, gaussian_noise(33, 2.0, 43))

    def test_splitmix_reference_vector(self):
        # published first output of SplitMix64 seeded with 0
        assert int(_splitmix64(0, 1)[0]) == 0xE220A8397B1DCDAF

    @pytest.mark.parametrize("seed", [0, 1, 2**64 - 1, 123456789])
    def test_matches_pure_python_generator(self, seed):
        np.testing.assert_allclose(to_vector(gaussian_noise(3, 2.5, seed)), reference_noise(seed, 9, 2.5), rtol=1e-15, atol=0)

    def test_odd_count_prefix(self):
        # an odd sample count uses the same stream prefix as the next even one
        v3 = to_vector(gaussian_noise(3, 1.0, 5))
        v4 = to_vector(gaussian_noise(4, 1.0, 5))
        np.testing.assert_array_equal(v3, v4[:9])


def reference_noise(seed, count, std):
    mask = (1 << 64) - 1
    state = seed & mask
    out = []
    while len(out) < count:
        u = []
        for _ in range(2):
            state = (state + 0x9E3779B97F4A7C15) & mask
            z = state
            z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & mask
            z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & mask
            u.append(z ^ (z >> 31))
        u1 = ((u[0] >> 11) + 1) * 2.0**-53
        u2 = (u[1] >> 11) * 2.0**-53
        r = math.sqrt(-2.0 * math.log(u1))
        out += [r * math.cos(2 * math.pi * u2), r * math.sin(2 * math.pi * u2)]
    return [std * v for v in out[:count]]


@settings(max_examples=25)
@given(arrays(np.float64, (6, 6), elements=st.floats(-100, 100)), st.integers(0, 2**63))
def test_degrade_stays_finite(x, seed):
    g = degrade(x, make_average_kernel(3), 1.0, seed)
    assert np.all(np.isfinite(g))
