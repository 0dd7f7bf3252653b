import numpy as np
import pytest

from radarpose.fft import ComplexTensor, fft1d, fftshift, ifft1d

from oracles import manual_shift, naive_dft


def test_impulse_gives_flat_spectrum():
    out = fft1d(ComplexTensor([1, 0, 0, 0]), axis=0)
    np.testing.assert_allclose(out.data, [1, 1, 1, 1], atol=1e-15)


def test_dc_gives_single_bin():
    out = fft1d(ComplexTensor([1, 1, 1, 1]), axis=0)
    np.testing.assert_allclose(out.data, [4, 0, 0, 0], atol=1e-14)


def test_matches_naive_dft_oracle(rng):
    x = rng.normal(size=16) + 1j * rng.normal(size=16)
    got = fft1d(ComplexTensor(x), axis=0).data
    assert np.abs(got - naive_dft(x, 0)).max() < 1e-10


def test_applies_along_requested_axis_only(rng):
    x = rng.normal(size=(4, 8, 2)) + 1j * rng.normal(size=(4, 8, 2))
    got = fft1d(ComplexTensor(x), axis=1).data
    assert np.abs(got - naive_dft(x, 1)).max() < 1e-10


def test_non_power_of_two_rejected():
    with pytest.raises(ValueError, match="power of two"):
        fft1d(ComplexTensor(np.zeros(12)), axis=0)


def test_axis_bounds_checked():
    with pytest.raises(ValueError, match="axis"):
        fft1d(ComplexTensor(np.zeros(8)), axis=3)


def test_inverse_roundtrip(rng):
    x = rng.normal(size=(8, 16)) + 1j * rng.normal(size=(8, 16))
    back = ifft1d(fft1d(ComplexTensor(x), axis=1), axis=1).data
    assert np.abs(back - x).max() < 1e-10


class TestFftshift:
    def test_definition(self):
        out = fftshift(ComplexTensor([0, 1, 2, 3]), axis=0)
        np.testing.assert_array_equal(out.data, [2, 3, 0, 1])

    def test_even_length_involution(self, rng):
        x = ComplexTensor(rng.normal(size=8) + 1j * rng.normal(size=8))
        twice = fftshift(fftshift(x, 0), 0)
        np.testing.assert_array_equal(twice.data, x.data)

    def test_flat_spectrum_invariant(self):
        spec = fft1d(ComplexTensor([1, 0, 0, 0]), axis=0)
        np.testing.assert_allclose(fftshift(spec, 0).data, [1, 1, 1, 1], atol=1e-15)

    def test_matches_manual_reindexing(self, rng):
        x = rng.normal(size=(4, 8))
        got = fftshift(ComplexTensor(x), axis=1).data
        np.testing.assert_array_equal(got, manual_shift(x.astype(complex), 1))

    def test_zero_frequency_moves_to_center(self, rng):
        x = np.zeros(16, dtype=complex)
        x[0] = 7.0  # spectrum with all energy at bin 0
        out = fftshift(ComplexTensor(x), axis=0)
        assert out.data[8] == 7.0
