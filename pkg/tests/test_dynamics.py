import numpy as np
import pytest

from varxg import (
    GeneratorSpec,
    SimulationDivergedError,
    companion_matrix,
    impulse_response,
    simulate,
    spectral_radius,
)

from oracles import companion_char_poly_radius


def stable_system(seed=0, d_y=2, d_x=1, n_a=2, n_b=3, scale=0.35):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((n_a, d_y, d_y)) * scale / np.sqrt(n_a * d_y)
    b = rng.standard_normal((n_b, d_y, d_x))
    return a, b


class TestSimulate:
    def test_pure_noise(self):
        spec = GeneratorSpec(a=np.zeros((1, 2, 2)), noise_std=1.0, t_samples=100, seed=5)
        y = simulate(spec)
        rng = np.random.default_rng(5)
        assert np.array_equal(y, rng.standard_normal((100, 2)))

    def test_geometric_decay(self):
        spec = GeneratorSpec(
            a=np.array([[[0.5]]]),
            b=np.array([[[1.0]]]),
            noise_std=0.0,
            t_samples=6,
            seed=0,
        )
        x = np.zeros((6, 1))
        x[0, 0] = 1.0
        y = simulate(spec, x)
        assert np.allclose(y[:, 0], [1.0, 0.5, 0.25, 0.125, 0.0625, 0.03125])

    def test_deterministic_given_seed(self):
        a, b = stable_system(3)
        x = np.random.default_rng(8).standard_normal((500, 1))
        spec = GeneratorSpec(a=a, b=b, noise_std=0.7, t_samples=500, seed=99)
        y1 = simulate(spec, x)
        y2 = simulate(spec, x)
        assert np.array_equal(y1, y2)

    def test_equation_vs_output_error_differ(self):
        a, b = stable_system(4)
        x = np.random.default_rng(1).standard_normal((300, 1))
        eq = simulate(GeneratorSpec(a=a, b=b, noise_std=1.0, t_samples=300, seed=2), x)
        oe = simulate(
            GeneratorSpec(a=a, b=b, noise_std=1.0, kind="output-error", t_samples=300, seed=2), x
        )
        assert not np.allclose(eq, oe)

    def test_output_error_is_noiseless_recursion_plus_noise(self):
        a, b = stable_system(6)
        x = np.random.default_rng(2).standard_normal((200, 1))
        z = simulate(GeneratorSpec(a=a, b=b, noise_std=0.0, t_samples=200, seed=3), x)
        y = simulate(
            GeneratorSpec(a=a, b=b, noise_std=1.0, kind="output-error", t_samples=200, seed=3), x
        )
        noise = y - z
        rng = np.random.default_rng(3)
        assert np.allclose(noise, rng.standard_normal((200, 2)), atol=1e-12)

    def test_divergence_detected(self):
        spec = GeneratorSpec(a=np.array([[[1.3]]]), noise_std=1.0, t_samples=300, seed=0)
        with pytest.raises(SimulationDivergedError) as err:
            simulate(spec)
        assert err.value.t is not None and 0 < err.value.t < 300

    def test_burn_in_discards_transient(self):
        a, b = stable_system(7)
        x = np.random.default_rng(4).standard_normal((400, 1))
        spec = GeneratorSpec(a=a, b=b, noise_std=0.5, t_samples=300, seed=11, burn_in=100)
        y = simulate(spec, x)
        assert y.shape == (300, 2)

    def test_x_required_iff_inputs(self):
        a, b = stable_system(1)
        with pytest.raises(ValueError, match="x is required"):
            simulate(GeneratorSpec(a=a, b=b, t_samples=10))
        with pytest.raises(ValueError, match="no inputs"):
            simulate(GeneratorSpec(a=a, t_samples=10), np.ones((10, 1)))


class TestImpulseResponse:
    def test_ma_only(self):
        b = np.random.default_rng(0).standard_normal((3, 2, 2))
        resp = impulse_response(np.zeros((1, 2, 2)), b, horizon=6)
        assert np.allclose(resp.h[:3], b)
        assert np.allclose(resp.h[3:], 0.0)

    def test_scalar_geometric(self):
        resp = impulse_response(np.array([[[0.6]]]), np.array([[[2.0]]]), horizon=8)
        assert np.allclose(resp.h[:, 0, 0], 2.0 * 0.6 ** np.arange(8))

    def test_matches_fourier_oracle(self):
        a, b = stable_system(12, d_y=3, d_x=2, n_a=2, n_b=4, scale=0.4)
        horizon = 64
        resp = impulse_response(a, b, horizon)

        # frequency-domain (I - A(z))^-1 B(z) on a long DFT grid
        n_fft = 4096
        freqs = np.exp(-2j * np.pi * np.arange(n_fft) / n_fft)
        h_time = np.zeros((n_fft, 3, 2), dtype=complex)
        for idx, z in enumerate(freqs):
            a_z = sum(a[l] * z ** (l + 1) for l in range(a.shape[0]))
            b_z = sum(b[l] * z**l for l in range(b.shape[0]))
            h_time[idx] = np.linalg.solve(np.eye(3) - a_z, b_z)
        h_ifft = np.fft.ifft(h_time, axis=0).real
        assert np.abs(resp.h - h_ifft[:horizon]).max() < 1e-6

    def test_decay_for_stable_system(self):
        a, b = stable_system(21, scale=0.5)
        rho = spectral_radius(a)
        assert rho < 1
        horizon = int(10 * a.shape[0] / (1 - rho)) + b.shape[0]
        resp = impulse_response(a, b, horizon)
        peak = np.abs(resp.h).max()
        tail = np.abs(resp.h[int(0.9 * horizon) :]).max()
        assert tail < 1e-3 * peak

    def test_horizon_shorter_than_filter_rejected(self):
        with pytest.raises(ValueError, match="horizon"):
            impulse_response(np.zeros((1, 1, 1)), np.zeros((5, 1, 1)), horizon=3)


class TestSpectralRadius:
    def test_scalar(self):
        assert spectral_radius(np.array([[[0.5]]])) == pytest.approx(0.5, abs=1e-8)

    def test_zero(self):
        assert spectral_radius(np.zeros((2, 3, 3))) == 0.0

    def test_constructed_radius(self):
        # scalar channels y_i(t) = p_i y_i(t-1) + q_i y_i(t-2) with known roots
        # channel roots: {0.9, -0.2} and {0.5, 0.3} -> radius 0.9
        a = np.zeros((2, 2, 2))
        a[0, 0, 0], a[1, 0, 0] = 0.9 + (-0.2), -(0.9 * -0.2)
        a[0, 1, 1], a[1, 1, 1] = 0.5 + 0.3, -(0.5 * 0.3)
        assert spectral_radius(a) == pytest.approx(0.9, abs=1e-6)

    def test_complex_dominant_pair(self):
        # rotation scaled by 0.8: eigenvalues 0.8 e^{+-i theta}
        theta = 0.7
        rot = 0.8 * np.array(
            [[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]]
        )
        assert spectral_radius(rot[None]) == pytest.approx(0.8, abs=1e-7)

    def test_matches_char_poly_oracle(self):
        rng = np.random.default_rng(31)
        for _ in range(8):
            a = rng.standard_normal((2, 3, 3)) * 0.3
            want = companion_char_poly_radius(a)
            assert spectral_radius(a) == pytest.approx(want, abs=1e-6)

    def test_companion_shape(self):
        comp = companion_matrix(np.zeros((3, 2, 2)))
        assert comp.shape == (6, 6)
        assert np.allclose(comp[2:, :4], np.eye(4))
