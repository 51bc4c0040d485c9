import dataclasses

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from starsrrr import SimulationConfig, generate, model_i, model_ii
from starsrrr.errors import DegenerateSignal, ValidationError
from starsrrr.simgen import ar1_sqrt, compute_snr, effective_rank

small = dict(n=30, p=12, q=10, r_x=6, r_star=3)


def explicit_snr(sim):
    x = sim.data.x
    proj = x @ np.linalg.pinv(x)
    d_sig = np.linalg.svd(x @ sim.true_coefficient, compute_uv=False)
    d_noise = np.linalg.svd(proj @ sim.noise, compute_uv=False)
    return d_sig, d_noise


class TestConfig:
    def test_models(self):
        a, b = model_i(), model_ii()
        assert (a.n, a.p, a.q, a.r_x, a.r_star) == (500, 25, 25, 15, 10)
        assert (b.n, b.p, b.q, b.r_x, b.r_star) == (80, 100, 100, 30, 8)

    @pytest.mark.parametrize(
        "kw",
        [
            {"r_x": 31},
            {"r_star": 7},
            {"rho": 1.0},
            {"rho": -0.1},
            {"s": 0.0},
            {"sigma": -1.0},
            {"n": 0},
        ],
    )
    def test_invalid(self, kw):
        with pytest.raises(ValidationError):
            SimulationConfig(**{**small, **kw})

    def test_dict_round_trip(self):
        cfg = model_ii(rho=0.9, s=32, seed=4)
        assert SimulationConfig.from_dict(cfg.to_dict()) == cfg
        with pytest.raises(ValidationError):
            SimulationConfig.from_dict({**cfg.to_dict(), "bogus": 1})


class TestGenerate:
    @pytest.mark.parametrize("rho", [0.0, 0.1, 0.5, 0.9])
    def test_gamma_root(self, rho):
        root = ar1_sqrt(25, rho)
        idx = np.arange(25)
        gam = rho ** np.abs(idx[:, None] - idx[None, :])
        np.testing.assert_allclose(root @ root, gam, atol=1e-10)
        np.testing.assert_array_equal(root, root.T)

    def test_rho_zero_identity(self):
        np.testing.assert_array_equal(ar1_sqrt(7, 0.0), np.eye(7))

    def test_structure(self):
        sim = generate(SimulationConfig(**small, rho=0.5, s=2.0, seed=3))
        assert np.linalg.matrix_rank(sim.data.x) == 6
        assert np.linalg.matrix_rank(sim.true_coefficient) == 3
        np.testing.assert_array_equal(sim.data.y, sim.data.x @ sim.true_coefficient + sim.noise)

    def test_bitwise_reproducible(self):
        cfg = model_ii(seed=9)
        a, b = generate(cfg), generate(cfg)
        np.testing.assert_array_equal(a.data.y, b.data.y)
        np.testing.assert_array_equal(a.data.x, b.data.x)
        assert a.snr == b.snr

    def test_seed_changes_draw(self):
        a = generate(model_i(seed=1))
        b = generate(model_i(seed=2))
        assert not np.array_equal(a.data.x, b.data.x)

    def test_signal_scales_with_s(self):
        a = generate(SimulationConfig(**small, s=1.0, seed=5))
        b = generate(SimulationConfig(**small, s=3.0, seed=5))
        np.testing.assert_allclose(b.true_coefficient, 3.0 * a.true_coefficient)
        assert b.snr == pytest.approx(3.0 * a.snr, rel=1e-10)


class TestSnr:
    def test_matches_explicit_projector(self):
        sim = generate(SimulationConfig(**small, s=50.0, seed=1))
        d_sig, d_noise = explicit_snr(sim)
        assert sim.snr == pytest.approx(d_sig[2] / d_noise[0], rel=1e-8)

    def test_homogeneity(self):
        sim = generate(SimulationConfig(**small, s=50.0, seed=2))
        noisy = dataclasses.replace(sim, noise=4.0 * sim.noise)
        strong = dataclasses.replace(sim, true_coefficient=2.5 * sim.true_coefficient)
        assert compute_snr(noisy) == pytest.approx(sim.snr / 4.0, rel=1e-10)
        assert compute_snr(strong) == pytest.approx(sim.snr * 2.5, rel=1e-10)

    def test_degenerate_signal(self):
        sim = generate(SimulationConfig(**small, seed=2))
        with pytest.raises(DegenerateSignal):
            compute_snr(dataclasses.replace(sim, true_coefficient=np.zeros_like(sim.true_coefficient)))

    def test_model_i_calibration(self):
        snrs = [generate(model_i(0.1, 30.0, seed=77, stream_id=i)).snr for i in range(100)]
        assert abs(np.mean(snrs) - 1.07) <= 0.10

    def test_model_ii_calibration(self):
        snrs = [generate(model_ii(0.5, 12.0, seed=77, stream_id=i)).snr for i in range(100)]
        assert abs(np.mean(snrs) - 1.68) <= 0.15


class TestEffectiveRank:
    def test_zero_noise(self):
        sim = generate(SimulationConfig(**small, sigma=0.0, seed=3))
        assert effective_rank(sim) == sim.effective_rank == 3

    def test_high_snr(self):
        sim = generate(SimulationConfig(**small, s=500.0, seed=3))
        assert sim.snr > 1 and sim.effective_rank == 3

    def test_low_snr_loop_oracle(self):
        sim = generate(SimulationConfig(**small, s=0.5, seed=4))
        assert sim.snr < 1
        d_sig, d_noise = explicit_snr(sim)
        count = 0
        for v in d_sig:
            if v > d_noise[0]:
                count += 1
        assert sim.effective_rank == count

    @given(seed=st.integers(0, 10**6), s=st.floats(0.01, 1000.0))
    def test_bounded_by_true_rank(self, seed, s):
        sim = generate(SimulationConfig(**small, s=s, seed=seed))
        assert 0 <= sim.effective_rank <= 3
        if sim.snr > 1:
            assert sim.effective_rank == 3
