"""Tests for the auto-encoding network assembly.

Every arrow of the shape chain is asserted individually, parameter counts
are pinned for both axis modes, and the analytic end-to-end gradient is
spot-checked against finite differences (the full parameter sweep runs in
the acceptance suite).
"""

import numpy as np
import pytest

from helpers import dcan_loss_and_branches, rel_err

from vibanom import dcan, nn
from vibanom.errors import ConfigurationError, DimensionError


def tiny_config() -> dcan.DcanConfig:
    # Same topology as the full model, shrunk for fast exact gradient work.
    return dcan.DcanConfig(
        axes=3,
        frame_len=64,
        conv_specs=(
            dcan.ConvSpec(1, 4, (3, 8), (1, 2)),
            dcan.ConvSpec(4, 8, (1, 5), (1, 2)),
            dcan.ConvSpec(8, 8, (1, 3), (1, 1)),
        ),
        fc_widths=(20, 20, 20, 20),
    )


class TestShapeChain:
    def test_every_encoder_arrow(self):
        model = dcan.build(dcan.DcanConfig(axes=3), seed=0)
        x = np.random.default_rng(1).standard_normal((2, 1, 3, 4096)).astype(np.float32)

        h1 = nn.conv2d_forward(x, model.conv1)
        assert h1.shape == (2, 8, 1, 253)
        h2 = nn.conv2d_forward(nn.leaky_relu(h1), model.conv2)
        assert h2.shape == (2, 16, 1, 61)
        h3 = nn.conv2d_forward(nn.leaky_relu(h2), model.conv3)
        assert h3.shape == (2, 16, 1, 57)
        assert h3.reshape(2, -1).shape == (2, 912)

    def test_every_decoder_arrow(self):
        model = dcan.build(dcan.DcanConfig(axes=3), seed=0)
        z = np.random.default_rng(2).standard_normal((2, 16, 1, 57)).astype(np.float32)

        d1 = nn.conv_transpose2d_forward(z, model.deconv1)
        assert d1.shape == (2, 16, 1, 61)
        d2 = nn.conv_transpose2d_forward(nn.leaky_relu(d1), model.deconv2)
        assert d2.shape == (2, 8, 1, 253)
        d3 = nn.conv_transpose2d_forward(nn.leaky_relu(d2), model.deconv3)
        assert d3.shape == (2, 1, 3, 4096)

    def test_fc_widths(self):
        model = dcan.build(dcan.DcanConfig(axes=3), seed=0)
        widths = [(l.in_features, l.out_features) for l in model.fc_layers]
        assert widths == [(912, 200), (200, 200), (200, 200), (200, 200), (200, 912)]

    def test_encode_width_and_reconstruction_shape(self):
        model = dcan.build(dcan.DcanConfig(axes=3), seed=0)
        x = np.random.default_rng(3).standard_normal((4, 1, 3, 4096)).astype(np.float32)
        assert dcan.encode(model, x).shape == (4, 912)
        assert dcan.reconstruct(model, x).shape == x.shape

    def test_single_axis_mode(self):
        model = dcan.build(dcan.DcanConfig(axes=1), seed=0)
        x = np.random.default_rng(4).standard_normal((2, 1, 1, 4096)).astype(np.float32)
        assert dcan.encode(model, x).shape == (2, 912)
        assert dcan.reconstruct(model, x).shape == (2, 1, 1, 4096)


class TestParameters:
    def test_parameter_count_three_axes(self):
        model = dcan.build(dcan.DcanConfig(axes=3), seed=0)
        assert dcan.parameter_count(model) == 495537

    def test_parameter_count_one_axis(self):
        model = dcan.build(dcan.DcanConfig(axes=1), seed=0)
        assert dcan.parameter_count(model) == 493489

    def test_named_parameters_are_live_references(self):
        model = dcan.build(tiny_config(), seed=0)
        params = model.named_parameters()
        assert len(params) == 22
        params["conv1.weight"][...] = 0
        assert np.all(model.conv1.weight == 0)

    def test_build_is_reproducible(self):
        a = dcan.build(tiny_config(), seed=11)
        b = dcan.build(tiny_config(), seed=11)
        c = dcan.build(tiny_config(), seed=12)
        for k, v in a.named_parameters().items():
            assert np.array_equal(v, b.named_parameters()[k])
        assert any(
            not np.array_equal(v, c.named_parameters()[k])
            for k, v in a.named_parameters().items()
        )

    def test_unsupported_axis_count(self):
        with pytest.raises(ConfigurationError):
            dcan.build(dcan.DcanConfig(axes=2), seed=0)


class TestForward:
    def test_reconstruct_is_deterministic(self):
        model = dcan.build(tiny_config(), seed=5)
        x = np.random.default_rng(6).standard_normal((3, 1, 3, 64)).astype(np.float32)
        assert np.array_equal(dcan.reconstruct(model, x), dcan.reconstruct(model, x))

    def test_encode_then_decode_equals_reconstruct(self):
        model = dcan.build(tiny_config(), seed=7)
        x = np.random.default_rng(8).standard_normal((2, 1, 3, 64)).astype(np.float32)
        assert np.array_equal(dcan.decode(model, dcan.encode(model, x)), dcan.reconstruct(model, x))

    def test_zero_input_zero_bias_gives_zero_features(self):
        model = dcan.build(tiny_config(), seed=9)
        for conv in model.conv_layers:
            conv.bias[...] = 0
        x = np.zeros((1, 1, 3, 64), dtype=np.float32)
        assert np.all(dcan.encode(model, x) == 0)

    def test_untrained_model_has_positive_error(self):
        model = dcan.build(tiny_config(), seed=10)
        x = np.random.default_rng(11).standard_normal((2, 1, 3, 64)).astype(np.float32)
        reports = dcan.reconstruction_report(x, dcan.reconstruct(model, x))
        assert all(r.total_mse > 0 for r in reports)

    def test_wrong_shape_raises(self):
        model = dcan.build(tiny_config(), seed=0)
        with pytest.raises(DimensionError):
            dcan.reconstruct(model, np.zeros((2, 1, 3, 65), dtype=np.float32))
        with pytest.raises(DimensionError):
            dcan.encode(model, np.zeros((2, 3, 64), dtype=np.float32))
        with pytest.raises(DimensionError):
            dcan.decode(model, np.zeros((2, 89), dtype=np.float32))


class TestReport:
    def test_identical_tensors_give_zeros(self):
        x = np.random.default_rng(0).standard_normal((2, 1, 3, 16))
        r = dcan.reconstruction_report(x, x)[0]
        assert r.per_axis_mse == (0.0, 0.0, 0.0)
        assert r.total_mse == 0.0

    def test_error_on_one_axis_only(self):
        x = np.zeros((1, 1, 3, 16))
        y = x.copy()
        y[0, 0, 0, :] = 1.0
        r = dcan.reconstruction_report(x, y)[0]
        assert r.per_axis_mse == pytest.approx((1.0, 0.0, 0.0))
        assert r.total_mse == pytest.approx(1.0 / 3.0)

    def test_single_axis_total_equals_axis(self):
        x = np.zeros((1, 1, 1, 8))
        y = np.ones((1, 1, 1, 8))
        r = dcan.reconstruction_report(x, y)[0]
        assert r.total_mse == r.per_axis_mse[0] == pytest.approx(1.0)

    def test_total_is_mean_of_axes(self):
        rng = np.random.default_rng(13)
        x = rng.standard_normal((4, 1, 3, 32))
        y = rng.standard_normal((4, 1, 3, 32))
        for r in dcan.reconstruction_report(x, y):
            assert r.total_mse == pytest.approx(np.mean(r.per_axis_mse))

    def test_one_report_per_frame(self):
        x = np.zeros((5, 1, 3, 8))
        assert len(dcan.reconstruction_report(x, x)) == 5

    def test_shape_mismatch_raises(self):
        with pytest.raises(DimensionError):
            dcan.reconstruction_report(np.zeros((1, 1, 3, 8)), np.zeros((1, 1, 3, 9)))


class TestGradients:
    def test_loss_matches_mse_of_reconstruction(self):
        model = dcan.build(tiny_config(), seed=20).astype(np.float64)
        x = np.random.default_rng(21).standard_normal((2, 1, 3, 64))
        loss, _ = dcan.loss_and_gradients(model, x)
        assert loss == pytest.approx(nn.mse(dcan.reconstruct(model, x), x), rel=1e-12)

    def test_sampled_coordinates_match_finite_differences(self):
        # Fast spot check on every layer; the acceptance suite sweeps all
        # parameters. Coordinates whose difference window crosses a LeakyReLU
        # kink or falls below central-difference resolution are skipped (the
        # estimate is not a valid oracle there).
        model = dcan.build(tiny_config(), seed=22).astype(np.float64)
        x = np.random.default_rng(23).standard_normal((2, 1, 3, 64))
        _, grads = dcan.loss_and_gradients(model, x)
        _, base_branches = dcan_loss_and_branches(model, x)
        params = model.named_parameters()
        rng = np.random.default_rng(24)
        eps = 1e-5
        checked = 0
        for name, p in params.items():
            flat = p.ravel()
            for idx in rng.choice(flat.size, size=min(3, flat.size), replace=False):
                orig = flat[idx]
                flat[idx] = orig + eps
                hi, hi_branches = dcan_loss_and_branches(model, x)
                flat[idx] = orig - eps
                lo, lo_branches = dcan_loss_and_branches(model, x)
                flat[idx] = orig
                if not (
                    np.array_equal(hi_branches, base_branches)
                    and np.array_equal(lo_branches, base_branches)
                ):
                    continue
                fd = (hi - lo) / (2 * eps)
                analytic = grads[name].ravel()[idx]
                denom = max(abs(fd), abs(analytic))
                if denom < 1e-6:
                    continue
                assert abs(fd - analytic) / denom <= 1e-4, f"{name}[{idx}]"
                checked += 1
        # Tiny true gradients below difference resolution are common in the
        # attenuated decoder tail; the full-parameter sweep with a norm
        # metric runs in the acceptance suite. Here just require that a
        # healthy number of coordinates was actually verified.
        assert checked >= 20

    def test_gradient_keys_match_parameters(self):
        model = dcan.build(tiny_config(), seed=25).astype(np.float64)
        x = np.random.default_rng(26).standard_normal((1, 1, 3, 64))
        _, grads = dcan.loss_and_gradients(model, x)
        params = model.named_parameters()
        assert set(grads) == set(params)
        for k in params:
            assert grads[k].shape == params[k].shape
