"""Unit tests for the vanilla VAE, the transparent VAE and RGB smoothing."""

import numpy as np
import pytest

from src.autoenc.exceptions import AutoencError, LatentShapeError
from src.autoenc.losses import loss_identity, loss_recon, loss_tvae, vae_kl
from src.autoenc.models import TVAEDecoder, TVAEEncoder, VanillaVAE
from src.autoenc.service import (
    FrameBank,
    TransparentAutoencoder,
    measure_latent_scale,
    to_nchw,
    to_nhwc,
)
from src.autoenc.smoothing import smooth_rgb
from src.exceptions import ConfigError
from src.numcore import Tensor, no_grad, wide_precision
from src.numcore.gradcheck import grad_check

LATENT = 2


@pytest.fixture
def vae(rng):
    """Tiny vanilla VAE."""
    return VanillaVAE(LATENT, (4, 8, 8), rng)


@pytest.fixture
def tvae(rng):
    """Tiny TVAE encoder/decoder pair."""
    return TVAEEncoder(LATENT, (4, 8, 8, 8), rng), TVAEDecoder(LATENT, (4, 8, 8), rng)


class TestVanillaVAE:
    """Unit tests for VanillaVAE."""

    def test_latent_grid_is_eighth_resolution(self, vae, rng):
        """16x16 images should map to a 2x2 latent grid."""
        mean, logvar = vae.encode(Tensor(rng.random((3, 3, 16, 16))))
        assert mean.shape == (3, LATENT, 2, 2)
        assert logvar.shape == mean.shape

    def test_rejects_indivisible_geometry(self, vae):
        """Sizes not divisible by 8 should raise LatentShapeError."""
        with pytest.raises(LatentShapeError):
            vae.encode(Tensor(np.zeros((1, 3, 12, 12))))

    def test_decode_range_and_shape(self, vae, rng):
        """Decoded RGB should be [B, 3, 8h, 8w] in [0, 1]."""
        out = vae.decode(Tensor(rng.standard_normal((2, LATENT, 2, 2)))).data
        assert out.shape == (2, 3, 16, 16)
        assert out.min() >= 0.0 and out.max() <= 1.0

    def test_decode_wrong_channels(self, vae):
        """A latent with the wrong channel count should be rejected."""
        with pytest.raises(LatentShapeError):
            vae.decode(Tensor(np.zeros((1, LATENT + 1, 2, 2))))

    def test_zero_variance_sample_is_mean(self, rng):
        """A log-variance of -inf should return the mean exactly."""
        mean = Tensor(rng.standard_normal((1, LATENT, 2, 2)))
        logvar = Tensor(np.full(mean.shape, -np.inf))
        np.testing.assert_array_equal(VanillaVAE.sample(mean, logvar, rng).data, mean.data)

    def test_kl_of_standard_normal_is_zero(self):
        """KL should vanish for a standard-normal posterior."""
        zeros = Tensor(np.zeros((2, LATENT, 2, 2)))
        assert vae_kl(zeros, zeros).item() == pytest.approx(0.0)


class TestTransparentVAE:
    """Unit tests for the TVAE encoder, decoder and objectives."""

    def test_untrained_encoder_leaves_latent_unchanged(self, tvae, rng):
        """The zero-initialised projection should give z_alpha == 0."""
        encoder, _ = tvae
        z_alpha = encoder(Tensor(rng.random((2, 3, 16, 16))), Tensor(rng.random((2, 1, 16, 16))))
        assert z_alpha.shape == (2, LATENT, 2, 2)
        np.testing.assert_array_equal(z_alpha.data, 0.0)

    def test_encoder_alpha_shape_mismatch(self, tvae):
        """An alpha plane of the wrong size should be rejected."""
        encoder, _ = tvae
        with pytest.raises(LatentShapeError):
            encoder(Tensor(np.zeros((1, 3, 16, 16))), Tensor(np.zeros((1, 1, 8, 8))))

    def test_decoder_outputs(self, tvae, rng):
        """The decoder should return RGB and alpha planes in [0, 1]."""
        _, decoder = tvae
        rgb, alpha = decoder(Tensor(rng.random((2, 3, 16, 16))), Tensor(rng.random((2, LATENT, 2, 2))))
        assert rgb.shape == (2, 3, 16, 16)
        assert alpha.shape == (2, 1, 16, 16)
        assert 0.0 <= alpha.data.min() and alpha.data.max() <= 1.0

    def test_decoder_latent_mismatch(self, tvae):
        """A latent grid that does not match the image should be rejected."""
        _, decoder = tvae
        with pytest.raises(LatentShapeError):
            decoder(Tensor(np.zeros((1, 3, 16, 16))), Tensor(np.zeros((1, LATENT, 4, 4))))

    def test_identity_loss_does_not_touch_frozen_vae(self, vae, rng):
        """Gradient should reach z_alpha only."""
        vae.freeze()
        images = Tensor(rng.random((2, 3, 16, 16)))
        z_alpha = Tensor(rng.standard_normal((2, LATENT, 2, 2)) * 0.1, requires_grad=True)
        loss_identity(images, z_alpha, vae).backward()
        assert z_alpha.grad is not None and np.any(z_alpha.grad != 0)
        assert all(p.grad is None for p in vae.parameters())

    def test_identity_loss_gradient(self, rng):
        """Identity loss gradients w.r.t. z_alpha should pass the finite-difference check."""
        with wide_precision():
            vae = VanillaVAE(LATENT, (2, 2, 2), rng).to_precision().freeze()
            images = Tensor(rng.random((1, 3, 8, 8)))
            z_alpha = Tensor(rng.standard_normal((1, LATENT, 1, 1)) * 0.1)
            err = grad_check(lambda za: loss_identity(images, za, vae), [z_alpha])
        assert err < 1e-4

    def test_recon_loss_gradient(self, rng):
        """Reconstruction loss gradients should pass the finite-difference check."""
        with wide_precision():
            rgb_target = Tensor(rng.random((2, 3, 4, 4)))
            alpha_target = Tensor(rng.random((2, 1, 4, 4)))
            rgb_pred = Tensor(rng.random((2, 3, 4, 4)))
            alpha_pred = Tensor(rng.random((2, 1, 4, 4)))
            err = grad_check(
                lambda rgb, alpha: loss_recon(rgb_target, alpha_target, rgb, alpha),
                [rgb_pred, alpha_pred],
            )
        assert err < 1e-4

    def test_tvae_loss_gradient(self, rng):
        """The combined loss should pass the check through decoder and encoder paths."""
        with wide_precision():
            vae = VanillaVAE(LATENT, (2, 2, 2), rng).to_precision().freeze()
            images = Tensor(rng.random((1, 3, 8, 8)))
            alpha = Tensor(rng.random((1, 1, 8, 8)))
            rgb_pred = Tensor(rng.random((1, 3, 8, 8)))
            alpha_pred = Tensor(rng.random((1, 1, 8, 8)))
            z_alpha = Tensor(rng.standard_normal((1, LATENT, 1, 1)) * 0.1)

            def f(rgb, a, za):
                recon = loss_recon(images, alpha, rgb, a)
                return loss_tvae(recon, loss_identity(images, za, vae), 0.7)

            err = grad_check(f, [rgb_pred, alpha_pred, z_alpha])
        assert err < 1e-4

    def test_vae_kl_gradient(self, rng):
        """KL gradients w.r.t. mean and log-variance should pass the check."""
        with wide_precision():
            mean = Tensor(rng.standard_normal((2, LATENT, 2, 2)))
            logvar = Tensor(rng.standard_normal((2, LATENT, 2, 2)) * 0.5)
            err = grad_check(vae_kl, [mean, logvar])
        assert err < 1e-4

    def test_recon_loss_zero_for_exact_match(self, rng):
        """Identical targets and predictions should give zero reconstruction loss."""
        rgb = Tensor(rng.random((2, 3, 8, 8)))
        alpha = Tensor(rng.random((2, 1, 8, 8)))
        assert loss_recon(rgb, alpha, rgb, alpha).item() == 0.0

    def test_negative_lambda_rejected(self):
        """lambda < 0 should raise ConfigError."""
        with pytest.raises(ConfigError):
            loss_tvae(Tensor(1.0), Tensor(1.0), -0.5)

    def test_zero_lambda_drops_identity(self):
        """lambda = 0 should return the reconstruction term alone."""
        assert loss_tvae(Tensor(2.0), Tensor(100.0), 0.0).item() == 2.0

    def test_lambda_weights_identity(self):
        """The identity term should be scaled by lambda."""
        assert loss_tvae(Tensor(2.0), Tensor(3.0), 0.5).item() == pytest.approx(3.5)


class TestTransparentAutoencoder:
    """Unit tests for the frozen inference wrapper."""

    @pytest.fixture
    def autoencoder(self, vae, tvae):
        encoder, decoder = tvae
        return TransparentAutoencoder(vae, encoder, decoder, latent_scale=2.0)

    def test_wrapper_freezes_everything(self, autoencoder):
        """Every wrapped module should be frozen."""
        for module in (autoencoder.vae, autoencoder.encoder, autoencoder.decoder):
            assert module.trainable_parameters() == {}

    def test_encode_decode_shapes(self, autoencoder, micro_frames):
        """Frames should round-trip through latents with their shape intact."""
        frames = micro_frames.reshape(-1, 16, 16, 4)
        latents = autoencoder.encode(frames)
        assert latents.z_adj.shape == (len(frames), LATENT, 2, 2)
        np.testing.assert_array_equal(latents.z_adj, latents.z + latents.z_alpha)
        decoded = autoencoder.decode(latents.z_adj)
        assert decoded.shape == frames.shape

    def test_decode_without_decoder(self, vae):
        """Decoding RGBA without a trained decoder should fail clearly."""
        with pytest.raises(AutoencError):
            TransparentAutoencoder(vae, None, None).decode(np.zeros((1, LATENT, 2, 2), np.float32))

    def test_missing_encoder_gives_zero_perturbation(self, vae, micro_frames):
        """Without a TVAE encoder the adjusted latent should equal the VAE latent."""
        latents = TransparentAutoencoder(vae, None, None).encode(micro_frames[0])
        np.testing.assert_array_equal(latents.z_alpha, 0.0)

    def test_zero_perturbation_rgb_matches_frozen_vae(self, autoencoder, vae, micro_frames):
        """An untrained encoder should leave the RGB decode bit-identical to the VAE's."""
        latents = autoencoder.encode(micro_frames.reshape(-1, 16, 16, 4))
        np.testing.assert_array_equal(latents.z_alpha, 0.0)
        np.testing.assert_array_equal(latents.z_adj, latents.z)
        with no_grad():
            reference = vae.decode(Tensor(latents.z)).data
        np.testing.assert_array_equal(autoencoder.decode_rgb(latents.z_adj), reference)

    def test_latent_scale_positive(self, vae, micro_frames):
        """The measured latent scale should be a positive finite number."""
        scale = measure_latent_scale(vae, FrameBank(micro_frames))
        assert np.isfinite(scale) and scale > 0

    def test_layout_helpers_invert(self, rng):
        """to_nchw and to_nhwc should be inverses."""
        x = rng.random((2, 5, 6, 4))
        np.testing.assert_array_equal(to_nhwc(to_nchw(x)), x)


class TestSmoothRGB:
    """Unit tests for inpainting colour under transparent pixels."""

    @pytest.fixture
    def half_opaque(self, rng):
        rgb = rng.random((8, 8, 3)).astype(np.float32)
        alpha = np.zeros((8, 8), dtype=np.float32)
        alpha[:, :4] = 1.0
        return rgb, alpha

    def test_opaque_pixels_unchanged(self, half_opaque):
        """Pixels with alpha == 1 should be copied through."""
        rgb, alpha = half_opaque
        out = smooth_rgb(rgb, alpha)
        np.testing.assert_array_equal(out[:, :4], rgb[:, :4])

    def test_red_square_ring_turns_red(self, rng):
        """Transparent pixels bordering an opaque red square should converge to red."""
        rgb = rng.random((16, 16, 3)).astype(np.float32)
        rgb[5:11, 5:11] = (1.0, 0.0, 0.0)
        alpha = np.zeros((16, 16), dtype=np.float32)
        alpha[5:11, 5:11] = 1.0
        out = smooth_rgb(rgb, alpha)
        ring = np.zeros((16, 16), dtype=bool)
        ring[4:12, 4:12] = True
        ring[5:11, 5:11] = False
        deviation = np.abs(out[ring] - np.array([1.0, 0.0, 0.0]))
        assert deviation.max() <= 0.05

    def test_fully_transparent_becomes_grey(self):
        """An image with no opaque pixel should become uniform 0.5."""
        out = smooth_rgb(np.ones((4, 4, 3), np.float32), np.zeros((4, 4), np.float32))
        np.testing.assert_allclose(out, 0.5)

    def test_hidden_colour_is_ignored(self, half_opaque):
        """Colour under transparent pixels should not influence the result."""
        rgb, alpha = half_opaque
        scrambled = rgb.copy()
        scrambled[:, 4:] = 0.0
        np.testing.assert_array_equal(smooth_rgb(rgb, alpha), smooth_rgb(scrambled, alpha))

    def test_idempotent(self, half_opaque):
        """Smoothing twice should equal smoothing once."""
        rgb, alpha = half_opaque
        once = smooth_rgb(rgb, alpha)
        np.testing.assert_array_equal(smooth_rgb(once, alpha), once)

    def test_stack_shape_and_dtype(self, micro_frames):
        """Batched input should keep its leading axes and dtype."""
        out = smooth_rgb(micro_frames[..., :3], micro_frames[..., 3])
        assert out.shape == micro_frames[..., :3].shape
        assert out.dtype == micro_frames.dtype

    def test_fill_within_opaque_range(self, half_opaque):
        """Inpainted values should stay inside the range of the opaque colours."""
        rgb, alpha = half_opaque
        out = smooth_rgb(rgb, alpha)
        known = rgb[:, :4]
        assert out.min() >= known.min() - 1e-6
        assert out.max() <= known.max() + 1e-6
