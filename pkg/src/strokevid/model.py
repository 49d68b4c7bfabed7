"""The six networks and their forward contracts.

E1 encodes the input frame to a spatial latent state h; E2 encodes the
(full, instant) stroke raster pair to a motion code x_t on the same spatial
grid; P advances the latent state from (h0, h_t, x_t) with dense blocks;
G decodes a latent state back to a frame in [0,1]; D1 judges single frames
conditioned on the motion code and D2 judges consecutive-frame pairs. The
generator networks use group normalization on hidden layers (without it the
mostly-empty frames drive the decoder into a dead all-black constant); the
discriminators use spectral normalization only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

from .config import ModelConfig
from .errors import ConfigurationError, InputError
from .strokes import StrokeKeypoints, instant_stroke, rasterize_stroke

SN_EPS = 1e-12


@dataclass
class PowerIterationState:
    """Left singular vector estimate carried across forward passes."""

    u: torch.Tensor


def spectral_normalize(
    weight: torch.Tensor, state: PowerIterationState, update: bool = True
) -> torch.Tensor:
    """Divide `weight` by its top singular value, estimated by one power
    iteration on the (out_channels x rest) matricization.

    When `update` is false the stored vector is used as-is (inference mode).
    A zero matrix is returned unchanged.
    """
    w = weight.reshape(weight.shape[0], -1)
    with torch.no_grad():
        v = F.normalize(torch.mv(w.t(), state.u), dim=0, eps=SN_EPS)
        u = F.normalize(torch.mv(w, v), dim=0, eps=SN_EPS)
    sigma = torch.dot(u, torch.mv(w, v))
    if float(sigma.detach()) < SN_EPS:
        return weight
    if update:
        state.u.copy_(u)
    return weight / sigma


class SNConv2d(nn.Conv2d):
    """Conv2d whose weight is spectrally normalized at every forward pass.

    The power-iteration vector updates only in training mode, so a model in
    eval mode is safe for concurrent read-only inference.
    """

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        u = F.normalize(torch.randn(self.out_channels), dim=0, eps=SN_EPS)
        self.register_buffer("weight_u", u)

    def forward(self, x):
        state = PowerIterationState(self.weight_u)
        w = spectral_normalize(self.weight, state, update=self.training)
        return self._conv_forward(x, w, self.bias)


def _enc_widths(base: int, depth: int) -> list[int]:
    return [min(base * 2 ** i, base * 8) for i in range(depth)]


def _group_norm(channels: int) -> nn.GroupNorm:
    return nn.GroupNorm(math.gcd(8, channels), channels)


class FrameEncoder(nn.Module):
    """E1: strided conv stack, image -> latent feature map."""

    def __init__(self, cfg: ModelConfig):
        super().__init__()
        widths = _enc_widths(cfg.encoder_width, cfg.downsample_depth)
        layers = []
        in_ch = cfg.channels
        for i, w in enumerate(widths):
            layers.append(nn.Conv2d(in_ch, w, 4, stride=2, padding=1))
            if i > 0:
                layers.append(_group_norm(w))
            layers.append(nn.LeakyReLU(0.2))
            in_ch = w
        layers.append(nn.Conv2d(in_ch, cfg.latent_channels, 3, padding=1))
        self.net = nn.Sequential(*layers)

    def forward(self, x):
        return self.net(x)


class MotionEncoder(nn.Module):
    """E2: consumes [S || S_t] along channels, emits the motion code x_t."""

    def __init__(self, cfg: ModelConfig):
        super().__init__()
        widths = _enc_widths(cfg.encoder_width, cfg.downsample_depth)
        layers = []
        in_ch = 2
        for i, w in enumerate(widths):
            layers.append(nn.Conv2d(in_ch, w, 4, stride=2, padding=1))
            if i > 0:
                layers.append(_group_norm(w))
            layers.append(nn.LeakyReLU(0.2))
            in_ch = w
        layers.append(nn.Conv2d(in_ch, cfg.motion_channels, 3, padding=1))
        self.net = nn.Sequential(*layers)

    def forward(self, full_raster, instant_raster):
        return self.net(torch.cat([full_raster, instant_raster], dim=1))


class DenseBlock(nn.Module):
    def __init__(self, in_channels: int, growth: int, n_layers: int):
        super().__init__()
        self.convs = nn.ModuleList(
            nn.Conv2d(in_channels + i * growth, growth, 3, padding=1)
            for i in range(n_layers)
        )
        self.norms = nn.ModuleList(_group_norm(growth) for _ in range(n_layers))

    def forward(self, x):
        feats = [x]
        for conv, norm in zip(self.convs, self.norms):
            feats.append(F.leaky_relu(norm(conv(torch.cat(feats, dim=1))), 0.2))
        return torch.cat(feats, dim=1)


class Predictor(nn.Module):
    """P: advances the latent state from [h0 || h_t || x_t] via dense blocks."""

    def __init__(self, cfg: ModelConfig):
        super().__init__()
        c = cfg.latent_channels
        self.input_conv = nn.Conv2d(2 * c + cfg.motion_channels, c, 1)
        blocks, transitions = [], []
        for _ in range(cfg.dense_blocks):
            blocks.append(DenseBlock(c, cfg.dense_growth, cfg.dense_layers))
            transitions.append(
                nn.Conv2d(c + cfg.dense_layers * cfg.dense_growth, c, 1)
            )
        self.blocks = nn.ModuleList(blocks)
        self.transitions = nn.ModuleList(transitions)

    def forward(self, h0, h_t, x_t):
        z = F.leaky_relu(self.input_conv(torch.cat([h0, h_t, x_t], dim=1)), 0.2)
        for block, trans in zip(self.blocks, self.transitions):
            z = trans(block(z))
        return z


class FrameDecoder(nn.Module):
    """G: transposed-conv stack, latent feature map -> frame in [0,1]."""

    def __init__(self, cfg: ModelConfig):
        super().__init__()
        widths = list(reversed(_enc_widths(cfg.decoder_width, cfg.downsample_depth)))
        layers = [nn.Conv2d(cfg.latent_channels, widths[0], 3, padding=1)]
        in_ch = widths[0]
        for w in widths[1:] + [widths[-1]]:
            layers += [
                nn.ConvTranspose2d(in_ch, w, 4, stride=2, padding=1),
                _group_norm(w),
                nn.ReLU(),
            ]
            in_ch = w
        layers += [nn.Conv2d(in_ch, cfg.channels, 3, padding=1), nn.Sigmoid()]
        self.net = nn.Sequential(*layers)

    def forward(self, h):
        return self.net(h)


class FrameDiscriminator(nn.Module):
    """D1: real-vs-fake on single frames, conditioned on the motion code,
    which is concatenated at the latent-resolution stage."""

    def __init__(self, cfg: ModelConfig):
        super().__init__()
        widths = _enc_widths(cfg.disc_width, cfg.downsample_depth)
        layers = []
        in_ch = cfg.channels
        for w in widths:
            layers += [SNConv2d(in_ch, w, 4, stride=2, padding=1), nn.LeakyReLU(0.2)]
            in_ch = w
        self.frame_net = nn.Sequential(*layers)
        head = []
        in_ch = in_ch + cfg.motion_channels
        for _ in range(cfg.disc_extra_layers):
            head += [SNConv2d(in_ch, widths[-1], 3, padding=1), nn.LeakyReLU(0.2)]
            in_ch = widths[-1]
        head.append(SNConv2d(in_ch, 1, 1))
        self.head = nn.Sequential(*head)

    def forward(self, frame, motion):
        feat = self.frame_net(frame)
        if feat.shape[-2:] != motion.shape[-2:]:
            raise ConfigurationError(
                f"motion grid {tuple(motion.shape[-2:])} does not match "
                f"discriminator grid {tuple(feat.shape[-2:])}"
            )
        logits = self.head(torch.cat([feat, motion], dim=1))
        return torch.sigmoid(logits.mean(dim=(1, 2, 3)))


class PairDiscriminator(nn.Module):
    """D2: real-vs-fake on channel-concatenated consecutive frame pairs."""

    def __init__(self, cfg: ModelConfig):
        super().__init__()
        widths = _enc_widths(cfg.disc_width, cfg.downsample_depth)
        layers = []
        in_ch = 2 * cfg.channels
        for w in widths:
            layers += [SNConv2d(in_ch, w, 4, stride=2, padding=1), nn.LeakyReLU(0.2)]
            in_ch = w
        for _ in range(cfg.disc_extra_layers):
            layers += [SNConv2d(in_ch, widths[-1], 3, padding=1), nn.LeakyReLU(0.2)]
            in_ch = widths[-1]
        layers.append(SNConv2d(in_ch, 1, 1))
        self.net = nn.Sequential(*layers)

    def forward(self, frame_t, frame_t1):
        logits = self.net(torch.cat([frame_t, frame_t1], dim=1))
        return torch.sigmoid(logits.mean(dim=(1, 2, 3)))


def _check_finite(name: str, x: torch.Tensor) -> None:
    if not torch.isfinite(x).all():
        raise InputError(f"{name} contains non-finite values")


class StrokeVideoModel(nn.Module):
    """All six networks plus the recursive rollout.

    Trainable parameters split into the generator group (E1, E2, P, G) and
    the discriminator group (D1, D2); the split is disjoint and exhaustive.
    """

    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = config
        self.e1 = FrameEncoder(config)
        self.e2 = MotionEncoder(config)
        self.p = Predictor(config)
        self.g = FrameDecoder(config)
        self.d1 = FrameDiscriminator(config)
        self.d2 = PairDiscriminator(config)

    # -- parameter groups ------------------------------------------------

    def generator_modules(self):
        return {"e1": self.e1, "e2": self.e2, "p": self.p, "g": self.g}

    def discriminator_modules(self):
        return {"d1": self.d1, "d2": self.d2}

    def generator_parameters(self):
        for m in self.generator_modules().values():
            yield from m.parameters()

    def discriminator_parameters(self):
        for m in self.discriminator_modules().values():
            yield from m.parameters()

    # -- shape checks ------------------------------------------------------

    def _check_frame(self, name, frame):
        cfg = self.config
        if frame.ndim != 4 or tuple(frame.shape[1:]) != (cfg.channels, cfg.height, cfg.width):
            raise ConfigurationError(
                f"{name} must have shape (B, {cfg.channels}, {cfg.height}, "
                f"{cfg.width}), got {tuple(frame.shape)}"
            )
        _check_finite(name, frame)

    def _check_raster(self, name, raster):
        cfg = self.config
        if raster.ndim != 4 or tuple(raster.shape[1:]) != (1, cfg.height, cfg.width):
            raise ConfigurationError(
                f"{name} must have shape (B, 1, {cfg.height}, {cfg.width}), "
                f"got {tuple(raster.shape)}"
            )
        _check_finite(name, raster)

    def _check_latent(self, name, h):
        if h.ndim != 4 or tuple(h.shape[1:]) != self.config.latent_shape:
            raise ConfigurationError(
                f"{name} must have shape (B, {self.config.latent_shape}), "
                f"got {tuple(h.shape)}"
            )
        _check_finite(name, h)

    def _check_motion(self, name, x):
        cfg = self.config
        expected = (cfg.motion_channels, cfg.latent_height, cfg.latent_width)
        if x.ndim != 4 or tuple(x.shape[1:]) != expected:
            raise ConfigurationError(
                f"{name} must have shape (B, {expected}), got {tuple(x.shape)}"
            )
        _check_finite(name, x)

    # -- forward contracts -------------------------------------------------

    def encode_frame(self, frame: torch.Tensor) -> torch.Tensor:
        self._check_frame("frame", frame)
        return self.e1(frame)

    def encode_motion(self, full_raster, instant_raster) -> torch.Tensor:
        self._check_raster("full_raster", full_raster)
        self._check_raster("instant_raster", instant_raster)
        return self.e2(full_raster, instant_raster)

    def predict_next(self, h0, h_t, x_t) -> torch.Tensor:
        self._check_latent("h0", h0)
        self._check_latent("h_t", h_t)
        self._check_motion("x_t", x_t)
        return self.p(h0, h_t, x_t)

    def decode_frame(self, h) -> torch.Tensor:
        self._check_latent("h", h)
        return self.g(h)

    def discriminate_frame(self, frame, motion) -> torch.Tensor:
        self._check_frame("frame", frame)
        self._check_motion("motion", motion)
        return self.d1(frame, motion)

    def discriminate_pair(self, frame_t, frame_t1) -> torch.Tensor:
        self._check_frame("frame_t", frame_t)
        self._check_frame("frame_t1", frame_t1)
        return self.d2(frame_t, frame_t1)

    # -- rollout -----------------------------------------------------------

    def frame_to_tensor(self, frame) -> torch.Tensor:
        if isinstance(frame, np.ndarray):
            frame = torch.from_numpy(np.ascontiguousarray(frame))
        dtype = next(self.parameters()).dtype
        return frame.to(dtype)

    def rollout(self, i0, keypoints: StrokeKeypoints, T: int) -> np.ndarray:
        """Generate T frames by recursive prediction.

        h0 is computed once and passed at every step; the predicted state is
        fed back as the current state. Needs at least T+1 keypoints.
        """
        cfg = self.config
        if T < 0:
            raise InputError("T must be >= 0")
        if len(keypoints) < T + 1:
            raise InputError(
                f"rollout of {T} frames needs {T + 1} keypoints, got {len(keypoints)}"
            )
        if keypoints.canvas != (cfg.height, cfg.width):
            raise ConfigurationError(
                f"keypoints canvas {keypoints.canvas} does not match model "
                f"resolution ({cfg.height}, {cfg.width})"
            )
        if T == 0:
            return np.zeros((0, cfg.channels, cfg.height, cfg.width), dtype=np.float32)
        try:
            frame = self.frame_to_tensor(i0).reshape(
                1, cfg.channels, cfg.height, cfg.width
            )
        except RuntimeError as exc:
            raise ConfigurationError(f"initial frame has the wrong shape: {exc}")
        full = self.frame_to_tensor(rasterize_stroke(keypoints).pixels)[None, None]
        was_training = self.training
        self.eval()
        try:
            with torch.no_grad():
                h0 = self.encode_frame(frame)
                h = h0
                out = []
                for t in range(T):
                    inst = self.frame_to_tensor(
                        instant_stroke(keypoints, t).pixels
                    )[None, None]
                    x = self.encode_motion(full, inst)
                    h = self.predict_next(h0, h, x)
                    out.append(self.decode_frame(h))
        finally:
            self.train(was_training)
        return torch.cat(out, dim=0).float().numpy()
