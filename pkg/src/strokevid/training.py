"""The five loss terms, the combined objective and the training loop.

Training follows the one-step scheme: the clip is unrolled with the
predicted state fed back, but the fed-back state is detached so no gradient
flows through time. Teacher forcing (feeding the encoding of the ground-truth
current frame instead) is kept as the ablation arm, and full BPTT as a
comparison option. Each batch takes one discriminator update then one
generator update.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

from .config import TrainConfig
from .errors import InputError, TrainingFault
from .model import StrokeVideoModel

LOG_CLAMP = 1e-7


@dataclass
class LossReport:
    rec1: float = 0.0
    rec2: float = 0.0
    gan1_g: float = 0.0
    gan1_d: float = 0.0
    gan2_g: float = 0.0
    gan2_d: float = 0.0
    perceptual: float = 0.0
    total_g: float = 0.0
    total_d: float = 0.0

    def values(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def finite(self) -> bool:
        return all(math.isfinite(v) for v in self.values().values())


REPORT_FIELDS = [f.name for f in fields(LossReport)]


def _check_pair(pred_frames, gt_frames):
    if len(pred_frames) != len(gt_frames):
        raise InputError(
            f"{len(pred_frames)} predictions vs {len(gt_frames)} targets"
        )
    if pred_frames.shape != gt_frames.shape:
        raise InputError(
            f"shape mismatch {tuple(pred_frames.shape)} vs {tuple(gt_frames.shape)}"
        )


def loss_rec1(pred_frames: torch.Tensor, gt_frames: torch.Tensor) -> torch.Tensor:
    """Per-frame MSE against ground truth, summed over time (dim 0)."""
    _check_pair(pred_frames, gt_frames)
    per_t = ((pred_frames - gt_frames) ** 2).flatten(1).mean(dim=1)
    return per_t.sum()


def loss_rec2(pred_frames, gt_frames, e1: nn.Module, g: nn.Module) -> torch.Tensor:
    """Autoencoding constraint: pull each prediction toward G(E1(gt))."""
    _check_pair(pred_frames, gt_frames)
    total = pred_frames.new_zeros(())
    for t in range(len(pred_frames)):
        recon = g(e1(gt_frames[t]))
        total = total + ((pred_frames[t] - recon) ** 2).mean()
    return total


def _clamped_log(p: torch.Tensor) -> torch.Tensor:
    return torch.log(torch.clamp(p, LOG_CLAMP, 1.0 - LOG_CLAMP))


def gan_d_loss(p_real: torch.Tensor, p_fake: torch.Tensor) -> torch.Tensor:
    return -(_clamped_log(p_real).mean() + _clamped_log(1.0 - p_fake).mean())


def gan_g_loss(p_fake: torch.Tensor) -> torch.Tensor:
    # non-saturating form
    return -_clamped_log(p_fake).mean()


def _fold_time(x: torch.Tensor) -> torch.Tensor:
    """(T, B, ...) or (T, ...) -> (T*B, ...) ready for a discriminator."""
    if x.ndim == 5:
        return x.reshape(-1, *x.shape[2:])
    return x


def loss_gan_frame(real_frames, fake_frames, motion_codes, d1):
    """Single-frame adversarial losses; D1 conditioned on the motion code.

    Returns (d_loss, g_loss); d_loss is the negated discriminator objective
    so both sides are minimized.
    """
    real = _fold_time(real_frames)
    fake = _fold_time(fake_frames)
    codes = _fold_time(motion_codes)
    p_real = d1(real, codes)
    p_fake = d1(fake, codes)
    return gan_d_loss(p_real, p_fake), gan_g_loss(p_fake)


def loss_gan_pair(real_pairs, fake_pairs, d2):
    """Consecutive-pair adversarial losses; pairs are (frames_t, frames_t1)."""
    pr = d2(_fold_time(real_pairs[0]), _fold_time(real_pairs[1]))
    pf = d2(_fold_time(fake_pairs[0]), _fold_time(fake_pairs[1]))
    return gan_d_loss(pr, pf), gan_g_loss(pf)


def consecutive_pairs(frames: torch.Tensor):
    """A clip of T+1 frames (time on dim 0) yields exactly T pairs."""
    return frames[:-1], frames[1:]


class FeatureExtractor(nn.Module):
    """Fixed convolutional pyramid for the perceptual loss.

    Defaults to seeded random frozen weights so the pipeline runs without
    downloads; externally trained weights can be loaded into the same shape.
    """

    def __init__(self, in_channels: int = 1, widths=(16, 32, 64), seed: int = 7):
        super().__init__()
        gen = torch.Generator().manual_seed(seed)
        layers = []
        c = in_channels
        for w in widths:
            conv = nn.Conv2d(c, w, 3, stride=2, padding=1)
            with torch.no_grad():
                fan_in = c * 9
                conv.weight.normal_(0.0, (2.0 / fan_in) ** 0.5, generator=gen)
                conv.bias.zero_()
            layers += [conv, nn.ReLU()]
            c = w
        self.net = nn.Sequential(*layers[:-1])  # last stage stays linear
        for p in self.parameters():
            p.requires_grad_(False)

    def forward(self, x):
        return self.net(x)


def loss_perceptual(pred_frames, gt_frames, phi) -> torch.Tensor:
    """Feature-space MSE under a frozen extractor, summed over time."""
    _check_pair(pred_frames, gt_frames)
    total = pred_frames.new_zeros(())
    for t in range(len(pred_frames)):
        total = total + ((phi(pred_frames[t]) - phi(gt_frames[t])) ** 2).mean()
    return total


def total_objective(report: LossReport, cfg: TrainConfig) -> tuple[float, float]:
    """Combine the five terms into the generator and discriminator totals."""
    for name, v in report.values().items():
        if name in ("total_g", "total_d"):
            continue
        if not math.isfinite(v):
            raise TrainingFault(f"non-finite loss component {name}={v}", report)
    total_g = (
        report.gan1_g
        + cfg.lambda0 * report.gan2_g
        + cfg.lambda1 * report.perceptual
        + cfg.lambda2 * report.rec1
        + cfg.lambda3 * report.rec2
    )
    total_d = report.gan1_d + cfg.lambda0 * report.gan2_d
    return total_g, total_d


class Trainer:
    """Owns the model, both Adam optimizers and the frozen feature extractor."""

    def __init__(self, model: StrokeVideoModel, cfg: TrainConfig, phi=None):
        self.model = model
        self.cfg = cfg
        self.phi = phi if phi is not None else FeatureExtractor(
            model.config.channels, seed=cfg.feature_seed
        )
        betas = (cfg.beta1, cfg.beta2)
        self.opt_g = torch.optim.Adam(
            list(model.generator_parameters()), lr=cfg.learning_rate, betas=betas
        )
        self.opt_d = torch.optim.Adam(
            list(model.discriminator_parameters()), lr=cfg.learning_rate, betas=betas
        )
        self.step = 0

    def unroll(self, frames, full_raster, instants, mode=None):
        """Run the predictor over a clip in the given training mode.

        Returns (preds, codes) with time on dim 0: (T, B, C, H, W) and
        (T, B, C_x, h, w).
        """
        mode = mode or self.cfg.mode
        model = self.model
        T = instants.shape[1]
        h0 = model.encode_frame(frames[:, 0])
        state = h0
        preds, codes = [], []
        for t in range(T):
            x = model.encode_motion(full_raster, instants[:, t])
            h = model.predict_next(h0, state, x)
            preds.append(model.decode_frame(h))
            codes.append(x)
            if mode == "single_step":
                state = h.detach()
            elif mode == "full_bptt":
                state = h
            elif mode == "teacher_forcing":
                state = model.encode_frame(frames[:, t + 1]).detach()
            else:
                raise InputError(f"unknown training mode {mode!r}")
        return torch.stack(preds), torch.stack(codes)

    def train_step(self, batch, mode=None) -> LossReport:
        """One alternating update: discriminators first, then the generator."""
        cfg = self.cfg
        model = self.model
        frames = torch.from_numpy(batch.frames)
        full = torch.from_numpy(batch.full_raster)
        instants = torch.from_numpy(batch.instant_rasters)
        T = instants.shape[1]

        try:
            preds, codes = self.unroll(frames, full, instants, mode)
        except InputError as exc:
            # non-finite latents mid-rollout mean the parameters went bad
            raise TrainingFault(f"rollout failed: {exc}", None) from exc
        gt = frames[:, 1:].transpose(0, 1)          # (T, B, C, H, W)
        real_seq = frames.transpose(0, 1)           # (T+1, B, C, H, W)
        # predicted sequence with the real input frame prepended, so a clip
        # of T+1 frames yields T fake pairs just like the real side
        fake_seq = torch.cat([real_seq[:1], preds], dim=0)

        # -- discriminator update
        self.opt_d.zero_grad(set_to_none=True)
        gan1_d, _ = loss_gan_frame(gt, preds.detach(), codes.detach(), model.d1)
        gan2_d, _ = loss_gan_pair(
            consecutive_pairs(real_seq),
            consecutive_pairs(fake_seq.detach()),
            model.d2,
        )
        total_d = gan1_d + cfg.lambda0 * gan2_d
        if not torch.isfinite(total_d):
            raise TrainingFault("non-finite discriminator loss", None)
        total_d.backward()
        self.opt_d.step()

        # -- generator update
        self.opt_g.zero_grad(set_to_none=True)
        p_fake1 = model.d1(_fold_time(preds), _fold_time(codes))
        gan1_g = gan_g_loss(p_fake1)
        fp = consecutive_pairs(fake_seq)
        p_fake2 = model.d2(_fold_time(fp[0]), _fold_time(fp[1]))
        gan2_g = gan_g_loss(p_fake2)
        rec1 = loss_rec1(preds, gt)
        rec2 = loss_rec2(preds, gt, model.e1, model.g)
        perc = loss_perceptual(preds, gt, self.phi)
        total_g = (
            gan1_g
            + cfg.lambda0 * gan2_g
            + cfg.lambda1 * perc
            + cfg.lambda2 * rec1
            + cfg.lambda3 * rec2
        )
        report = LossReport(
            rec1=rec1.item(), rec2=rec2.item(),
            gan1_g=gan1_g.item(), gan1_d=gan1_d.item(),
            gan2_g=gan2_g.item(), gan2_d=gan2_d.item(),
            perceptual=perc.item(),
            total_g=total_g.item(), total_d=total_d.item(),
        )
        if not report.finite():
            raise TrainingFault("non-finite loss during training step", report)
        total_g.backward()
        self.opt_g.step()

        self.step += 1
        return report


def train_step_single(batch, trainer: Trainer) -> LossReport:
    return trainer.train_step(batch, mode="single_step")


def train_step_teacher_forcing(batch, trainer: Trainer) -> LossReport:
    return trainer.train_step(batch, mode="teacher_forcing")


class MetricsLog:
    """Plain-text per-step loss log (tab-separated)."""

    HEADER = "step\t" + "\t".join(REPORT_FIELDS)

    def __init__(self, path, append=False):
        self.path = path
        if not append:
            with open(path, "w") as fh:
                fh.write(self.HEADER + "\n")

    def write(self, step: int, report: LossReport):
        vals = report.values()
        line = str(step) + "\t" + "\t".join(repr(vals[k]) for k in REPORT_FIELDS)
        with open(self.path, "a") as fh:
            fh.write(line + "\n")

    @staticmethod
    def read(path):
        rows = []
        with open(path) as fh:
            header = fh.readline().strip().split("\t")
            for line in fh:
                parts = line.strip().split("\t")
                rows.append({k: float(v) for k, v in zip(header, parts)})
        for row in rows:
            row["step"] = int(row["step"])
        return rows
