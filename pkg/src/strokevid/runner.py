"""End-to-end training runs: seeding, batching, logging, checkpointing."""

from __future__ import annotations

from pathlib import Path

import torch

from .checkpoint import load_model, read_checkpoint, restore_trainer, save_checkpoint
from .config import ModelConfig, TrainConfig
from .data import batch_for_step
from .model import StrokeVideoModel
from .training import MetricsLog, Trainer

CHECKPOINT_NAME = "checkpoint.svck"
METRICS_NAME = "metrics.tsv"


def run_training(
    clips,
    model_cfg: ModelConfig,
    train_cfg: TrainConfig,
    out_dir,
    resume=None,
    progress=None,
) -> Path:
    """Train for train_cfg.steps total steps and return the checkpoint path.

    Fresh runs seed torch from train_cfg.seed before building the model; a
    resumed run restores parameters, Adam moments and RNG state and continues
    bit-exactly where the saved run left off.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ckpt_path = out_dir / CHECKPOINT_NAME
    metrics_path = out_dir / METRICS_NAME

    if resume is not None:
        model, ckpt = load_model(resume)
        train_cfg = ckpt.train_config or train_cfg
        trainer = Trainer(model, train_cfg)
        restore_trainer(ckpt, trainer)
        log = MetricsLog(metrics_path, append=metrics_path.exists())
    else:
        torch.manual_seed(train_cfg.seed)
        model = StrokeVideoModel(model_cfg)
        trainer = Trainer(model, train_cfg)
        log = MetricsLog(metrics_path)

    if trainer.step == 0:
        save_checkpoint(ckpt_path, model, step=0, trainer=trainer)

    for step in range(trainer.step, train_cfg.steps):
        batch = batch_for_step(
            clips, train_cfg.batch_size, train_cfg.clip_len, train_cfg.seed, step
        )
        report = trainer.train_step(batch)
        log.write(step, report)
        if progress is not None:
            progress(step, report)
        if trainer.step % train_cfg.checkpoint_every == 0 or trainer.step == train_cfg.steps:
            save_checkpoint(ckpt_path, model, step=trainer.step, trainer=trainer)

    if trainer.step >= train_cfg.steps:
        save_checkpoint(ckpt_path, model, step=trainer.step, trainer=trainer)
    return ckpt_path


def resume_training(clips, checkpoint_path, out_dir, progress=None) -> Path:
    ckpt = read_checkpoint(checkpoint_path)
    return run_training(
        clips,
        ckpt.model_config,
        ckpt.train_config,
        out_dir,
        resume=checkpoint_path,
        progress=progress,
    )
