"""Command-line entry points: dataset synthesis, training, generation,
evaluation reports (tables + figures) and the HTTP service."""

from __future__ import annotations

import json
from pathlib import Path

import click
import numpy as np

from .checkpoint import load_model
from .config import ModelConfig, TrainConfig
from .data import (
    frame_from_png_bytes,
    load_digit_bitmaps,
    make_synthetic_dataset,
    procedural_glyphs,
    read_dataset,
    write_dataset,
    _frame_to_image,
)
from .evaluation import evaluate_clips
from .runner import run_training
from .strokes import load_keypoints


@click.group()
def main():
    """Controllable video synthesis from an image and a motion stroke."""


@main.command("make-dataset")
@click.option("--out", required=True, type=click.Path())
@click.option("--clips", default=100, show_default=True)
@click.option("--canvas", default=64, show_default=True, help="square canvas size")
@click.option("--glyphs", default="procedural", show_default=True,
              help="'procedural' or a path to an IDX ubyte digit file")
@click.option("--glyph-size", default=15, show_default=True)
@click.option("--frames", default=17, show_default=True, help="frames per clip")
@click.option("--seed", default=0, show_default=True)
@click.option("--step-min", default=2.0, show_default=True)
@click.option("--step-max", default=6.0, show_default=True)
def make_dataset(out, clips, canvas, glyphs, glyph_size, frames, seed, step_min, step_max):
    """Synthesize a moving-glyph dataset."""
    if glyphs == "procedural":
        glyph_list = procedural_glyphs(glyph_size)
    else:
        glyph_list = load_digit_bitmaps(glyphs)
    dataset = make_synthetic_dataset(
        clips, (canvas, canvas), glyph_list, frames_per_clip=frames, seed=seed,
        step_range=(step_min, step_max),
    )
    write_dataset(dataset, out)
    click.echo(f"wrote {clips} clips to {out}")


def _load_config_file(path) -> tuple[dict, dict]:
    if path is None:
        return {}, {}
    cfg = json.loads(Path(path).read_text())
    return cfg.get("model", {}), cfg.get("train", {})


@main.command("train")
@click.option("--data", "data_dir", required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
@click.option("--config", "config_path", type=click.Path(exists=True),
              help="JSON file with optional 'model' and 'train' override dicts")
@click.option("--mode", type=click.Choice(["single_step", "teacher_forcing", "full_bptt"]),
              default="single_step", show_default=True)
@click.option("--steps", default=1000, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--batch-size", default=4, show_default=True)
@click.option("--resume", type=click.Path(exists=True), help="checkpoint to resume from")
@click.option("--log-every", default=25, show_default=True)
def train(data_dir, out, config_path, mode, steps, seed, batch_size, resume, log_every):
    """Train the model; writes a checkpoint and a per-step metrics log."""
    clips = read_dataset(data_dir)
    model_over, train_over = _load_config_file(config_path)
    hw = clips[0].keypoints.canvas if clips else (64, 64)
    model_cfg = ModelConfig(**{"height": hw[0], "width": hw[1], **model_over})
    train_cfg = TrainConfig(**{
        "mode": mode, "steps": steps, "seed": seed, "batch_size": batch_size,
        **train_over,
    })

    def progress(step, report):
        if (step + 1) % log_every == 0 or step == 0:
            click.echo(
                f"step {step + 1}/{train_cfg.steps} rec1={report.rec1:.4f} "
                f"rec2={report.rec2:.4f} g={report.total_g:.4f} d={report.total_d:.4f}"
            )

    ckpt = run_training(clips, model_cfg, train_cfg, out, resume=resume, progress=progress)
    click.echo(f"checkpoint written to {ckpt}")


@main.command("generate")
@click.option("--checkpoint", required=True, type=click.Path(exists=True))
@click.option("--image", "image_path", required=True, type=click.Path(exists=True))
@click.option("--keypoints", "keypoints_path", required=True, type=click.Path(exists=True))
@click.option("--frames", "n_frames", default=None, type=int,
              help="defaults to len(keypoints) - 1")
@click.option("--out", required=True, type=click.Path())
@click.option("--fps", default=8, show_default=True, help="preview GIF frame rate")
def generate(checkpoint, image_path, keypoints_path, n_frames, out, fps):
    """Roll the model out along a stroke and write frames + a GIF preview."""
    model, _ = load_model(checkpoint)
    model.eval()
    frame0 = frame_from_png_bytes(Path(image_path).read_bytes())
    kp = load_keypoints(keypoints_path)
    T = n_frames if n_frames is not None else len(kp) - 1
    frames = model.rollout(frame0, kp, T)
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    images = []
    for t, frame in enumerate(frames):
        img = _frame_to_image(frame)
        img.save(out_dir / f"frame_{t:03d}.png")
        images.append(img.convert("P"))
    if images:
        images[0].save(
            out_dir / "preview.gif", save_all=True, append_images=images[1:],
            duration=int(1000 / fps), loop=0,
        )
    click.echo(f"wrote {T} frames to {out_dir}")


@main.command("evaluate")
@click.option("--checkpoint", required=True, type=click.Path(exists=True))
@click.option("--data", "data_dir", required=True, type=click.Path(exists=True))
@click.option("--report", "report_dir", required=True, type=click.Path())
@click.option("--max-frames", default=None, type=int)
def evaluate(checkpoint, data_dir, report_dir, max_frames):
    """Score rollouts against a held-out set; writes tables and figures."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    model, _ = load_model(checkpoint)
    model.eval()
    clips = read_dataset(data_dir)
    psnr_s, ssim_s, adherences, _ = evaluate_clips(model, clips, max_frames=max_frames)

    report = Path(report_dir)
    report.mkdir(parents=True, exist_ok=True)

    with open(report / "metrics.tsv", "w") as fh:
        fh.write("t\tpsnr_db\tssim\n")
        for t, (p, s) in enumerate(zip(psnr_s.values, ssim_s.values)):
            fh.write(f"{t + 1}\t{p!r}\t{s!r}\n")
    means = [a.mean_px for a in adherences]
    missing = sum(a.missing_steps for a in adherences)
    with open(report / "adherence.tsv", "w") as fh:
        fh.write("clip\tadherence_px\tmissing_steps\n")
        for i, a in enumerate(adherences):
            fh.write(f"{i}\t{a.mean_px!r}\t{a.missing_steps}\n")
        fh.write(f"mean\t{float(np.mean(means))!r}\t{missing}\n")

    fig, axes = plt.subplots(1, 2, figsize=(9, 3.5))
    steps = np.arange(1, len(psnr_s.values) + 1)
    axes[0].plot(steps, psnr_s.values, marker="o")
    axes[0].set_xlabel("time step")
    axes[0].set_ylabel("PSNR (dB)")
    axes[1].plot(steps, ssim_s.values, marker="o", color="tab:orange")
    axes[1].set_xlabel("time step")
    axes[1].set_ylabel("SSIM")
    fig.tight_layout()
    fig.savefig(report / "psnr_ssim.png", dpi=150)
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.hist(means, bins=20)
    ax.set_xlabel("stroke adherence (px)")
    ax.set_ylabel("clips")
    fig.tight_layout()
    fig.savefig(report / "adherence_hist.png", dpi=150)
    plt.close(fig)

    click.echo(
        f"PSNR mean {psnr_s.mean:.2f} dB, SSIM mean {ssim_s.mean:.4f}, "
        f"adherence mean {float(np.mean(means)):.3f} px -> report in {report}"
    )


@main.command("serve")
@click.option("--checkpoint", required=True, type=click.Path(exists=True))
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
def serve(checkpoint, host, port):
    """Run the HTTP inference service."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(checkpoint_path=checkpoint), host=host, port=port)
