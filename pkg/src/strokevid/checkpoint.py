"""Checkpoint archive: a zip holding a plain-text metadata document plus one
little-endian float32 binary per parameter/buffer/optimizer moment.

Writes are byte-deterministic (sorted entries, fixed timestamps, stored
uncompressed), so save -> load -> save reproduces identical bytes and
interrupted training can resume bit-exactly.
"""

from __future__ import annotations

import base64
import io
import json
import struct
import zipfile
from pathlib import Path

import numpy as np
import torch

from .config import ModelConfig, TrainConfig
from .errors import FormatError
from .model import StrokeVideoModel

FORMAT_NAME = "strokevid-checkpoint"
FORMAT_VERSION = 1
ARRAY_MAGIC = b"SVA1"
_ZIP_EPOCH = (1980, 1, 1, 0, 0, 0)


def _encode_array(a: np.ndarray) -> bytes:
    a = np.ascontiguousarray(a, dtype="<f4")
    header = ARRAY_MAGIC + struct.pack("<I", a.ndim)
    header += struct.pack(f"<{a.ndim}I", *a.shape)
    return header + a.tobytes()


def _decode_array(raw: bytes) -> np.ndarray:
    if raw[:4] != ARRAY_MAGIC:
        raise FormatError("bad array magic in checkpoint entry")
    (ndim,) = struct.unpack("<I", raw[4:8])
    shape = struct.unpack(f"<{ndim}I", raw[8:8 + 4 * ndim])
    data = np.frombuffer(raw, dtype="<f4", offset=8 + 4 * ndim)
    if data.size != int(np.prod(shape)):
        raise FormatError("checkpoint array size does not match its header")
    return data.reshape(shape).copy()


def named_group_parameters(model: StrokeVideoModel, group: str):
    """Ordered (name, param) pairs for the 'g' or 'd' parameter group."""
    modules = (
        model.generator_modules() if group == "g" else model.discriminator_modules()
    )
    out = []
    for prefix, module in modules.items():
        for name, p in module.named_parameters():
            out.append((f"{prefix}.{name}", p))
    return out


def _optimizer_arrays(opt, named_params, tag):
    arrays, steps = {}, {}
    for name, p in named_params:
        st = opt.state.get(p)
        if st is None:
            arrays[f"{tag}.{name}.exp_avg"] = np.zeros(p.shape, dtype="<f4")
            arrays[f"{tag}.{name}.exp_avg_sq"] = np.zeros(p.shape, dtype="<f4")
            steps[name] = 0.0
        else:
            arrays[f"{tag}.{name}.exp_avg"] = st["exp_avg"].detach().numpy()
            arrays[f"{tag}.{name}.exp_avg_sq"] = st["exp_avg_sq"].detach().numpy()
            steps[name] = float(st["step"])
    return arrays, steps


def save_checkpoint(path, model: StrokeVideoModel, step: int = 0, trainer=None):
    """Write model (and, if given, trainer/optimizer) state to `path`."""
    arrays = {}
    for name, p in model.named_parameters():
        arrays[f"param.{name}"] = p.detach().numpy()
    for name, b in model.named_buffers():
        arrays[f"buffer.{name}"] = b.detach().numpy()

    meta = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "model_config": model.config.to_dict(),
        "step": int(step),
        "train_config": None,
        "adam_steps": None,
        "torch_rng": None,
    }
    if trainer is not None:
        meta["torch_rng"] = base64.b64encode(
            torch.get_rng_state().numpy().tobytes()
        ).decode("ascii")
        gp = named_group_parameters(model, "g")
        dp = named_group_parameters(model, "d")
        ag, sg = _optimizer_arrays(trainer.opt_g, gp, "adam_g")
        ad, sd = _optimizer_arrays(trainer.opt_d, dp, "adam_d")
        arrays.update(ag)
        arrays.update(ad)
        meta["train_config"] = trainer.cfg.to_dict()
        meta["adam_steps"] = {"g": sg, "d": sd}

    buf = io.BytesIO()
    with zipfile.ZipFile(buf, "w", compression=zipfile.ZIP_STORED) as zf:
        info = zipfile.ZipInfo("metadata.json", date_time=_ZIP_EPOCH)
        zf.writestr(info, json.dumps(meta, sort_keys=True, indent=1) + "\n")
        for name in sorted(arrays):
            info = zipfile.ZipInfo(f"arrays/{name}", date_time=_ZIP_EPOCH)
            zf.writestr(info, _encode_array(arrays[name]))
    Path(path).write_bytes(buf.getvalue())


class Checkpoint:
    def __init__(self, meta: dict, arrays: dict):
        self.meta = meta
        self.arrays = arrays

    @property
    def step(self) -> int:
        return self.meta["step"]

    @property
    def model_config(self) -> ModelConfig:
        return ModelConfig.from_dict(self.meta["model_config"])

    @property
    def train_config(self):
        tc = self.meta.get("train_config")
        return TrainConfig.from_dict(tc) if tc else None


def read_checkpoint(path) -> Checkpoint:
    try:
        with zipfile.ZipFile(path) as zf:
            names = zf.namelist()
            if "metadata.json" not in names:
                raise FormatError("checkpoint has no metadata.json")
            meta = json.loads(zf.read("metadata.json"))
            arrays = {
                n[len("arrays/"):]: _decode_array(zf.read(n))
                for n in names
                if n.startswith("arrays/")
            }
    except (zipfile.BadZipFile, OSError, json.JSONDecodeError, struct.error) as exc:
        raise FormatError(f"unreadable checkpoint {path}: {exc}") from exc
    if meta.get("format") != FORMAT_NAME:
        raise FormatError(f"not a {FORMAT_NAME} file: {path}")
    return Checkpoint(meta, arrays)


def build_model(ckpt: Checkpoint) -> StrokeVideoModel:
    """Instantiate the model and load every parameter and buffer bit-exactly."""
    model = StrokeVideoModel(ckpt.model_config)
    with torch.no_grad():
        for name, p in model.named_parameters():
            key = f"param.{name}"
            if key not in ckpt.arrays:
                raise FormatError(f"checkpoint missing array {key}")
            p.copy_(torch.from_numpy(ckpt.arrays[key]))
        for name, b in model.named_buffers():
            key = f"buffer.{name}"
            if key not in ckpt.arrays:
                raise FormatError(f"checkpoint missing array {key}")
            b.copy_(torch.from_numpy(ckpt.arrays[key]))
    return model


def load_model(path) -> tuple[StrokeVideoModel, Checkpoint]:
    ckpt = read_checkpoint(path)
    return build_model(ckpt), ckpt


def _restore_optimizer(opt, named_params, tag, ckpt: Checkpoint, steps: dict):
    sd = opt.state_dict()
    state = {}
    for idx, (name, p) in enumerate(named_params):
        ea = ckpt.arrays.get(f"{tag}.{name}.exp_avg")
        es = ckpt.arrays.get(f"{tag}.{name}.exp_avg_sq")
        if ea is None or es is None:
            raise FormatError(f"checkpoint missing optimizer state for {name}")
        state[idx] = {
            "step": torch.tensor(float(steps[name])),
            "exp_avg": torch.from_numpy(ea),
            "exp_avg_sq": torch.from_numpy(es),
        }
    sd["state"] = state
    opt.load_state_dict(sd)


def restore_trainer(ckpt: Checkpoint, trainer) -> None:
    """Load optimizer moments, step count and RNG state into a fresh trainer."""
    if ckpt.meta.get("adam_steps") is None:
        raise FormatError("checkpoint carries no optimizer state")
    model = trainer.model
    _restore_optimizer(
        trainer.opt_g, named_group_parameters(model, "g"), "adam_g",
        ckpt, ckpt.meta["adam_steps"]["g"],
    )
    _restore_optimizer(
        trainer.opt_d, named_group_parameters(model, "d"), "adam_d",
        ckpt, ckpt.meta["adam_steps"]["d"],
    )
    trainer.step = ckpt.step
    rng = ckpt.meta.get("torch_rng")
    if rng:
        torch.set_rng_state(
            torch.from_numpy(
                np.frombuffer(base64.b64decode(rng), dtype=np.uint8).copy()
            )
        )
