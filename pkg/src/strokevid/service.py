"""HTTP inference service backing the stroke-editor UI.

POST /generate takes a base64 PNG initial frame, a keypoint list and a frame
count, and returns base64 PNG frames. GET /health reports readiness and the
loaded model configuration. The model is loaded once at startup and treated
as read-only (inference mode freezes the spectral power vectors).
"""

from __future__ import annotations

import base64
import binascii
import time

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .checkpoint import load_model
from .data import frame_from_png_bytes, frame_to_png_bytes
from .errors import ConfigurationError, InputError
from .strokes import StrokeKeypoints

MAX_IMAGE_BYTES = 4 * 1024 * 1024


class GenerateRequest(BaseModel):
    image: str = Field(description="base64-encoded lossless (PNG) initial frame")
    keypoints: list[tuple[float, float]] = Field(min_length=1)
    frame_count: int = Field(ge=0)


def create_app(checkpoint_path=None, model=None) -> FastAPI:
    app = FastAPI(title="strokevid")
    app.state.model = None
    if model is not None:
        app.state.model = model.eval()
    elif checkpoint_path is not None:
        loaded, _ = load_model(checkpoint_path)
        app.state.model = loaded.eval()

    @app.exception_handler(RequestValidationError)
    async def _bad_request(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"detail": exc.errors()})

    @app.get("/health")
    def health():
        m = app.state.model
        if m is None:
            return JSONResponse(
                status_code=503, content={"status": "loading", "detail": "model not ready"}
            )
        return {"status": "ready", "model_config": m.config.to_dict()}

    @app.post("/generate")
    def generate(req: GenerateRequest):
        m = app.state.model
        if m is None:
            return JSONResponse(status_code=503, content={"detail": "model not ready"})
        if len(req.image) > MAX_IMAGE_BYTES * 4 // 3 + 8:
            return JSONResponse(status_code=413, content={"detail": "image too large"})
        try:
            raw = base64.b64decode(req.image, validate=True)
        except (binascii.Error, ValueError):
            return JSONResponse(status_code=400, content={"detail": "image is not valid base64"})
        if len(raw) > MAX_IMAGE_BYTES:
            return JSONResponse(status_code=413, content={"detail": "image too large"})
        cfg = m.config
        try:
            frame = frame_from_png_bytes(raw)
            if frame.shape != (cfg.channels, cfg.height, cfg.width):
                raise ConfigurationError(
                    f"image shape {frame.shape} does not match model "
                    f"({cfg.channels}, {cfg.height}, {cfg.width})"
                )
            kp = StrokeKeypoints(
                tuple((x, y) for x, y in req.keypoints), (cfg.height, cfg.width)
            )
            start = time.perf_counter()
            frames = m.rollout(frame, kp, req.frame_count)
            elapsed = time.perf_counter() - start
        except (InputError, ConfigurationError) as exc:
            return JSONResponse(status_code=400, content={"detail": str(exc)})
        except Exception as exc:  # malformed image payloads etc.
            return JSONResponse(status_code=400, content={"detail": str(exc)})
        payload = [
            base64.b64encode(frame_to_png_bytes(f)).decode("ascii") for f in frames
        ]
        return {
            "frames": payload,
            "timing": {"seconds": elapsed, "frame_count": len(payload)},
        }

    return app
