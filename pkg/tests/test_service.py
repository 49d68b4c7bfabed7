import base64

import numpy as np
import pytest
import torch
from fastapi.testclient import TestClient

from strokevid.config import ModelConfig
from strokevid.data import frame_from_png_bytes, frame_to_png_bytes
from strokevid.model import StrokeVideoModel
from strokevid.service import create_app
from strokevid.strokes import StrokeKeypoints

TOY = dict(
    height=16, width=16, channels=1, latent_channels=4, motion_channels=2,
    downsample_depth=2, encoder_width=2, decoder_width=2,
    dense_blocks=1, dense_growth=2, dense_layers=1,
    disc_width=2, disc_extra_layers=0,
)


@pytest.fixture(scope="module")
def model():
    torch.manual_seed(0)
    return StrokeVideoModel(ModelConfig(**TOY))


@pytest.fixture(scope="module")
def client(model):
    return TestClient(create_app(model=model))


def start_image():
    frame = np.zeros((1, 16, 16), dtype=np.float32)
    frame[0, 5, 5] = 1.0
    return base64.b64encode(frame_to_png_bytes(frame)).decode("ascii")


def payload(frame_count=2, n_points=4):
    return {
        "image": start_image(),
        "keypoints": [[4.0 + i, 5.0] for i in range(n_points)],
        "frame_count": frame_count,
    }


class TestHealth:
    def test_not_ready(self):
        app = create_app()
        with TestClient(app) as c:
            r = c.get("/health")
        assert r.status_code == 503
        assert r.json()["status"] == "loading"

    def test_ready_reports_config(self, client):
        r = client.get("/health")
        assert r.status_code == 200
        body = r.json()
        assert body["status"] == "ready"
        assert body["model_config"]["height"] == 16


class TestGenerate:
    def test_frame_count_and_decodable(self, client):
        r = client.post("/generate", json=payload(frame_count=3))
        assert r.status_code == 200
        body = r.json()
        assert len(body["frames"]) == 3
        assert body["timing"]["frame_count"] == 3
        frame = frame_from_png_bytes(base64.b64decode(body["frames"][0]))
        assert frame.shape == (1, 16, 16)

    def test_zero_frames(self, client):
        r = client.post("/generate", json=payload(frame_count=0))
        assert r.status_code == 200
        assert r.json()["frames"] == []

    def test_deterministic(self, client):
        a = client.post("/generate", json=payload()).json()["frames"]
        b = client.post("/generate", json=payload()).json()["frames"]
        assert a == b

    def test_matches_direct_rollout(self, client, model):
        body = client.post("/generate", json=payload(frame_count=2)).json()
        req = payload(frame_count=2)
        frame0 = frame_from_png_bytes(base64.b64decode(req["image"]))
        kp = StrokeKeypoints(
            tuple((x, y) for x, y in req["keypoints"]), (16, 16)
        )
        direct = model.rollout(frame0, kp, 2)
        for t, enc in enumerate(body["frames"]):
            got = frame_from_png_bytes(base64.b64decode(enc))
            assert np.array_equal(
                got, frame_from_png_bytes(frame_to_png_bytes(direct[t]))
            )

    def test_not_ready_is_503(self):
        with TestClient(create_app()) as c:
            r = c.post("/generate", json=payload())
        assert r.status_code == 503


class TestBadRequests:
    def test_invalid_base64(self, client):
        bad = payload()
        bad["image"] = "not-base64!!"
        assert client.post("/generate", json=bad).status_code == 400

    def test_not_a_png(self, client):
        bad = payload()
        bad["image"] = base64.b64encode(b"junk bytes").decode("ascii")
        assert client.post("/generate", json=bad).status_code == 400

    def test_wrong_image_size(self, client):
        frame = np.zeros((1, 8, 8), dtype=np.float32)
        bad = payload()
        bad["image"] = base64.b64encode(frame_to_png_bytes(frame)).decode("ascii")
        assert client.post("/generate", json=bad).status_code == 400

    def test_missing_field(self, client):
        bad = payload()
        del bad["keypoints"]
        assert client.post("/generate", json=bad).status_code == 400

    def test_negative_frame_count(self, client):
        bad = payload()
        bad["frame_count"] = -1
        assert client.post("/generate", json=bad).status_code == 400

    def test_too_few_keypoints_for_rollout(self, client):
        bad = payload(frame_count=5, n_points=2)
        assert client.post("/generate", json=bad).status_code == 400

    def test_keypoint_out_of_bounds(self, client):
        bad = payload()
        bad["keypoints"][0] = [100.0, 5.0]
        assert client.post("/generate", json=bad).status_code == 400

    def test_oversize_image_is_413(self, client):
        bad = payload()
        bad["image"] = "A" * (4 * 1024 * 1024 * 4 // 3 + 64)
        assert client.post("/generate", json=bad).status_code == 413
