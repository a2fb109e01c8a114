import numpy as np
from fastapi.testclient import TestClient

from app.main import app
from app.services.image_io_service import encode_pgm

client = TestClient(app)


def upload(prediction: bytes, truth: bytes, **data):
    return client.post(
        "/api/v1/metrics/score",
        files={
            "prediction": ("prediction.pgm", prediction, "image/x-portable-graymap"),
            "truth": ("truth.pgm", truth, "image/x-portable-graymap"),
        },
        data=data,
    )


def test_score_identical_images():
    image = encode_pgm(np.random.default_rng(0).random((16, 16)))

    response = upload(image, image, model_name="unet")

    assert response.status_code == 200
    payload = response.json()
    assert payload["row"]["model_name"] == "unet"
    assert payload["pair"]["mse"] == 0.0
    assert payload["pair"]["ssim"] == 1.0
    assert payload["pair"]["psnr_db"] == 120.0


def test_score_black_against_white():
    response = upload(encode_pgm(np.zeros((16, 16))), encode_pgm(np.ones((16, 16))))

    assert response.status_code == 200
    payload = response.json()
    assert payload["row"]["model_name"] == "model"
    assert payload["pair"]["mse"] == 1.0
    assert abs(payload["pair"]["psnr_db"]) < 1e-9


def test_malformed_image_names_the_header_field():
    response = upload(b"P2\n16 16\n255\n", encode_pgm(np.zeros((16, 16))))

    assert response.status_code == 400
    assert response.json()["detail"].startswith("magic")


def test_mismatched_dimensions_are_rejected():
    response = upload(encode_pgm(np.zeros((16, 16))), encode_pgm(np.zeros((16, 20))))

    assert response.status_code == 400
    assert "Dimension mismatch" in response.json()["detail"]


def test_empty_upload_is_rejected():
    response = upload(b"", encode_pgm(np.zeros((16, 16))))

    assert response.status_code == 400
