import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from PIL import Image

from oahash.errors import FormatError
from oahash.imaging import GrayImage, load_grayscale, pgm_bytes, save_pgm, synth_image, textured_scene


def test_png_red_pixels_to_luma(tmp_path):
    path = tmp_path / "red.png"
    Image.fromarray(np.array([[[255, 0, 0], [255, 0, 0]]], dtype=np.uint8), "RGB").save(path)
    img = load_grayscale(path)
    # 0.299 * 255 = 76.245
    assert (img.width, img.height) == (2, 1)
    assert img.data.tolist() == [76, 76]


@pytest.mark.parametrize("rgb, expected", [
    ((0, 255, 0), 150),    # 149.685
    ((0, 0, 255), 29),     # 29.07
    ((255, 255, 255), 255),
    ((10, 20, 30), 18),    # 2.99 + 11.74 + 3.42 = 18.15
    ((1, 1, 3), 1),        # 0.299 + 0.587 + 0.342 = 1.228
])
def test_png_luma_rounding(tmp_path, rgb, expected):
    path = tmp_path / "c.png"
    Image.fromarray(np.array([[rgb]], dtype=np.uint8), "RGB").save(path)
    assert load_grayscale(path).data.tolist() == [expected]


def test_luma_half_up():
    # 0.5 exactly: R=G=B chosen so 299R + 587G + 114B ends in 500
    from oahash.imaging import luma
    assert luma(np.array([[0, 0, 0]]))[0] == 0
    # 299*5 + 587*0 + 114*0 = 1495 -> 1.495 -> 1 ; 299*1 + 587*1 + 114*6 = 1570 -> 2
    assert luma(np.array([[5, 0, 0]]))[0] == 1
    assert luma(np.array([[1, 1, 6]]))[0] == 2


def test_pgm_passthrough(tmp_path):
    path = tmp_path / "one.pgm"
    path.write_bytes(b"P5\n1 1\n255\n" + bytes([128]))
    assert load_grayscale(path).data.tolist() == [128]


def test_ascii_pgm_with_comment(tmp_path):
    path = tmp_path / "a.pgm"
    path.write_bytes(b"P2\n# comment\n2 2\n255\n0 1\n2 255\n")
    assert load_grayscale(path).data.tolist() == [0, 1, 2, 255]


def test_grayscale_png_passthrough(tmp_path):
    arr = np.arange(12, dtype=np.uint8).reshape(3, 4) * 20
    path = tmp_path / "g.png"
    Image.fromarray(arr, "L").save(path)
    assert np.array_equal(load_grayscale(path).pixels, arr)


def test_unsupported_format(tmp_path):
    path = tmp_path / "x.bmp"
    Image.fromarray(np.zeros((2, 2), dtype=np.uint8)).save(path, format="BMP")
    with pytest.raises(FormatError):
        load_grayscale(path)


def test_missing_file(tmp_path):
    with pytest.raises(OSError):
        load_grayscale(tmp_path / "nope.png")


def test_truncated_pgm(tmp_path):
    path = tmp_path / "t.pgm"
    path.write_bytes(b"P5\n4 4\n255\n" + bytes(5))
    with pytest.raises(FormatError):
        load_grayscale(path)


def test_pgm_16bit_rejected(tmp_path):
    path = tmp_path / "t.pgm"
    path.write_bytes(b"P5\n1 1\n65535\n\x00\x00")
    with pytest.raises(FormatError):
        load_grayscale(path)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 20), st.integers(1, 20), st.randoms(use_true_random=False))
def test_pgm_round_trip(w, h, r):
    arr = np.array([[r.randrange(256) for _ in range(w)] for _ in range(h)], dtype=np.uint8)
    img = GrayImage(arr)
    import tempfile, os
    with tempfile.TemporaryDirectory() as d:
        p = os.path.join(d, "x.pgm")
        save_pgm(img, p)
        back = load_grayscale(p)
        assert back == img
        assert load_grayscale(p) == back  # deterministic reload


def test_pgm_bytes_layout():
    img = synth_image("h_ramp", 3, 1)
    assert pgm_bytes(img) == b"P5\n3 1\n255\n" + bytes([0, 127, 255])


def test_synth_constant():
    img = synth_image("constant", 4, 4, value=128)
    assert img.data.tolist() == [128] * 16


def test_synth_h_ramp():
    assert synth_image("h_ramp", 256, 1).data.tolist() == list(range(256))
    assert synth_image("h_ramp", 1, 3).data.tolist() == [0, 0, 0]


def test_synth_v_ramp():
    img = synth_image("v_ramp", 2, 3)
    assert img.pixels.tolist() == [[0, 0], [127, 127], [255, 255]]


def test_synth_checker():
    assert synth_image("checker", 2, 2, cell=1).data.tolist() == [0, 255, 255, 0]
    img = synth_image("checker", 4, 4, cell=2)
    assert img.pixels[0].tolist() == [0, 0, 255, 255]
    assert img.pixels[2].tolist() == [255, 255, 0, 0]


@pytest.mark.parametrize("w, h", [(0, 3), (3, 0)])
def test_synth_zero_dimension(w, h):
    with pytest.raises(ValueError):
        synth_image("constant", w, h)


def test_gray_image_immutable_and_validated():
    img = synth_image("constant", 2, 2, value=3)
    with pytest.raises(ValueError):
        img.pixels[0, 0] = 1
    with pytest.raises(ValueError):
        GrayImage(np.array([[300]]))
    with pytest.raises(ValueError):
        GrayImage(np.zeros(4))


def test_textured_scene_deterministic():
    a = textured_scene(64, 48, seed=3)
    assert a == textured_scene(64, 48, seed=3)
    assert a != textured_scene(64, 48, seed=4)
    assert len(np.unique(a.pixels)) > 50
