import numpy as np
import pytest
from PIL import Image

from semcast.errors import LabelOutOfRange, MalformedFile
from semcast.labelmap import ingest_label_map, read_label_map


def _pgm(path, labels):
    Image.fromarray(np.asarray(labels, dtype=np.uint8), mode="L").save(path)
    return path


def test_equal_classes(tmp_path):
    labels = np.repeat(np.arange(10), 512 * 256 // 10 + 1)[: 512 * 256].reshape(256, 512)
    geo = ingest_label_map(_pgm(tmp_path / "m.pgm", labels), 10)
    assert geo.total_pixels == 131072
    assert geo.class_pixel_fraction == pytest.approx(0.1, abs=1e-12)
    assert sum(geo.class_counts) == 131072


def test_absent_classes_still_count(tmp_path):
    labels = np.tile([0, 4, 7], (30, 10))
    geo = ingest_label_map(_pgm(tmp_path / "m.pgm", labels), 10)
    assert geo.class_pixel_fraction == pytest.approx(1 / 10)
    assert geo.class_counts[4] == 300 and geo.class_counts[1] == 0


def test_csv_grid(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text("0,1,1\n2,2,2\n\n")
    geo = ingest_label_map(p, 4)
    assert geo.total_pixels == 6
    assert geo.class_counts == (1, 2, 3, 0)
    assert np.array_equal(read_label_map(p), [[0, 1, 1], [2, 2, 2]])


@pytest.mark.parametrize("content", [b"", b"P5\n2 2\n255\n", b"not an image"])
def test_malformed_pgm(tmp_path, content):
    p = tmp_path / "bad.pgm"
    p.write_bytes(content)
    with pytest.raises(MalformedFile):
        ingest_label_map(p, 10)


@pytest.mark.parametrize("content", ["0,1\n2\n", "0,a\n", "\n\n"])
def test_malformed_csv(tmp_path, content):
    p = tmp_path / "bad.csv"
    p.write_text(content)
    with pytest.raises(MalformedFile):
        ingest_label_map(p, 10)


def test_missing_file(tmp_path):
    with pytest.raises(MalformedFile):
        ingest_label_map(tmp_path / "nope.pgm", 10)


def test_label_out_of_range(tmp_path):
    with pytest.raises(LabelOutOfRange, match="label 12"):
        ingest_label_map(_pgm(tmp_path / "m.pgm", [[0, 12], [3, 3]]), 10)
    p = tmp_path / "neg.csv"
    p.write_text("0,-1\n")
    with pytest.raises(LabelOutOfRange):
        ingest_label_map(p, 10)


def test_color_image_rejected(tmp_path):
    p = tmp_path / "rgb.png"
    Image.new("RGB", (4, 4)).save(p)
    with pytest.raises(MalformedFile):
        ingest_label_map(p, 10)
