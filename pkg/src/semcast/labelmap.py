"""Signal geometry from a semantic label map.

Accepts a portable graymap (``.pgm``, read through Pillow) or a CSV grid of
integer labels. The average class size is taken over all declared classes,
whether or not a class appears in the map.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .core import SignalGeometry
from .errors import LabelOutOfRange, MalformedFile


def _read_pgm(path: Path) -> np.ndarray:
    from PIL import Image, UnidentifiedImageError

    try:
        with Image.open(path) as img:
            mode = img.mode
            pixels = np.asarray(img).astype(np.int64)
    except (UnidentifiedImageError, OSError, SyntaxError, ValueError) as exc:
        raise MalformedFile(f"{path}: {exc}") from None
    if mode not in ("L", "I", "I;16", "I;16B"):
        raise MalformedFile(f"{path}: expected a grayscale image, got mode {mode}")
    return pixels


def _read_csv(path: Path) -> np.ndarray:
    text = path.read_text()
    rows = [ln for ln in text.splitlines() if ln.strip()]
    if not rows:
        raise MalformedFile(f"{path}: empty file")
    try:
        grid = [[int(v) for v in ln.split(",")] for ln in rows]
    except ValueError as exc:
        raise MalformedFile(f"{path}: {exc}") from None
    if len({len(r) for r in grid}) != 1:
        raise MalformedFile(f"{path}: rows have different lengths")
    return np.asarray(grid, dtype=np.int64)


def read_label_map(path) -> np.ndarray:
    path = Path(path)
    if not path.exists() or path.stat().st_size == 0:
        raise MalformedFile(f"{path}: missing or empty")
    if path.suffix.lower() in (".csv", ".txt"):
        return _read_csv(path)
    return _read_pgm(path)


def ingest_label_map(path, num_classes: int) -> SignalGeometry:
    if num_classes < 1:
        raise ValueError("num_classes must be at least 1")
    labels = read_label_map(path)
    if labels.size == 0:
        raise MalformedFile(f"{path}: no pixels")
    bad = (labels < 0) | (labels >= num_classes)
    if bad.any():
        raise LabelOutOfRange(f"{path}: label {int(labels[bad][0])} outside [0, {num_classes})")
    counts = np.bincount(labels.ravel(), minlength=num_classes)
    total = int(labels.size)
    fraction = counts.sum() / num_classes / total
    return SignalGeometry(total, float(fraction), num_classes, tuple(int(c) for c in counts))
