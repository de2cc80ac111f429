"""Samples, palettes, dataset directories and the synthetic beacon dataset."""
import os
from dataclasses import dataclass

import numpy as np

from . import netpbm
from .errors import ConfigurationError, ValidationError
from .objective import IGNORE

BODY_A, BODY_B, BEACON = 0, 1, 2
BEACON_COLOR = (1.0, 0.0, 0.0)


@dataclass
class Sample:
    image: np.ndarray  # [H, W, 3] float64 in [0, 1]
    labels: np.ndarray  # [H, W] uint8, IGNORE marks void pixels
    id: str

    def __post_init__(self):
        if self.image.shape[:2] != self.labels.shape:
            raise ValidationError(f"sample {self.id}: image {self.image.shape} vs labels {self.labels.shape}")


@dataclass
class Palette:
    names: list
    colors: list  # (r, g, b) 0-255

    def __len__(self):
        return len(self.names)

    def colorize(self, labels):
        lut = np.zeros((256, 3), dtype=np.uint8)
        lut[: len(self.colors)] = self.colors
        return lut[np.asarray(labels, dtype=np.uint8)]

    def to_text(self):
        return "".join(f"{i} {n} {r} {g} {b}\n" for i, (n, (r, g, b)) in enumerate(zip(self.names, self.colors)))

    @classmethod
    def from_text(cls, text):
        rows = {}
        for line in text.splitlines():
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            if len(parts) != 5:
                raise ValidationError(f"palette line {line!r} is not 'id name r g b'")
            rows[int(parts[0])] = (parts[1], tuple(int(v) for v in parts[2:]))
        if sorted(rows) != list(range(len(rows))):
            raise ValidationError("palette ids must be dense from 0")
        return cls([rows[i][0] for i in range(len(rows))], [rows[i][1] for i in range(len(rows))])


BEACON_PALETTE = Palette(["body_a", "body_b", "beacon"], [(40, 120, 220), (230, 160, 40), (220, 20, 20)])


def gen_beacon_dataset(n, size=32, seed=0, beacon=4, levels=8):
    """Images whose body class is decided only by which top corner holds a red beacon.

    The body is grey noise drawn from ``levels`` evenly spaced intensities in
    [0.1, 0.7]; the same generator is used for both body classes.
    """
    if size < 16:
        raise ConfigurationError(f"beacon images need size >= 16, got {size}")
    rng = np.random.default_rng(seed)
    grey = np.linspace(0.1, 0.7, levels)
    samples = []
    for k in range(n):
        right = bool(rng.integers(2))
        image = np.repeat(grey[rng.integers(levels, size=(size, size))][..., None], 3, axis=2)
        labels = np.full((size, size), BODY_B if right else BODY_A, dtype=np.uint8)
        cols = slice(size - beacon, size) if right else slice(0, beacon)
        image[:beacon, cols] = BEACON_COLOR
        labels[:beacon, cols] = BEACON
        samples.append(Sample(image, labels, f"beacon{k:04d}"))
    return samples


def image_to_uint8(image):
    return np.clip(np.rint(np.asarray(image) * 255.0), 0, 255).astype(np.uint8)


def save_image(path, image):
    netpbm.write(path, image_to_uint8(image))


def load_image(path):
    return netpbm.read_ppm(path).astype(np.float64) / 255.0


def save_labelmap(path, labels, palette=None):
    """Write labels as PGM; with a palette also write ``<stem>_color.ppm``."""
    labels = np.asarray(labels, dtype=np.uint8)
    netpbm.write(path, labels)
    if palette is not None:
        stem, _ = os.path.splitext(path)
        netpbm.write(stem + "_color.ppm", palette.colorize(labels))


def load_labelmap(path, num_classes=None):
    labels = netpbm.read_pgm(path)
    if num_classes is not None:
        bad = (labels >= num_classes) & (labels != IGNORE)
        if bad.any():
            i, j = np.argwhere(bad)[0]
            raise ValidationError(f"{path}: class id {labels[i, j]} at ({i}, {j}) >= {num_classes}")
    return labels


def load_sample(root, sample_id, num_classes=None):
    image = load_image(os.path.join(root, "images", f"{sample_id}.ppm"))
    labels = load_labelmap(os.path.join(root, "labels", f"{sample_id}.pgm"), num_classes)
    return Sample(image, labels, sample_id)


def write_dataset(root, samples, palette, split):
    """``split`` maps sample id to ``"train"`` or ``"test"``."""
    os.makedirs(os.path.join(root, "images"), exist_ok=True)
    os.makedirs(os.path.join(root, "labels"), exist_ok=True)
    for s in samples:
        save_image(os.path.join(root, "images", f"{s.id}.ppm"), s.image)
        netpbm.write(os.path.join(root, "labels", f"{s.id}.pgm"), s.labels)
    with open(os.path.join(root, "palette.txt"), "w") as fh:
        fh.write(palette.to_text())
    with open(os.path.join(root, "split.txt"), "w") as fh:
        fh.writelines(f"{s.id} {split[s.id]}\n" for s in samples)


def read_palette(root):
    with open(os.path.join(root, "palette.txt")) as fh:
        return Palette.from_text(fh.read())


def read_split(root):
    split = {}
    with open(os.path.join(root, "split.txt")) as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 2 or parts[1] not in ("train", "test"):
                raise ValidationError(f"split line {line.strip()!r} is not '<id> train|test'")
            split[parts[0]] = parts[1]
    return split


def load_dataset(root, subset="train"):
    palette = read_palette(root)
    split = read_split(root)
    ids = [i for i, s in split.items() if s == subset]
    return [load_sample(root, i, len(palette)) for i in ids], palette
