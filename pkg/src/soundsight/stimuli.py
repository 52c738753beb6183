"""Procedural training/testing stimuli: lesson shapes and a synthetic object corpus.

Everything renders as a binary mask (white 255 figure on black 0 background,
no anti-aliasing) so pixel-exact invariants hold and every image is a pure
function of its spec. The object corpus emulates a turntable photo library:
10 silhouette classes, 72 in-plane poses at 5 degree steps, light seeded
jitter, and a 10-image-per-class held-out test split.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .image import GrayImage, image_read, pgm_write

LESSON_SHAPES = "shapes"
LESSON_L_SHAPES = "l-shapes"
LESSON_ORIENTATION = "orientation"
LESSON_LENGTH = "length"
LESSON_LOCATION = "location"
LESSON_OBJECTS = "objects"

PRELIMINARY_LESSONS = (
    LESSON_SHAPES,
    LESSON_L_SHAPES,
    LESSON_ORIENTATION,
    LESSON_LENGTH,
    LESSON_LOCATION,
)

ORIENTATION_DEGREES = (0, 22, -22, 45, -45, 90)
LOCATIONS = ("upper-left", "upper-right", "bottom-left", "bottom-right", "center")
BAR_THICKNESS = 3


@dataclass(frozen=True)
class StimulusSpec:
    lesson: str
    class_label: str
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class StimulusItem:
    stimulus_id: str
    spec: StimulusSpec
    image: GrayImage
    split: str  # "train" or "test"

    @property
    def label(self) -> str:
        return self.spec.class_label

    @property
    def lesson(self) -> str:
        return self.spec.lesson


@dataclass
class StimulusCorpus:
    items: list[StimulusItem]
    seed: int

    def __post_init__(self):
        ids = [item.stimulus_id for item in self.items]
        if len(set(ids)) != len(ids):
            raise ValueError("stimulus ids must be unique")

    def by_id(self, stimulus_id: str) -> StimulusItem:
        for item in self.items:
            if item.stimulus_id == stimulus_id:
                return item
        raise KeyError(stimulus_id)

    def lesson_items(self, lesson: str) -> list[StimulusItem]:
        return [item for item in self.items if item.lesson == lesson]

    def split_items(self, lesson: str, split: str) -> list[StimulusItem]:
        return [item for item in self.items if item.lesson == lesson and item.split == split]

    def labels(self, lesson: str) -> list[str]:
        seen: dict[str, None] = {}
        for item in self.lesson_items(lesson):
            seen.setdefault(item.label)
        return list(seen)


def _pixel_grid(size: int) -> tuple[np.ndarray, np.ndarray]:
    """Pixel-center coordinates: x right, y down, origin at image center."""
    centers = np.arange(size) + 0.5 - size / 2.0
    return np.meshgrid(centers, centers)  # (x, y) each (size, size)


def _mask_to_image(mask: np.ndarray) -> GrayImage:
    return GrayImage(np.where(mask, 255, 0).astype(np.uint8))


def _circle_mask(size: int, cx: float, cy: float, radius: float) -> np.ndarray:
    x, y = _pixel_grid(size)
    return (x - cx) ** 2 + (y - cy) ** 2 <= radius**2


def _axis_aligned_bar(size: int, length: int, thickness: int, horizontal: bool) -> np.ndarray:
    # Integer pixel ranges keep the white-pixel count exactly length*thickness
    # and make the horizontal bar the exact transpose of the vertical one.
    mask = np.zeros((size, size), dtype=bool)
    long0 = (size - length) // 2
    thin0 = (size - thickness) // 2
    if horizontal:
        mask[thin0 : thin0 + thickness, long0 : long0 + length] = True
    else:
        mask[long0 : long0 + length, thin0 : thin0 + thickness] = True
    return mask


def _rotated_bar(size: int, length: float, thickness: float, angle_deg: float) -> np.ndarray:
    """Bar tilted `angle_deg` clockwise from vertical, centered."""
    angle = angle_deg % 180.0
    if angle == 0.0:
        return _axis_aligned_bar(size, int(length), int(thickness), horizontal=False)
    if angle == 90.0:
        return _axis_aligned_bar(size, int(length), int(thickness), horizontal=True)
    x, y = _pixel_grid(size)
    theta = math.radians(angle_deg)
    along = x * math.sin(theta) - y * math.cos(theta)  # y grows downward
    across = x * math.cos(theta) + y * math.sin(theta)
    return (np.abs(along) <= length / 2.0) & (np.abs(across) <= thickness / 2.0)


def _triangle_mask(size: int) -> np.ndarray:
    x, y = _pixel_grid(size)
    height = 0.62 * size
    top = -height / 2.0
    frac = (y - top) / height
    return (frac >= 0) & (frac <= 1) & (np.abs(x) <= frac * height / 2.0)


def _l_shape_mask(size: int, backward: bool, upside_down: bool) -> np.ndarray:
    x, y = _pixel_grid(size)
    if backward:
        x = -x
    if upside_down:
        y = -y
    thick = 0.16 * size
    stem = (x >= -0.22 * size) & (x <= -0.22 * size + thick) & (np.abs(y) <= 0.3 * size)
    foot = (
        (y >= 0.3 * size - thick)
        & (y <= 0.3 * size)
        & (x >= -0.22 * size)
        & (x <= 0.22 * size)
    )
    return stem | foot


# --- object silhouettes ----------------------------------------------------
# Template space: u right, v UP, figure roughly inside [-0.4, 0.4]^2.


def _rect(u, v, u0, u1, v0, v1):
    return (u >= u0) & (u <= u1) & (v >= v0) & (v <= v1)


def _ellipse(u, v, cu, cv, ru, rv):
    return ((u - cu) / ru) ** 2 + ((v - cv) / rv) ** 2 <= 1.0


def _tri(u, v, p1, p2, p3):
    def side(a, b):
        return (b[0] - a[0]) * (v - a[1]) - (b[1] - a[1]) * (u - a[0])

    d1, d2, d3 = side(p1, p2), side(p2, p3), side(p3, p1)
    return ((d1 >= 0) & (d2 >= 0) & (d3 >= 0)) | ((d1 <= 0) & (d2 <= 0) & (d3 <= 0))


def _tpl_car(u, v):
    body = _rect(u, v, -0.38, 0.38, -0.08, 0.1)
    cabin = _rect(u, v, -0.18, 0.14, 0.1, 0.26)
    wheels = _ellipse(u, v, -0.22, -0.12, 0.09, 0.09) | _ellipse(u, v, 0.22, -0.12, 0.09, 0.09)
    return body | cabin | wheels


def _tpl_cat(u, v):
    body = _ellipse(u, v, 0.0, -0.12, 0.26, 0.2)
    head = _ellipse(u, v, 0.0, 0.2, 0.15, 0.14)
    ears = _tri(u, v, (-0.16, 0.26), (-0.02, 0.3), (-0.14, 0.44)) | _tri(
        u, v, (0.16, 0.26), (0.02, 0.3), (0.14, 0.44)
    )
    tail = _rect(u, v, 0.24, 0.42, -0.3, -0.22)
    return body | head | ears | tail


def _tpl_bottle(u, v):
    body = _rect(u, v, -0.14, 0.14, -0.38, 0.08)
    shoulder = _tri(u, v, (-0.14, 0.08), (0.14, 0.08), (0.0, 0.26))
    neck = _rect(u, v, -0.05, 0.05, 0.08, 0.34)
    cap = _rect(u, v, -0.08, 0.08, 0.34, 0.42)
    return body | shoulder | neck | cap


def _tpl_cup(u, v):
    body = _rect(u, v, -0.2, 0.16, -0.28, 0.22)
    ring = _ellipse(u, v, 0.16, -0.03, 0.16, 0.14) & ~_ellipse(u, v, 0.16, -0.03, 0.09, 0.07)
    return body | (ring & (u >= 0.16))


def _tpl_block(u, v):
    return _rect(u, v, -0.27, 0.27, -0.27, 0.27)


def _tpl_duck(u, v):
    body = _ellipse(u, v, -0.05, -0.1, 0.3, 0.19)
    head = _ellipse(u, v, 0.18, 0.16, 0.12, 0.12)
    beak = _tri(u, v, (0.28, 0.2), (0.28, 0.1), (0.42, 0.15))
    return body | head | beak


def _tpl_pot(u, v):
    body = _ellipse(u, v, 0.0, -0.08, 0.31, 0.24) & (v <= 0.12)
    rim = _rect(u, v, -0.34, 0.34, 0.12, 0.2)
    return body | rim


def _tpl_jar(u, v):
    body = _rect(u, v, -0.22, 0.22, -0.32, 0.18)
    lid = _rect(u, v, -0.26, 0.26, 0.18, 0.28)
    return body | lid


def _tpl_tool(u, v):
    handle = _rect(u, v, -0.05, 0.05, -0.4, 0.16)
    head = _rect(u, v, -0.24, 0.24, 0.16, 0.3)
    claw = _tri(u, v, (-0.24, 0.16), (-0.24, 0.3), (-0.38, 0.07))
    return handle | head | claw


def _tpl_toy(u, v):
    return _rect(u, v, -0.32, 0.32, -0.11, 0.11) | _rect(u, v, -0.11, 0.11, -0.32, 0.32)


OBJECT_TEMPLATES = {
    "car": _tpl_car,
    "cat": _tpl_cat,
    "bottle": _tpl_bottle,
    "cup": _tpl_cup,
    "block": _tpl_block,
    "duck": _tpl_duck,
    "pot": _tpl_pot,
    "jar": _tpl_jar,
    "tool": _tpl_tool,
    "toy": _tpl_toy,
}


def render_object(
    label: str,
    size: int,
    pose_deg: float = 0.0,
    shift_x: float = 0.0,
    shift_y: float = 0.0,
    scale: float = 1.0,
) -> GrayImage:
    """Render an object template at an in-plane pose with optional jitter."""
    if label not in OBJECT_TEMPLATES:
        raise ValueError(f"unknown object template {label!r}; have {sorted(OBJECT_TEMPLATES)}")
    x, y = _pixel_grid(size)
    up = -(y + shift_y)  # template v axis points up
    right = x - shift_x
    theta = math.radians(pose_deg)
    u = (right * math.cos(theta) + up * math.sin(theta)) / (scale * size)
    v = (-right * math.sin(theta) + up * math.cos(theta)) / (scale * size)
    return _mask_to_image(OBJECT_TEMPLATES[label](u, v))


def _lesson_lengths(size: int) -> list[int]:
    return [max(4, round(size * k / 16)) for k in (3, 5, 7, 9, 11)]


def render_shape(spec: StimulusSpec, size: int) -> GrayImage:
    """Render any stimulus spec at the given square image size."""
    if size < 32:
        raise ValueError(f"size must be >= 32, got {size}")
    lesson, label = spec.lesson, spec.class_label
    if lesson == LESSON_SHAPES:
        if label == "circle":
            return _mask_to_image(_circle_mask(size, 0.0, 0.0, 0.3 * size))
        if label == "triangle":
            return _mask_to_image(_triangle_mask(size))
        if label == "square":
            x, y = _pixel_grid(size)
            return _mask_to_image((np.abs(x) <= 0.27 * size) & (np.abs(y) <= 0.27 * size))
    elif lesson == LESSON_L_SHAPES:
        variants = {
            "l-normal": (False, False),
            "l-backward": (True, False),
            "l-upside-down": (False, True),
            "l-backward-upside-down": (True, True),
        }
        if label in variants:
            return _mask_to_image(_l_shape_mask(size, *variants[label]))
    elif lesson == LESSON_ORIENTATION:
        if "orientation_deg" in spec.params:
            length = round(0.625 * size)
            return _mask_to_image(
                _rotated_bar(size, length, BAR_THICKNESS, float(spec.params["orientation_deg"]))
            )
    elif lesson == LESSON_LENGTH:
        if "length_px" in spec.params:
            return _mask_to_image(
                _rotated_bar(
                    size,
                    int(spec.params["length_px"]),
                    BAR_THICKNESS,
                    float(spec.params.get("orientation_deg", 0)),
                )
            )
    elif lesson == LESSON_LOCATION:
        offsets = {
            "upper-left": (-0.25, -0.25),
            "upper-right": (0.25, -0.25),
            "bottom-left": (-0.25, 0.25),
            "bottom-right": (0.25, 0.25),
            "center": (0.0, 0.0),
        }
        if label in offsets:
            dx, dy = offsets[label]
            return _mask_to_image(_circle_mask(size, dx * size, dy * size, 0.125 * size))
    elif lesson == LESSON_OBJECTS:
        return render_object(
            label,
            size,
            pose_deg=float(spec.params.get("pose_deg", 0.0)),
            shift_x=float(spec.params.get("shift_x", 0.0)),
            shift_y=float(spec.params.get("shift_y", 0.0)),
            scale=float(spec.params.get("scale", 1.0)),
        )
    raise ValueError(f"unknown stimulus {lesson!r}/{label!r}")


def gen_lesson_set(lesson: str, size: int) -> list[tuple[StimulusSpec, GrayImage]]:
    """All stimuli of one preliminary lesson, in their fixed canonical order."""
    specs: list[StimulusSpec]
    if lesson == LESSON_SHAPES:
        specs = [StimulusSpec(lesson, label) for label in ("circle", "triangle", "square")]
    elif lesson == LESSON_L_SHAPES:
        specs = [
            StimulusSpec(lesson, label)
            for label in ("l-normal", "l-upside-down", "l-backward", "l-backward-upside-down")
        ]
    elif lesson == LESSON_ORIENTATION:
        specs = [
            StimulusSpec(lesson, f"{deg}deg", {"orientation_deg": deg})
            for deg in ORIENTATION_DEGREES
        ]
    elif lesson == LESSON_LENGTH:
        orientations = (0, 90, 45, -45, 0)
        specs = [
            StimulusSpec(
                lesson,
                f"len{rank + 1}",
                {"length_px": length, "orientation_deg": orientations[rank]},
            )
            for rank, length in enumerate(_lesson_lengths(size))
        ]
    elif lesson == LESSON_LOCATION:
        specs = [StimulusSpec(lesson, label) for label in LOCATIONS]
    else:
        raise ValueError(f"unknown preliminary lesson {lesson!r}")
    return [(spec, render_shape(spec, size)) for spec in specs]


def gen_lesson_corpus(size: int = 64) -> StimulusCorpus:
    """The full 23-image preliminary lesson set as a corpus."""
    items = []
    for lesson in PRELIMINARY_LESSONS:
        for spec, img in gen_lesson_set(lesson, size):
            items.append(StimulusItem(f"{lesson}-{spec.class_label}", spec, img, "train"))
    return StimulusCorpus(items, seed=0)


def gen_object_corpus(
    n_classes: int = 10, per_class: int = 72, size: int = 64, seed: int = 0
) -> StimulusCorpus:
    """Synthetic turntable corpus: per_class poses at 5 degree steps per class.

    Each item adds seeded jitter (within +-2 px translation, +-5% scale) on
    top of its pose rotation; 10 items per class are held out as the test
    split, the rest are train.
    """
    if n_classes > len(OBJECT_TEMPLATES):
        raise ValueError(f"at most {len(OBJECT_TEMPLATES)} object classes available")
    if per_class < 11:
        raise ValueError("per_class must be >= 11 to leave a 10-image test split")
    rng = np.random.default_rng(seed)
    labels = sorted(OBJECT_TEMPLATES)[:n_classes]
    items = []
    for label in labels:
        test_idx = set(rng.choice(per_class, size=10, replace=False).tolist())
        for k in range(per_class):
            params = {
                "pose_deg": (5.0 * k) % 360.0,
                "shift_x": float(np.round(rng.uniform(-2.0, 2.0), 6)),
                "shift_y": float(np.round(rng.uniform(-2.0, 2.0), 6)),
                "scale": float(np.round(rng.uniform(0.95, 1.05), 6)),
            }
            spec = StimulusSpec(LESSON_OBJECTS, label, params)
            items.append(
                StimulusItem(
                    f"{label}-{k:03d}",
                    spec,
                    render_shape(spec, size),
                    "test" if k in test_idx else "train",
                )
            )
    return StimulusCorpus(items, seed=seed)


MANIFEST_NAME = "manifest.csv"
_MANIFEST_FIELDS = ["id", "label", "lesson", "path", "split", "params"]


def corpus_write(corpus: StimulusCorpus, out_dir) -> Path:
    """Write PGM files plus the manifest; appends if a manifest already exists."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = out / MANIFEST_NAME
    existing = []
    if manifest.exists():
        with open(manifest, newline="") as fh:
            existing = list(csv.DictReader(fh))
        taken = {row["id"] for row in existing}
        clash = taken & {item.stimulus_id for item in corpus.items}
        if clash:
            raise ValueError(f"manifest already contains ids {sorted(clash)[:3]}...")
    rows = list(existing)
    for item in corpus.items:
        rel = f"{item.stimulus_id}.pgm"
        pgm_write(item.image, out / rel)
        rows.append(
            {
                "id": item.stimulus_id,
                "label": item.label,
                "lesson": item.lesson,
                "path": rel,
                "split": item.split,
                "params": json.dumps(item.spec.params, sort_keys=True),
            }
        )
    with open(manifest, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=_MANIFEST_FIELDS)
        writer.writeheader()
        writer.writerows(rows)
    return manifest


def corpus_read(manifest_path) -> StimulusCorpus:
    """Load a corpus from a manifest file (or a directory holding manifest.csv)."""
    path = Path(manifest_path)
    if path.is_dir():
        path = path / MANIFEST_NAME
    base = path.parent
    items = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            spec = StimulusSpec(row["lesson"], row["label"], json.loads(row["params"] or "{}"))
            image = image_read(base / row["path"])
            items.append(StimulusItem(row["id"], spec, image, row["split"]))
    if not items:
        raise ValueError(f"{path}: empty corpus manifest")
    return StimulusCorpus(items, seed=0)
