"""Dataset ingestion: phrase files, ground-truth mask images, prediction
round-tripping, and the manifest tying the paths together.

Loading is deterministic: instances sort by (video_id, object_id) and frames
by their zero-padded ids, so repeated loads see identical order.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from PIL import Image

from .masks import Rle, as_mask, decode_rle, encode_rle


class ParseError(ValueError):
    """Malformed phrase-file line; carries the 1-based line number."""

    def __init__(self, path, line_no: int, message: str):
        super().__init__(f"{path}:{line_no}: {message}")
        self.line_no = line_no


class DuplicatePhraseId(ValueError):
    """Merging phrase files produced a phrase-id collision on one instance."""


class MissingFrame(FileNotFoundError):
    """A frame listed for an instance has no mask/image file."""


class DimensionMismatchAcrossFrames(ValueError):
    """Frames of one instance have differing image sizes."""


@dataclass
class Phrase:
    text: str
    source: str


@dataclass
class Instance:
    """One (video, object) referent with its phrases and frame list."""

    video_id: str
    object_id: str
    class_label: str | None = None
    frames: list[str] = field(default_factory=list)
    phrases: dict[str, Phrase] = field(default_factory=dict)

    @property
    def instance_id(self) -> str:
        return f"{self.video_id}/{self.object_id}"


PHRASE_LINE = re.compile(r'^(\S+)\s+(\S+)\s+"(.*)"\s*$')

PHRASE_SOURCES = ("first_frame", "full_video", "a2d", "synthetic")


def load_phrases(path, source: str) -> list[Instance]:
    """Parse a phrase file: one `<video_id> <object_id> "<phrase>"` per line.

    Returns one Instance per (video, object), sorted, with phrase ids
    `<source>-<k>` numbered per instance.
    """
    if source not in PHRASE_SOURCES:
        raise ValueError(f"source must be one of {PHRASE_SOURCES}, got {source!r}")
    instances: dict[tuple[str, str], Instance] = {}
    text = Path(path).read_text(encoding="utf-8")
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        match = PHRASE_LINE.match(line)
        if match is None:
            raise ParseError(path, line_no, f"expected `<video> <object> \"<phrase>\"`, got {line!r}")
        video_id, object_id, phrase = match.groups()
        if not phrase.strip():
            raise ParseError(path, line_no, "empty phrase")
        key = (video_id, object_id)
        inst = instances.setdefault(key, Instance(video_id=video_id, object_id=object_id))
        phrase_id = f"{source}-{sum(1 for p in inst.phrases.values() if p.source == source)}"
        inst.phrases[phrase_id] = Phrase(text=phrase.strip(), source=source)
    return [instances[key] for key in sorted(instances)]


def merge_instances(*instance_lists: Sequence[Instance]) -> list[Instance]:
    """Merge phrase maps across files; same (video, object) becomes one
    Instance. Colliding phrase ids are an error."""
    merged: dict[tuple[str, str], Instance] = {}
    for instances in instance_lists:
        for inst in instances:
            key = (inst.video_id, inst.object_id)
            if key not in merged:
                merged[key] = Instance(
                    video_id=inst.video_id,
                    object_id=inst.object_id,
                    class_label=inst.class_label,
                    frames=list(inst.frames),
                    phrases=dict(inst.phrases),
                )
                continue
            target = merged[key]
            if inst.class_label is not None:
                target.class_label = inst.class_label
            for phrase_id, phrase in inst.phrases.items():
                if phrase_id in target.phrases:
                    raise DuplicatePhraseId(
                        f"phrase id {phrase_id!r} already present on {target.instance_id}"
                    )
                target.phrases[phrase_id] = phrase
    return [merged[key] for key in sorted(merged)]


@dataclass
class DatasetManifest:
    """Resolved dataset paths. `mask_format` is either `binary` (per-object
    mask files, nonzero = foreground) or `indexed` (shared label image,
    pixel value == object id)."""

    root: Path
    split: str
    frames_root: Path
    masks_root: Path
    phrase_files: list[tuple[Path, str]]
    mask_format: str = "binary"
    annotations_path: Path | None = None
    classes_path: Path | None = None
    actor_action_path: Path | None = None

    @classmethod
    def load(cls, path) -> "DatasetManifest":
        path = Path(path)
        doc = json.loads(path.read_text(encoding="utf-8"))
        root = path.parent

        def resolve(rel):
            return (root / rel).resolve() if rel is not None else None

        manifest = cls(
            root=root,
            split=doc.get("split", "default"),
            frames_root=resolve(doc["frames_root"]),
            masks_root=resolve(doc["masks_root"]),
            phrase_files=[(resolve(p["path"]), p["source"]) for p in doc["phrases"]],
            mask_format=doc.get("mask_format", "binary"),
            annotations_path=resolve(doc.get("annotations")),
            classes_path=resolve(doc.get("classes")),
            actor_action_path=resolve(doc.get("actor_action")),
        )
        if manifest.mask_format not in ("binary", "indexed"):
            raise ValueError(f"mask_format must be binary or indexed, got {manifest.mask_format!r}")
        missing = [
            p
            for p in (
                manifest.frames_root,
                manifest.masks_root,
                *(f for f, _ in manifest.phrase_files),
                manifest.annotations_path,
                manifest.classes_path,
                manifest.actor_action_path,
            )
            if p is not None and not p.exists()
        ]
        if missing:
            raise FileNotFoundError(f"manifest references missing paths: {missing}")
        return manifest

    def load_classes(self) -> dict[str, str] | None:
        if self.classes_path is None:
            return None
        return json.loads(self.classes_path.read_text(encoding="utf-8"))

    def load_actor_action(self) -> dict[str, dict[str, str]] | None:
        if self.actor_action_path is None:
            return None
        return json.loads(self.actor_action_path.read_text(encoding="utf-8"))


def _mask_dir(manifest: DatasetManifest, instance: Instance) -> Path:
    if manifest.mask_format == "indexed":
        return manifest.masks_root / instance.video_id
    return manifest.masks_root / instance.video_id / instance.object_id


def load_dataset(manifest: DatasetManifest) -> list[Instance]:
    """Assemble instances: phrases merged across files, frames discovered
    from the mask tree, class labels attached when listed."""
    instances = merge_instances(
        *(load_phrases(path, source) for path, source in manifest.phrase_files)
    )
    classes = manifest.load_classes() or {}
    for inst in instances:
        mask_dir = _mask_dir(manifest, inst)
        if not mask_dir.is_dir():
            raise MissingFrame(f"no mask directory for {inst.instance_id}: {mask_dir}")
        inst.frames = sorted(p.stem for p in mask_dir.glob("*.png"))
        if not inst.frames:
            raise MissingFrame(f"no mask frames for {inst.instance_id} under {mask_dir}")
        inst.class_label = classes.get(inst.instance_id, inst.class_label)
    return instances


def video_catalog(instances: Iterable[Instance]) -> dict[str, dict[str, str]]:
    """video_id -> {object_id: class_label} for difficulty derivation."""
    catalog: dict[str, dict[str, str]] = {}
    for inst in instances:
        catalog.setdefault(inst.video_id, {})[inst.object_id] = inst.class_label or ""
    return catalog


def read_mask_image(path, object_id: str | None = None) -> np.ndarray:
    """Read a mask file. With `object_id`, extract that id's pixels from an
    indexed label image; otherwise binarize (nonzero = foreground)."""
    with Image.open(path) as img:
        arr = np.array(img)
    if arr.ndim == 3:
        arr = arr[..., 0]
    if object_id is None:
        return arr != 0
    return arr == int(object_id)


def write_mask_image(path, mask: np.ndarray) -> None:
    """Write a mask as an 8-bit single-channel PNG (0 / 255)."""
    mask = as_mask(mask)
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(mask.astype(np.uint8) * 255, mode="L").save(path)


def load_gt_masks(
    manifest: DatasetManifest, instance: Instance, allow_ragged: bool = False
) -> list[np.ndarray]:
    """Ground-truth masks for all of an instance's frames, in frame order."""
    mask_dir = _mask_dir(manifest, instance)
    object_id = instance.object_id if manifest.mask_format == "indexed" else None
    masks = []
    for frame in instance.frames:
        path = mask_dir / f"{frame}.png"
        if not path.exists():
            raise MissingFrame(f"{instance.instance_id}: missing mask for frame {frame}")
        masks.append(read_mask_image(path, object_id=object_id))
    shapes = {m.shape for m in masks}
    if len(shapes) > 1 and not allow_ragged:
        raise DimensionMismatchAcrossFrames(
            f"{instance.instance_id}: frame sizes differ: {sorted(shapes)}"
        )
    return masks


def load_frame_image(manifest: DatasetManifest, video_id: str, frame: str) -> np.ndarray:
    """RGB frame as a float array in [0, 1], shape (3, H, W)."""
    path = manifest.frames_root / video_id / f"{frame}.png"
    if not path.exists():
        raise MissingFrame(f"missing frame image {path}")
    with Image.open(path) as img:
        arr = np.array(img.convert("RGB"), dtype=np.float32) / 255.0
    return arr.transpose(2, 0, 1)


def _prediction_path(report_dir, instance: Instance) -> Path:
    return Path(report_dir) / instance.video_id / f"{instance.object_id}.json"


def write_predictions(report_dir, instance: Instance, masks: Sequence[np.ndarray]) -> Path:
    """Store per-frame predictions as RLE JSON; round-trips losslessly."""
    if len(masks) != len(instance.frames):
        raise ValueError(
            f"{len(masks)} masks for {len(instance.frames)} frames of {instance.instance_id}"
        )
    path = _prediction_path(report_dir, instance)
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = {
        "video_id": instance.video_id,
        "object_id": instance.object_id,
        "frames": {
            frame: encode_rle(mask).to_json()
            for frame, mask in zip(instance.frames, masks)
        },
    }
    path.write_text(json.dumps(doc, indent=1, sort_keys=True), encoding="utf-8")
    return path


def load_predictions(report_dir, instance: Instance) -> list[np.ndarray]:
    """Inverse of :func:`write_predictions`, ordered by the instance frames."""
    path = _prediction_path(report_dir, instance)
    doc = json.loads(path.read_text(encoding="utf-8"))
    masks = []
    for frame in instance.frames:
        if frame not in doc["frames"]:
            raise MissingFrame(f"{instance.instance_id}: no stored prediction for frame {frame}")
        masks.append(decode_rle(Rle.from_json(doc["frames"][frame])))
    return masks
