"""Dataset evaluation: run a predictor over a manifest, score every
(instance, phrase) unit, aggregate per the requested RE handling, and attach
difficulty / category-presence groups.

The paper-style breakdowns need side information: difficulty comes from the
class catalog (or voted annotations as a fallback), category presence from
voted annotation sets, and the phrase-variant modes from per-instance
actor/action metadata.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from . import data as dio
from .masks import as_mask
from .metrics import (
    DEFAULT_THRESHOLDS,
    EvalReport,
    InstanceResult,
    default_tolerance,
    grouped_report,
    score_instance,
)
from .taxonomy import (
    AnnotationRecord,
    MissingField,
    PHRASE_MODES,
    VotedAnnotation,
    auto_difficulty,
    group_records,
    phrase_variant,
    vote_annotations,
)

RE_AGGREGATIONS = ("per_re", "mean", "best")

# Table-5 style display names for the four major categories.
CATEGORY_GROUPS = (
    ("appearance", "App"),
    ("location", "Loc"),
    ("motion", "Motion"),
    ("static", "Static"),
)


class Predictor:
    """Produces per-frame masks for one instance given a phrase."""

    name = "predictor"

    def predict_instance(self, manifest, instance, phrase_text, gts):
        raise NotImplementedError


class OraclePredictor(Predictor):
    """Returns the ground truth; used for format-level report checks."""

    name = "oracle"

    def predict_instance(self, manifest, instance, phrase_text, gts):
        return [gt.copy() for gt in gts]


class StoredPredictor(Predictor):
    """Replays masks previously written with data.write_predictions."""

    def __init__(self, predictions_dir):
        self.predictions_dir = Path(predictions_dir)
        self.name = f"stored:{self.predictions_dir.name}"

    def predict_instance(self, manifest, instance, phrase_text, gts):
        return dio.load_predictions(self.predictions_dir, instance)


class ModelPredictor(Predictor):
    """Runs a trained checkpoint frame by frame."""

    def __init__(self, model, vocab, checkpoint_name="checkpoint"):
        from .model import Tokenizer

        self.model = model
        self.model.eval()
        self.tokenizer = Tokenizer(vocab, max_tokens=model.config.max_tokens)
        self.name = checkpoint_name

    def predict_instance(self, manifest, instance, phrase_text, gts):
        tokens = self.tokenizer.encode(phrase_text)
        masks = []
        for frame in instance.frames:
            image = dio.load_frame_image(manifest, instance.video_id, frame)
            masks.append(as_mask(self.model.predict(image, tokens)))
        return masks


@dataclass
class EvalOptions:
    phrase_modes: tuple[str, ...] = ("full",)
    group_by: tuple[str, ...] = ()
    re_aggregation: str = "per_re"
    tolerance: int | None = None
    thresholds: tuple[float, ...] = DEFAULT_THRESHOLDS

    def validate(self) -> None:
        for mode in self.phrase_modes:
            if mode not in PHRASE_MODES:
                raise ValueError(f"unknown phrase mode {mode!r}")
        for group in self.group_by:
            if group not in ("difficulty", "category"):
                raise ValueError(f"unknown grouping {group!r}")
        if self.re_aggregation not in RE_AGGREGATIONS:
            raise ValueError(f"unknown RE aggregation {self.re_aggregation!r}")


@dataclass
class EvalDocument:
    """One evaluation run: a report per phrase mode plus run metadata."""

    predictor: str
    split: str
    re_aggregation: str
    tolerance: int
    modes: dict[str, EvalReport] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "kind": "evaluation",
            "predictor": self.predictor,
            "split": self.split,
            "re_aggregation": self.re_aggregation,
            "tolerance": self.tolerance,
            "modes": {mode: report.to_json() for mode, report in self.modes.items()},
            "warnings": self.warnings,
        }

    @classmethod
    def from_json(cls, doc: Mapping) -> "EvalDocument":
        return cls(
            predictor=doc["predictor"],
            split=doc["split"],
            re_aggregation=doc["re_aggregation"],
            tolerance=doc["tolerance"],
            modes={m: EvalReport.from_json(r) for m, r in doc["modes"].items()},
            warnings=list(doc.get("warnings", [])),
        )


def load_voted_annotations(path) -> dict[tuple[str, str], VotedAnnotation]:
    """JSONL annotation records -> majority-voted labels per (instance, phrase)."""
    records = []
    with open(path, encoding="utf-8") as stream:
        for line in stream:
            if line.strip():
                records.append(AnnotationRecord.from_json(json.loads(line)))
    return {key: vote_annotations(group) for key, group in group_records(records).items()}


def _unit_id(instance_id: str, phrase_id: str) -> str:
    return f"{instance_id}#{phrase_id}"


def _aggregate(results: list[InstanceResult], instance_id: str, how: str) -> InstanceResult:
    if len(results) == 1:
        single = results[0]
        if how == "per_re":
            return single
        return InstanceResult(
            instance_id=instance_id,
            frame_j=single.frame_j,
            frame_f=single.frame_f,
            intersection=single.intersection,
            union=single.union,
        )
    if how == "best":
        best = max(results, key=lambda r: r.jf)
        return InstanceResult(
            instance_id=instance_id,
            frame_j=best.frame_j,
            frame_f=best.frame_f,
            intersection=best.intersection,
            union=best.union,
        )
    # mean over RE variants: every variant scores the same frame list, so
    # concatenating per-frame scores averages the variants equally
    return InstanceResult(
        instance_id=instance_id,
        frame_j=tuple(v for r in results for v in r.frame_j),
        frame_f=tuple(v for r in results for v in r.frame_f),
        intersection=sum(r.intersection for r in results),
        union=sum(r.union for r in results),
    )


def evaluate_dataset(
    manifest: dio.DatasetManifest,
    predictor: Predictor,
    options: EvalOptions,
) -> EvalDocument:
    options.validate()
    instances = dio.load_dataset(manifest)
    if not instances:
        raise ValueError("manifest contains no instances")

    voted = None
    if manifest.annotations_path is not None:
        voted = load_voted_annotations(manifest.annotations_path)
    actor_action = manifest.load_actor_action()
    classes = manifest.load_classes()
    catalog = dio.video_catalog(instances) if classes else None

    gts = {
        inst.instance_id: dio.load_gt_masks(manifest, inst) for inst in instances
    }
    sample = next(iter(gts.values()))[0]
    tolerance = (
        options.tolerance
        if options.tolerance is not None
        else default_tolerance(*sample.shape)
    )

    document = EvalDocument(
        predictor=predictor.name,
        split=manifest.split,
        re_aggregation=options.re_aggregation,
        tolerance=tolerance,
    )

    for mode in options.phrase_modes:
        results: list[InstanceResult] = []
        unit_phrases: dict[str, list[str]] = {}
        for inst in instances:
            phrase_jobs = _phrases_for_mode(inst, mode, actor_action)
            per_phrase = []
            for phrase_id, text in phrase_jobs:
                preds = predictor.predict_instance(manifest, inst, text, gts[inst.instance_id])
                per_phrase.append(
                    score_instance(
                        _unit_id(inst.instance_id, phrase_id),
                        preds,
                        gts[inst.instance_id],
                        tolerance,
                    )
                )
            if options.re_aggregation == "per_re":
                results.extend(per_phrase)
                for (phrase_id, _), result in zip(phrase_jobs, per_phrase):
                    unit_phrases[result.instance_id] = [phrase_id]
            else:
                merged = _aggregate(per_phrase, inst.instance_id, options.re_aggregation)
                results.append(merged)
                unit_phrases[merged.instance_id] = [pid for pid, _ in phrase_jobs]

        group_fn, group_warnings = _build_group_fn(
            options.group_by, instances, unit_phrases, voted, catalog
        )
        document.warnings.extend(f"{mode}: {w}" for w in group_warnings)
        document.modes[mode] = grouped_report(results, group_fn, options.thresholds)

    return document


def _phrases_for_mode(instance, mode, actor_action) -> list[tuple[str, str]]:
    ordered = sorted(instance.phrases)
    if not ordered:
        raise ValueError(f"{instance.instance_id} has no phrases")
    full_phrase = instance.phrases[ordered[0]].text
    if mode == "full":
        return [(pid, instance.phrases[pid].text) for pid in ordered]
    metadata = {"full_phrase": full_phrase}
    if actor_action is not None:
        metadata.update(actor_action.get(instance.instance_id, {}))
    if mode in ("actor", "action", "actor_action") and actor_action is None:
        raise MissingField(
            f"phrase mode {mode!r} needs the manifest's actor_action metadata"
        )
    return [(f"variant-{mode}", phrase_variant(metadata, mode))]


def _build_group_fn(group_by, instances, unit_phrases, voted, catalog):
    """Label assigner for grouped reports plus any warnings about groupings
    that had to be skipped."""
    warnings: list[str] = []
    difficulty_by_instance: dict[str, str] = {}
    if "difficulty" in group_by:
        if catalog is not None:
            for inst in instances:
                difficulty_by_instance[inst.instance_id] = auto_difficulty(
                    inst.video_id, inst.object_id, catalog
                )
        elif voted:
            for (instance_id, _), item in voted.items():
                # an object is non-trivial if any of its phrases says so
                if difficulty_by_instance.get(instance_id) != "non_trivial":
                    difficulty_by_instance[instance_id] = item.difficulty
        else:
            warnings.append("difficulty grouping skipped: no classes file or annotations")

    category_lookup = voted or {}
    if "category" in group_by and not voted:
        warnings.append("category grouping skipped: no annotations in manifest")

    def group_fn(result: InstanceResult):
        instance_id, _, phrase_id = result.instance_id.partition("#")
        labels = []
        if difficulty_by_instance:
            difficulty = difficulty_by_instance.get(instance_id)
            if difficulty:
                labels.append(difficulty)
        if "category" in group_by and voted:
            phrase_ids = unit_phrases.get(result.instance_id, [phrase_id] if phrase_id else [])
            for category, display in CATEGORY_GROUPS:
                presence = {
                    category_lookup[(instance_id, pid)].categories.flags[category]
                    for pid in phrase_ids
                    if (instance_id, pid) in category_lookup
                }
                if len(presence) == 1:
                    labels.append(("+" if presence.pop() else "-") + display)
        return labels

    return group_fn, warnings
