"""Referring-expression taxonomy: difficulty and correctness labels, the seven
semantic categories, multi-annotator aggregation, agreement statistics, and
paired-RE validation for the category-toggle augmentation."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

# Category order is fixed; it is also the order the annotation checklist uses.
CATEGORIES: tuple[str, ...] = (
    "appearance",
    "category",
    "location",
    "motion",
    "obj_motion",
    "static",
    "obj_static",
)

DIFFICULTY_VALUES = ("trivial", "non_trivial")
CORRECTNESS_VALUES = ("valid_re", "no_re", "wrong_object")
REDUNDANCY_VALUES = ("redundant", "minimal")

# A category counts as voted when at least this many annotators marked it.
MAJORITY_THRESHOLD = 2


class UnknownInstance(KeyError):
    """Instance not present in the video catalog."""


class DuplicateAnnotator(ValueError):
    """Two records from the same annotator for one (instance, phrase)."""


class MixedInstance(ValueError):
    """Records for different (instance, phrase) keys were mixed together."""


class RaggedMatrix(ValueError):
    """Agreement matrix rows do not all have the same number of raters."""


class EmptyInput(ValueError):
    """A statistic was requested over zero items."""


class MissingCategorySet(KeyError):
    """A paired RE references a phrase with no voted category set."""


class MissingField(ValueError):
    """Phrase-variant construction needs a metadata field that is absent."""


@dataclass
class AnnotationRecord:
    """One annotator's labels for one (instance, phrase)."""

    annotator_id: str
    instance_id: str
    phrase_id: str
    difficulty: str
    correctness: str
    categories: dict[str, bool]
    redundancy: str
    timestamp: str

    def validate(self) -> None:
        if not self.annotator_id:
            raise ValueError("annotator_id must be nonempty")
        if self.difficulty not in DIFFICULTY_VALUES:
            raise ValueError(f"difficulty must be one of {DIFFICULTY_VALUES}")
        if self.correctness not in CORRECTNESS_VALUES:
            raise ValueError(f"correctness must be one of {CORRECTNESS_VALUES}")
        if self.redundancy not in REDUNDANCY_VALUES:
            raise ValueError(f"redundancy must be one of {REDUNDANCY_VALUES}")
        if set(self.categories) != set(CATEGORIES):
            unknown = set(self.categories) - set(CATEGORIES)
            missing = set(CATEGORIES) - set(self.categories)
            raise ValueError(
                f"category flags must cover exactly the 7 categories"
                f" (unknown: {sorted(unknown)}, missing: {sorted(missing)})"
            )
        if not all(isinstance(v, bool) for v in self.categories.values()):
            raise ValueError("category flags must be booleans")

    def to_json(self) -> dict:
        return {
            "annotator_id": self.annotator_id,
            "instance_id": self.instance_id,
            "phrase_id": self.phrase_id,
            "difficulty": self.difficulty,
            "correctness": self.correctness,
            "categories": {c: self.categories[c] for c in CATEGORIES},
            "redundancy": self.redundancy,
            "timestamp": self.timestamp,
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> "AnnotationRecord":
        record = cls(
            annotator_id=obj["annotator_id"],
            instance_id=obj["instance_id"],
            phrase_id=obj["phrase_id"],
            difficulty=obj["difficulty"],
            correctness=obj["correctness"],
            categories=dict(obj["categories"]),
            redundancy=obj["redundancy"],
            timestamp=obj["timestamp"],
        )
        record.validate()
        return record


@dataclass
class CategorySet:
    """Majority-voted category flags with the underlying vote counts."""

    flags: dict[str, bool]
    vote_counts: dict[str, int]
    n_annotators: int

    def true_categories(self) -> frozenset[str]:
        return frozenset(c for c in CATEGORIES if self.flags[c])

    @classmethod
    def from_flags(cls, flags: Mapping[str, bool]) -> "CategorySet":
        """A single-source set, e.g. hand-written ground truth in tests."""
        full = {c: bool(flags.get(c, False)) for c in CATEGORIES}
        return cls(flags=full, vote_counts={c: int(full[c]) for c in CATEGORIES}, n_annotators=1)


@dataclass(frozen=True)
class PairedRE:
    """A base phrase and a variant differing in exactly one category."""

    instance_id: str
    base_phrase_id: str
    variant_phrase_id: str
    toggled_category: str
    presence_in_variant: bool

    def to_json(self) -> dict:
        return {
            "instance_id": self.instance_id,
            "base_phrase_id": self.base_phrase_id,
            "variant_phrase_id": self.variant_phrase_id,
            "toggled_category": self.toggled_category,
            "presence_in_variant": self.presence_in_variant,
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> "PairedRE":
        pair = cls(
            instance_id=obj["instance_id"],
            base_phrase_id=obj["base_phrase_id"],
            variant_phrase_id=obj["variant_phrase_id"],
            toggled_category=obj["toggled_category"],
            presence_in_variant=bool(obj["presence_in_variant"]),
        )
        if pair.toggled_category not in CATEGORIES:
            raise ValueError(f"unknown category {pair.toggled_category!r}")
        return pair


def auto_difficulty(
    video_id: str, object_id: str, video_catalog: Mapping[str, Mapping[str, str]]
) -> str:
    """Difficulty from class multiplicity: non_trivial iff another annotated
    object of the same class exists in the video.

    `video_catalog` maps video_id -> {object_id: class_label}. Videos with a
    single annotated object are always trivial.
    """
    try:
        objects = video_catalog[video_id]
        class_label = objects[object_id]
    except KeyError as exc:
        raise UnknownInstance(f"({video_id}, {object_id}) not in catalog") from exc
    if len(objects) == 1:
        return "trivial"
    same_class = sum(1 for label in objects.values() if label == class_label)
    return "non_trivial" if same_class >= 2 else "trivial"


def majority_vote(records: Sequence[AnnotationRecord]) -> CategorySet:
    """Aggregate category flags: a category holds iff at least two annotators
    marked it."""
    if len(records) < 2:
        raise ValueError(f"majority vote needs >= 2 records, got {len(records)}")
    key = (records[0].instance_id, records[0].phrase_id)
    annotators: set[str] = set()
    for rec in records:
        if (rec.instance_id, rec.phrase_id) != key:
            raise MixedInstance(
                f"record for {(rec.instance_id, rec.phrase_id)} mixed into {key}"
            )
        if rec.annotator_id in annotators:
            raise DuplicateAnnotator(f"duplicate annotator {rec.annotator_id!r}")
        annotators.add(rec.annotator_id)
    counts = {c: sum(rec.categories[c] for rec in records) for c in CATEGORIES}
    flags = {c: counts[c] >= MAJORITY_THRESHOLD for c in CATEGORIES}
    return CategorySet(flags=flags, vote_counts=counts, n_annotators=len(records))


def fleiss_kappa(labels) -> float | None:
    """Fleiss' kappa over an N items x n raters binary rating matrix.

    Returns None (undefined) when chance agreement is 1, i.e. every rating is
    identical so the statistic has no information to correct.
    """
    rows = [list(row) for row in labels]
    if not rows:
        raise EmptyInput("no items")
    n = len(rows[0])
    if any(len(row) != n for row in rows):
        raise RaggedMatrix("items rated by different numbers of raters")
    if n < 2:
        raise RaggedMatrix(f"need >= 2 raters, got {n}")
    matrix = np.asarray(rows, dtype=float)
    if not np.isin(matrix, (0.0, 1.0)).all():
        raise ValueError("ratings must be binary")
    yes = matrix.sum(axis=1)
    no = n - yes
    p_i = (yes * (yes - 1) + no * (no - 1)) / (n * (n - 1))
    p_bar = float(p_i.mean())
    total = matrix.size
    p_yes = float(yes.sum()) / total
    p_e = p_yes**2 + (1 - p_yes) ** 2
    if p_e == 1.0:
        return None
    return (p_bar - p_e) / (1 - p_e)


def _majority_value(values: Sequence[str], precedence: Sequence[str]) -> str:
    """Most common value; ties resolve to the later entry in `precedence`
    (the more conservative label)."""
    counts = Counter(values)
    best = max(counts.values())
    tied = [v for v, c in counts.items() if c == best]
    return max(tied, key=precedence.index)


@dataclass
class VotedAnnotation:
    """Majority-resolved labels for one (instance, phrase)."""

    instance_id: str
    phrase_id: str
    categories: CategorySet
    difficulty: str
    correctness: str
    redundancy: str


def vote_annotations(records: Sequence[AnnotationRecord]) -> VotedAnnotation:
    """Resolve all label fields for one (instance, phrase) across annotators.

    Category flags use the >=2 threshold; with a single record the labels are
    taken as-is (no vote to take).
    """
    if not records:
        raise EmptyInput("no records")
    if len(records) == 1:
        rec = records[0]
        return VotedAnnotation(
            instance_id=rec.instance_id,
            phrase_id=rec.phrase_id,
            categories=CategorySet(
                flags=dict(rec.categories),
                vote_counts={c: int(rec.categories[c]) for c in CATEGORIES},
                n_annotators=1,
            ),
            difficulty=rec.difficulty,
            correctness=rec.correctness,
            redundancy=rec.redundancy,
        )
    categories = majority_vote(records)
    return VotedAnnotation(
        instance_id=records[0].instance_id,
        phrase_id=records[0].phrase_id,
        categories=categories,
        difficulty=_majority_value([r.difficulty for r in records], DIFFICULTY_VALUES),
        correctness=_majority_value([r.correctness for r in records], CORRECTNESS_VALUES),
        redundancy=_majority_value([r.redundancy for r in records], REDUNDANCY_VALUES),
    )


def group_records(
    records: Iterable[AnnotationRecord],
) -> dict[tuple[str, str], list[AnnotationRecord]]:
    """Latest record per (instance, phrase, annotator), grouped by item."""
    latest: dict[tuple[str, str, str], AnnotationRecord] = {}
    for rec in records:
        latest[(rec.instance_id, rec.phrase_id, rec.annotator_id)] = rec
    grouped: dict[tuple[str, str], list[AnnotationRecord]] = {}
    for (instance_id, phrase_id, _), rec in sorted(latest.items()):
        grouped.setdefault((instance_id, phrase_id), []).append(rec)
    return grouped


@dataclass
class Distribution:
    """Corpus proportions: the Fig-3-style difficulty/correctness partition,
    per-category prevalence, and the redundancy ratio."""

    difficulty_correctness: dict[str, float]
    categories: dict[str, float]
    redundancy_ratio: float
    n_items: int


def distribution(voted: Sequence[VotedAnnotation]) -> Distribution:
    """Label proportions over majority-voted annotations.

    The difficulty/correctness partition buckets invalid phrases by their
    correctness label and valid ones by difficulty, so the four proportions
    sum to 1.
    """
    if not voted:
        raise EmptyInput("no annotations")
    n = len(voted)
    partition = Counter()
    for item in voted:
        if item.correctness != "valid_re":
            partition[item.correctness] += 1
        else:
            partition[item.difficulty] += 1
    keys = ("trivial", "non_trivial", "no_re", "wrong_object")
    categories = {
        c: sum(item.categories.flags[c] for item in voted) / n for c in CATEGORIES
    }
    redundant = sum(item.redundancy == "redundant" for item in voted)
    return Distribution(
        difficulty_correctness={k: partition.get(k, 0) / n for k in keys},
        categories=categories,
        redundancy_ratio=redundant / n,
        n_items=n,
    )


@dataclass(frozen=True)
class PairViolation:
    pair: PairedRE
    reason: str


def validate_pair(
    pair: PairedRE, voted: Mapping[str, CategorySet]
) -> PairViolation | None:
    """Check that a paired RE toggles exactly its declared category.

    Returns None when the pair is consistent, otherwise a violation report.
    The noun category itself is never a legal toggle and must hold in both
    phrases.
    """
    try:
        base = voted[pair.base_phrase_id]
        variant = voted[pair.variant_phrase_id]
    except KeyError as exc:
        raise MissingCategorySet(str(exc)) from exc
    if pair.toggled_category == "category":
        return PairViolation(pair, "the noun category may not be toggled")
    diff = base.true_categories() ^ variant.true_categories()
    if len(diff) == 0:
        return PairViolation(pair, "base and variant have identical categories")
    if diff != {pair.toggled_category}:
        return PairViolation(
            pair,
            f"categories differ in {sorted(diff)}, expected exactly"
            f" [{pair.toggled_category!r}]",
        )
    if variant.flags[pair.toggled_category] != pair.presence_in_variant:
        return PairViolation(
            pair,
            f"variant marks {pair.toggled_category!r} as"
            f" {variant.flags[pair.toggled_category]}, pair declares"
            f" {pair.presence_in_variant}",
        )
    if not (base.flags["category"] and variant.flags["category"]):
        return PairViolation(pair, "the noun category must hold in both phrases")
    return None


PHRASE_MODES = ("generic", "actor", "action", "actor_action", "full")


def phrase_variant(metadata: Mapping[str, str], mode: str) -> str:
    """Reduced-information phrase for the information-level ablation."""
    if mode not in PHRASE_MODES:
        raise ValueError(f"mode must be one of {PHRASE_MODES}, got {mode!r}")
    if mode == "generic":
        return "thing"
    required = {
        "actor": ("actor",),
        "action": ("action",),
        "actor_action": ("actor", "action"),
        "full": ("full_phrase",),
    }[mode]
    for key in required:
        if not metadata.get(key):
            raise MissingField(f"mode {mode!r} needs metadata field {key!r}")
    if mode == "actor":
        return metadata["actor"]
    if mode == "action":
        return metadata["action"]
    if mode == "actor_action":
        return f"{metadata['actor']} {metadata['action']}"
    return metadata["full_phrase"]
