"""Optimization loops: masked-token warm-up for the phrase encoder and the
SGD segmentation fine-tune, with an optional frozen language branch.

All randomness flows through explicit torch generators so a seed fixes the
whole run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import torch
import torch.nn.functional as F

from .config import TrainSchedule
from .net import GroundedSegmenter, segmentation_loss
from .tokenizer import CLS, MASK, PAD, SEP


class EmptyDataset(ValueError):
    """Training was requested on zero samples."""


class NoMaskableTokens(ValueError):
    """The mask fraction selects zero token positions."""


class NonFiniteLoss(RuntimeError):
    """Loss became NaN/inf; aborted with step diagnostics."""


@dataclass
class TrainSample:
    """One (image, phrase, mask) triple; image is (C, H, W) in [0, 1]."""

    image: np.ndarray
    tokens: list[int]
    mask: np.ndarray


def language_parameters(model: GroundedSegmenter):
    return list(model.language.parameters())


def mlm_loss(
    model: GroundedSegmenter,
    token_seqs: Sequence[Sequence[int]],
    mask_fraction: float,
    generator: torch.Generator,
) -> torch.Tensor:
    """Cross-entropy over masked positions only.

    Eligible positions are word tokens (not the summary, separator, or
    padding); round(fraction * eligible) of them are replaced by the mask
    token and must be predicted.
    """
    if not 0 < mask_fraction < 1:
        raise ValueError(f"mask_fraction must be in (0, 1), got {mask_fraction}")
    batch = model._as_token_batch(token_seqs)
    eligible = (batch != PAD) & (batch != CLS) & (batch != SEP)
    positions = eligible.nonzero()
    k = int(round(mask_fraction * len(positions)))
    if k == 0:
        raise NoMaskableTokens(
            f"fraction {mask_fraction} selects 0 of {len(positions)} eligible tokens"
        )
    pick = positions[torch.randperm(len(positions), generator=generator)[:k]]
    rows, cols = pick[:, 0], pick[:, 1]
    masked = batch.clone()
    masked[rows, cols] = MASK
    logits = model.language.mlm_logits(masked)
    return F.cross_entropy(logits[rows, cols], batch[rows, cols])


def mlm_step(
    model: GroundedSegmenter,
    token_seqs: Sequence[Sequence[int]],
    mask_fraction: float,
    lr: float,
    generator: torch.Generator,
) -> float:
    """One gradient step of masked-token prediction on the language branch."""
    params = language_parameters(model)
    loss = mlm_loss(model, token_seqs, mask_fraction, generator)
    live = [p for p in params if p.requires_grad]
    grads = torch.autograd.grad(loss, live)
    with torch.no_grad():
        for p, g in zip(live, grads):
            p -= lr * g
    value = float(loss.detach())
    if not math.isfinite(value):
        raise NonFiniteLoss(f"masked-token loss is {value}")
    return value


def run_mlm_warmup(
    model: GroundedSegmenter,
    token_seqs: Sequence[Sequence[int]],
    schedule: TrainSchedule,
    generator: torch.Generator | None = None,
) -> list[float]:
    gen = generator or torch.Generator().manual_seed(schedule.seed)
    return [
        mlm_step(model, token_seqs, schedule.mask_fraction, schedule.mlm_lr, gen)
        for _ in range(schedule.mlm_steps)
    ]


def _batches(n: int, batch_size: int, generator: torch.Generator):
    perm = torch.randperm(n, generator=generator).tolist()
    for start in range(0, n, batch_size):
        yield perm[start : start + batch_size]


def train_segmentation(
    model: GroundedSegmenter,
    samples: Sequence[TrainSample],
    schedule: TrainSchedule,
    generator: torch.Generator | None = None,
) -> list[dict]:
    """SGD over the per-pixel cross-entropy; returns per-step loss records.

    With freeze_language the language branch receives no updates and its
    weights are bit-identical before and after.
    """
    if not samples:
        raise EmptyDataset("no training samples")
    schedule.validate()
    gen = generator or torch.Generator().manual_seed(schedule.seed)

    frozen = set()
    if schedule.freeze_language:
        for p in language_parameters(model):
            if p.requires_grad:
                frozen.add(p)
                p.requires_grad_(False)
    trainable = [p for p in model.parameters() if p.requires_grad]
    optimizer = torch.optim.SGD(trainable, lr=schedule.lr, momentum=schedule.momentum)

    history: list[dict] = []
    try:
        step = 0
        while step < schedule.steps:
            for indices in _batches(len(samples), schedule.batch_size, gen):
                if step >= schedule.steps:
                    break
                images = np.stack([samples[i].image for i in indices])
                masks = np.stack([samples[i].mask for i in indices])
                tokens = [samples[i].tokens for i in indices]
                logits = model(images, tokens)
                loss = segmentation_loss(logits, masks)
                value = float(loss.detach())
                if not math.isfinite(value):
                    raise NonFiniteLoss(
                        f"step {step}: loss={value} (lr={schedule.lr},"
                        f" batch={[samples[i].tokens for i in indices]})"
                    )
                optimizer.zero_grad()
                loss.backward()
                optimizer.step()
                history.append({"step": step, "loss": value})
                step += 1
    finally:
        for p in frozen:
            p.requires_grad_(True)
    return history


def mean_train_iou(model: GroundedSegmenter, samples: Sequence[TrainSample]) -> float:
    """Mean per-sample IoU of hard predictions against the training masks."""
    from ..masks import iou

    model.eval()
    scores = [
        iou(model.predict(sample.image, sample.tokens), sample.mask)
        for sample in samples
    ]
    model.train()
    return float(np.mean(scores))
