"""Language-guided binary segmentation network.

Frame-level model: a dilated-convolution visual encoder with a multi-rate
pyramid head, a small transformer phrase encoder whose leading-token output
summarizes the phrase, a projected element-wise fusion, and a two-map decoder
upsampled bilinearly to input resolution. Map 0 is foreground, map 1
background; ties at prediction time resolve to background.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

from .config import ModelConfig
from .tokenizer import PAD, check_token_seq


class ShapeError(ValueError):
    """Input dimensions violate an architectural constraint."""


class DimensionMismatch(ValueError):
    """Logits and target mask dimensions differ."""


def _conv_block(in_ch: int, out_ch: int, kernel: int, stride: int = 1,
                dilation: int = 1) -> nn.Sequential:
    padding = dilation * (kernel // 2)
    return nn.Sequential(
        nn.Conv2d(in_ch, out_ch, kernel, stride=stride, padding=padding,
                  dilation=dilation, bias=False),
        nn.GroupNorm(1, out_ch),
        nn.ReLU(inplace=True),
    )


class AtrousPyramid(nn.Module):
    """Parallel dilated branches plus a global-pooling branch, merged 1x1."""

    def __init__(self, in_channels: int, out_channels: int, rates: Sequence[int]):
        super().__init__()
        self.branches = nn.ModuleList(
            [_conv_block(in_channels, out_channels, 1)]
            + [_conv_block(in_channels, out_channels, 3, dilation=r) for r in rates]
        )
        self.pool = nn.Sequential(
            nn.AdaptiveAvgPool2d(1),
            nn.Conv2d(in_channels, out_channels, 1, bias=False),
            nn.GroupNorm(1, out_channels),
            nn.ReLU(inplace=True),
        )
        self.merge = _conv_block(out_channels * (len(self.branches) + 1), out_channels, 1)

    def forward(self, x):
        feats = [branch(x) for branch in self.branches]
        pooled = self.pool(x).expand(-1, -1, x.shape[2], x.shape[3])
        return self.merge(torch.cat(feats + [pooled], dim=1))


class VisualEncoder(nn.Module):
    """Stride-2 stages down to the output stride, then the pyramid."""

    def __init__(self, config: ModelConfig):
        super().__init__()
        self.output_stride = config.output_stride
        stages = []
        in_ch = config.image_channels
        for width in config.backbone_width:
            stages.append(_conv_block(in_ch, width, 3, stride=2))
            in_ch = width
        self.stages = nn.Sequential(*stages)
        self.pyramid = AtrousPyramid(in_ch, config.fusion_dim, config.aspp_rates)

    def forward(self, images):
        h, w = images.shape[2], images.shape[3]
        if h % self.output_stride or w % self.output_stride:
            raise ShapeError(
                f"input {h}x{w} not divisible by output stride {self.output_stride}"
            )
        return self.pyramid(self.stages(images))


class PhraseEncoder(nn.Module):
    """Transformer over token embeddings with learned positions; the phrase
    vector is the output at the leading summary-token position."""

    def __init__(self, config: ModelConfig):
        super().__init__()
        self.vocab_size = config.vocab_size
        self.max_tokens = config.max_tokens
        self.token_embed = nn.Embedding(config.vocab_size, config.lang_dim, padding_idx=PAD)
        self.pos_embed = nn.Embedding(config.max_tokens, config.lang_dim)
        layer = nn.TransformerEncoderLayer(
            d_model=config.lang_dim,
            nhead=config.lang_heads,
            dim_feedforward=4 * config.lang_dim,
            dropout=0.0,
            batch_first=True,
        )
        self.encoder = nn.TransformerEncoder(
            layer, num_layers=config.lang_layers, enable_nested_tensor=False
        )
        self.mlm_head = nn.Linear(config.lang_dim, config.vocab_size)
        # zero head: an untrained model scores every vocabulary item equally
        nn.init.zeros_(self.mlm_head.weight)
        nn.init.zeros_(self.mlm_head.bias)

    def forward(self, tokens):
        positions = torch.arange(tokens.shape[1], device=tokens.device)
        hidden = self.token_embed(tokens) + self.pos_embed(positions)
        return self.encoder(hidden, src_key_padding_mask=tokens == PAD)

    def pooled(self, tokens):
        return self.forward(tokens)[:, 0]

    def mlm_logits(self, tokens):
        return self.mlm_head(self.forward(tokens))


class GroundedSegmenter(nn.Module):
    """Full model: visual features x projected phrase -> two-map decoder."""

    def __init__(self, config: ModelConfig):
        super().__init__()
        config.validate()
        self.config = config
        self.visual = VisualEncoder(config)
        self.language = PhraseEncoder(config)
        self.fusion_proj = nn.Linear(config.lang_dim, config.fusion_dim)
        if config.fusion_mode == "concat":
            self.fusion_reduce = nn.Conv2d(2 * config.fusion_dim, config.fusion_dim, 1)
        self.head = nn.Conv2d(config.fusion_dim, config.num_output_maps, 1)

    # -- input plumbing -----------------------------------------------------

    def _dtype(self):
        return self.head.weight.dtype

    def _as_image_batch(self, images) -> tuple[torch.Tensor, bool]:
        if isinstance(images, np.ndarray):
            images = torch.from_numpy(images)
        images = images.to(self._dtype())
        if images.dim() == 3:
            return images.unsqueeze(0), False
        if images.dim() != 4:
            raise ShapeError(f"expected (C,H,W) or (N,C,H,W), got {tuple(images.shape)}")
        return images, True

    def _as_token_batch(self, tokens) -> torch.Tensor:
        if isinstance(tokens, torch.Tensor):
            seqs = [row.tolist() for row in tokens.reshape(-1, tokens.shape[-1])]
        elif tokens and isinstance(tokens[0], (list, tuple)):
            seqs = [list(s) for s in tokens]
        else:
            seqs = [list(tokens)]
        for seq in seqs:
            check_token_seq(seq, self.config.vocab_size, self.config.max_tokens)
        width = max(len(s) for s in seqs)
        padded = torch.full((len(seqs), width), PAD, dtype=torch.long)
        for i, seq in enumerate(seqs):
            padded[i, : len(seq)] = torch.tensor(seq, dtype=torch.long)
        return padded

    # -- the architecture's stages ------------------------------------------

    def encode_image(self, images) -> torch.Tensor:
        batch, _ = self._as_image_batch(images)
        return self.visual(batch)

    def encode_phrase(self, tokens) -> torch.Tensor:
        return self.language.pooled(self._as_token_batch(tokens))

    def fuse(self, visual_feats: torch.Tensor, phrase_vec: torch.Tensor) -> torch.Tensor:
        if phrase_vec.dim() == 1:
            phrase_vec = phrase_vec.unsqueeze(0)
        if phrase_vec.shape[-1] != self.config.lang_dim:
            raise ShapeError(
                f"phrase vector has dim {phrase_vec.shape[-1]}, expected {self.config.lang_dim}"
            )
        if visual_feats.shape[1] != self.config.fusion_dim:
            raise ShapeError(
                f"visual features have {visual_feats.shape[1]} channels,"
                f" expected {self.config.fusion_dim}"
            )
        gate = self.fusion_proj(phrase_vec)[:, :, None, None]
        mode = self.config.fusion_mode
        if mode == "multiply":
            return visual_feats * gate
        if mode == "add":
            return visual_feats + gate
        stacked = torch.cat([visual_feats, gate.expand_as(visual_feats)], dim=1)
        return self.fusion_reduce(stacked)

    def decode_mask(self, fused: torch.Tensor, target_hw: tuple[int, int]) -> torch.Tensor:
        h, w = target_hw
        s = self.config.output_stride
        if h != fused.shape[2] * s or w != fused.shape[3] * s:
            raise ShapeError(
                f"target {h}x{w} is not output_stride x feature size"
                f" ({fused.shape[2]}x{fused.shape[3]} at stride {s})"
            )
        logits = self.head(fused)
        return F.interpolate(logits, size=(h, w), mode="bilinear", align_corners=False)

    def forward(self, images, tokens, bypass_fusion: bool = False):
        batch, was_batched = self._as_image_batch(images)
        feats = self.visual(batch)
        if bypass_fusion:
            fused = feats
        else:
            phrase = self.language.pooled(self._as_token_batch(tokens))
            if phrase.shape[0] == 1 and batch.shape[0] > 1:
                phrase = phrase.expand(batch.shape[0], -1)
            fused = self.fuse(feats, phrase)
        logits = self.decode_mask(fused, (batch.shape[2], batch.shape[3]))
        return logits if was_batched else logits[0]

    def predict(self, images, tokens) -> np.ndarray:
        """Binary mask(s) by per-pixel argmax; ties go to background."""
        with torch.no_grad():
            logits = self.forward(images, tokens)
        if logits.dim() == 4:
            mask = logits[:, 0] > logits[:, 1]
        else:
            mask = logits[0] > logits[1]
        return mask.cpu().numpy()


def segmentation_loss(logits: torch.Tensor, gt) -> torch.Tensor:
    """Mean per-pixel two-class cross-entropy against a boolean mask."""
    if isinstance(gt, np.ndarray):
        gt = torch.from_numpy(gt)
    gt = gt.bool()
    if logits.dim() == 3:
        logits = logits.unsqueeze(0)
    if gt.dim() == 2:
        gt = gt.unsqueeze(0)
    if logits.shape[2:] != gt.shape[1:] or logits.shape[0] != gt.shape[0]:
        raise DimensionMismatch(
            f"logits {tuple(logits.shape)} vs mask {tuple(gt.shape)}"
        )
    target = torch.where(gt, 0, 1)
    return F.cross_entropy(logits, target)
