"""Self-describing checkpoint container: a JSON header line (model config,
vocabulary, array manifest) followed by the flat weight bytes.

Writing is fully deterministic, so identical weights yield identical files.
Loading rebuilds the model from the header config and validates every stored
array's shape against it.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import torch

from .config import config_from_dict, config_to_dict
from .net import GroundedSegmenter
from .tokenizer import Vocab

FORMAT = "langseg-checkpoint-v1"


class CheckpointError(ValueError):
    """Corrupt or config-inconsistent checkpoint file."""


def save_checkpoint(path, model: GroundedSegmenter, vocab: Vocab) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    manifest = []
    blobs = []
    offset = 0
    for name, tensor in model.state_dict().items():
        arr = np.ascontiguousarray(tensor.detach().cpu().numpy())
        data = arr.tobytes()
        manifest.append(
            {
                "name": name,
                "dtype": str(arr.dtype),
                "shape": list(arr.shape),
                "offset": offset,
                "nbytes": len(data),
            }
        )
        blobs.append(data)
        offset += len(data)
    header = {
        "format": FORMAT,
        "config": config_to_dict(model.config),
        "vocab": list(vocab.tokens),
        "arrays": manifest,
    }
    path.write_bytes(json.dumps(header, sort_keys=True).encode("utf-8") + b"\n" + b"".join(blobs))
    return path


def load_checkpoint(path) -> tuple[GroundedSegmenter, Vocab]:
    raw = Path(path).read_bytes()
    newline = raw.find(b"\n")
    if newline < 0:
        raise CheckpointError("missing header line")
    try:
        header = json.loads(raw[:newline].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"unreadable header: {exc}") from exc
    if header.get("format") != FORMAT:
        raise CheckpointError(f"unknown format {header.get('format')!r}")

    config = config_from_dict(header["config"])
    model = GroundedSegmenter(config)
    expected = {name: tuple(t.shape) for name, t in model.state_dict().items()}
    stored = {entry["name"]: tuple(entry["shape"]) for entry in header["arrays"]}
    if set(stored) != set(expected):
        missing = sorted(set(expected) - set(stored))
        extra = sorted(set(stored) - set(expected))
        raise CheckpointError(f"array names mismatch (missing {missing}, extra {extra})")
    for name, shape in stored.items():
        if shape != expected[name]:
            raise CheckpointError(
                f"{name}: stored shape {shape} does not match config shape {expected[name]}"
            )

    payload = raw[newline + 1 :]
    state = {}
    for entry in header["arrays"]:
        start, nbytes = entry["offset"], entry["nbytes"]
        if start + nbytes > len(payload):
            raise CheckpointError(f"{entry['name']}: payload truncated")
        count = int(np.prod(entry["shape"], dtype=np.int64))
        arr = np.frombuffer(
            payload, dtype=np.dtype(entry["dtype"]), count=count, offset=start
        ).reshape(entry["shape"])
        state[entry["name"]] = torch.from_numpy(arr.copy())
    model.load_state_dict(state)

    vocab = Vocab(tuple(header["vocab"]))
    if len(vocab) != config.vocab_size:
        raise CheckpointError(
            f"vocabulary size {len(vocab)} does not match config vocab_size {config.vocab_size}"
        )
    return model, vocab
