import json

import pytest
import torch

from conftest import make_model
from langseg.model import (
    CheckpointError,
    ConfigError,
    Vocab,
    load_checkpoint,
    load_training_config,
    save_checkpoint,
)


def toy_vocab(size):
    words = tuple(f"w{k}" for k in range(size - 5))
    return Vocab(("[PAD]", "[CLS]", "[SEP]", "[MASK]", "[UNK]") + words)


class TestCheckpoint:
    def test_round_trip_bit_exact(self, tmp_path):
        model = make_model(seed=3)
        vocab = toy_vocab(model.config.vocab_size)
        path = save_checkpoint(tmp_path / "model.ckpt", model, vocab)
        loaded, loaded_vocab = load_checkpoint(path)
        assert loaded_vocab == vocab
        for (name, a), (_, b) in zip(
            model.state_dict().items(), loaded.state_dict().items()
        ):
            assert torch.equal(a, b), name

    def test_identical_weights_identical_bytes(self, tmp_path):
        vocab = toy_vocab(16)
        a = save_checkpoint(tmp_path / "a.ckpt", make_model(seed=9), vocab)
        b = save_checkpoint(tmp_path / "b.ckpt", make_model(seed=9), vocab)
        assert a.read_bytes() == b.read_bytes()

    def test_shape_validation_rejects_tampering(self, tmp_path):
        model = make_model()
        path = save_checkpoint(tmp_path / "m.ckpt", model, toy_vocab(16))
        raw = path.read_bytes()
        cut = raw.find(b"\n")
        header = json.loads(raw[:cut])
        header["arrays"][0]["shape"][0] += 1
        path.write_bytes(json.dumps(header, sort_keys=True).encode() + raw[cut:])
        with pytest.raises(CheckpointError):
            load_checkpoint(path)

    def test_vocab_size_must_match_config(self, tmp_path):
        model = make_model()
        with pytest.raises(CheckpointError):
            path = save_checkpoint(tmp_path / "m.ckpt", model, toy_vocab(9))
            load_checkpoint(path)

    def test_garbage_rejected(self, tmp_path):
        path = tmp_path / "junk.ckpt"
        path.write_bytes(b"\x00\x01\x02 not a checkpoint\n123")
        with pytest.raises(CheckpointError):
            load_checkpoint(path)


class TestTrainingConfigFile:
    def test_defaults(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text("{}")
        config = load_training_config(path)
        assert config.model.fusion_dim == 256
        assert config.schedule.steps == 200

    def test_partial_override(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text(json.dumps({
            "model": {"fusion_dim": 32, "lang_dim": 16, "vocab_size": 30,
                      "backbone_width": [8, 16], "output_stride": 4,
                      "aspp_rates": [1, 2], "lang_heads": 2},
            "schedule": {"steps": 10, "freeze_language": True},
        }))
        config = load_training_config(path)
        assert config.model.fusion_dim == 32
        assert config.schedule.freeze_language is True
        assert config.schedule.lr == 0.1  # untouched default

    def test_unknown_top_level_key(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"optimzer": "sgd"}))
        with pytest.raises(ConfigError):
            load_training_config(path)

    def test_unknown_nested_key(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"model": {"fusoin_dim": 8}}))
        with pytest.raises(ConfigError):
            load_training_config(path)

    def test_invalid_values_rejected(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"schedule": {"mask_fraction": 1.5}}))
        with pytest.raises(ConfigError):
            load_training_config(path)
