import numpy as np
import pytest
import torch

from langseg.model import GroundedSegmenter, ModelConfig, Tokenizer, build_vocab

ACCEPTANCE_RESULTS: list[tuple[str, str]] = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if report.when == "call":
        criterion = getattr(item.function, "criterion", None)
        if criterion:
            ACCEPTANCE_RESULTS.append((criterion, "PASS" if report.passed else "FAIL"))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_RESULTS:
        terminalreporter.write_sep("-", "acceptance criteria")
        for criterion, outcome in ACCEPTANCE_RESULTS:
            terminalreporter.write_line(f"{criterion}: {outcome}")


def tiny_config(**overrides):
    """Smallest config that still exercises every architectural piece."""
    defaults = dict(
        image_channels=3,
        backbone_width=[4, 8],
        output_stride=4,
        aspp_rates=[1, 2],
        fusion_dim=8,
        lang_dim=8,
        vocab_size=16,
        max_tokens=8,
        lang_layers=1,
        lang_heads=2,
    )
    defaults.update(overrides)
    return ModelConfig(**defaults)


def make_model(config=None, seed=0):
    torch.manual_seed(seed)
    return GroundedSegmenter(config or tiny_config())


TOY_PHRASES = [
    "the black dog running",
    "a girl in a yellow dress",
    "the man holding a bike",
    "small cat sitting on the left",
    "the red car parked near the tree",
]


@pytest.fixture
def toy_tokenizer():
    vocab = build_vocab(TOY_PHRASES)
    return Tokenizer(vocab, max_tokens=12)


@pytest.fixture
def rng():
    return np.random.default_rng(0)
