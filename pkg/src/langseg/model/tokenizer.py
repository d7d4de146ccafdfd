"""Deterministic whitespace tokenizer with a fixed learned vocabulary.

Token ids: a handful of specials first, then corpus words sorted by frequency
(ties alphabetical). Every encoded sequence starts with the sentence-summary
token and ends with the separator.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

PAD, CLS, SEP, MASK, UNK = range(5)
SPECIAL_TOKENS = ("[PAD]", "[CLS]", "[SEP]", "[MASK]", "[UNK]")


class TokenOutOfRange(ValueError):
    """A token id falls outside the vocabulary."""


@dataclass(frozen=True)
class Vocab:
    tokens: tuple[str, ...]

    def __post_init__(self):
        if self.tokens[: len(SPECIAL_TOKENS)] != SPECIAL_TOKENS:
            raise ValueError("vocabulary must start with the special tokens")

    def __len__(self) -> int:
        return len(self.tokens)

    def id_of(self, word: str) -> int:
        try:
            return self.tokens.index(word)
        except ValueError:
            return UNK


def build_vocab(phrases: Iterable[str], max_size: int | None = None) -> Vocab:
    """Frequency-sorted vocabulary over lowercased whitespace tokens."""
    counts = Counter()
    for phrase in phrases:
        counts.update(phrase.lower().split())
    words = sorted(counts, key=lambda w: (-counts[w], w))
    if max_size is not None:
        words = words[: max(0, max_size - len(SPECIAL_TOKENS))]
    return Vocab(tokens=SPECIAL_TOKENS + tuple(words))


class Tokenizer:
    def __init__(self, vocab: Vocab, max_tokens: int = 20):
        if max_tokens < 3:
            raise ValueError("max_tokens must fit at least [CLS] x [SEP]")
        self.vocab = vocab
        self.max_tokens = max_tokens
        self._index = {tok: i for i, tok in enumerate(vocab.tokens)}

    def encode(self, text: str) -> list[int]:
        """[CLS] word ids [SEP], truncated to max_tokens with [SEP] kept last."""
        ids = [self._index.get(w, UNK) for w in text.lower().split()]
        ids = ids[: self.max_tokens - 2]
        return [CLS] + ids + [SEP]

    def decode(self, ids: Sequence[int]) -> str:
        words = [self.vocab.tokens[i] for i in ids if i not in (PAD, CLS, SEP)]
        return " ".join(words)


def check_token_seq(ids: Sequence[int], vocab_size: int, max_tokens: int) -> None:
    """Enforce the token-sequence contract shared by all model entry points."""
    if not ids:
        raise ValueError("empty token sequence")
    if ids[0] != CLS:
        raise ValueError("token sequence must start with the summary token")
    if len(ids) > max_tokens:
        raise ValueError(f"sequence length {len(ids)} exceeds max_tokens {max_tokens}")
    for i in ids:
        if not 0 <= i < vocab_size:
            raise TokenOutOfRange(f"token id {i} outside vocabulary of size {vocab_size}")
