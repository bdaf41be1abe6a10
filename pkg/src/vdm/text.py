"""Toy text encoder: hashed token slots, learned table, mean pooling."""

import hashlib
from collections.abc import Iterable, Sequence

import numpy as np

from src.numcore.layers import Module, Parameter
from src.numcore.tensor import Tensor, as_tensor, matmul

from .constants import TEXT_SLOTS
from .exceptions import TextEncoderError


def tokenize(prompt: str) -> list[str]:
    return prompt.lower().split()


def token_hash(token: str) -> int:
    """Process-independent 64-bit hash of a token."""
    digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def assign_slots(vocabulary: Iterable[str], slots: int = TEXT_SLOTS) -> dict[str, int]:
    """
    Collision-free slots for a closed vocabulary.

    Tokens are placed in sorted order at ``hash % slots``, moving to the next
    free slot on collision.

    Raises:
        TextEncoderError: More tokens than slots
    """
    vocab = sorted(set(vocabulary))
    if len(vocab) > slots:
        raise TextEncoderError(len(vocab), slots)
    taken: dict[int, str] = {}
    table: dict[str, int] = {}
    for token in vocab:
        slot = token_hash(token) % slots
        while slot in taken:
            slot = (slot + 1) % slots
        taken[slot] = token
        table[token] = slot
    return table


class TextEmbedder(Module):
    """
    Prompt -> D_text vector.

    Whitespace tokens are hashed into a table of learned rows and the rows
    are averaged. Tokens of the known vocabulary get dedicated slots; any
    other token falls back to ``hash % slots``. An empty prompt maps to the
    zero vector.

    Example:
        embedder = TextEmbedder(64, rng, vocabulary=caption_vocabulary())
        embedder(["a red circle drifting right"]).shape  # (1, 64)
    """

    def __init__(
        self,
        dim: int,
        rng: np.random.Generator,
        vocabulary: Iterable[str] = (),
        slots: int = TEXT_SLOTS,
    ):
        self.dim = dim
        self.slots = slots
        self.slot_of = assign_slots(vocabulary, slots)
        self.table = Parameter(rng.standard_normal((slots, dim)))

    def slot(self, token: str) -> int:
        found = self.slot_of.get(token)
        return found if found is not None else token_hash(token) % self.slots

    def pooling_matrix(self, prompts: Sequence[str]) -> np.ndarray:
        """[B, slots] averaging weights; all-zero rows for empty prompts."""
        weights = np.zeros((len(prompts), self.slots))
        for row, prompt in enumerate(prompts):
            tokens = tokenize(prompt)
            for token in tokens:
                weights[row, self.slot(token)] += 1.0 / len(tokens)
        return weights

    def forward(self, prompts: Sequence[str]) -> Tensor:
        weights = as_tensor(self.pooling_matrix(prompts), like=self.table)
        return matmul(weights, self.table)


def embed_text(embedder: TextEmbedder, prompt: str) -> np.ndarray:
    """Single prompt -> [D_text] array."""
    return embedder([prompt]).data[0]
