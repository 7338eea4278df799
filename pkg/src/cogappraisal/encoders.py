"""Text encoders producing fixed-size sentence embeddings.

An encoder is identified by ``spec()``, a JSON-able dict that
:func:`build_encoder` turns back into the same encoder.  Checkpoints store
that spec, plus the encoder weights when the encoder was fine-tuned.
"""
from __future__ import annotations

import logging
from typing import Protocol, Sequence, runtime_checkable

import numpy as np
import torch

logger = logging.getLogger(__name__)

DEFAULT_SENTENCE_MODEL = "sentence-transformers/nli-roberta-base-v2"


@runtime_checkable
class Encoder(Protocol):
    name: str
    embedding_dim: int
    thread_safe: bool
    trainable: bool

    def encode(self, texts: Sequence[str]) -> np.ndarray: ...

    def spec(self) -> dict: ...


class HashingEncoder:
    """Hashed word n-gram counts, L2-normalised.

    Stateless and cheap: used for desk-scale training and CI.  Texts longer
    than ``max_tokens`` tokens are truncated.
    """

    name = "hashing"
    thread_safe = True
    trainable = False

    def __init__(self, n_features: int = 4096, ngram_max: int = 2, max_tokens: int = 256):
        from sklearn.feature_extraction.text import HashingVectorizer

        self.embedding_dim = int(n_features)
        self.ngram_max = int(ngram_max)
        self.max_tokens = int(max_tokens)
        self._vectorizer = HashingVectorizer(
            n_features=self.embedding_dim, ngram_range=(1, self.ngram_max),
            alternate_sign=False, norm="l2", lowercase=True,
        )
        self._tokenize = self._vectorizer.build_tokenizer()

    def _truncate(self, texts: Sequence[str]) -> list[str]:
        out, n_cut = [], 0
        for t in texts:
            tokens = self._tokenize(t)
            if len(tokens) > self.max_tokens:
                n_cut += 1
                t = " ".join(tokens[: self.max_tokens])
            out.append(t)
        if n_cut:
            logger.info("truncated %d text(s) to %d tokens", n_cut, self.max_tokens)
        return out

    def encode(self, texts: Sequence[str]) -> np.ndarray:
        matrix = self._vectorizer.transform(self._truncate(list(texts)))
        return matrix.toarray().astype(np.float32)

    def spec(self) -> dict:
        return {"name": self.name, "n_features": self.embedding_dim,
                "ngram_max": self.ngram_max, "max_tokens": self.max_tokens}


class SentenceTransformerEncoder:
    """Pretrained sentence-transformers model (pooling as configured upstream).

    Frozen unless training asks to fine-tune it through :meth:`forward_train`.
    """

    name = "sentence-transformer"
    thread_safe = False
    trainable = True

    def __init__(self, model_name: str = DEFAULT_SENTENCE_MODEL, max_seq_length: int = 128,
                 batch_size: int = 32, device: str = "cpu"):
        from sentence_transformers import SentenceTransformer

        self.model_name = model_name
        self.batch_size = int(batch_size)
        self._model = SentenceTransformer(model_name, device=device)
        self._model.max_seq_length = int(max_seq_length)
        self.max_seq_length = int(max_seq_length)
        dim = getattr(self._model, "get_embedding_dimension", None) or \
            self._model.get_sentence_embedding_dimension
        self.embedding_dim = int(dim())

    def encode(self, texts: Sequence[str]) -> np.ndarray:
        texts = list(texts)
        lengths = [len(ids) for ids in self._model.tokenizer(texts)["input_ids"]]
        n_cut = sum(n > self.max_seq_length for n in lengths)
        if n_cut:
            logger.info("truncated %d text(s) to %d tokens", n_cut, self.max_seq_length)
        emb = self._model.encode(texts, batch_size=self.batch_size, convert_to_numpy=True,
                                 show_progress_bar=False)
        return emb.astype(np.float32)

    def forward_train(self, texts: Sequence[str]) -> torch.Tensor:
        """Embeddings with autograd enabled, for fine-tuning."""
        from sentence_transformers.util import batch_to_device

        features = batch_to_device(self._model.tokenize(list(texts)), self._model.device)
        return self._model(features)["sentence_embedding"]

    def parameters(self):
        return self._model.parameters()

    def train(self, mode: bool = True) -> None:
        self._model.train(mode)

    def state_dict(self) -> dict:
        return self._model.state_dict()

    def load_state_dict(self, state: dict) -> None:
        self._model.load_state_dict(state)

    def save(self, directory) -> None:
        self._model.save(str(directory))

    def spec(self) -> dict:
        return {"name": self.name, "model_name": self.model_name,
                "max_seq_length": self.max_seq_length, "batch_size": self.batch_size}


ENCODERS = {cls.name: cls for cls in (HashingEncoder, SentenceTransformerEncoder)}


def build_encoder(spec: dict | None = None) -> Encoder:
    spec = dict(spec or {"name": HashingEncoder.name})
    name = spec.pop("name", HashingEncoder.name)
    try:
        cls = ENCODERS[name]
    except KeyError:
        raise ValueError(f"unknown encoder {name!r}; registered: {sorted(ENCODERS)}") from None
    return cls(**spec)
