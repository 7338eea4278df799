"""Multi-output regression from a sentence embedding to 21 appraisal ratings.

A small head (hidden projection, layer norm, GELU, dropout, linear output) is
trained with AdamW on the smooth-L1 loss and the epoch with the best
validation macro-RMSE is kept.  The encoder stays frozen unless
``finetune_encoder`` is set, in which case it is trained jointly and its
weights are saved with the checkpoint.
"""
from __future__ import annotations

import copy
import csv
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import torch
from torch import nn

from .corpus import EventRecord
from .encoders import Encoder, build_encoder
from .errors import ConfigError, PipelineError
from .taxonomy import DIMENSION_NAMES, N_DIMENSIONS

logger = logging.getLogger(__name__)

SCALE_MIN, SCALE_MAX = 1.0, 5.0
WEIGHTS_FILE = "head.pt"
CONFIG_FILE = "config.json"
HISTORY_FILE = "history.csv"
ENCODER_DIR = "encoder"


class TrainingError(PipelineError):
    pass


@dataclass
class TrainConfig:
    learning_rate: float = 1e-5
    weight_decay: float = 0.01
    loss: str = "smooth_l1"
    smooth_l1_beta: float = 1.0
    optimizer: str = "adamw"
    dropout_rate: float = 0.3
    hidden_dim: int = 256
    max_epochs: int = 30
    patience: int = 5
    batch_size: int = 16
    seed: int = 0
    checkpoint_selection: str = "best_dev_macro_rmse"
    encoder: dict = field(default_factory=lambda: {"name": "hashing"})
    finetune_encoder: bool = False

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ConfigError("train.learning_rate must be positive")
        if not 0 <= self.dropout_rate < 1:
            raise ConfigError("train.dropout_rate must lie in [0, 1)")
        if self.loss != "smooth_l1":
            raise ConfigError(f"unsupported loss {self.loss!r}")
        if self.optimizer != "adamw":
            raise ConfigError(f"unsupported optimizer {self.optimizer!r}")
        if self.checkpoint_selection not in ("best_dev_macro_rmse", "last"):
            raise ConfigError(f"unknown checkpoint_selection {self.checkpoint_selection!r}")
        if self.max_epochs < 1 or self.batch_size < 1 or self.hidden_dim < 1:
            raise ConfigError("max_epochs, batch_size and hidden_dim must be positive")


class RegressionHead(nn.Module):
    def __init__(self, input_dim: int, hidden_dim: int = 256, dropout_rate: float = 0.3,
                 output_dim: int = N_DIMENSIONS):
        super().__init__()
        self.input_dim, self.hidden_dim, self.output_dim = input_dim, hidden_dim, output_dim
        self.net = nn.Sequential(
            nn.Linear(input_dim, hidden_dim),
            nn.LayerNorm(hidden_dim),
            nn.GELU(),
            nn.Dropout(dropout_rate),
            nn.Linear(hidden_dim, output_dim),
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.net(x)


# numpy reference of torch's SmoothL1Loss (mean reduction), kept for gradient checks
def smooth_l1(pred: np.ndarray, target: np.ndarray, beta: float = 1.0) -> float:
    diff = np.abs(np.asarray(pred, float) - np.asarray(target, float))
    per = np.where(diff < beta, 0.5 * diff ** 2 / beta, diff - 0.5 * beta)
    return float(per.mean())


def smooth_l1_grad(pred: np.ndarray, target: np.ndarray, beta: float = 1.0) -> np.ndarray:
    diff = np.asarray(pred, float) - np.asarray(target, float)
    grad = np.where(np.abs(diff) < beta, diff / beta, np.sign(diff))
    return grad / diff.size


@dataclass
class EvalReport:
    per_dimension_rmse: np.ndarray
    macro_rmse: float
    n: int

    def as_dict(self) -> dict[str, float]:
        return {**dict(zip(DIMENSION_NAMES, map(float, self.per_dimension_rmse))),
                "macro": self.macro_rmse}


def evaluate(predictions, gold, *, clamp: bool = False) -> EvalReport:
    """Per-dimension RMSE and its arithmetic mean over the 21 dimensions."""
    pred = np.asarray(predictions, dtype=float)
    gold = np.asarray(gold, dtype=float)
    if pred.size == 0 or gold.size == 0:
        raise ValueError("RMSE is undefined for empty input")
    if pred.shape != gold.shape:
        raise ValueError(f"shape mismatch: predictions {pred.shape} vs gold {gold.shape}")
    if gold.min() < SCALE_MIN or gold.max() > SCALE_MAX:
        raise ValueError("gold ratings must lie in [1, 5]")
    if clamp:
        pred = np.clip(pred, SCALE_MIN, SCALE_MAX)
    rmse = np.sqrt(np.mean((pred - gold) ** 2, axis=0))
    return EvalReport(rmse, float(np.mean(rmse)), pred.shape[0])


def gold_matrix(records: Sequence[EventRecord]) -> np.ndarray:
    return np.array([r.ratings for r in records], dtype=float).reshape(len(records), N_DIMENSIONS)


@dataclass
class MedianBaseline:
    medians: np.ndarray

    def predict(self, texts: Sequence[str]) -> np.ndarray:
        return np.tile(self.medians, (len(texts), 1))


def median_baseline(train_set: Sequence[EventRecord]) -> MedianBaseline:
    if not train_set:
        raise ValueError("median baseline needs a nonempty training set")
    return MedianBaseline(np.median(gold_matrix(train_set), axis=0))


class Checkpoint:
    """A trained head plus the encoder it was trained on."""

    def __init__(self, encoder: Encoder, head: RegressionHead, config: TrainConfig,
                 history: list[dict] | None = None, selected_epoch: int | None = None):
        self.encoder = encoder
        self.head = head.eval()
        self.config = config
        self.history = history or []
        self.selected_epoch = selected_epoch

    def predict(self, texts: Sequence[str], *, clamp: bool = False, batch_size: int = 256,
                workers: int = 1) -> np.ndarray:
        """One 21-vector per text, in input order; raw values unless ``clamp``."""
        texts = list(texts)
        if any(not isinstance(t, str) or not t.strip() for t in texts):
            raise ValueError("predict needs nonempty strings")
        chunks = [texts[i:i + batch_size] for i in range(0, len(texts), batch_size)]
        if workers > 1 and self.encoder.thread_safe and len(chunks) > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                embedded = list(pool.map(self.encoder.encode, chunks))
        else:
            embedded = [self.encoder.encode(c) for c in chunks]
        if not embedded:
            return np.empty((0, N_DIMENSIONS))
        out = self._forward(np.concatenate(embedded))
        return np.clip(out, SCALE_MIN, SCALE_MAX) if clamp else out

    def _forward(self, embeddings: np.ndarray) -> np.ndarray:
        self.head.eval()
        with torch.no_grad():
            out = self.head(torch.from_numpy(np.ascontiguousarray(embeddings, dtype=np.float32)))
        return out.numpy().astype(np.float64)

    def metadata(self) -> dict:
        encoder = self.encoder.spec()
        if self.config.finetune_encoder:
            encoder["saved_weights"] = ENCODER_DIR
        return {
            "train_config": asdict(self.config),
            "encoder": encoder,
            "head": {"input_dim": self.head.input_dim, "hidden_dim": self.head.hidden_dim,
                     "output_dim": self.head.output_dim, "dropout_rate": self.config.dropout_rate,
                     "layers": ["linear", "layer_norm", "gelu", "dropout", "linear"]},
            "dimensions": list(DIMENSION_NAMES),
            "seed": self.config.seed,
            "selected_epoch": self.selected_epoch,
        }

    def save(self, directory: str | Path) -> Path:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        torch.save(self.head.state_dict(), directory / WEIGHTS_FILE)
        if self.config.finetune_encoder:
            self.encoder.save(directory / ENCODER_DIR)
        (directory / CONFIG_FILE).write_text(json.dumps(self.metadata(), indent=2) + "\n")
        with (directory / HISTORY_FILE).open("w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=["epoch", "train_loss", "dev_macro_rmse"],
                                    lineterminator="\n")
            writer.writeheader()
            for row in self.history:
                writer.writerow({k: format(v, ".17g") if isinstance(v, float) else v
                                 for k, v in row.items()})
        return directory

    @classmethod
    def load(cls, directory: str | Path) -> "Checkpoint":
        directory = Path(directory)
        if not (directory / CONFIG_FILE).is_file():
            raise ConfigError(f"no checkpoint at {directory}")
        meta = json.loads((directory / CONFIG_FILE).read_text())
        config = TrainConfig(**meta["train_config"])
        spec = dict(meta["encoder"])
        if spec.pop("saved_weights", None):
            spec["model_name"] = str(directory / ENCODER_DIR)
        encoder = build_encoder(spec)
        h = meta["head"]
        head = RegressionHead(h["input_dim"], h["hidden_dim"], h["dropout_rate"], h["output_dim"])
        head.load_state_dict(torch.load(directory / WEIGHTS_FILE, weights_only=True))
        history = []
        if (directory / HISTORY_FILE).is_file():
            with (directory / HISTORY_FILE).open(newline="") as fh:
                history = [{"epoch": int(r["epoch"]), "train_loss": float(r["train_loss"]),
                            "dev_macro_rmse": float(r["dev_macro_rmse"])} for r in csv.DictReader(fh)]
        return cls(encoder, head, config, history, meta.get("selected_epoch"))


def train(config: TrainConfig, train_set: Sequence[EventRecord], dev_set: Sequence[EventRecord],
          *, encoder: Encoder | None = None, out_dir: str | Path | None = None) -> Checkpoint:
    if not train_set:
        raise ValueError("training set is empty")
    if not dev_set:
        raise ConfigError("validation set is empty; checkpoint selection needs it")
    torch.manual_seed(config.seed)
    encoder = encoder or build_encoder(config.encoder)
    finetune = config.finetune_encoder
    if finetune and not getattr(encoder, "trainable", False):
        raise ConfigError(f"train.finetune_encoder: encoder {encoder.name!r} has no trainable weights")
    shuffle_gen = torch.Generator().manual_seed(config.seed)

    train_texts = [r.text for r in train_set]
    dev_texts = [r.text for r in dev_set]
    x_train = None if finetune else torch.from_numpy(encoder.encode(train_texts))
    y_train = torch.from_numpy(gold_matrix(train_set).astype(np.float32))
    x_dev = None if finetune else encoder.encode(dev_texts)
    y_dev = gold_matrix(dev_set)

    head = RegressionHead(encoder.embedding_dim, config.hidden_dim, config.dropout_rate)
    with torch.no_grad():
        # start from the constant mean predictor
        head.net[-1].bias.copy_(y_train.mean(dim=0))
    params = list(head.parameters()) + (list(encoder.parameters()) if finetune else [])
    optimizer = torch.optim.AdamW(params, lr=config.learning_rate, weight_decay=config.weight_decay)
    ckpt = Checkpoint(encoder, head, config)

    def snapshot():
        return (copy.deepcopy(head.state_dict()),
                copy.deepcopy(encoder.state_dict()) if finetune else None)

    history: list[dict] = []
    best_rmse, best_state, best_epoch, stale = math.inf, None, None, 0
    n = len(train_set)
    for epoch in range(1, config.max_epochs + 1):
        head.train()
        if finetune:
            encoder.train()
        order = torch.randperm(n, generator=shuffle_gen)
        total = 0.0
        for b, start in enumerate(range(0, n, config.batch_size)):
            idx = order[start:start + config.batch_size]
            if finetune:
                emb = encoder.forward_train([train_texts[i] for i in idx.tolist()])
            else:
                emb = x_train[idx]
            loss = nn.functional.smooth_l1_loss(head(emb), y_train[idx], beta=config.smooth_l1_beta)
            if not torch.isfinite(loss):
                raise TrainingError(f"non-finite loss at epoch {epoch}, batch {b} "
                                    f"(learning rate {config.learning_rate})")
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            total += loss.item() * len(idx)
        if finetune:
            encoder.train(False)
        dev_emb = encoder.encode(dev_texts) if finetune else x_dev
        dev_rmse = evaluate(ckpt._forward(dev_emb), y_dev).macro_rmse
        history.append({"epoch": epoch, "train_loss": total / n, "dev_macro_rmse": dev_rmse})
        logger.info("epoch %d train_loss=%.4f dev_macro_rmse=%.4f", epoch, total / n, dev_rmse)
        if dev_rmse < best_rmse:
            best_rmse, best_state, best_epoch, stale = dev_rmse, snapshot(), epoch, 0
        else:
            stale += 1
            if stale >= config.patience:
                logger.info("early stop after epoch %d", epoch)
                break

    if config.checkpoint_selection == "best_dev_macro_rmse":
        head.load_state_dict(best_state[0])
        if finetune:
            encoder.load_state_dict(best_state[1])
    else:
        best_epoch = history[-1]["epoch"]
    ckpt = Checkpoint(encoder, head, config, history, best_epoch)
    if out_dir is not None:
        ckpt.save(out_dir)
    return ckpt


def predict(checkpoint: Checkpoint | str | Path, texts: Sequence[str], *, clamp: bool = False,
            workers: int = 1) -> np.ndarray:
    if not isinstance(checkpoint, Checkpoint):
        checkpoint = Checkpoint.load(checkpoint)
    return checkpoint.predict(texts, clamp=clamp, workers=workers)


def write_metrics(path: str | Path, reports: dict[str, EvalReport]) -> Path:
    """CSV with one row per dimension plus a ``macro`` row, one column per report."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    names = list(reports)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["dimension", *names])
        for d, dim in enumerate(DIMENSION_NAMES):
            writer.writerow([dim, *(f"{reports[n].per_dimension_rmse[d]:.6f}" for n in names)])
        writer.writerow(["macro", *(f"{reports[n].macro_rmse:.6f}" for n in names)])
    return path
