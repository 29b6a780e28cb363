"""Dual InfoNCE alignment losses and the frozen-reference training loop.

For a batch of positive pairs with pocket embeddings s_i and ligand
embeddings t_i, prediction heads map both sides into a shared space and
two losses score the positive against in-batch negatives:

    L1: for each ligand, softmax over the batch's pockets
    L2: for each pocket, softmax over the batch's ligands

The ligand encoder stays frozen throughout training; only the pocket
encoder and both heads receive gradients. Ligand embeddings are therefore
precomputed once per run.
"""

import csv
import math
from dataclasses import dataclass, field

import numpy as np
import torch

from .encoder import (EncoderConfig, HeadConfig, HeadPair, PocketEncoder,
                      TokenSeq, clone_state, parameter_checksum)


class NonFiniteLoss(RuntimeError):
    """Training hit a non-finite loss; carries the last good state dicts."""

    def __init__(self, epoch, last_good):
        self.epoch = epoch
        self.last_good = last_good
        super().__init__(f"non-finite loss at epoch {epoch}")


@dataclass
class Batch:
    """Aligned positive pairs: row i of each tensor belongs together."""
    pocket_embeddings: torch.Tensor   # s, [N, d_e]
    ligand_embeddings: torch.Tensor   # t, [N, d_e]

    def __post_init__(self):
        if self.pocket_embeddings.shape != self.ligand_embeddings.shape:
            raise ValueError("pocket/ligand embedding shapes differ")
        if self.pocket_embeddings.shape[0] < 1:
            raise ValueError("batch must contain at least one pair")


@dataclass
class TrainConfig:
    batch_size: int = 16
    learning_rate: float = 1e-3
    max_epochs: int = 200
    warmup_ratio: float = 0.06
    poly_power: float = 1.0
    early_stop_patience: int = 20
    val_fraction: float = 0.1
    seed: int = 0
    adam_betas: tuple = (0.9, 0.999)
    adam_eps: float = 1e-8
    temperature: float = 1.0   # ablation only; the losses have none by default


def _pair_logits(batch, heads, temperature=1.0):
    u = heads.ligand(batch.ligand_embeddings)     # g_T(t), [N, d_p]
    v = heads.pocket(batch.pocket_embeddings)     # g_S(s), [N, d_p], unit rows
    return (u @ v.T) / temperature


def loss_l1(batch, heads, temperature=1.0):
    """Mean over pairs of: -pos + logsumexp over the batch's pockets."""
    logits = _pair_logits(batch, heads, temperature)
    pos = torch.diagonal(logits)
    return (-pos + torch.logsumexp(logits, dim=1)).mean()


def loss_l2(batch, heads, temperature=1.0):
    """Mean over pairs of: -pos + logsumexp over the batch's ligands."""
    logits = _pair_logits(batch, heads, temperature)
    pos = torch.diagonal(logits)
    return (-pos + torch.logsumexp(logits, dim=0)).mean()


def loss_total(batch, heads, temperature=1.0):
    return loss_l1(batch, heads, temperature) + loss_l2(batch, heads, temperature)


def retrieval_top1(batch, heads, temperature=1.0):
    """Fraction of pockets whose highest-logit ligand is their positive."""
    with torch.no_grad():
        logits = _pair_logits(batch, heads, temperature)
        hits = (logits.argmax(dim=0) == torch.arange(logits.shape[0])).sum()
    return float(hits) / logits.shape[0]


def polynomial_decay_lr(step, total_steps, config):
    """Linear warmup for warmup_ratio of all steps, then polynomial decay."""
    warmup = max(1, int(round(config.warmup_ratio * total_steps)))
    if step < warmup:
        return (step + 1) / warmup
    remaining = max(1, total_steps - warmup)
    progress = min(1.0, (step - warmup) / remaining)
    return (1.0 - progress) ** config.poly_power


def tokenize_records(records):
    """ComplexRecords -> (pocket TokenSeq, ligand TokenSeq) pairs."""
    return [(TokenSeq.from_atoms(r.pocket_atoms), TokenSeq.from_atoms(r.ligand_atoms))
            for r in records]


@dataclass
class TrainHistory:
    rows: list = field(default_factory=list)
    frozen_checksum_before: str = ""
    frozen_checksum_after: str = ""
    best_epoch: int = -1
    stopped_epoch: int = -1

    def column(self, name):
        return [row[name] for row in self.rows]

    def write_csv(self, path):
        fields = ["epoch", "l1", "l2", "total", "top1", "lr", "val_total"]
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=fields)
            writer.writeheader()
            for row in self.rows:
                writer.writerow({k: row[k] for k in fields})


def train(dataset, pocket_encoder, frozen_ligand_encoder, heads, config=None):
    """Adam-train the pocket encoder and heads against the frozen reference.

    dataset: list of ComplexRecords (or pre-tokenized (pocket, ligand)
    TokenSeq pairs). Returns (pocket_encoder, heads, TrainHistory); the
    encoder and heads are updated in place and reset to the best-validation
    state before returning.
    """
    config = config or TrainConfig()
    if dataset and not isinstance(dataset[0], tuple):
        dataset = tokenize_records(dataset)
    if not dataset:
        raise ValueError("empty training dataset")

    history = TrainHistory()
    history.frozen_checksum_before = parameter_checksum(frozen_ligand_encoder)

    # The reference encoder never updates, so ligand embeddings are fixed.
    ligand_embs = torch.stack([
        frozen_ligand_encoder.encode(lig) for _, lig in dataset])

    rng = np.random.default_rng(config.seed)
    order = rng.permutation(len(dataset))
    n_val = int(round(config.val_fraction * len(dataset)))
    val_idx = order[:n_val]
    train_idx = order[n_val:]
    if len(train_idx) == 0:
        raise ValueError("no training samples left after validation split")

    params = list(pocket_encoder.parameters()) + list(heads.parameters())
    optimizer = torch.optim.Adam(params, lr=config.learning_rate,
                                 betas=config.adam_betas, eps=config.adam_eps)
    steps_per_epoch = max(1, math.ceil(len(train_idx) / config.batch_size))
    total_steps = config.max_epochs * steps_per_epoch
    scheduler = torch.optim.lr_scheduler.LambdaLR(
        optimizer, lambda step: polynomial_decay_lr(step, total_steps, config))

    def encode_pockets(indices, requires_grad):
        return torch.stack([
            pocket_encoder.encode(dataset[i][0], requires_grad=requires_grad)
            for i in indices])

    def validation_loss():
        if len(val_idx) == 0:
            return float("nan")
        losses = []
        for lo in range(0, len(val_idx), config.batch_size):
            idx = val_idx[lo:lo + config.batch_size]
            batch = Batch(encode_pockets(idx, False), ligand_embs[idx])
            losses.append(float(loss_total(batch, heads, config.temperature)))
        return float(np.mean(losses))

    best_val = float("inf")
    best_state = None
    bad_epochs = 0
    last_good = (clone_state(pocket_encoder),
                 clone_state(heads.ligand), clone_state(heads.pocket))

    for epoch in range(config.max_epochs):
        perm = rng.permutation(train_idx)
        epoch_l1 = epoch_l2 = 0.0
        epoch_top1 = 0.0
        n_seen = 0
        for lo in range(0, len(perm), config.batch_size):
            idx = perm[lo:lo + config.batch_size]
            if len(idx) == 1 and len(perm) > 1:
                continue  # a singleton batch has no negatives
            batch = Batch(encode_pockets(idx, True), ligand_embs[idx])
            l1 = loss_l1(batch, heads, config.temperature)
            l2 = loss_l2(batch, heads, config.temperature)
            total = l1 + l2
            if not torch.isfinite(total):
                raise NonFiniteLoss(epoch, last_good)
            optimizer.zero_grad()
            total.backward()
            optimizer.step()
            scheduler.step()
            epoch_l1 += float(l1) * len(idx)
            epoch_l2 += float(l2) * len(idx)
            epoch_top1 += retrieval_top1(batch, heads, config.temperature) * len(idx)
            n_seen += len(idx)

        last_good = (clone_state(pocket_encoder),
                     clone_state(heads.ligand), clone_state(heads.pocket))
        val_total = validation_loss()
        history.rows.append({
            "epoch": epoch,
            "l1": epoch_l1 / max(1, n_seen),
            "l2": epoch_l2 / max(1, n_seen),
            "total": (epoch_l1 + epoch_l2) / max(1, n_seen),
            "top1": epoch_top1 / max(1, n_seen),
            "lr": optimizer.param_groups[0]["lr"],
            "val_total": val_total,
        })

        track = val_total if not math.isnan(val_total) else history.rows[-1]["total"]
        if track < best_val - 1e-12:
            best_val = track
            best_state = last_good
            history.best_epoch = epoch
            bad_epochs = 0
        else:
            bad_epochs += 1
            if bad_epochs > config.early_stop_patience:
                history.stopped_epoch = epoch
                break

    if best_state is not None:
        pocket_encoder.load_state_dict(best_state[0])
        heads.ligand.load_state_dict(best_state[1])
        heads.pocket.load_state_dict(best_state[2])

    history.frozen_checksum_after = parameter_checksum(frozen_ligand_encoder)
    if history.frozen_checksum_after != history.frozen_checksum_before:
        raise RuntimeError("frozen ligand encoder parameters changed during training")
    return pocket_encoder, heads, history
