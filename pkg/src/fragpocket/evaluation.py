"""Embedding evaluation: pocket matching, zero-shot KNN, affinity regression.

AUC uses the Mann-Whitney rank formulation with midrank tie handling. The
KNN weighting follows the inverse-similarity form as published (weights
1/(s_i + eps), which upweights *less* similar neighbors); a conventional
similarity-proportional mode is available via KnnConfig, but the verbatim
form is the default.
"""

import base64
import csv
import hashlib
import json
from dataclasses import dataclass

import numpy as np
import torch
from scipy.stats import rankdata

from .fragments import ChainIndex


class DegenerateLabels(ValueError):
    """AUC needs at least one positive and one negative label."""


def cosine(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return float(np.dot(a, b) / (np.linalg.norm(a) * np.linalg.norm(b)))


def auc_roc(scores, labels):
    """Mann-Whitney AUC: (concordant + 0.5 * tied) / (positives * negatives)."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    pos = labels == 1
    n_pos = int(pos.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DegenerateLabels("need both classes to compute AUC")
    ranks = rankdata(scores)  # midranks handle ties with the 0.5 convention
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def roc_curve(scores, labels):
    """(fpr, tpr) arrays over descending score thresholds, for plotting."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    order = np.argsort(-scores)
    tp = np.cumsum(labels[order] == 1)
    fp = np.cumsum(labels[order] == 0)
    tpr = np.concatenate([[0.0], tp / max(1, tp[-1])])
    fpr = np.concatenate([[0.0], fp / max(1, fp[-1])])
    return fpr, tpr


@dataclass
class KnnConfig:
    k: int = 200
    epsilon: float = 1e-8
    weighting: str = "inverse_similarity"  # or "similarity"

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.weighting not in ("inverse_similarity", "similarity"):
            raise ValueError(f"unknown weighting {self.weighting!r}")


def knn_regress(query, bank_vectors, bank_labels, config=None):
    """Weighted average of the top-k neighbors' labels by cosine similarity."""
    config = config or KnnConfig()
    bank_vectors = np.asarray(bank_vectors, dtype=float)
    bank_labels = np.asarray(bank_labels, dtype=float)
    q = np.asarray(query, dtype=float)
    sims = (bank_vectors @ q) / (
        np.linalg.norm(bank_vectors, axis=1) * np.linalg.norm(q))
    k = min(config.k, len(bank_labels))
    top = np.argsort(-sims)[:k]
    s = sims[top]
    labels = bank_labels[top]
    if config.weighting == "inverse_similarity":
        weights = 1.0 / (s + config.epsilon)
    else:
        weights = s + config.epsilon
    return float(np.sum(labels * weights) / np.sum(weights))


def matching_loss(y, p):
    """Pair loss for pocket-matching finetuning, linear in the cosine p."""
    return -y * p - (1.0 - y) * (1.0 - p)


def regression_metrics(pred, truth):
    """(RMSE, Pearson r, Spearman rho)."""
    pred = np.asarray(pred, dtype=float)
    truth = np.asarray(truth, dtype=float)
    rmse = float(np.sqrt(np.mean((pred - truth) ** 2)))

    def _pearson(a, b):
        a = a - a.mean()
        b = b - b.mean()
        denom = np.linalg.norm(a) * np.linalg.norm(b)
        if denom == 0:
            return 0.0
        return float(np.dot(a, b) / denom)

    pearson = _pearson(pred, truth)
    spearman = _pearson(rankdata(pred), rankdata(truth))
    return rmse, pearson, spearman


def zero_shot_pocket(chain, ligand_atoms, radius=8.0):
    """Residues with a heavy atom within ``radius`` of any ligand atom.

    The zero-shot matching harness definition for real ligands: no
    sequence-exclusion window applies.
    """
    index = ChainIndex.build(chain, radius)
    ligand_coords = np.asarray([a.xyz for a in ligand_atoms], dtype=float)
    cand = index.grid.candidates(ligand_coords, radius)
    if len(cand) == 0:
        return set()
    diff = index.coords[cand][:, None, :] - ligand_coords[None, :, :]
    d2min = np.min(np.sum(diff * diff, axis=-1), axis=1)
    hits = cand[d2min < radius * radius]
    return {int(r) for r in index.res_ids[hits]}


@dataclass
class LbaConfig:
    hidden_dims: tuple = (128, 64)   # paper-scale alternative: (1024, 512, 256, 128)
    learning_rate: float = 1e-2
    epochs: int = 600
    test_fraction: float = 0.2
    seed: int = 0


class RegressionHead(torch.nn.Module):
    """MLP on concatenated [pocket | ligand] embeddings."""

    def __init__(self, in_dim, config):
        super().__init__()
        gen = torch.Generator().manual_seed(config.seed)
        dims = [in_dim] + list(config.hidden_dims) + [1]
        layers = []
        for a, b in zip(dims[:-1], dims[1:]):
            lin = torch.nn.Linear(a, b, dtype=torch.float64)
            with torch.no_grad():
                lin.weight.copy_(torch.randn(b, a, generator=gen,
                                             dtype=torch.float64) / np.sqrt(a))
                lin.bias.zero_()
            layers.append(lin)
        self.layers = torch.nn.ModuleList(layers)

    def forward(self, x):
        for lin in self.layers[:-1]:
            x = torch.relu(lin(x))
        return self.layers[-1](x).squeeze(-1)


def lba_fit(pocket_embs, ligand_embs, affinities, config=None):
    """Fit a regression head on frozen embeddings; metrics on a held-out split.

    The encoders themselves are not touched here (only their outputs are
    consumed), so the frozen contract holds by construction; callers that
    recompute embeddings should assert encoder checksums around that step.
    """
    config = config or LbaConfig()
    x = torch.as_tensor(np.concatenate([pocket_embs, ligand_embs], axis=1),
                        dtype=torch.float64)
    y = torch.as_tensor(np.asarray(affinities, dtype=float))
    if not torch.isfinite(y).all():
        raise ValueError("non-finite affinity targets")

    rng = np.random.default_rng(config.seed)
    order = rng.permutation(len(y))
    n_test = max(1, int(round(config.test_fraction * len(y))))
    test_idx = torch.as_tensor(order[:n_test])
    train_idx = torch.as_tensor(order[n_test:])

    head = RegressionHead(x.shape[1], config)
    optimizer = torch.optim.Adam(head.parameters(), lr=config.learning_rate)
    for _ in range(config.epochs):
        optimizer.zero_grad()
        loss = torch.mean((head(x[train_idx]) - y[train_idx]) ** 2)
        if not torch.isfinite(loss):
            raise RuntimeError("non-finite loss while fitting regression head")
        loss.backward()
        optimizer.step()

    with torch.no_grad():
        pred = head(x[test_idx]).numpy()
    rmse, pearson, spearman = regression_metrics(pred, y[test_idx].numpy())
    return head, {"rmse": rmse, "pearson": pearson, "spearman": spearman,
                  "n_train": int(len(train_idx)), "n_test": int(len(test_idx))}


# ---------------------------------------------------------------------------
# File formats: pair lists and embedding banks.
# ---------------------------------------------------------------------------

def write_pairs_csv(path, rows):
    """rows: iterable of (id_a, id_b, label)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id_a", "id_b", "label"])
        for id_a, id_b, label in rows:
            writer.writerow([id_a, id_b, int(label)])


def read_pairs_csv(path):
    rows = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            label = int(row["label"])
            if label not in (0, 1):
                raise ValueError(f"pair label must be 0/1, got {label}")
            rows.append((row["id_a"], row["id_b"], label))
    return rows


BANK_VERSION = 1


def save_bank(path, ids, vectors):
    """Embedding bank: id list plus a float64 matrix, content-hashed."""
    vectors = np.asarray(vectors, dtype=np.float64)
    raw = vectors.tobytes()
    payload = {
        "format_version": BANK_VERSION,
        "ids": list(map(str, ids)),
        "shape": list(vectors.shape),
        "dtype": "float64",
        "data": base64.b64encode(raw).decode("ascii"),
        "sha256": hashlib.sha256(raw).hexdigest(),
    }
    with open(path, "w") as fh:
        json.dump(payload, fh)


def load_bank(path):
    with open(path) as fh:
        payload = json.load(fh)
    if payload.get("format_version") != BANK_VERSION:
        raise ValueError("unsupported bank version")
    raw = base64.b64decode(payload["data"])
    if hashlib.sha256(raw).hexdigest() != payload["sha256"]:
        raise ValueError("bank content hash mismatch")
    vectors = np.frombuffer(raw, dtype=np.float64).reshape(payload["shape"]).copy()
    return payload["ids"], vectors


def matching_scores(ids, vectors, pairs):
    """Cosine scores and labels for a pair list over an embedding bank."""
    lookup = {str(i): k for k, i in enumerate(ids)}
    scores, labels = [], []
    for id_a, id_b, label in pairs:
        try:
            a, b = lookup[str(id_a)], lookup[str(id_b)]
        except KeyError as missing:
            raise KeyError(f"pair id {missing} not present in bank") from None
        scores.append(cosine(vectors[a], vectors[b]))
        labels.append(label)
    return np.asarray(scores), np.asarray(labels)
