"""Stratified thinning of candidate complexes toward a reference distribution.

Acceptance rates follow the importance-ratio construction: cells where the
target puts more mass than the source keep everything, over-represented
cells are thinned by min(1, c * target/source), with the global scale c
chosen by bisection so the expected accepted count meets the budget.

rBSA shaping is a second, independent multiplicative weight per rBSA bin,
normalized so the best-matched bin keeps weight 1 (pure downsampling).

Sampling decisions use a counter-style RNG keyed by (seed, source_id,
span): results are independent of record order and reproducible.
"""

import csv
import hashlib
import struct
from dataclasses import dataclass, field

import numpy as np

MAX_LIGAND_SIZE = 8
DEFAULT_POCKET_EDGES = np.arange(0.0, 105.0, 5.0)
DEFAULT_RBSA_EDGES = np.linspace(0.0, 1.0, 21)


class InfeasibleBudget(Warning):
    """Even keeping every record on target support misses half the budget."""


@dataclass
class Histogram2D:
    counts: np.ndarray                      # (MAX_LIGAND_SIZE, n_pocket_bins)
    pocket_edges: np.ndarray = field(default_factory=lambda: DEFAULT_POCKET_EDGES.copy())

    @property
    def mass(self):
        total = self.counts.sum()
        if total <= 0:
            return np.zeros_like(self.counts, dtype=float)
        return self.counts / total


@dataclass
class Histogram1D:
    counts: np.ndarray
    edges: np.ndarray

    @property
    def mass(self):
        total = self.counts.sum()
        if total <= 0:
            return np.zeros_like(self.counts, dtype=float)
        return self.counts / total


@dataclass
class SamplingTable:
    rates: np.ndarray                       # p(i, j) in [0, 1]
    pocket_edges: np.ndarray
    rbsa_weights: np.ndarray
    rbsa_edges: np.ndarray
    seed: int = 0
    feasible: bool = True
    expected_accepted: float = 0.0


def _ligand_row(size):
    return int(np.clip(size, 1, MAX_LIGAND_SIZE)) - 1


def _bin_index(value, edges):
    idx = int(np.searchsorted(edges, value, side="right")) - 1
    return int(np.clip(idx, 0, len(edges) - 2))


def joint_histogram(records, pocket_edges=None):
    """Counts of records per (ligand_size, pocket_size bin) cell."""
    edges = np.asarray(pocket_edges if pocket_edges is not None else DEFAULT_POCKET_EDGES,
                       dtype=float)
    counts = np.zeros((MAX_LIGAND_SIZE, len(edges) - 1))
    for rec in records:
        counts[_ligand_row(rec.ligand_size), _bin_index(rec.pocket_size, edges)] += 1
    return Histogram2D(counts=counts, pocket_edges=edges)


def rbsa_histogram(records, edges=None):
    edges = np.asarray(edges if edges is not None else DEFAULT_RBSA_EDGES, dtype=float)
    counts = np.zeros(len(edges) - 1)
    for rec in records:
        counts[_bin_index(rec.rbsa, edges)] += 1
    return Histogram1D(counts=counts, edges=edges)


def build_sampling_table(source, target, budget, seed=0):
    """Per-cell acceptance rates matching the target joint distribution.

    p(i,j) = min(1, c * target_mass / source_mass), with c bisected so the
    expected accepted count is within one record of the budget. Cells with
    zero target mass get rate 0; cells with zero source mass are ignored.
    An infeasible budget (even c -> inf accepts fewer than half the budget)
    is flagged on the returned table, not raised.
    """
    if budget < 0:
        raise ValueError("budget must be non-negative")
    src_counts = np.asarray(source.counts, dtype=float)
    src_mass = source.mass
    tgt_mass = target.mass
    if src_counts.shape != tgt_mass.shape:
        raise ValueError("source and target histograms have different shapes")

    support = (src_counts > 0) & (tgt_mass > 0)
    ratio = np.zeros_like(src_mass)
    ratio[support] = tgt_mass[support] / src_mass[support]

    def expected(c):
        return float(np.sum(np.minimum(1.0, c * ratio) * src_counts))

    saturation = float(src_counts[support].sum())
    feasible = True
    if budget == 0:
        rates = np.zeros_like(ratio)
        got = 0.0
    elif saturation <= budget:
        rates = np.where(support, 1.0, 0.0)
        got = saturation
        feasible = saturation >= 0.5 * budget
    else:
        lo, hi = 0.0, 1.0
        while expected(hi) < budget:
            hi *= 2.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if expected(mid) < budget:
                lo = mid
            else:
                hi = mid
            if abs(expected(0.5 * (lo + hi)) - budget) <= 1.0:
                break
        c = 0.5 * (lo + hi)
        rates = np.minimum(1.0, c * ratio)
        rates[~support] = 0.0
        got = expected(c)

    return SamplingTable(
        rates=rates,
        pocket_edges=np.asarray(source.pocket_edges, dtype=float),
        rbsa_weights=np.ones(len(DEFAULT_RBSA_EDGES) - 1),
        rbsa_edges=DEFAULT_RBSA_EDGES.copy(),
        seed=int(seed),
        feasible=feasible,
        expected_accepted=got,
    )


def build_rbsa_weights(source, target):
    """Per-bin multiplicative weights toward the target rBSA histogram.

    Importance ratios scaled by the largest feasible constant, so every
    weight is <= 1 and the best-matched bin keeps everything.
    """
    src_mass = source.mass
    tgt_mass = target.mass
    support = src_mass > 0
    ratio = np.zeros_like(src_mass)
    ratio[support] = tgt_mass[support] / src_mass[support]
    top = ratio.max()
    if top <= 0:
        return np.zeros_like(ratio)
    return np.minimum(1.0, ratio / top)


def _uniform_from_key(seed, source_id, span):
    key = struct.pack("<q", seed)
    data = f"{source_id}|{span[0]}|{span[1]}".encode()
    digest = hashlib.blake2b(data, digest_size=8, key=key).digest()
    return int.from_bytes(digest, "little") / 2.0 ** 64


def acceptance_probability(record, table):
    p = table.rates[_ligand_row(record.ligand_size),
                    _bin_index(record.pocket_size, table.pocket_edges)]
    w = table.rbsa_weights[_bin_index(record.rbsa, table.rbsa_edges)]
    return float(p * w)


def stratified_sample(records, table):
    """Thin records independently; order-invariant and reproducible."""
    kept = []
    for rec in records:
        p = acceptance_probability(rec, table)
        if p >= 1.0:
            kept.append(rec)
        elif p > 0.0 and _uniform_from_key(table.seed, rec.source_id,
                                           rec.fragment_span) < p:
            kept.append(rec)
    return kept


def total_variation(mass_a, mass_b, support_mask=None):
    """TV distance between two histogram masses, optionally on a sub-support.

    With a mask, both distributions are renormalized over the masked cells
    before comparison.
    """
    a = np.asarray(mass_a, dtype=float)
    b = np.asarray(mass_b, dtype=float)
    if support_mask is not None:
        mask = np.asarray(support_mask, dtype=bool)
        a = np.where(mask, a, 0.0)
        b = np.where(mask, b, 0.0)
        if a.sum() > 0:
            a = a / a.sum()
        if b.sum() > 0:
            b = b / b.sum()
    return 0.5 * float(np.abs(a - b).sum())


def export_stats(records, joint_path, rbsa_path, pocket_edges=None, rbsa_edges=None):
    """Write joint-size and rBSA histogram CSVs for a record set."""
    joint = joint_histogram(records, pocket_edges)
    rbsa = rbsa_histogram(records, rbsa_edges)
    mass2 = joint.mass
    with open(joint_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["ligand_size", "pocket_bin_start", "pocket_bin_end",
                         "count", "mass"])
        for i in range(joint.counts.shape[0]):
            for j in range(joint.counts.shape[1]):
                writer.writerow([i + 1,
                                 joint.pocket_edges[j], joint.pocket_edges[j + 1],
                                 int(joint.counts[i, j]), repr(mass2[i, j])])
    mass1 = rbsa.mass
    with open(rbsa_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bin_start", "bin_end", "count", "mass"])
        for j in range(len(rbsa.counts)):
            writer.writerow([rbsa.edges[j], rbsa.edges[j + 1],
                             int(rbsa.counts[j]), repr(mass1[j])])
    return joint, rbsa


def load_joint_histogram(path):
    """Read a joint histogram CSV written by export_stats (or user-supplied)."""
    rows = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            rows.append((int(row["ligand_size"]),
                         float(row["pocket_bin_start"]),
                         float(row["pocket_bin_end"]),
                         float(row["count"])))
    edges = sorted({r[1] for r in rows} | {r[2] for r in rows})
    edges = np.asarray(edges, dtype=float)
    counts = np.zeros((MAX_LIGAND_SIZE, len(edges) - 1))
    for size, start, _end, count in rows:
        counts[_ligand_row(size), _bin_index(start + 1e-9, edges)] = count
    return Histogram2D(counts=counts, pocket_edges=edges)


def load_rbsa_histogram(path):
    rows = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            rows.append((float(row["bin_start"]), float(row["bin_end"]),
                         float(row["count"])))
    edges = sorted({r[0] for r in rows} | {r[1] for r in rows})
    edges = np.asarray(edges, dtype=float)
    counts = np.zeros(len(edges) - 1)
    for start, _end, count in rows:
        counts[_bin_index(start + 1e-9, edges)] = count
    return Histogram1D(counts=counts, edges=edges)
