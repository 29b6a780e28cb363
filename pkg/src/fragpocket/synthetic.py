"""Synthetic structures and corpora for tests, demos and desk-scale runs.

Backbones are grown with idealized peptide internal coordinates, so the
chains survive the geometric discontinuity check and can be written out as
valid PDB text. Side chains are reduced: atoms carry real names (so mass
templates apply) but branch geometry is approximated by chained placement.

The alignment corpus produces aligned pocket/ligand pairs from four
fragment archetypes. Each sample also carries a continuous conformation
parameter w in [0, 1] shared between the two sides: the ligand's backbone
dihedrals sweep with w, and the pocket encodes the archetype and w only in
*which atom types sit at which pair distance* (composition and distance
multiset stay identical across archetypes), so an untrained encoder sees
noise while a trained one can recover the pairing pattern.
"""

import math
from dataclasses import dataclass

import numpy as np

from .chem import infer_element
from .fragments import LabeledAtom, apply_terminal_caps
from .geometry import apply_rigid, place_atom, random_rotation
from .structure import Atom, CleanChain, Residue
from . import surface

DEG = math.pi / 180.0

# Idealized backbone internal coordinates.
_B_N_CA, _B_CA_C, _B_C_N, _B_C_O = 1.458, 1.525, 1.329, 1.231
_A_N_CA_C, _A_CA_C_N, _A_C_N_CA = 111.2 * DEG, 116.2 * DEG, 121.7 * DEG
_A_CA_C_O = 120.8 * DEG

# Reduced side chains: atom names chained off CA (real names, linear geometry).
_SIDE_CHAINS = {
    "GLY": [],
    "ALA": ["CB"],
    "SER": ["CB", "OG"],
    "CYS": ["CB", "SG"],
    "VAL": ["CB", "CG1"],
    "LEU": ["CB", "CG", "CD1"],
    "ASP": ["CB", "CG", "OD1", "OD2"],
    "ASN": ["CB", "CG", "OD1", "ND2"],
    "LYS": ["CB", "CG", "CD", "CE", "NZ"],
    "GLU": ["CB", "CG", "CD", "OE1"],
    "PHE": ["CB", "CG", "CD1", "CE1"],
    "TRP": ["CB", "CG", "CD1", "NE1", "CE2"],
    "MET": ["CB", "CG", "SD", "CE"],
    "THR": ["CB", "OG1"],
}


def ideal_backbone(names, phi=-140.0 * DEG, psi=135.0 * DEG, omega=math.pi,
                   side_dihedral=60.0 * DEG):
    """Residue list with N/CA/C/O plus reduced side chains.

    phi/psi may be scalars or per-residue sequences.
    """
    n_res = len(names)
    phis = np.broadcast_to(np.asarray(phi, dtype=float), (n_res,))
    psis = np.broadcast_to(np.asarray(psi, dtype=float), (n_res,))

    n = np.array([0.0, 0.0, 0.0])
    ca = np.array([_B_N_CA, 0.0, 0.0])
    c = place_atom(np.array([0.0, 1.0, 0.0]), n, ca, _B_CA_C, _A_N_CA_C, 0.0)

    residues = []
    backbone = [(n, ca, c)]
    for i in range(1, n_res):
        n_prev, ca_prev, c_prev = backbone[-1]
        n_next = place_atom(n_prev, ca_prev, c_prev, _B_C_N, _A_CA_C_N, psis[i - 1])
        ca_next = place_atom(ca_prev, c_prev, n_next, _B_N_CA, _A_C_N_CA, omega)
        c_next = place_atom(c_prev, n_next, ca_next, _B_CA_C, _A_N_CA_C, phis[i])
        backbone.append((n_next, ca_next, c_next))

    for i, name in enumerate(names):
        n_i, ca_i, c_i = backbone[i]
        if i + 1 < n_res:
            o_i = place_atom(backbone[i + 1][0], ca_i, c_i, _B_C_O, _A_CA_C_O, math.pi)
        else:
            o_i = place_atom(n_i, ca_i, c_i, _B_C_O, _A_CA_C_O, psis[i] + math.pi)
        atoms = [Atom("N", "N", n_i.copy()), Atom("C", "CA", ca_i.copy()),
                 Atom("C", "C", c_i.copy()), Atom("O", "O", o_i.copy())]
        chain_refs = [n_i, c_i, ca_i]
        for atom_name in _SIDE_CHAINS.get(name, ["CB"]):
            pos = place_atom(chain_refs[-3], chain_refs[-2], chain_refs[-1],
                             1.52, 114.0 * DEG, side_dihedral)
            atoms.append(Atom(infer_element(atom_name), atom_name, pos))
            chain_refs.append(pos)
        residues.append(Residue(index=i, name=name, heavy_atoms=atoms))
    return residues


def make_chain(names, source_id="synthetic", **kwargs):
    residues = ideal_backbone(names, **kwargs)
    return CleanChain(residues=residues, discontinuities=set(),
                      source_id=source_id, chain_order=["A"])


def random_coil_chain(rng, length, n_breaks=0, source_id="coil", box=28.0):
    """Random-conformation chain with optional discontinuities.

    Segments after each break are rigidly re-placed inside a compact box so
    that spatial contacts across the chain (pockets) actually occur.
    """
    pool = ["GLY", "ALA", "SER", "VAL", "LEU", "ASP", "LYS", "PHE"]
    names = [pool[rng.integers(len(pool))] for _ in range(length)]
    phis = rng.uniform(-160.0, -50.0, size=length) * DEG
    psis = rng.uniform(-60.0, 160.0, size=length) * DEG
    residues = ideal_backbone(names, phi=phis, psi=psis)

    breaks = set()
    if n_breaks > 0 and length > 2:
        candidates = rng.permutation(length - 1)[:n_breaks]
        breaks = {int(b) for b in candidates}

    # Re-place every segment (including the first) with a random rigid motion.
    bounds = sorted(breaks)
    starts = [0] + [b + 1 for b in bounds]
    ends = bounds + [length - 1]
    for s, e in zip(starts, ends):
        rot = random_rotation(rng)
        shift = rng.uniform(-box / 2, box / 2, size=3)
        for res in residues[s:e + 1]:
            for atom in res.heavy_atoms:
                atom.xyz = apply_rigid(atom.xyz, rot, shift)

    return CleanChain(residues=residues, discontinuities=breaks,
                      source_id=source_id, chain_order=["A"])


# ---------------------------------------------------------------------------
# Alignment corpus: 4 fragment archetypes with a shared conformation parameter.
# ---------------------------------------------------------------------------

ARCHETYPES = ("GLY", "TRP", "ASP", "LYS")
_ARCH_LENGTHS = {"GLY": 3, "TRP": 2, "ASP": 2, "LYS": 2}

# Pocket pairing patterns: (types of the 4 short dimers, types of the 4 long
# dimers). Composition is 8 N + 8 O and the distance multiset is shared for
# every archetype; only the type-to-distance pairing differs.
_POCKET_PATTERNS = {
    "GLY": ((("N", "N"),) * 4, (("O", "O"),) * 4),
    "TRP": ((("O", "O"),) * 4, (("N", "N"),) * 4),
    "ASP": ((("N", "O"),) * 4, (("O", "N"),) * 4),
    "LYS": ((("N", "N"), ("O", "O")) * 2, (("N", "O"), ("O", "N")) * 2),
}


@dataclass
class CorpusSample:
    archetype: str
    w: float
    ligand_atoms: list
    pocket_atoms: list


def _archetype_ligand(archetype, w, rng):
    """Capped homopeptide whose backbone dihedrals sweep with w."""
    names = [archetype] * _ARCH_LENGTHS[archetype]
    phi = (-150.0 + 90.0 * w) * DEG
    psi = (150.0 - 110.0 * w) * DEG
    side = (40.0 + 60.0 * w) * DEG
    residues = ideal_backbone(names, phi=phi, psi=psi, side_dihedral=side)
    atoms = []
    for res in residues:
        for a in res.heavy_atoms:
            atoms.append(LabeledAtom(a.element, a.name, res.name, res.index,
                                     a.xyz.copy()))
    atoms = apply_terminal_caps(atoms)
    rot = random_rotation(rng)
    shift = rng.uniform(-5.0, 5.0, size=3)
    for a in atoms:
        a.xyz = apply_rigid(a.xyz, rot, shift)
    return atoms


def _archetype_pocket(archetype, w, center, rng):
    """Paired sites on a shell; the type-to-distance pairing encodes identity.

    The archetype signal is deliberately subtle: N/O counts, site counts
    and shell geometry are archetype-independent noise (they dominate what
    an untrained encoder sees), while the archetype only decides which
    types sit at the short versus long pair distance. The conformation
    parameter w moves both pair distances and the shell radius, mirroring
    the ligand's dihedral sweep.
    """
    short_types, long_types = _POCKET_PATTERNS[archetype]
    d_short = 2.3 + 0.9 * w
    d_long = 3.4 + 0.9 * w
    n_repeat = int(rng.integers(1, 4))       # 4..12 sites total, noise
    radius_base = 5.5 + 3.5 * w

    atoms = []
    site = 0
    for types, dist in ((short_types, d_short), (long_types, d_long)):
        for ta, tb in list(types) * n_repeat:
            direction = rng.normal(size=3)
            direction /= np.linalg.norm(direction)
            radius = radius_base + rng.uniform(-0.7, 0.7)
            mid = center + radius * direction
            axis = rng.normal(size=3)
            axis /= np.linalg.norm(axis)
            half = 0.5 * dist * axis
            atoms.append(LabeledAtom(ta, "X1", "SIT", 100 + site, mid + half))
            atoms.append(LabeledAtom(tb, "X2", "SIT", 100 + site, mid - half))
            site += 1
    # Composition noise: carbon/sulfur scatter, independent of archetype.
    for k in range(int(rng.integers(0, 7))):
        direction = rng.normal(size=3)
        direction /= np.linalg.norm(direction)
        pos = center + (radius_base + rng.uniform(-1.5, 1.5)) * direction
        element = "C" if rng.random() < 0.75 else "S"
        atoms.append(LabeledAtom(element, "XN", "SIT", 200 + k, pos))
    return atoms


def alignment_corpus(n_samples=200, seed=0):
    """n aligned pocket/ligand samples cycling through the archetypes."""
    rng = np.random.default_rng(seed)
    samples = []
    for i in range(n_samples):
        archetype = ARCHETYPES[i % len(ARCHETYPES)]
        w = rng.uniform(0.0, 1.0)
        ligand = _archetype_ligand(archetype, w, rng)
        center = np.mean([a.xyz for a in ligand], axis=0)
        pocket = _archetype_pocket(archetype, w, center, rng)
        samples.append(CorpusSample(archetype, w, ligand, pocket))
    return samples


def corpus_records(samples, source_id="corpus", with_rbsa=False):
    """Wrap corpus samples as ComplexRecords usable by the trainer."""
    from .fragments import ComplexRecord

    records = []
    for i, s in enumerate(samples):
        rbsa = (surface.compute_rbsa(s.ligand_atoms, s.pocket_atoms)
                if with_rbsa else 0.0)
        records.append(ComplexRecord(
            source_id=f"{source_id}-{i:04d}",
            fragment_span=(0, _ARCH_LENGTHS[s.archetype] - 1),
            ligand_atoms=s.ligand_atoms,
            pocket_residue_indices=tuple(sorted({a.res_index for a in s.pocket_atoms})),
            pocket_atoms=s.pocket_atoms,
            ligand_size=surface.effective_size(s.ligand_atoms),
            pocket_size=len({a.res_index for a in s.pocket_atoms}),
            rbsa=rbsa,
        ))
    return records
