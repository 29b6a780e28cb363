"""Pseudo-ligand construction: fragment enumeration, pocket extraction, caps.

The per-chain pipeline walks every contiguous fragment of 1..N residues,
collects the surrounding residues with a heavy atom inside the distance
threshold (skipping the sequence-local exclusion window), applies acetyl /
amide terminal caps, and emits one candidate complex per fragment.

Pocket contacts are measured against the uncapped fragment; caps are added
afterwards, mirroring the construction order of the pipeline.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import surface
from .chem import ACETYL_CAP, AMIDE_CAP
from .geometry import place_atom
from .grid import SpatialGrid

DEG = math.pi / 180.0

# Idealized cap geometry (bond lengths in angstroms).
CAP_CN_BOND = 1.335
CAP_CO_BOND = 1.229
CAP_CC_BOND = 1.520
CAP_ANGLE = 120.0 * DEG


class MissingBackbone(ValueError):
    def __init__(self, res_index):
        self.res_index = res_index
        super().__init__(f"residue {res_index} lacks backbone N/CA/C")


class CapAlreadyPresent(ValueError):
    """Fragment already carries ACE/NH2 cap atoms."""


@dataclass
class ExtractionConfig:
    max_fragment_len: int = 8
    pocket_threshold: float = 6.0
    exclusion_window: int = 5
    cap_terminals: bool = True

    def __post_init__(self):
        if self.max_fragment_len < 1:
            raise ValueError("max_fragment_len must be >= 1")
        if self.pocket_threshold <= 0:
            raise ValueError("pocket_threshold must be positive")
        if self.exclusion_window < 0:
            raise ValueError("exclusion_window must be >= 0")


@dataclass
class LabeledAtom:
    element: str
    name: str
    res_name: str
    res_index: int
    xyz: np.ndarray


@dataclass
class ComplexRecord:
    source_id: str
    fragment_span: tuple
    ligand_atoms: list
    pocket_residue_indices: tuple
    pocket_atoms: list
    ligand_size: int
    pocket_size: int
    rbsa: float

    def to_json_dict(self):
        return {
            "source_id": self.source_id,
            "span": [int(self.fragment_span[0]), int(self.fragment_span[1])],
            "ligand": {"atoms": [
                {"el": a.element, "name": a.name,
                 "x": float(a.xyz[0]), "y": float(a.xyz[1]), "z": float(a.xyz[2])}
                for a in self.ligand_atoms
            ]},
            "pocket": {
                "residues": [int(i) for i in self.pocket_residue_indices],
                "atoms": [
                    {"el": a.element, "name": a.name, "res": int(a.res_index),
                     "x": float(a.xyz[0]), "y": float(a.xyz[1]), "z": float(a.xyz[2])}
                    for a in self.pocket_atoms
                ],
            },
            "ligand_size": int(self.ligand_size),
            "pocket_size": int(self.pocket_size),
            "rbsa": float(self.rbsa),
        }

    @classmethod
    def from_json_dict(cls, obj):
        ligand = [
            LabeledAtom(d["el"], d.get("name", ""), "", i,
                        np.array([d["x"], d["y"], d["z"]]))
            for i, d in enumerate(obj["ligand"]["atoms"])
        ]
        pocket = [
            LabeledAtom(d["el"], d.get("name", ""), "", d.get("res", 0),
                        np.array([d["x"], d["y"], d["z"]]))
            for d in obj["pocket"]["atoms"]
        ]
        return cls(
            source_id=obj["source_id"],
            fragment_span=(obj["span"][0], obj["span"][1]),
            ligand_atoms=ligand,
            pocket_residue_indices=tuple(obj["pocket"]["residues"]),
            pocket_atoms=pocket,
            ligand_size=obj["ligand_size"],
            pocket_size=obj["pocket_size"],
            rbsa=obj["rbsa"],
        )


def segment_labels(chain):
    """Per-residue segment id; discontinuities start a new segment."""
    labels = np.zeros(len(chain.residues), dtype=int)
    seg = 0
    for i in range(len(chain.residues)):
        labels[i] = seg
        if i in chain.discontinuities:
            seg += 1
    return labels


def enumerate_fragments(chain, config):
    """Yield every contiguous span (start, end) of 1..N residues.

    Spans never cross a discontinuity. Deterministic order: start
    ascending, then length ascending.
    """
    n = len(chain.residues)
    breaks = chain.discontinuities
    for start in range(n):
        for length in range(1, config.max_fragment_len + 1):
            end = start + length - 1
            if end >= n:
                break
            if length > 1 and (end - 1) in breaks:
                break
            yield (start, end)


@dataclass
class ChainIndex:
    """Flat atom arrays plus a spatial grid, shared across one chain's spans."""
    coords: np.ndarray
    res_ids: np.ndarray
    segments: np.ndarray
    grid: SpatialGrid = None

    @classmethod
    def build(cls, chain, cell_size):
        coords = []
        res_ids = []
        for res in chain.residues:
            for atom in res.heavy_atoms:
                coords.append(atom.xyz)
                res_ids.append(res.index)
        coords = np.asarray(coords, dtype=float).reshape(-1, 3)
        res_ids = np.asarray(res_ids, dtype=int)
        return cls(coords=coords, res_ids=res_ids,
                   segments=segment_labels(chain),
                   grid=SpatialGrid(coords, cell_size))


def _sequence_excluded(span, segments, window):
    """Residue indices barred from the pocket by the sequence-window rule."""
    start, end = span
    seg = segments[start]
    n = len(segments)
    excluded = set(range(start, end + 1))
    for r in range(max(0, start - window), start):
        if segments[r] == seg:
            excluded.add(r)
    for r in range(end + 1, min(n, end + window + 1)):
        if segments[r] == seg:
            excluded.add(r)
    return excluded


def extract_pocket(chain, span, config, index=None, method="grid"):
    """Residue indices with a heavy atom strictly within the threshold.

    Residues inside the exclusion window on the fragment's own segment are
    skipped; residues on other segments are long-range by construction and
    only the distance rule applies.
    """
    if index is None:
        index = ChainIndex.build(chain, config.pocket_threshold)
    excluded = _sequence_excluded(span, index.segments, config.exclusion_window)

    start, end = span
    frag_mask = (index.res_ids >= start) & (index.res_ids <= end)
    frag_coords = index.coords[frag_mask]

    if method == "grid":
        cand = index.grid.candidates(frag_coords, config.pocket_threshold)
    elif method == "brute":
        cand = np.arange(len(index.coords))
    else:
        raise ValueError(f"unknown extraction method {method!r}")
    if len(cand) == 0:
        return set()

    diff = index.coords[cand][:, None, :] - frag_coords[None, :, :]
    d2min = np.min(np.sum(diff * diff, axis=-1), axis=1)
    hits = cand[d2min < config.pocket_threshold ** 2]

    pocket = {int(r) for r in index.res_ids[hits]}
    return {r for r in pocket if r not in excluded}


def fragment_atoms(chain, span):
    """Labeled heavy atoms of the span's residues, in chain order."""
    out = []
    for r in range(span[0], span[1] + 1):
        res = chain.residues[r]
        for atom in res.heavy_atoms:
            out.append(LabeledAtom(atom.element, atom.name, res.name,
                                   res.index, atom.xyz.copy()))
    return out


def pocket_atoms_of(chain, residue_indices):
    out = []
    for r in sorted(residue_indices):
        res = chain.residues[r]
        for atom in res.heavy_atoms:
            out.append(LabeledAtom(atom.element, atom.name, res.name,
                                   res.index, atom.xyz.copy()))
    return out


def _backbone(atoms, res_index):
    found = {}
    for a in atoms:
        if a.res_index == res_index and a.name in ("N", "CA", "C", "O"):
            found[a.name] = a
    if not all(k in found for k in ("N", "CA", "C")):
        raise MissingBackbone(res_index)
    return found


def apply_terminal_caps(atoms):
    """Acetylate the N-terminus and amidate the C-terminus of a fragment.

    Adds three ACE heavy atoms (CH3, carbonyl C, carbonyl O) ahead of the
    first residue and one NH2 nitrogen after the last; removes any OXT.
    Raises CapAlreadyPresent if cap atoms are already attached and
    MissingBackbone if the terminal residues lack N/CA/C.
    """
    atoms = list(atoms)
    if any(a.res_name in (ACETYL_CAP, AMIDE_CAP) for a in atoms):
        raise CapAlreadyPresent("fragment already capped")
    if not atoms:
        raise MissingBackbone(-1)

    first_index = min(a.res_index for a in atoms)
    last_index = max(a.res_index for a in atoms)
    nterm = _backbone(atoms, first_index)
    cterm = _backbone(atoms, last_index)

    n_xyz, ca_xyz, c_xyz = nterm["N"].xyz, nterm["CA"].xyz, nterm["C"].xyz
    ace_c = place_atom(c_xyz, ca_xyz, n_xyz, CAP_CN_BOND, CAP_ANGLE, math.pi)
    ace_o = place_atom(ca_xyz, n_xyz, ace_c, CAP_CO_BOND, CAP_ANGLE, 0.0)
    ace_ch3 = place_atom(ca_xyz, n_xyz, ace_c, CAP_CC_BOND, CAP_ANGLE, math.pi)

    # Amide N completes the carbonyl sp2 plane opposite CA and O.
    cc, cca, co = cterm["C"].xyz, cterm["CA"].xyz, cterm.get("O")
    if co is not None:
        u_ca = (cca - cc) / np.linalg.norm(cca - cc)
        u_o = (co.xyz - cc) / np.linalg.norm(co.xyz - cc)
        direction = -(u_ca + u_o)
        direction /= np.linalg.norm(direction)
        amide_n = cc + CAP_CN_BOND * direction
    else:
        amide_n = place_atom(cterm["N"].xyz, cca, cc, CAP_CN_BOND, CAP_ANGLE, math.pi)

    capped = [
        LabeledAtom("C", "CH3", ACETYL_CAP, first_index - 1, ace_ch3),
        LabeledAtom("C", "C", ACETYL_CAP, first_index - 1, ace_c),
        LabeledAtom("O", "O", ACETYL_CAP, first_index - 1, ace_o),
    ]
    capped.extend(a for a in atoms if a.name != "OXT")
    capped.append(LabeledAtom("N", "N", AMIDE_CAP, last_index + 1, amide_n))
    return capped


def build_complex(chain, span, config, sasa_config=None, index=None):
    """Assemble one candidate ComplexRecord for a fragment span.

    Returns None when the pocket is empty. Pocket membership uses the
    uncapped fragment; size and rBSA are computed on the final (capped)
    pseudo-ligand.
    """
    pocket_residues = extract_pocket(chain, span, config, index=index)
    if not pocket_residues:
        return None

    ligand = fragment_atoms(chain, span)
    if config.cap_terminals:
        ligand = apply_terminal_caps(ligand)
    pocket = pocket_atoms_of(chain, pocket_residues)

    sasa_config = sasa_config or surface.SasaConfig()
    rbsa = surface.compute_rbsa(ligand, pocket, sasa_config)
    return ComplexRecord(
        source_id=chain.source_id,
        fragment_span=(int(span[0]), int(span[1])),
        ligand_atoms=ligand,
        pocket_residue_indices=tuple(sorted(pocket_residues)),
        pocket_atoms=pocket,
        ligand_size=surface.effective_size(ligand),
        pocket_size=len(pocket_residues),
        rbsa=rbsa,
    )


def extract_complexes(chain, config=None, sasa_config=None):
    """Run the full per-chain candidate pipeline; yields ComplexRecords."""
    config = config or ExtractionConfig()
    index = ChainIndex.build(chain, config.pocket_threshold)
    for span in enumerate_fragments(chain, config):
        record = build_complex(chain, span, config, sasa_config=sasa_config,
                               index=index)
        if record is not None:
            yield record
