"""PDB ingestion and cleanup into contiguous, renumbered residue chains.

Parsing follows the wwPDB fixed-column layout for ATOM/HETATM records.
Cleanup keeps the first model only, drops HETATM/non-standard residues,
hydrogens and alternate locations beyond the first, then merges all chains
in file order and renumbers residues from zero, recording discontinuities.
"""

import gzip
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .chem import STANDARD_RESIDUES, infer_element


class MalformedRecord(ValueError):
    """ATOM/HETATM line whose fixed-width fields cannot be decoded."""

    def __init__(self, line_no, reason):
        self.line_no = line_no
        super().__init__(f"line {line_no}: {reason}")


class EmptyStructure(ValueError):
    """No standard amino-acid residue survived cleanup."""


@dataclass(frozen=True)
class RawAtom:
    record_kind: str
    serial: int
    atom_name: str
    alt_loc: str
    residue_name: str
    chain_id: str
    residue_seq: int
    insertion_code: str
    x: float
    y: float
    z: float
    element: str


@dataclass
class Atom:
    element: str
    name: str
    xyz: np.ndarray


@dataclass
class Residue:
    index: int
    name: str
    heavy_atoms: list


@dataclass
class CleanChain:
    residues: list
    discontinuities: set
    source_id: str = ""
    # Original chain ids in concatenation (file) order, for provenance.
    chain_order: list = field(default_factory=list)

    def __len__(self):
        return len(self.residues)

    def atom_of(self, res_index, atom_name):
        for atom in self.residues[res_index].heavy_atoms:
            if atom.name == atom_name:
                return atom
        return None


@dataclass
class CleanConfig:
    # Backbone C-N distance (angstroms) beyond which consecutive residues
    # are treated as discontinuous even if their numbering is contiguous.
    cn_break_distance: float = 2.0


def parse_pdb(text):
    """Parse PDB-format text into RawAtom records (first model only).

    Accepts str or bytes. Non-coordinate lines are ignored; malformed
    ATOM/HETATM lines raise MalformedRecord.
    """
    if isinstance(text, (bytes, bytearray)):
        text = text.decode("latin-1")

    atoms = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        if line.startswith("ENDMDL"):
            break
        if not (line.startswith("ATOM") or line.startswith("HETATM")):
            continue
        if len(line) < 54:
            raise MalformedRecord(line_no, "record shorter than 54 columns")
        try:
            x = float(line[30:38])
            y = float(line[38:46])
            z = float(line[46:54])
        except ValueError:
            raise MalformedRecord(line_no, "unparseable coordinates") from None
        if not (np.isfinite(x) and np.isfinite(y) and np.isfinite(z)):
            raise MalformedRecord(line_no, "non-finite coordinates")
        try:
            residue_seq = int(line[22:26])
        except ValueError:
            raise MalformedRecord(line_no, "unparseable residue number") from None
        try:
            serial = int(line[6:11])
        except ValueError:
            serial = 0

        atom_name = line[12:16].strip()
        element = line[76:78].strip() if len(line) >= 78 else ""
        if not element:
            element = infer_element(atom_name)
        atoms.append(RawAtom(
            record_kind="ATOM" if line.startswith("ATOM") else "HETATM",
            serial=serial,
            atom_name=atom_name,
            alt_loc=line[16] if len(line) > 16 else " ",
            residue_name=line[17:20].strip(),
            chain_id=line[21] if len(line) > 21 else " ",
            residue_seq=residue_seq,
            insertion_code=line[26] if len(line) > 26 else " ",
            x=x, y=y, z=z,
            element=element.upper(),
        ))
    return atoms


def read_structure_file(path):
    """Read a .pdb file, transparently decompressing gzip (magic 1f 8b)."""
    raw = Path(path).read_bytes()
    if raw[:2] == b"\x1f\x8b":
        raw = gzip.decompress(raw)
    return parse_pdb(raw)


def clean_structure(atoms, config=None, source_id=""):
    """Apply cleanup rules and produce a single renumbered residue array.

    Keeps ATOM records of the 20 standard amino acids, first alternate
    location only, heavy atoms only. Chains are concatenated in file order.
    A discontinuity is recorded between cleaned residues i and i+1 when the
    original numbering jumps, the chain changes, or the backbone C-N
    distance exceeds the configured break distance.
    """
    config = config or CleanConfig()

    residues = []      # list of (chain_id, residue_seq, icode, name, atoms)
    res_key_index = {}
    seen_atoms = set()  # (chain, seq, icode, atom_name) for alt-loc dedup

    for atom in atoms:
        if atom.record_kind != "ATOM":
            continue
        if atom.residue_name not in STANDARD_RESIDUES:
            continue
        if atom.element in ("H", "D"):
            continue
        key = (atom.chain_id, atom.residue_seq, atom.insertion_code)
        atom_key = key + (atom.atom_name,)
        if atom_key in seen_atoms:
            continue  # duplicated alternate location: first instance wins
        seen_atoms.add(atom_key)
        if key not in res_key_index:
            res_key_index[key] = len(residues)
            residues.append((key, atom.residue_name, []))
        residues[res_key_index[key]][2].append(
            Atom(atom.element, atom.atom_name,
                 np.array([atom.x, atom.y, atom.z])))

    if not residues:
        raise EmptyStructure("no standard amino-acid residue survived cleanup")

    cleaned = []
    discontinuities = set()
    chain_order = []
    prev_key = None
    prev_c = None
    for i, ((chain_id, seq, icode), name, atom_list) in enumerate(residues):
        cleaned.append(Residue(index=i, name=name, heavy_atoms=atom_list))
        if not chain_order or chain_order[-1] != chain_id:
            chain_order.append(chain_id)
        if prev_key is not None:
            broken = False
            prev_chain, prev_seq, _ = prev_key
            if chain_id != prev_chain:
                broken = True
            elif not (seq == prev_seq + 1 or (seq == prev_seq and icode != prev_key[2])):
                broken = True
            else:
                n_atom = next((a for a in atom_list if a.name == "N"), None)
                if prev_c is not None and n_atom is not None:
                    if np.linalg.norm(n_atom.xyz - prev_c.xyz) > config.cn_break_distance:
                        broken = True
            if broken:
                discontinuities.add(i - 1)
        prev_key = (chain_id, seq, icode)
        prev_c = next((a for a in atom_list if a.name == "C"), None)

    return CleanChain(residues=cleaned, discontinuities=discontinuities,
                      source_id=source_id, chain_order=chain_order)


def to_pdb_text(chain):
    """Serialize a CleanChain back to PDB text.

    Residues are numbered 1..L with an extra +1 jump across each recorded
    discontinuity, so that re-parsing and re-cleaning reproduces the chain
    (including its discontinuity set) unchanged.
    """
    lines = []
    serial = 1
    seq = 0
    for res in chain.residues:
        seq += 1
        if res.index > 0 and (res.index - 1) in chain.discontinuities:
            seq += 1
        for atom in res.heavy_atoms:
            name = atom.name if len(atom.name) == 4 else f" {atom.name:<3s}"
            lines.append(
                f"ATOM  {serial:5d} {name:4s} {res.name:<3s} A{seq:4d}    "
                f"{atom.xyz[0]:8.3f}{atom.xyz[1]:8.3f}{atom.xyz[2]:8.3f}"
                f"  1.00  0.00          {atom.element:>2s}"
            )
            serial += 1
    lines.append("END")
    return "\n".join(lines) + "\n"
