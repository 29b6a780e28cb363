"""Chemical reference data: atomic masses, van der Waals radii, residue templates.

Implied hydrogen counts follow the neutral mid-chain polypeptide convention:
each heavy atom is assigned the hydrogens it carries inside a chain, and the
molecular-weight routine adds terminal corrections (free amine / free acid /
caps) on top.  PDB files carry no hydrogens, so mass bookkeeping has to go
through these templates.
"""

# Atomic masses in daltons (CODATA-derived standard atomic weights).
ATOMIC_MASS = {
    "H": 1.008,
    "C": 12.011,
    "N": 14.007,
    "O": 15.999,
    "S": 32.06,
}

# Van der Waals radii in angstroms; anything unlisted falls back to carbon.
VDW_RADII = {
    "C": 1.70,
    "N": 1.55,
    "O": 1.52,
    "S": 1.80,
}
VDW_DEFAULT = 1.70

STANDARD_RESIDUES = frozenset([
    "ALA", "ARG", "ASN", "ASP", "CYS", "GLN", "GLU", "GLY", "HIS", "ILE",
    "LEU", "LYS", "MET", "PHE", "PRO", "SER", "THR", "TRP", "TYR", "VAL",
])

# Residue names used for the terminal caps (standard PDB component ids).
ACETYL_CAP = "ACE"
AMIDE_CAP = "NH2"

# Implied hydrogens per heavy atom, neutral forms, mid-chain context.
# Backbone entries are shared; OXT carries the acid hydroxyl hydrogen.
_BACKBONE_H = {"N": 1, "CA": 1, "C": 0, "O": 0, "OXT": 1}

_SIDECHAIN_H = {
    "ALA": {"CB": 3},
    "ARG": {"CB": 2, "CG": 2, "CD": 2, "NE": 1, "CZ": 0, "NH1": 1, "NH2": 2},
    "ASN": {"CB": 2, "CG": 0, "OD1": 0, "ND2": 2},
    "ASP": {"CB": 2, "CG": 0, "OD1": 0, "OD2": 1},
    "CYS": {"CB": 2, "SG": 1},
    "GLN": {"CB": 2, "CG": 2, "CD": 0, "OE1": 0, "NE2": 2},
    "GLU": {"CB": 2, "CG": 2, "CD": 0, "OE1": 0, "OE2": 1},
    "GLY": {},
    "HIS": {"CB": 2, "CG": 0, "ND1": 1, "CD2": 1, "CE1": 1, "NE2": 0},
    "ILE": {"CB": 1, "CG1": 2, "CG2": 3, "CD1": 3},
    "LEU": {"CB": 2, "CG": 1, "CD1": 3, "CD2": 3},
    "LYS": {"CB": 2, "CG": 2, "CD": 2, "CE": 2, "NZ": 2},
    "MET": {"CB": 2, "CG": 2, "SD": 0, "CE": 3},
    "PHE": {"CB": 2, "CG": 0, "CD1": 1, "CD2": 1, "CE1": 1, "CE2": 1, "CZ": 1},
    "PRO": {"CB": 2, "CG": 2, "CD": 2},
    "SER": {"CB": 2, "OG": 1},
    "THR": {"CB": 1, "OG1": 1, "CG2": 3},
    "TRP": {"CB": 2, "CG": 0, "CD1": 1, "CD2": 0, "NE1": 1, "CE2": 0,
            "CE3": 1, "CZ2": 1, "CZ3": 1, "CH2": 1},
    "TYR": {"CB": 2, "CG": 0, "CD1": 1, "CD2": 1, "CE1": 1, "CE2": 1,
            "CZ": 0, "OH": 1},
    "VAL": {"CB": 1, "CG1": 3, "CG2": 3},
}

_CAP_H = {
    ACETYL_CAP: {"CH3": 3, "C": 0, "O": 0},
    AMIDE_CAP: {"N": 2},
}


class UnknownElement(ValueError):
    """Element symbol missing from the atomic mass table."""

    def __init__(self, symbol):
        self.symbol = symbol
        super().__init__(f"no atomic mass for element {symbol!r}")


def atomic_mass(element):
    try:
        return ATOMIC_MASS[element]
    except KeyError:
        raise UnknownElement(element) from None


def vdw_radius(element, table=None):
    if table is not None and element in table:
        return table[element]
    return VDW_RADII.get(element, VDW_DEFAULT)


def implied_hydrogens(res_name, atom_name):
    """Hydrogens implicitly bonded to a heavy atom in mid-chain context.

    Proline has no amide hydrogen; cap residues use their own tables.
    Unrecognized atom names contribute zero (conservative).
    """
    if res_name in _CAP_H:
        return _CAP_H[res_name].get(atom_name, 0)
    if atom_name in _BACKBONE_H:
        if res_name == "PRO" and atom_name == "N":
            return 0
        if res_name == "GLY" and atom_name == "CA":
            return 2
        return _BACKBONE_H[atom_name]
    return _SIDECHAIN_H.get(res_name, {}).get(atom_name, 0)


def infer_element(atom_name):
    """Guess the element from a PDB atom name when columns 77-78 are blank.

    First non-digit character of the stripped name; two-letter cases that
    matter for proteins (SD vs S) all start with the element letter anyway.
    """
    for ch in atom_name.strip():
        if not ch.isdigit():
            return ch.upper()
    return ""
