"""Solvent-accessible surface area and derived quantities.

SASA uses the Shrake-Rupley point-counting construction: each atom is
dressed with a deterministic Fibonacci lattice of test points at the
solvent-expanded radius (vdW + probe), and the accessible fraction of
points scales the full sphere area 4*pi*(r+probe)^2.

Relative buried surface area (rBSA) is ligand-sided by default: the
fraction of the free ligand's surface occluded once the pocket atoms are
present. A symmetric complex-level mode is available via SasaConfig.
"""

from dataclasses import dataclass, field

import numpy as np

from .chem import ACETYL_CAP, AMIDE_CAP, atomic_mass, implied_hydrogens, vdw_radius

AVERAGE_RESIDUE_MASS = 110.0


class ZeroSurface(ValueError):
    """Ligand alone exposes no surface; rBSA undefined."""


@dataclass
class SasaConfig:
    probe_radius: float = 1.4
    sphere_points: int = 960
    vdw_radii: dict = field(default_factory=dict)
    rbsa_mode: str = "ligand"  # "ligand" or "complex"

    def __post_init__(self):
        if self.probe_radius < 0:
            raise ValueError("probe radius must be non-negative")
        if self.sphere_points < 32:
            raise ValueError("need at least 32 sphere points")


def fibonacci_sphere(n):
    """n deterministic, nearly uniform unit vectors (golden-angle spiral)."""
    i = np.arange(n, dtype=float)
    z = 1.0 - 2.0 * (i + 0.5) / n
    r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    phi = i * np.pi * (3.0 - np.sqrt(5.0))
    return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])


def _coords_radii(atoms, config):
    coords = np.array([np.asarray(a.xyz, dtype=float) for a in atoms]).reshape(-1, 3)
    radii = np.array([
        vdw_radius(a.element, config.vdw_radii) + config.probe_radius
        for a in atoms
    ])
    return coords, radii


def shrake_rupley(atoms, config=None):
    """Per-atom solvent-accessible surface area in square angstroms."""
    config = config or SasaConfig()
    if not atoms:
        return np.zeros(0)
    coords, radii = _coords_radii(atoms, config)
    n = len(coords)
    sphere = fibonacci_sphere(config.sphere_points)

    # Occluder candidates: spheres that actually intersect.
    diff = coords[:, None, :] - coords[None, :, :]
    d2 = np.sum(diff * diff, axis=-1)
    cutoff = (radii[:, None] + radii[None, :]) ** 2
    overlap = (d2 < cutoff) & ~np.eye(n, dtype=bool)

    areas = np.empty(n)
    for i in range(n):
        neighbors = np.nonzero(overlap[i])[0]
        full = 4.0 * np.pi * radii[i] ** 2
        if neighbors.size == 0:
            areas[i] = full
            continue
        points = coords[i] + radii[i] * sphere
        buried = np.zeros(len(points), dtype=bool)
        for j in neighbors:
            pd2 = np.sum((points - coords[j]) ** 2, axis=1)
            buried |= pd2 < radii[j] ** 2
            if buried.all():
                break
        areas[i] = full * (1.0 - buried.mean())
    return areas


def total_sasa(atoms, config=None):
    return float(np.sum(shrake_rupley(atoms, config)))


def compute_rbsa(ligand_atoms, pocket_atoms, config=None):
    """Fraction of the ligand's free surface buried by the pocket, in [0,1]."""
    config = config or SasaConfig()
    if not ligand_atoms:
        raise ZeroSurface("ligand has no atoms")
    free = total_sasa(ligand_atoms, config)
    if free <= 0.0:
        raise ZeroSurface("ligand alone has zero accessible surface")
    if not pocket_atoms:
        return 0.0

    combined = list(ligand_atoms) + list(pocket_atoms)
    areas = shrake_rupley(combined, config)
    lig_in_complex = float(np.sum(areas[:len(ligand_atoms)]))

    if config.rbsa_mode == "complex":
        poc_free = total_sasa(pocket_atoms, config)
        denom = free + poc_free
        buried = denom - float(np.sum(areas))
        return float(np.clip(buried / denom, 0.0, 1.0))

    return float(np.clip((free - lig_in_complex) / free, 0.0, 1.0))


def molecular_weight(atoms):
    """Mass in daltons of the heavy atoms plus their implied hydrogens.

    Atoms must carry element, name, res_name and res_index attributes.
    Implied hydrogens follow the mid-chain templates; a fragment without an
    acetyl cap gets one extra hydrogen on its first residue's N (free
    amine), and a free acid's hydroxyl hydrogen rides on the OXT entry.
    """
    atoms = list(atoms)
    if not atoms:
        return 0.0

    mass = 0.0
    hydrogens = 0
    for a in atoms:
        mass += atomic_mass(a.element)
        hydrogens += implied_hydrogens(a.res_name, a.name)

    cap_names = {a.res_name for a in atoms if a.res_name in (ACETYL_CAP, AMIDE_CAP)}
    body = [a for a in atoms if a.res_name not in (ACETYL_CAP, AMIDE_CAP)]
    if body and ACETYL_CAP not in cap_names:
        first_index = min(a.res_index for a in body)
        if any(a.res_index == first_index and a.name == "N" for a in body):
            hydrogens += 1  # free N-terminal amine

    return mass + hydrogens * atomic_mass("H")


def effective_size_from_weight(weight):
    """Effective residue count: weight over 110 Da, rounded, at least 1."""
    return max(1, round(weight / AVERAGE_RESIDUE_MASS))


def effective_size(atoms):
    return effective_size_from_weight(molecular_weight(atoms))
