"""Small 3D helpers: internal-coordinate atom placement and rigid motions."""

import numpy as np


def place_atom(a, b, c, bond_length, bond_angle, dihedral):
    """Position atom D from reference atoms A, B, C and internal coordinates.

    D is placed at ``bond_length`` from C, with angle D-C-B equal to
    ``bond_angle`` and dihedral D-C-B-A equal to ``dihedral`` (radians).
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)

    bc = c - b
    bc /= np.linalg.norm(bc)
    ab = b - a
    n = np.cross(ab, bc)
    n /= np.linalg.norm(n)
    m = np.cross(n, bc)

    d_local = np.array([
        -bond_length * np.cos(bond_angle),
        bond_length * np.sin(bond_angle) * np.cos(dihedral),
        bond_length * np.sin(bond_angle) * np.sin(dihedral),
    ])
    return c + d_local[0] * bc + d_local[1] * m + d_local[2] * n


def random_rotation(rng):
    """Uniform random rotation matrix (QR of a Gaussian, sign-fixed)."""
    m = rng.normal(size=(3, 3))
    q, r = np.linalg.qr(m)
    q *= np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def apply_rigid(coords, rotation, translation):
    coords = np.asarray(coords, dtype=float)
    return coords @ np.asarray(rotation).T + np.asarray(translation)
