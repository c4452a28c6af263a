"""Shared builders for randomized test inputs."""

import numpy as np

from floquet_forge import Bond, DriveSpec, Harmonic, LatticeSpec, close_hermitian


def random_drive(rng, dim, omega=None, max_harmonics=3, scale=3.0):
    """Multi-harmonic drive with random harmonic indices and amplitudes."""
    w = float(omega) if omega is not None else float(rng.uniform(4.0, 30.0))
    count = int(rng.integers(1, max_harmonics + 1))
    ms = rng.choice(np.arange(1, 6), size=count, replace=False)
    hs = tuple(
        Harmonic(int(m), rng.normal(scale=scale, size=dim), rng.normal(scale=scale, size=dim))
        for m in sorted(ms)
    )
    return DriveSpec(w, hs)


def composable_pairs(lattice):
    """All ordered bond pairs (b1, b2) where b2 starts where b1 ends."""
    return [
        (b1, b2)
        for b1 in lattice.bonds
        for b2 in lattice.bonds
        if b2.source_basis == b1.target_basis
    ]


def chiral_two_harmonic(omega=20.0):
    """A planar two-harmonic drive with no time-reversal-like symmetry.

    Unlike a circular monochromatic force it leaves none of the first-order
    amplitudes accidentally real, imaginary or zero, so structural checks on
    the emergent matrices are non-vacuous.
    """
    return DriveSpec(
        omega,
        (
            Harmonic(1, [5.0, 1.0], [0.5, 4.0]),
            Harmonic(2, [1.5, -2.0], [3.0, 0.7]),
        ),
    )


def two_site_chain(j2=0.7):
    """Minimal non-Bravais spec: a 1d chain with alternating bond amplitudes."""
    spec = LatticeSpec(
        dimension=1,
        bravais_vectors=[[1.0]],
        basis_sites=[[0.0], [0.4]],
        bonds=(Bond(1, 0, (0,), -1.0), Bond(0, 1, (1,), j2)),
    )
    return close_hermitian(spec)


def torus_hamiltonian(table, extents, block):
    """Dense periodized matrix, rebuilt with plain index loops as an
    independent route to the package's offset-class periodization."""
    from itertools import product

    cells = list(product(*[range(L) for L in extents]))
    where = {c: i for i, c in enumerate(cells)}
    n = len(cells)
    M = np.zeros((n * block, n * block), dtype=complex)
    for ci in cells:
        i = where[ci]
        for off, m in table.items():
            cj = tuple((a - o) % L for a, o, L in zip(ci, off, extents))
            j = where[cj]
            M[i * block:(i + 1) * block, j * block:(j + 1) * block] += m
    return M


def random_offset_matrices(rng, dim, block, count=3, reach=1):
    """Random translationally invariant operator as an offset table."""
    table = {}
    for _ in range(count):
        off = tuple(int(x) for x in rng.integers(-reach, reach + 1, size=dim))
        m = rng.normal(size=(block, block)) + 1j * rng.normal(size=(block, block))
        table[off] = table.get(off, 0) + m
    from floquet_forge import OffsetMatrix

    return tuple(OffsetMatrix(o, m) for o, m in sorted(table.items()))
