"""Laplace-Beltrami eigenpairs on subdomains of a rectangle, sphere or flat torus.

The Dirichlet condition on the domain boundary is relaxed into a large finite
potential on the rest of the host space, and the resulting Schrodinger
operator is projected onto the host's analytic eigenbasis.
"""
from .assembly import DEFAULT_V0, HamiltonianMatrix, assemble, fit_score, penalty_matrix
from .eigensolve import EigenSolution, eigendecompose, mode_mass, mode_masses, sample_mode
from .geometry import (
    BasisSpec,
    FlatTorus,
    QuadratureGrid,
    Rectangle,
    UnitSphere,
    basis_eigenvalue,
    basis_eval,
    basis_matrix,
    default_resolution,
    enumerate_basis,
    quadrature,
)
from .region import builtin_domains, complement_indicator, contains

__version__ = "0.1.0"
