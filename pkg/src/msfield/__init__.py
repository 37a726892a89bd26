"""msfield: multisymplectic field-theory toolkit.

From a declared first-order Lagrangian the package derives Poincare-Cartan
forms, Legendre maps, Euler-Lagrange and Hamilton-De Donder-Weyl equations,
constructs covariant field operators along the Legendre maps, and verifies
the equivalences between the Lagrangian, Hamiltonian and operator pictures
both symbolically and on desk-scale numerical solutions.
"""

__version__ = "0.1.0"

from . import cli, fieldop, geom, hamiltonian, lagrangian, linexpr, numint, symexpr

__all__ = [
    "cli",
    "fieldop",
    "geom",
    "hamiltonian",
    "lagrangian",
    "linexpr",
    "numint",
    "symexpr",
    "__version__",
]
