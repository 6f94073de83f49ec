"""Workbench for deformed position-momentum algebras and their consequences.

Submodules are imported on demand: ``scalarcalc``, ``bracket``, ``presets``,
``uncertainty``, ``kappa_rep``, ``lattice``, ``composite``, ``transforms``
and ``cli``.
"""

__version__ = "0.1.0"
