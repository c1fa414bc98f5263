"""Weighted Ricci curvature of warped cylinders, explicit metric constructions
with grid certification, and the exact integer algebra behind surgery plans on
highly connected manifolds.

Modules:
    profiles: piecewise closed-form scalar functions with exact derivatives.
    curvature: closed-form weighted Ricci evaluators and positivity scans.
    smoothing: C^1 cubic gluing and certified corner smoothing.
    constructions: necks, caps, transitions, collapse and unlinking profiles.
    skewalg: normal forms, Pfaffians, A/B matrix families, quadratic forms.
    linking: plane realisations, link graphs and separation schedules.
    pipeline: the end-to-end run.
    cli: the ``ricci-forge`` command.
"""

__version__ = "0.1.0"

from .errors import DomainError  # noqa: E402

__all__ = ["DomainError", "__version__"]
