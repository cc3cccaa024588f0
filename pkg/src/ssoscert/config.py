"""Tolerance configuration shared across the package."""

from dataclasses import dataclass, asdict


@dataclass(frozen=True)
class ToleranceConfig:
    """Numerical tolerances.

    tol_class  classification band for eigen/singular values against their
               kink threshold (0 for the PSD cone, 1 for the nuclear norm),
               also the relative rank cut for pinv / null-space bases
    tol_orth   orthogonality residual accepted in decompositions
    tol_recon  reconstruction residual accepted in decompositions
    tol_pd     positive-definiteness margin on unit-scaled matrices
    tol_range  range-membership / KKT residual threshold
    """

    tol_class: float = 1e-9
    tol_orth: float = 1e-10
    tol_recon: float = 1e-10
    tol_pd: float = 1e-8
    tol_range: float = 1e-8

    def __post_init__(self):
        for name, value in asdict(self).items():
            if not value > 0.0:
                raise ValueError(f"tolerance {name} must be positive, got {value}")

    def as_dict(self):
        return asdict(self)


DEFAULT_TOLERANCES = ToleranceConfig()
