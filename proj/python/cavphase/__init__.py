"""Quantum particle in a vibrating cavity: evolution, resonances and geometric phases."""

from ._cavphase import (
    CavphaseError,
    ConfigError,
    DomainError,
    InputError,
    NumericalError,
    __version__,
    bessel_j0_zero,
    coupling_matrix,
    eigenenergy,
    evolve,
    mean_alpha_sq,
    phases,
    predicted_peaks,
    resonance,
    run_config,
    rwa_width,
    spin_phases,
)

__all__ = [
    "CavphaseError",
    "ConfigError",
    "DomainError",
    "InputError",
    "NumericalError",
    "__version__",
    "bessel_j0_zero",
    "coupling_matrix",
    "eigenenergy",
    "evolve",
    "mean_alpha_sq",
    "phases",
    "predicted_peaks",
    "resonance",
    "run_config",
    "rwa_width",
    "spin_phases",
]
