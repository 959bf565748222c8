"""Spin-chain phonon laser simulator."""

from ._core import (
    __version__,
    annihilation,
    array_run,
    bessel_j,
    check_recipe,
    coherent_state,
    effective_hamiltonian,
    fock_state,
    full_hamiltonian,
    g2_zero,
    kuramoto,
    minimal_dynamics,
    recipe_defaults,
    recipe_names,
    run_recipe,
    run_sweep,
    thermal_state,
    wigner,
)

__all__ = [
    "annihilation",
    "array_run",
    "bessel_j",
    "check_recipe",
    "coherent_state",
    "effective_hamiltonian",
    "fock_state",
    "full_hamiltonian",
    "g2_zero",
    "kuramoto",
    "minimal_dynamics",
    "recipe_defaults",
    "recipe_names",
    "run_recipe",
    "run_sweep",
    "thermal_state",
    "wigner",
]
