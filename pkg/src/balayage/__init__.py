"""Partial balayage of charge distributions on discretized manifolds."""
__version__ = "0.1.0"

from .grid import (Boundary, DiscreteManifold, Kind, build_circle, build_polar_sphere,
                   build_radial_ball, build_sphere_latlong, build_symmetric_profile, sphere_area)
from .charge import ChargeDistribution, atom, from_density, jordan, normalized_mass, volume_form, zero
from .greens import (Potential, SolverError, energy, green_kernel_sphere, green_potential,
                     mutual_energy, sphere_to_complex)
from .obstacle import (InfeasibleError, LcpProblem, LcpSolution, SolverParams, objective,
                       solve_active_set, solve_brute, solve_pgs)
from .partial import (BalayageResult, bal, bal_incremental, bal_zero, check_bounds,
                      check_structure, existence_diagnostic)

__all__ = [
    "Boundary", "DiscreteManifold", "Kind", "build_circle", "build_polar_sphere",
    "build_radial_ball", "build_sphere_latlong", "build_symmetric_profile", "sphere_area",
    "ChargeDistribution", "atom", "from_density", "jordan", "normalized_mass", "volume_form", "zero",
    "Potential", "SolverError", "energy", "green_kernel_sphere", "green_potential",
    "mutual_energy", "sphere_to_complex",
    "InfeasibleError", "LcpProblem", "LcpSolution", "SolverParams", "objective",
    "solve_active_set", "solve_brute", "solve_pgs",
    "BalayageResult", "bal", "bal_incremental", "bal_zero", "check_bounds", "check_structure",
    "existence_diagnostic",
]
