"""Martin and Newtonian capacities of discretized sets and the inequalities between them."""

from .bounds import (
    annuli_capacity_upper,
    ball_capacity_upper,
    dyadic_radii,
    dyadic_singular_set_bound,
    greedy_cover_value,
    hausdorff_energy_lower_bound,
    jiang_naber_volume_check,
    martin_newtonian_sandwich,
    patch_self_energy,
)
from .discretize import half_nn_radii, segment_points, set_points, sphere_points
from .setcap import capacity_of_set, discretize, distance_range, make_kernel
from .solver import CapacityResult, PatchMeasure, calibrate_rho_reg, equilibrium_measure, kernel_matrix
