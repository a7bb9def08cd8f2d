"""Bifurcation and slow-fast analysis of directed FitzHugh-Nagumo networks."""
from .core import (
    PAPER,
    ModelParams,
    Regime,
    StabilityClass,
    classify_single_regime,
    cubic_coefficient_single,
    depressed_cubic_root,
    single_eigenvalues,
    single_equilibrium,
    single_hopf_points,
)
from .errors import FNLabError, InputError, NumericalError
from .pair import (
    DrivePoint,
    PairEquilibrium,
    Region,
    boundary_curves,
    gamma_star,
    hopf_curves_B,
    pair_eigenvalues,
    pair_equilibrium,
    phase_lock_threshold,
    region_classify,
    region_map,
)
from .desing import (
    DesingPoint,
    Singularity,
    codim2_gamma,
    desing_rhs,
    folded_singularities,
    fsn2_Istar,
    ordinary_singularity,
    phase_field_sample,
    slaved_z,
    transcritical_verify,
)
from .tree import (
    Edge,
    Node,
    TreeNetwork,
    chain_network,
    node_hopf_inputs,
    tree_eigenvalues,
    tree_equilibrium,
    two_node_network,
    validate_tree,
)
from .simulator import Trajectory, integrate, vector_field
from .analysis import (
    BehaviorLabel,
    PhaseLockReport,
    SpikeTrain,
    canard_proximity,
    classify_behavior,
    detect_spikes,
    phase_lock_report,
)

__version__ = "0.1.0"
