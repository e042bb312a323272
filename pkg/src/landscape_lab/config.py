"""Numerical tolerances used across the package, kept in one frozen record."""

from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    # state-space membership
    validity: float = 1e-10
    distribution_clamp: float = 1e-12
    # concavity / bound slack in property checks
    property_slack: float = 1e-9
    nonreal_imag: float = 1e-8
    # Kraus trace preservation
    kraus_tp: float = 1e-9
    # entropy regularisation floor for log-type gradients
    eps_floor: float = 1e-9
    # Lindblad integration
    lindblad_refine: float = 1e-9
    lindblad_drift: float = 1e-8
    lindblad_max_doublings: int = 20
    # finite differences and numerical rank
    fd_step: float = 1e-5
    hessian_step: float = 1e-4
    rank_rel_cutoff: float = 1e-7
    rank_abs_floor: float = 1e-9
    # landscape classification
    gradient_tolerance: float = 1e-8
    hessian_rel_threshold: float = 1e-6
    hessian_abs_floor: float = 1e-9
    value_tolerance: float = 1e-5
    # level sets
    same_level: float = 1e-9


TOL = Tolerances()
