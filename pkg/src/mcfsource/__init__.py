"""Simulation and certification of path-encoded four-dimensional entangled photon pairs
produced and measured with four-core fiber optics."""

__version__ = "0.1.0"

from .certify import (
    CertificationReport,
    bhattacharyya,
    certify_tables,
    coherence_sums,
    correlation_C,
    fidelity_mub,
    marginal_entropies,
    schmidt_witness,
    steering_S,
)
from .devices import MeasurementBasis, PhaseVector, SplitterMatrix, basis, demux_loss, ideal_4cfbs, phase_basis
from .drift import (
    DriftModel,
    DriftTrace,
    Sinusoid,
    coincidence_series,
    default_drift_model,
    pattern_power_fraction,
    simulate_drift,
    spectrum,
)
from .linkbudget import LinkBudget, max_distance, rate_at_distance
from .measure import (
    CountRecord,
    JointDistribution,
    estimate_distribution,
    physical_distribution,
    sample_counts,
)
from .qcore import LocalUnitary, TwoPhotonState, born_joint_distribution, fidelity_direct, tensor_apply
from .source import SourceConfig, ideal_state, source_state, weighted_state, werner_state
