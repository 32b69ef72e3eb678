"""Simulation library and benchmark CLI for direct state tomography with
coupling-deformed pointer observables."""

from .linalg import (
    AxisAngle,
    haar_su2_sample,
    haar_su2_sample_batch,
    haar_unitary,
    herm_unitary_exp,
    hermitian_basis,
    hermitian_eig,
    make_stream,
    partial_trace_system,
    singular_values,
)
from .measurement import (
    JointState,
    MeasurementSetting,
    NumericalConsistencyError,
    PointerObservable,
    born_distribution,
    cd_observables,
    coupling_unitary,
    evolve,
    exact_expectation,
    sample_outcome,
    standard_observables,
)
from .states import (
    DensityMatrix,
    MubPair,
    ReconstructedMatrix,
    fourier_mub,
    hermitize,
    random_density_hs,
    random_pure,
    trace_distance,
)
from .tomography import (
    TomographyScheme,
    WeakValueTable,
    analytic_reconstruction,
    parse_scheme,
    reconstruct_from_table,
    run_dst,
    run_mdst,
    run_pauli,
    run_random_basis_lsq,
    run_su2_kernel,
    spin_operators,
)
from .variance import (
    VarianceBreakdown,
    g_opt,
    golden_section_min,
    minimize_tv1,
    tv1_closed_form,
    variance_numeric,
)

__version__ = "0.1.0"
