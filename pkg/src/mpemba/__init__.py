"""Dissipative spin-1/2 chains under dephasing.

Sector-restricted exact treatment of the Lindblad dynamics of
anisotropic spin chains: Liouvillian spectra with biorthogonal modes,
thermal initial states, heating trajectories, and the detection and
classification of anomalous relaxation (trajectory crossings).
"""

from .analysis import (
    CrossingReport,
    OverlapSpectrum,
    QmeVerdict,
    SweepResult,
    classify_qme,
    delta_window_sweep,
    detect_crossing,
    j1j2_sweep,
    overlap_spectrum,
)
from .errors import (
    DefectiveSpectrumError,
    DegenerateSteadyStateError,
    MpembaError,
    NumericalError,
    ResourceError,
    ValidationError,
)
from .hamiltonian import HamiltonianSpec, HermitianOperator, build_hamiltonian, eigendecompose
from .liouvillian import (
    DissipationSpec,
    LindbladRHS,
    LiouvillianSpectrum,
    apply_lindblad_rhs,
    build_superoperator,
    spectral_decomposition,
    steady_state,
    unvec,
    vec,
)
from .propagation import (
    RateFit,
    TimeGrid,
    Trajectory,
    default_grid,
    distance,
    evolve_integrate,
    evolve_spectral,
    late_time_rate,
)
from .sector import (
    SectorBasis,
    bond_flip_flop,
    enumerate_sector,
    full_space,
    sz_diagonal,
    total_sz_diagonal,
    zz_coupling,
)
from .thermal import TemperatureSpec, assert_density_matrix, state_diagnostics, thermal_state

__version__ = "0.1.0"
