"""Computational geometry of 2-step Riemannian nilmanifolds."""
from __future__ import annotations

from .algebra import (
    AlgebraElement,
    DimensionError,
    GroupPointExp,
    MetricTwoStepAlgebra,
    PreconditionError,
    bracket,
    group_multiply,
    validate,
)
from .catalog import from_name, heisenberg, six_dim, two_block
from .deformations import (
    AIAutomorphismParam,
    LengthSpectrum,
    compare_spectra,
    deform_lattice,
    isospectral_family,
    length_spectrum,
)
from .derivations import (
    DerivationVtoZ,
    almost_inner_space,
    decomposition_properties,
    gamma_almost_inner_space,
    inner_derivation_space,
    invariant_decomposition,
    is_inner,
)
from .geodesics import (
    ClosedFormGeodesic,
    GeodesicInitial,
    closed_geodesic_witness,
    geodesic_closed_form,
    geodesic_ode_oracle,
    heisenberg_geodesic,
    translation_data,
    velocity_frame,
)
from .lattice import (
    LatticeBasis,
    approximate_direction,
    enumerate_group_elements,
    standard_lattice,
    validate_lattice,
)
from .spectral import (
    classify,
    exp_skew,
    integer_relation,
    is_heisenberg_type,
    is_nonsingular,
    kernel_map,
    resonance_class,
    skew_eigenstructure,
)

__version__ = "0.1.0"
