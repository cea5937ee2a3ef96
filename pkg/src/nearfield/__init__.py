"""2D scalar-diffraction coverage-map simulator for near-field links."""

from .scenario import (
    AirySpec,
    BesselSpec,
    Blocker,
    CustomSpec,
    FieldGrid,
    FocusedSpec,
    GaussianSpec,
    PhaseModel,
    PhysicalParams,
    Reflector,
    RisPanel,
    RoughnessProfile,
    RxArray,
    Scenario,
    ScenarioError,
    SolverSettings,
    TxAperture,
    fraunhofer_distance,
    parse_scenario,
    scenario_from_dict,
    scenario_to_dict,
    scenarios_equal,
    serialize_scenario,
    validate_scenario,
)
from .spectral import (
    ComplexField,
    CoverageMap,
    SpectralPropagator,
    apply_propagator,
    direct_rs_field,
    eval_map_at_points,
    make_propagator,
    spectrum,
)
from .propagation import (
    BlockerMask,
    apodization_window,
    one_shot_propagate,
    propagate_sweep,
    rasterize_blockers,
)
from .wavefronts import (
    ApertureExcitation,
    load_custom_profile,
    rasterize_excitation,
    synth_airy,
    synth_bessel,
    synth_focused,
    synth_gaussian,
    synthesize,
)
from .scatterers import (
    LocalFrame,
    LocalGrid,
    VirtualSource,
    accumulate_into_global,
    make_ris_source,
    make_rough_source,
    make_specular_source,
    sample_incident_field,
    segment_frame,
    surface_heights,
    sweep_virtual_source,
)
from .solver import SolveReport, SourceNode, compute_rx_power, solve
from .analysis import (
    BeamTrajectory,
    MetricsReport,
    beam_trajectory,
    compare_maps,
    ncc_peak,
    normalized_correlation,
    rmse,
)

__version__ = "0.1.0"
