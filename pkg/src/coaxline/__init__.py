"""coaxline: design and measurement analysis for coaxial-line 3D cQED packages."""

__version__ = "0.1.0"

from .budget import (  # noqa: F401
    BoundKind,
    Interval,
    LossSource,
    ParticipationBudget,
    SeamSpec,
    dominant_source,
    material_bound,
    q_limit,
    seam_q,
    total_qi,
)
from .coupling import (  # noqa: F401
    CouplingSeries,
    ExponentialLaw,
    SeriesKind,
    chi_from_g,
    fit_exponential,
    g_from_chi,
    predict_qc,
)
from .dispersive import (  # noqa: F401
    CoherenceSet,
    DeviationRow,
    DispersiveSet,
    PurcellCheck,
    detuning,
    deviation_table,
    lifetime_from_q,
    pure_dephasing,
    purcell_check,
    q_from_lifetime,
    spearman_rho,
)
from .resonance import (  # noqa: F401
    FitResult,
    HangerModelParams,
    ResonanceTrace,
    TraceMeta,
    circle_fit,
    combine_q,
    correct_background,
    estimate_delay,
    fit_hanger,
    fit_many,
    model_s21_hanger,
    phase_fit,
    synthesize_trace,
)
from .waveguide import (  # noqa: F401
    CALIBRATED_LOADING,
    AttenuationConstant,
    ModeId,
    TE11,
    WaveguideSpec,
    attenuation_constant,
    calibrate_loading,
    cutoff_frequency,
    field_attenuation_ratio,
)
