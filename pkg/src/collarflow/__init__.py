"""collarflow: a numerical laboratory for the normalized Ricci-DeTurck flow
on asymptotically hyperbolic collar metrics.

Hot kernels run through a compiled extension when available; set
COLLARFLOW_PURE_PYTHON=1 to force the numpy fallback.
"""

from ._core import backend_name
from .chart import CollarChart
from .errors import (CollarFlowError, ConfigurationError, DivergenceError,
                     FitRejectedError, LinearSolveError, SingularMetricError)
from .fields import MetricState, ZeroFrameTensor, build_background
from .background import Background, closed_form_hyperbolic, from_metric, from_state
from .geometry import (AdmissibilityReport, CurvatureBundle, admissibility_check,
                       christoffel, curvature_error, definition_rhs,
                       inverse_expansion, riemann_ricci)
from .flow import (Decomposition, FlowConfig, FlowTrace, condition_decompose,
                   deturck_vector_field, lichnerowicz_apply, rdtf_rhs, run_flow,
                   step, unnormalize_time)

__version__ = "0.1.0"
