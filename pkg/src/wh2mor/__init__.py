"""Interpolatory weighted-H2 model reduction for SISO descriptor systems."""

from .errors import *  # noqa: F401,F403
from .kernels import BACKEND
from .lti import (PoleResidueForm, StateSpace, SystemPair, feedback_connect, freq_response,
                  make_modal_benchmark, pole_residue, random_system, tf_deriv, tf_eval,
                  weight_from_loop)
from .wh2 import (f_map_eval, optimality_residuals, weighted_error, weighted_error_expr,
                  weighted_inner, weighted_norm, weighted_norm_quad)
from .reduce import ShiftSet, WirkaConfig, WirkaReport, dominant_poles, irka, project, wirka
from .baselines import balanced_truncation, fwbt, h2_norm_gramian

__version__ = "0.1.0"
