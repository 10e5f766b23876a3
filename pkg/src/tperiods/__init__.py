"""Period lattices of t-modules over function fields.

Exact arithmetic over F_q(theta), precision-tracked Laurent series as the
local model at the infinite place, Anderson generating functions, residues at
t = theta, and period extraction through hyperderivative prolongations.
"""

from .ffcore import FqCtx, FqElem, binom_mod_p, fq_arith
from .localfield import (LocalFieldCfg, LocalNum, RefinementRequired, PINF,
                         ln_arith, twist_tau, twist_sigma, nth_root,
                         refine_uniformizer)
from .ratfunc import QPoly, RatFunc
from .ktalgebra import (Matrix, KtPoly, SkewPoly, RatFuncField, LocalScalars,
                        kt_matmul, kt_det, kt_inv, kt_inv_unimodular, skew_mul,
                        smith_normal_form)
from .tate import (TateSeries, ThetaGerm, ts_arith, ts_twist_tau, hyperderive,
                   prolong, germ_arith, residue, residue_via_hyperderivative,
                   tail_limit_eval)
from .tmodule import (TModuleDef, ExpLogSeries, exp_series, log_series,
                      eval_exp, eval_log, isometry_radius, check_torsion_system,
                      exp_functional_residuals, log_exp_compose_residuals)
from .motive import (MotiveDef, Trivialization, PeriodReport, agf, agf_germ,
                     agf_twisted_germ, check_H_membership, inverse_delta,
                     build_trivialization_from_lattice, coordinate_data,
                     extract_periods, check_abp_conditions, lattice_basis_change)
from .models import (ModelSpec, make_carlitz, make_carlitz_tensor,
                     make_drinfeld_from_coeffs, make_drinfeld_from_lattice,
                     omega_product, pi_tilde, carlitz_tensor_trivialization,
                     build_model, default_cfg_for_q)

__version__ = "0.1.0"
