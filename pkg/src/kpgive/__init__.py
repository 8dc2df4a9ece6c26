"""Exact KP tau-functions, wave matrices and genus-zero Frobenius data of
twisted loop-group orbits, with the Givental/Lee tangent action."""

from .errors import (InconsistentInput, KPGiveError, NonInvertibleFlatMap, NonUnitConstantTerm,
                     NotTwisted, StructuralError, TrustExceeded, VerificationFailed)
from .fock import FockState, FockVector, apply_loop_group, bilinear_defect
from .frobenius import (FrobeniusData, ThetaData, frobenius_from_psi, gradient_defect, potential,
                        theta_series, trr_defect, wdvv_defect)
from .givental import (DerivativeReport, dual_derivative, flat_derivative, kp_dPsi, lee_dF_psi,
                       lee_rF, lee_sF, verify_main_theorem)
from .kptau import Cutoffs, WaveMatrix, orthogonality_defect, tau, wave_psi
from .loop import LoopAlgebraElement, LoopGroupElement
from .rings import Dual
from .series import MatrixSeries, TruncPoly

__version__ = "0.1.0"
