"""Second-order certification of KKT pairs in composite problems with
PSD-cone or nuclear-norm structure."""

__version__ = "0.1.0"

from .config import DEFAULT_TOLERANCES, ToleranceConfig
from .linalg import (EigenFrame, SvdFrame, eig_sym, null_space_basis, pinv, sunvec,
                     svd_full, svec)
from .prox import (InvalidSubgradientError, NuclearNorm, PsdIndicator, SpectralFrame,
                   SubgradientPair, frame_from_point, make_frame,
                   moreau_envelope_grad, moreau_envelope_value, prox_apply,
                   prox_conjugate_apply, subgradient_check)
from .jacobian import (JacobianChoice, OmegaChoice, ProxOperator, ZBlockChoice,
                       canonical_choice, canonical_element,
                       conjugate_jacobian_elements, jacobian_apply,
                       limiting_element_count, materialize, range_projector,
                       range_projector_pattern, sample_limiting_elements)
from .certify import (Certificate, CompositeProblem, KktCandidate, SsoscResult,
                      SweepEntry, aug_hessian, certify, gamma_closed_form,
                      hessian_pd_sweep, kkt_candidate, ssosc_margin, upsilon,
                      DEFAULT_SIGMA_GRID)
from .oracles import (OracleReport, coderivative_chain_check, delta2_quotient,
                      fd_prox_jacobian, gamma_bruteforce, gamma_bruteforce_many,
                      run_selftest)

__all__ = [name for name in dir() if not name.startswith("_")]
