"""Fisher information of segment submodels of Gaussian and Wishart families."""

from segfisher.errors import (
    AdmissibilityError,
    ContractError,
    DomainError,
    NotPositiveDefiniteError,
    NumericalError,
    PoleError,
    PreconditionError,
    SegfisherError,
    UnsupportedCaseError,
)
from segfisher.expfam import FamilyModel, fisher_canonical, fisher_mean, reparam_info
from segfisher.gaussian import covariance_segment, gaussian_family
from segfisher.segment import SegmentModel, ThetaInterval, segment_domain
from segfisher.wishart import scale_segment, wishart_family
from segfisher.wishart_noncentral import nc_wishart_family

__version__ = "0.1.0"

__all__ = [
    "AdmissibilityError",
    "ContractError",
    "DomainError",
    "FamilyModel",
    "NotPositiveDefiniteError",
    "NumericalError",
    "PoleError",
    "PreconditionError",
    "SegfisherError",
    "SegmentModel",
    "ThetaInterval",
    "UnsupportedCaseError",
    "covariance_segment",
    "fisher_canonical",
    "fisher_mean",
    "gaussian_family",
    "nc_wishart_family",
    "reparam_info",
    "scale_segment",
    "segment_domain",
    "wishart_family",
]
