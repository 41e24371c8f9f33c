"""Curvature, classification and integration tools for radial Kahler metrics.

A radial metric on a domain of ``C^n`` is described by its complex
dimension and a momentum profile ``psi(y)``; see ``RadialMetric``.
"""
__version__ = "0.1.0"

from .classify import (
    ClassificationReport,
    ExtremalParams,
    KcsckParams,
    KEResult,
    KrsParams,
    classify,
    classify_extremal,
    classify_kcsck,
    classify_ke,
    classify_krs,
    construct_family,
    verify_theorem,
)
from .errors import (
    DegreeRangeError,
    DomainError,
    ExprSyntaxError,
    IllConditioned,
    ParamError,
    RadialKahlerError,
    SignError,
    SingularMatrix,
    StencilOutOfDomain,
    StepFailure,
    UnsupportedTerm,
)
from .expr import ExpLaurentExpr, parse, to_text
from .geometry import (
    RadialMetric,
    curvature_sample,
    hsc,
    hsc_sign_scan,
    metric_components,
    rho_k,
    ricci_components,
    riemann_axis,
    sigma_from_psi,
)
from .ode import integrate_y, psi_from_sigma_numeric, reconstruct_potential
from .oracle import OracleReport, rho_det_oracle, ricci_fd_oracle, riemann_fd_oracle
from .render import render_report
