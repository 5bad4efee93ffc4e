"""Toolkit for synthesizing attack-resilient realizations of dynamic
output-feedback controllers for LTI systems.

The pipeline: build a plant/controller/detector model, compute the nominal
residual ellipsoid, bound the detector's estimation error under a stealthy
sensor attack, and synthesize the controller realization that minimizes the
closed-loop reachable-set ellipsoid. A fixed-step simulator provides the
Monte Carlo oracle and the attack case study.
"""

from pecsynth.model import (
    AttackScenario,
    BaseController,
    Detector,
    DisturbanceBounds,
    LtiPlant,
    bounds_from_componentwise_peaks,
    bounds_from_peaks,
    make_scenario,
)
from pecsynth.realization import (
    ClosedLoop,
    PecRealization,
    ResidualDrivenLoop,
    TransformedPlant,
    assemble_closed_loop,
    pec_dim,
    realize,
    residual_driven_form,
    transform_plant,
)
from pecsynth.set_analysis import EllipsoidCertificate, detector_error_set, residual_set
from pecsynth.synthesis import SynthesisResult, baseline_trace, synthesize
from pecsynth.quadtank import QuadTankCase, QuadTankParams, build_case

__all__ = [
    "AttackScenario",
    "BaseController",
    "ClosedLoop",
    "Detector",
    "DisturbanceBounds",
    "EllipsoidCertificate",
    "LtiPlant",
    "PecRealization",
    "QuadTankCase",
    "QuadTankParams",
    "ResidualDrivenLoop",
    "SynthesisResult",
    "TransformedPlant",
    "assemble_closed_loop",
    "baseline_trace",
    "bounds_from_componentwise_peaks",
    "bounds_from_peaks",
    "build_case",
    "detector_error_set",
    "make_scenario",
    "pec_dim",
    "realize",
    "residual_driven_form",
    "residual_set",
    "synthesize",
    "transform_plant",
]
