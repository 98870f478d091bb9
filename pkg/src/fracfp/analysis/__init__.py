"""Experiment harness: stability ratios, energy balance, rates and lemma checks."""

from .constants import fit_slope, poincare_study, psi
from .convergence import RateTable, convergence_study, modal_errors, sine_data
from .energy import EnergyLedger, energy_check, norm_decay_holds
from .lemmas import LemmaReport, identity_checks, lemma_property_suite, random_trajectory
from .probes import ProbeReport, b1_values, b_operator_ratio_probe
from .stability import (
    DataCase,
    StabilityRecord,
    StabilityReport,
    gradient_sweep,
    rhs_functional,
    stability_sweep,
)

__all__ = [
    "DataCase",
    "EnergyLedger",
    "LemmaReport",
    "ProbeReport",
    "RateTable",
    "StabilityRecord",
    "StabilityReport",
    "b1_values",
    "b_operator_ratio_probe",
    "convergence_study",
    "energy_check",
    "fit_slope",
    "gradient_sweep",
    "identity_checks",
    "lemma_property_suite",
    "modal_errors",
    "norm_decay_holds",
    "poincare_study",
    "psi",
    "random_trajectory",
    "rhs_functional",
    "sine_data",
    "stability_sweep",
]
