"""
Report Service - machine-readable summaries of a coupled cavity
Numbers are serialized with 10 significant digits; NaN becomes null
"""

import logging
import math
from typing import Any, Dict, Optional, Union

import numpy as np
import pandas as pd

import app
from app.services.fitting.fitter import FitResult
from app.services.polariton.dispersion import (
    AngleGrid,
    CavityModel,
    cavity_energy,
    detuning,
    photon_effective_mass,
)
from app.services.polariton.hopfield import (
    Branch,
    CouplingParams,
    ModelKind,
    branch_energies,
    branch_fractions,
    coupling_regime,
    ground_state_content,
    hopfield_state,
    lp_asymptote,
    normalized_coupling,
    polariton_gap_asymptotic,
    polariton_gap_formula,
    relative_splitting,
)
from app.services.polariton.observables import (
    absorption_cross_section,
    charged_polariton_report,
    chromophore_density,
    required_photon_mass,
)
from app.utils.config import RunConfig, config_hash
from app.utils.errors import DispersionError, ValidationError

logger = logging.getLogger(__name__)

TOOL_NAME = "polariton-usc"
SIGNIFICANT_DIGITS = 10
REFERENCE_CHARGE_TO_MASS = 2400.0
QUOTED_GAP_EV = 0.130
GAP_NOTE = ("A 130 meV gap is sometimes quoted for these parameters; neither rabi^2/(2 e_x) "
            "nor the asymptote difference reproduces it.")

FRACTION_COLUMNS = ["theta_deg", "e_cav_ev", "detuning_ev", "lp_ev", "up_ev",
                    "lp_photon", "lp_exciton", "up_photon", "up_exciton", "gs_photon", "gs_exciton"]


def significant(value: Any, digits: int = SIGNIFICANT_DIGITS) -> Any:
    """Round every float in a nested structure; NaN/inf become None"""
    if isinstance(value, dict):
        return {k: significant(v, digits) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [significant(v, digits) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if not math.isfinite(value):
            return None
        return float(f"{value:.{digits}g}")
    return value


def gap_summary(p: CouplingParams) -> Dict[str, Any]:
    summary = {
        "eta": normalized_coupling(p),
        "eta_rounded": round(normalized_coupling(p), 1),
        "relative_splitting": relative_splitting(p),
        "regime": coupling_regime(p),
        "gap_formula_ev": polariton_gap_formula(p),
        "up_asymptote_ev": p.e_x,
        "quoted_gap_ev": QUOTED_GAP_EV,
        "note": GAP_NOTE,
    }
    try:
        summary["lp_asymptote_ev"] = lp_asymptote(p)
        summary["gap_asymptotic_ev"] = polariton_gap_asymptotic(p)
    except DispersionError as e:
        logger.warning("⚠️ %s", e)
        summary["lp_asymptote_ev"] = None
        summary["gap_asymptotic_ev"] = None
    return summary


def fractions_table(p: CouplingParams, m: CavityModel, g: AngleGrid,
                    k: Union[ModelKind, str] = ModelKind.FULL_HOPFIELD,
                    normalization: str = "probability") -> pd.DataFrame:
    """Branch energies of model k with Hopfield fractions and ground-state content per angle"""
    e_cav = np.asarray(cavity_energy(m, g.angles))
    energies = branch_energies(e_cav, p, k)
    rows = []
    for theta, ec, lp, up in zip(g.angles, e_cav, np.atleast_1d(energies.lp), np.atleast_1d(energies.up)):
        _, coeffs = hopfield_state(float(ec), p)
        f_lp = branch_fractions(coeffs, Branch.LP, normalization)
        f_up = branch_fractions(coeffs, Branch.UP, normalization)
        ground = ground_state_content(coeffs.lp, coeffs.up)
        rows.append((theta, ec, detuning(ec, p), lp, up, f_lp.photon_fraction, f_lp.exciton_fraction,
                     f_up.photon_fraction, f_up.exciton_fraction, ground.n_photon, ground.n_exciton))
    return pd.DataFrame(rows, columns=FRACTION_COLUMNS)


def _fit_section(result: FitResult) -> Dict[str, Any]:
    return {
        "params": result.params,
        "free": list(result.free),
        "model": result.model.value,
        "rms_ev": result.rms,
        "residuals_ev": result.residuals.tolist(),
        "converged": result.converged,
        "iterations": result.iterations,
        "best_restart": result.best_restart,
    }


def _charged_section(coeffs, cfg: RunConfig, m_ph: Optional[float], normalization: str) -> Optional[Dict]:
    if m_ph is None:
        return None
    r = charged_polariton_report(coeffs.lp, coeffs.up, cfg.material, m_ph, normalization)
    return {"m_ph": r.m_ph, "e_eff_lp": r.e_eff_lp, "m_eff_lp": r.m_eff_lp,
            "charge_to_mass": r.charge_to_mass, "gs_charge": r.gs_charge, "density_cm3": r.density}


def _inputs(values: Dict[str, Dict[str, Any]]) -> Dict[str, Any]:
    return {section: {key: list(v) if isinstance(v, tuple) else v for key, v in keys.items()}
            for section, keys in values.items()}


def build_report(cfg: RunConfig, coupling: Optional[CouplingParams] = None,
                 cavity: Optional[CavityModel] = None, fit: Optional[FitResult] = None,
                 normalization: str = "probability") -> Dict[str, Any]:
    p = coupling or (fit.coupling if fit else cfg.coupling)
    m = cavity or (fit.cavity if fit else cfg.cavity)
    model = fit.model if fit else cfg.model

    e_cav0 = cavity_energy(m, 0.0)
    energies = branch_energies(e_cav0, p, model)
    _, coeffs = hopfield_state(e_cav0, p)
    f_lp = branch_fractions(coeffs, Branch.LP, normalization)
    f_up = branch_fractions(coeffs, Branch.UP, normalization)
    ground = ground_state_content(coeffs.lp, coeffs.up)
    m_ph_fitted = photon_effective_mass(m)

    try:
        m_ph_reference = required_photon_mass(REFERENCE_CHARGE_TO_MASS, f_lp.exciton_fraction, cfg.material.m_ex)
    except ValidationError as e:
        logger.warning("⚠️ %s", e)
        m_ph_reference = None

    gaps = gap_summary(p)
    report = {
        "tool": TOOL_NAME,
        "version": app.__version__,
        "config_hash": config_hash(cfg.values),
        "inputs": _inputs(cfg.values),
        "model": model.value,
        "fit": _fit_section(fit) if fit else None,
        "coupling": {"e_x": p.e_x, "rabi": p.rabi, "eta": gaps["eta"], "eta_rounded": gaps["eta_rounded"],
                     "relative_splitting": gaps["relative_splitting"], "regime": gaps["regime"]},
        "cavity": {"e0": m.e0, "n_eff": m.n_eff, "photon_mass": m_ph_fitted,
                   "e0_solved": cfg.e0_solved and fit is None, "lp_target": cfg.lp_target},
        "gaps": {"formula_ev": gaps["gap_formula_ev"], "asymptotic_ev": gaps["gap_asymptotic_ev"],
                 "lp_asymptote_ev": gaps["lp_asymptote_ev"], "up_asymptote_ev": gaps["up_asymptote_ev"],
                 "quoted_ev": QUOTED_GAP_EV, "note": GAP_NOTE},
        "normal_incidence": {
            "e_cav": e_cav0, "detuning": detuning(e_cav0, p), "lp": energies.lp, "up": energies.up,
            "lp_fractions": {"photon": f_lp.photon_fraction, "exciton": f_lp.exciton_fraction},
            "up_fractions": {"photon": f_up.photon_fraction, "exciton": f_up.exciton_fraction},
            "ground_state": {"photon": ground.n_photon, "exciton": ground.n_exciton},
            "normalization": normalization,
        },
        "charged_polariton": {
            "fitted_photon_mass": _charged_section(coeffs, cfg, m_ph_fitted, normalization),
            "override": _charged_section(coeffs, cfg, cfg.material.m_ph_override, normalization),
        },
        "photon_mass_for_reference_ratio": {"charge_to_mass": REFERENCE_CHARGE_TO_MASS, "m_ph": m_ph_reference},
        "density": {
            "alpha_peak_cm": cfg.material.alpha_peak,
            "sigma_cm2": cfg.material.sigma,
            "chromophores_cm3": (chromophore_density(cfg.material.alpha_peak, cfg.material.sigma)
                                 if cfg.material.alpha_peak and cfg.material.sigma else None),
            "sigma_from_molar_absorptivity_cm2": absorption_cross_section(cfg.molar_absorptivity),
        },
        "grid": fractions_table(p, m, cfg.grid.angles, model, normalization).to_dict(orient="records"),
    }
    logger.info("📊 Report: eta=%.4f LP(0)=%.4f UP(0)=%.4f eV, LP exciton fraction %.3f",
                gaps["eta"], energies.lp, energies.up, f_lp.exciton_fraction)
    return significant(report)
