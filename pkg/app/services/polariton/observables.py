"""
Charged-polariton figures of merit
Charges in units of e0, masses in units of the bare electron mass m0
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from app.services.polariton.hopfield import (
    BranchFractions,
    BranchVector,
    branch_fractions,
    ground_state_content,
)
from app.utils.constants import AVOGADRO, HC_EV_NM
from app.utils.errors import ValidationError

DEFAULT_EXCITON_MASS = 25.0


@dataclass(frozen=True)
class MaterialParams:
    m_ex: float = DEFAULT_EXCITON_MASS
    m_ph_override: Optional[float] = None
    alpha_peak: Optional[float] = None
    sigma: Optional[float] = None

    def __post_init__(self):
        for name in ("m_ex", "m_ph_override", "alpha_peak", "sigma"):
            value = getattr(self, name)
            if value is not None and not (np.isfinite(value) and value > 0):
                raise ValidationError(f"material.{name} must be > 0, got {value}")


@dataclass(frozen=True)
class ChargedPolaritonReport:
    e_eff_lp: float
    m_eff_lp: float
    charge_to_mass: float
    gs_charge: float
    density: Optional[float] = None
    m_ph: Optional[float] = None

    def __post_init__(self):
        if not 0 <= self.e_eff_lp <= 1:
            raise ValidationError(f"effective LP charge must lie in [0, 1] e0, got {self.e_eff_lp}")
        if not 0 <= self.gs_charge <= 1:
            raise ValidationError(f"ground-state charge must lie in [0, 1] e0, got {self.gs_charge}")
        if self.m_eff_lp <= 0:
            raise ValidationError(f"LP effective mass must be > 0, got {self.m_eff_lp}")


def _check_fraction(value: float, name: str) -> None:
    if not 0 <= value <= 1:
        raise ValidationError(f"{name} must lie in [0, 1], got {value}")


def effective_charge(exciton_fraction: float) -> float:
    """e0 times the charged-exciton fraction"""
    _check_fraction(exciton_fraction, "exciton_fraction")
    return float(exciton_fraction)


def effective_mass_lp(f: BranchFractions, m_ex: float, m_ph: float) -> float:
    """Weighted harmonic mean of exciton and photon masses"""
    if m_ex <= 0 or m_ph <= 0:
        raise ValidationError(f"masses must be > 0 (m_ex={m_ex}, m_ph={m_ph})")
    return 1.0 / (f.exciton_fraction / m_ex + f.photon_fraction / m_ph)


def charge_to_mass_ratio(e_eff: float, m_eff: float) -> float:
    if m_eff <= 0:
        raise ValidationError(f"effective mass must be > 0, got {m_eff}")
    return e_eff / m_eff


def required_photon_mass(target_ratio: float, exciton_fraction: float, m_ex: float) -> float:
    """Photon mass that makes the LP charge-to-mass ratio equal target_ratio"""
    _check_fraction(exciton_fraction, "exciton_fraction")
    if target_ratio <= 0 or exciton_fraction == 0:
        raise ValidationError("target ratio and exciton fraction must be > 0")
    inverse_photon_term = target_ratio / exciton_fraction - exciton_fraction / m_ex
    if inverse_photon_term <= 0:
        raise ValidationError(f"ratio {target_ratio} is unreachable with m_ex={m_ex}")
    return (1.0 - exciton_fraction) / inverse_photon_term


def ground_state_charge(n_exciton: float) -> float:
    if n_exciton < 0:
        raise ValidationError(f"n_exciton must be >= 0, got {n_exciton}")
    return float(n_exciton)


def chromophore_density(alpha_peak: float, sigma: float) -> float:
    """alpha / sigma, chromophores per cm^3"""
    if alpha_peak <= 0 or sigma <= 0:
        raise ValidationError(f"alpha_peak and sigma must be > 0 (got {alpha_peak}, {sigma})")
    return alpha_peak / sigma


def absorption_cross_section(molar_absorptivity: float) -> float:
    """Cross-section in cm^2 from a decadic molar absorption coefficient in 1/(M cm)"""
    if molar_absorptivity <= 0:
        raise ValidationError(f"molar absorptivity must be > 0, got {molar_absorptivity}")
    return 1000.0 * molar_absorptivity / AVOGADRO


def wavelength_to_energy(wavelength_nm: float) -> float:
    return HC_EV_NM / wavelength_nm


def energy_to_wavelength(energy_ev: float) -> float:
    return HC_EV_NM / energy_ev


def charged_polariton_report(c_lp: BranchVector, c_up: BranchVector, material: MaterialParams,
                             m_ph: float, normalization: str = "probability") -> ChargedPolaritonReport:
    fractions = branch_fractions(c_lp, normalization=normalization)
    e_eff = effective_charge(fractions.exciton_fraction)
    m_eff = effective_mass_lp(fractions, material.m_ex, m_ph)
    ground = ground_state_content(c_lp, c_up)
    density = None
    if material.alpha_peak is not None and material.sigma is not None:
        density = chromophore_density(material.alpha_peak, material.sigma)
    return ChargedPolaritonReport(
        e_eff_lp=e_eff,
        m_eff_lp=m_eff,
        charge_to_mass=charge_to_mass_ratio(e_eff, m_eff),
        gs_charge=ground_state_charge(ground.n_exciton),
        density=density,
        m_ph=m_ph,
    )
