"""
Pipeline steps shared by the CLI commands
RunConfig -> film + stack -> angle spectra -> peaks -> branch dataset -> fit
"""

import logging
from typing import Dict, Optional

from app.services.fitting.dataset import PeakDataset
from app.services.fitting.fitter import FitResult, clip_to_bounds, fit_dispersion, initial_guess
from app.services.optics.dielectric import (
    ConstantIndex,
    LorentzOscillator,
    LorentzSet,
    calibrate_oscillator_strength,
    load_gold,
)
from app.services.optics.peaks import PeakList, extract_angle_peaks, peaks_to_dataset
from app.services.optics.tmm import Layer, Spectrum, Stack, simulate_angle_spectra, stack_summary
from app.utils.config import FilmSettings, RunConfig, StackSettings

logger = logging.getLogger(__name__)


def build_film(settings: FilmSettings) -> LorentzSet:
    """Single-band Lorentz film; strength calibrated from alpha_target when not given"""
    strength = settings.strength
    if strength is None:
        strength = calibrate_oscillator_strength(settings.alpha_target, settings.e_res,
                                                 settings.gamma, settings.eps_inf)
    strength *= settings.strength_scale
    return LorentzSet(settings.eps_inf, (LorentzOscillator(strength, settings.e_res, settings.gamma),))


def build_stack(settings: StackSettings, film: LorentzSet) -> Stack:
    gold = None
    layers = [Layer(ConstantIndex(settings.ambient_index), None, "ambient")]
    for material, thickness in settings.layers:
        if material == "au":
            if gold is None:
                gold = load_gold(settings.au_table)
            layers.append(Layer(gold, thickness, "au"))
        elif material == "film":
            layers.append(Layer(film, thickness, "film"))
        else:
            layers.append(Layer(ConstantIndex(float(material)), thickness, f"n={material:g}"))
    layers.append(Layer(ConstantIndex(settings.substrate_index), None, "substrate"))
    return Stack(tuple(layers))


def simulate(cfg: RunConfig, film: Optional[LorentzSet] = None) -> Dict[float, Spectrum]:
    stack = build_stack(cfg.stack, film or build_film(cfg.film))
    for line in stack_summary(stack):
        logger.debug("  %s", line)
    return simulate_angle_spectra(stack, cfg.grid.angles, cfg.grid.energies, cfg.stack.polarization)


def extract(spectra: Dict[float, Spectrum], cfg: RunConfig) -> Dict[float, PeakList]:
    return extract_angle_peaks(spectra, cfg.peaks.min_prominence, cfg.peaks.window)


def assign_branches(peaks: Dict[float, PeakList], cfg: RunConfig) -> PeakDataset:
    return peaks_to_dataset(peaks, cfg.coupling.e_x)


def fit(d: PeakDataset, cfg: RunConfig) -> FitResult:
    """Fit from the initial-guess heuristic, clipped into the configured bounds"""
    init = clip_to_bounds(initial_guess(d), cfg.fit)
    logger.debug("Initial guess %s", init)
    return fit_dispersion(d, init, cfg.fit)
