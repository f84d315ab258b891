"""
Dispersion fitting
Least-squares match of branch energies to (e_x, rabi, e0, n_eff) by Nelder-Mead simplex
descent in bound-normalized coordinates, with seeded jittered restarts
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Tuple, Union

import numpy as np
from scipy.optimize import minimize

from app.services.fitting.dataset import PeakDataset, check_determined
from app.services.polariton.dispersion import AngleGrid, CavityModel, branch_dispersion, cavity_energy
from app.services.polariton.hopfield import CouplingParams, ModelKind, branch_energies
from app.utils.errors import DispersionError, FitError, PolaritonError, ValidationError

logger = logging.getLogger(__name__)

FIT_PARAMS = ("e_x", "rabi", "e0", "n_eff")
DEFAULT_BOUNDS: Dict[str, Tuple[float, float]] = {
    "e_x": (0.5, 3.0),
    "rabi": (0.001, 1.5),
    "e0": (0.3, 3.0),
    "n_eff": (1.0, 4.0),
}
DEFAULT_N_EFF = 1.7
PENALTY = 1e12
JITTER = 0.05
TIE_TOL = 1e-15


@dataclass(frozen=True)
class FitConfig:
    free: Tuple[str, ...] = FIT_PARAMS
    bounds: Mapping[str, Tuple[float, float]] = field(default_factory=lambda: dict(DEFAULT_BOUNDS))
    model: ModelKind = ModelKind.FULL_HOPFIELD
    xatol: float = 1e-9
    fatol: float = 1e-14
    max_iter: int = 4000
    restarts: int = 4
    seed: int = 0

    def __post_init__(self):
        free = tuple(self.free)
        unknown = [name for name in free if name not in FIT_PARAMS]
        if unknown:
            raise ValidationError(f"unknown free parameters {unknown} (choose from {', '.join(FIT_PARAMS)})")
        if not free:
            raise ValidationError("at least one parameter must be free")
        bounds = dict(DEFAULT_BOUNDS)
        bounds.update({k: (float(v[0]), float(v[1])) for k, v in dict(self.bounds).items()})
        for name in FIT_PARAMS:
            lo, hi = bounds[name]
            if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
                raise ValidationError(f"fit.{name}_bounds must be finite with lower < upper, got ({lo}, {hi})")
        if self.max_iter < 1 or self.restarts < 0:
            raise ValidationError("max_iter must be >= 1 and restarts >= 0")
        if self.xatol <= 0 or self.fatol <= 0:
            raise ValidationError("fit tolerances must be > 0")
        if self.seed < 0:
            raise ValidationError(f"fit.seed must be a non-negative integer, got {self.seed}")
        # keep free-parameter order canonical
        object.__setattr__(self, "free", tuple(name for name in FIT_PARAMS if name in free))
        object.__setattr__(self, "bounds", bounds)
        object.__setattr__(self, "model", ModelKind.parse(self.model))


@dataclass(frozen=True)
class FitResult:
    coupling: CouplingParams
    cavity: CavityModel
    rms: float
    residuals: np.ndarray = field(repr=False)
    converged: bool
    iterations: int
    best_restart: int
    model: ModelKind = ModelKind.FULL_HOPFIELD
    free: Tuple[str, ...] = FIT_PARAMS

    def __post_init__(self):
        if not np.isfinite(self.rms) or self.rms < 0:
            raise FitError(f"rms residual must be finite and >= 0, got {self.rms}")

    @property
    def params(self) -> Dict[str, float]:
        return params_of(self.coupling, self.cavity)


def params_of(p: CouplingParams, m: CavityModel) -> Dict[str, float]:
    return {"e_x": p.e_x, "rabi": p.rabi, "e0": m.e0, "n_eff": m.n_eff}


def models_from_params(values: Mapping[str, float]) -> Tuple[CouplingParams, CavityModel]:
    return (CouplingParams(e_x=float(values["e_x"]), rabi=float(values["rabi"])),
            CavityModel(e0=float(values["e0"]), n_eff=float(values["n_eff"])))


def residuals(p: CouplingParams, m: CavityModel, d: PeakDataset,
              k: Union[ModelKind, str] = ModelKind.FULL_HOPFIELD) -> np.ndarray:
    """(model - observed) * sqrt(weight) per present observation, LP before UP within a row"""
    ratio = np.sin(np.deg2rad(d.theta)) ** 2 / m.n_eff ** 2
    if np.any(ratio >= 1):
        row = int(np.argmax(ratio >= 1))
        raise DispersionError(f"row {row} (theta={d.theta[row]} deg): evanescent cavity mode for n_eff={m.n_eff}")
    model = branch_energies(np.asarray(cavity_energy(m, d.theta)), p, k)
    diffs = np.column_stack((np.asarray(model.lp) - d.e_lp, np.asarray(model.up) - d.e_up))
    diffs = diffs * np.sqrt(d.weight)[:, None]
    present = np.column_stack((~np.isnan(d.e_lp), ~np.isnan(d.e_up)))
    return diffs[present]


def objective(values: Mapping[str, float], d: PeakDataset,
              k: Union[ModelKind, str] = ModelKind.FULL_HOPFIELD) -> float:
    """Sum of squared residuals; PENALTY where the parameters leave the physical domain"""
    try:
        p, m = models_from_params(values)
        r = residuals(p, m, d, k)
    except PolaritonError:
        return PENALTY
    total = float(np.dot(r, r))
    return total if np.isfinite(total) else PENALTY


def initial_guess(d: PeakDataset) -> Dict[str, float]:
    """
    e_x and rabi from the angle of smallest LP-UP splitting,
    e0 from the lowest-angle LP energy, n_eff fixed at DEFAULT_N_EFF
    """
    both = ~np.isnan(d.e_lp) & ~np.isnan(d.e_up)
    if not np.any(both):
        raise ValidationError(f"initial guess needs one angle with both branches ({d.lp_count} LP, {d.up_count} UP)")
    splitting = np.where(both, d.e_up - d.e_lp, np.inf)
    row = int(np.argmin(splitting))
    lp_rows = np.flatnonzero(~np.isnan(d.e_lp))
    e0 = d.e_lp[lp_rows[0]] if lp_rows.size else d.e_lp[row]
    return {
        "e_x": float((d.e_lp[row] + d.e_up[row]) / 2),
        "rabi": float(splitting[row]),
        "e0": float(e0),
        "n_eff": DEFAULT_N_EFF,
    }


def clip_to_bounds(values: Mapping[str, float], cfg: FitConfig) -> Dict[str, float]:
    return {name: float(np.clip(values[name], *cfg.bounds[name])) for name in FIT_PARAMS}


def _simplex(start: np.ndarray) -> np.ndarray:
    n = start.size
    simplex = np.tile(start, (n + 1, 1))
    for i in range(n):
        step = JITTER if start[i] + JITTER <= 1 else -JITTER
        simplex[i + 1, i] += step
    return simplex


def fit_dispersion(d: PeakDataset, init: Mapping[str, float], cfg: Optional[FitConfig] = None) -> FitResult:
    cfg = cfg or FitConfig()
    missing = [name for name in FIT_PARAMS if name not in init]
    if missing:
        raise ValidationError(f"initial values missing for {missing}")
    for name in FIT_PARAMS:
        lo, hi = cfg.bounds[name]
        if not lo <= init[name] <= hi:
            raise ValidationError(f"initial {name}={init[name]} lies outside its bounds [{lo}, {hi}]")
    check_determined(d, len(cfg.free))

    active = d.weighted_only()
    lo = np.array([cfg.bounds[name][0] for name in cfg.free])
    width = np.array([cfg.bounds[name][1] for name in cfg.free]) - lo
    fixed = {name: float(init[name]) for name in FIT_PARAMS}

    def unpack(u: np.ndarray) -> Dict[str, float]:
        values = dict(fixed)
        values.update(zip(cfg.free, lo + width * u))
        return values

    def cost(u: np.ndarray) -> float:
        return objective(unpack(u), active, cfg.model)

    start = (np.array([init[name] for name in cfg.free]) - lo) / width
    rng = np.random.default_rng(cfg.seed)
    starts = [start] + [np.clip(start + rng.normal(0.0, JITTER, start.size), 0.0, 1.0)
                        for _ in range(cfg.restarts)]

    runs: List[Tuple[float, int, object]] = []
    for index, u0 in enumerate(starts):
        if cost(u0) >= PENALTY:
            logger.warning("⚠️ Restart %d starts outside the physical domain; skipped", index)
            continue
        res = minimize(cost, u0, method="Nelder-Mead", bounds=[(0.0, 1.0)] * start.size,
                       options={"initial_simplex": _simplex(u0), "xatol": cfg.xatol, "fatol": cfg.fatol,
                                "maxiter": cfg.max_iter, "maxfev": 20 * cfg.max_iter})
        if not np.isfinite(res.fun) or res.fun >= PENALTY:
            logger.warning("⚠️ Restart %d ended outside the physical domain", index)
            continue
        logger.debug("Restart %d: sse=%.6e nit=%d success=%s", index, res.fun, res.nit, res.success)
        runs.append((float(res.fun), index, res))

    if not runs:
        raise FitError(f"all {len(starts)} fit runs failed to evaluate the objective")

    best_sse = min(run[0] for run in runs)
    sse, index, res = min((run for run in runs if run[0] - best_sse <= TIE_TOL), key=lambda run: run[1])

    p, m = models_from_params(unpack(np.clip(res.x, 0.0, 1.0)))
    r = residuals(p, m, d, cfg.model)
    n_obs = max(active.observation_count, 1)
    result = FitResult(coupling=p, cavity=m, rms=float(np.sqrt(sse / n_obs)), residuals=r,
                       converged=bool(res.success), iterations=int(res.nit), best_restart=index,
                       model=cfg.model, free=cfg.free)
    if not result.converged:
        logger.warning("⚠️ Fit stopped at max_iter=%d before converging", cfg.max_iter)
    logger.info("✅ Fitted rabi=%.4f eV e_x=%.4f eV e0=%.4f eV n_eff=%.3f (rms %.2e eV, restart %d)",
                p.rabi, p.e_x, m.e0, m.n_eff, result.rms, index)
    return result


def synthesize_dataset(p: CouplingParams, m: CavityModel, g: AngleGrid,
                       k: Union[ModelKind, str] = ModelKind.FULL_HOPFIELD,
                       noise_sigma: float = 0.0, seed: int = 0) -> PeakDataset:
    """Branch energies on the grid, optionally with seeded gaussian noise (eV)"""
    if noise_sigma < 0:
        raise ValidationError(f"noise_sigma must be >= 0, got {noise_sigma}")
    if seed < 0:
        raise ValidationError(f"seed must be a non-negative integer, got {seed}")
    table = branch_dispersion(p, m, g, k)
    e_lp = table["lp_ev"].to_numpy(copy=True)
    e_up = table["up_ev"].to_numpy(copy=True)
    if noise_sigma > 0:
        noise = np.random.default_rng(seed).normal(0.0, noise_sigma, size=(2, e_lp.size))
        e_lp = e_lp + noise[0]
        e_up = e_up + noise[1]
    return PeakDataset(theta=g.angles, e_lp=e_lp, e_up=e_up, weight=np.ones(len(g)))
