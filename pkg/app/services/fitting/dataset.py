"""
Angle-resolved peak dataset
One row per angle with optional LP/UP energies; CSV header theta_deg,e_lp_ev,e_up_ev,weight
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

import numpy as np
import pandas as pd

from app.utils.errors import DatasetError

logger = logging.getLogger(__name__)

DATASET_COLUMNS = ["theta_deg", "e_lp_ev", "e_up_ev", "weight"]
MIN_ROWS = 4


@dataclass(frozen=True)
class PeakDataset:
    """Rows are kept sorted by theta; NaN marks a missing branch observation"""
    theta: np.ndarray = field(repr=False)
    e_lp: np.ndarray = field(repr=False)
    e_up: np.ndarray = field(repr=False)
    weight: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=float).ravel()
        e_lp = np.asarray(self.e_lp, dtype=float).ravel()
        e_up = np.asarray(self.e_up, dtype=float).ravel()
        weight = np.ones_like(theta) if self.weight is None else np.asarray(self.weight, dtype=float).ravel()

        if not (theta.shape == e_lp.shape == e_up.shape == weight.shape):
            raise DatasetError("theta, e_lp, e_up and weight need one entry per row")
        if not np.all(np.isfinite(theta)) or np.any(theta < 0) or np.any(theta >= 90):
            raise DatasetError("theta values must lie in [0, 90) degrees")
        if np.unique(theta).size != theta.size:
            raise DatasetError("theta values must be unique")
        if not np.all(np.isfinite(weight)) or np.any(weight < 0):
            raise DatasetError("weights must be finite and >= 0")
        for name, values in (("e_lp", e_lp), ("e_up", e_up)):
            present = values[~np.isnan(values)]
            if np.any(~np.isfinite(present)) or np.any(present <= 0):
                raise DatasetError(f"{name} observations must be finite and > 0 eV")

        observed = ~np.isnan(e_lp) | ~np.isnan(e_up)
        if np.count_nonzero(observed) < MIN_ROWS:
            raise DatasetError(f"need at least {MIN_ROWS} rows with an observation, got {np.count_nonzero(observed)}")

        order = np.argsort(theta, kind="stable")
        for name, values in (("theta", theta), ("e_lp", e_lp), ("e_up", e_up), ("weight", weight)):
            object.__setattr__(self, name, values[order])

    def __len__(self) -> int:
        return int(self.theta.size)

    @property
    def lp_count(self) -> int:
        return int(np.count_nonzero(~np.isnan(self.e_lp)))

    @property
    def up_count(self) -> int:
        return int(np.count_nonzero(~np.isnan(self.e_up)))

    @property
    def observation_count(self) -> int:
        return self.lp_count + self.up_count

    def without_rows(self, mask: np.ndarray) -> "PeakDataset":
        keep = ~np.asarray(mask, dtype=bool)
        return PeakDataset(self.theta[keep], self.e_lp[keep], self.e_up[keep], self.weight[keep])

    def weighted_only(self) -> "PeakDataset":
        """Rows with weight > 0; returns self when none are zero-weighted"""
        zero = self.weight == 0
        return self.without_rows(zero) if np.any(zero) else self

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"theta_deg": self.theta, "e_lp_ev": self.e_lp,
                             "e_up_ev": self.e_up, "weight": self.weight}, columns=DATASET_COLUMNS)


def check_determined(d: PeakDataset, n_free: int) -> None:
    if d.observation_count < max(n_free, 1) or len(d) < MIN_ROWS:
        raise DatasetError(
            f"under-determined dataset: {d.lp_count} LP + {d.up_count} UP observations "
            f"over {len(d)} rows for {n_free} free parameters")


def read_dataset(path: Union[str, Path]) -> PeakDataset:
    path = Path(path)
    if not path.exists():
        raise DatasetError(f"peak dataset not found: {path}")
    try:
        table = pd.read_csv(path, encoding="utf-8", skipinitialspace=True)
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise DatasetError(f"{path}: unreadable CSV ({e})") from e

    required = DATASET_COLUMNS[:3]
    missing = [c for c in required if c not in table.columns]
    unknown = [c for c in table.columns if c not in DATASET_COLUMNS]
    if missing or unknown:
        raise DatasetError(f"{path}: header must be {','.join(DATASET_COLUMNS)} (missing {missing}, unknown {unknown})")
    if "weight" not in table.columns:
        table["weight"] = 1.0
    table["weight"] = table["weight"].fillna(1.0)

    try:
        numeric = table[DATASET_COLUMNS].apply(pd.to_numeric, errors="raise")
    except ValueError as e:
        raise DatasetError(f"{path}: non-numeric cell ({e})") from e
    if numeric["theta_deg"].isna().any():
        raise DatasetError(f"{path}: every row needs theta_deg")

    d = PeakDataset(numeric["theta_deg"].to_numpy(), numeric["e_lp_ev"].to_numpy(),
                    numeric["e_up_ev"].to_numpy(), numeric["weight"].to_numpy())
    logger.debug("Loaded %d rows (%d LP, %d UP) from %s", len(d), d.lp_count, d.up_count, path)
    return d


def write_dataset(d: PeakDataset, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    d.to_frame().to_csv(path, index=False, float_format="%.10g", na_rep="", encoding="utf-8", lineterminator="\n")
    return path
