"""
File store for CSV tables and JSON reports
Comma-separated, '.' decimal, header row, UTF-8, '\\n' line endings
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, Sequence, Union

import pandas as pd

from app.utils.errors import ValidationError

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.10g"

PathLike = Union[str, Path]


def _ensure(path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def save_frame(frame: pd.DataFrame, path: PathLike) -> Path:
    path = _ensure(Path(path))
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, na_rep="", encoding="utf-8", lineterminator="\n")
    logger.info("💾 Wrote %d rows to %s", len(frame), path)
    return path


def load_frame(path: PathLike, columns: Sequence[str]) -> pd.DataFrame:
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"CSV file not found: {path}")
    try:
        frame = pd.read_csv(path, encoding="utf-8")
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise ValidationError(f"{path}: unreadable CSV ({e})") from e
    missing = [c for c in columns if c not in frame.columns]
    if missing:
        raise ValidationError(f"{path}: missing columns {missing}")
    return frame


def save_json(doc: Dict[str, Any], path: PathLike) -> Path:
    path = _ensure(Path(path))
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(doc, f, indent=2, ensure_ascii=False, allow_nan=False)
        f.write("\n")
    logger.info("💾 Wrote report %s", path)
    return path


def load_json(path: PathLike) -> Dict[str, Any]:
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"report not found: {path}")
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)
