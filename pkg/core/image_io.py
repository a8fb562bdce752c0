"""
Image and table I/O

Images come in as PGM (or any greyscale format Pillow reads) or as a
headerless CSV of grey values. Tables go out as CSV with '.' decimals,
17 significant digits and the literal NA for undefined values; JSON is
written with sorted keys and non-finite floats mapped to null.
"""
import json
from pathlib import Path
from typing import Any, Union

import numpy as np
import pandas as pd
from loguru import logger
from PIL import Image

from config.settings import CSV_FLOAT_FORMAT, MISSING_SENTINEL
from core.errors import InvalidArgumentError

PathLike = Union[str, Path]


def read_image(path: PathLike) -> np.ndarray:
    """
    Load a greyscale image as an N×L float array (rows × scan lines).

    Args:
        path: .pgm/.png/.tif (via Pillow) or .csv (headerless grey values).

    Raises:
        InvalidArgumentError: missing file, unreadable content or non-finite values.
    """
    path = Path(path)
    if not path.exists():
        raise InvalidArgumentError(f"Image not found: {path}")

    if path.suffix.lower() == ".csv":
        try:
            data = pd.read_csv(path, header=None, float_precision="round_trip").to_numpy(dtype=float)
        except (ValueError, pd.errors.ParserError) as e:
            raise InvalidArgumentError(f"Could not parse image CSV {path}: {e}") from e
    else:
        try:
            with Image.open(path) as img:
                if img.mode not in ("L", "I", "I;16", "F"):
                    logger.debug(f"Converting {img.mode} image to greyscale")
                    img = img.convert("L")
                data = np.asarray(img, dtype=float)
        except OSError as e:
            raise InvalidArgumentError(f"Could not read image {path}: {e}") from e

    if data.ndim != 2 or min(data.shape) < 1:
        raise InvalidArgumentError(f"Image must be 2-D, got shape {data.shape}")
    if not np.all(np.isfinite(data)):
        raise InvalidArgumentError(f"Image {path} has non-finite values")
    logger.info(f"Loaded image {path.name}: {data.shape[0]}×{data.shape[1]}")
    return data


def write_pgm(image: np.ndarray, path: PathLike) -> Path:
    """Save grey values (clipped to 0..255) as an 8-bit PGM."""
    path = Path(path)
    pixels = np.clip(np.rint(image), 0, 255).astype(np.uint8)
    Image.fromarray(pixels).save(path, format="PPM")
    return path


def write_table(frame: pd.DataFrame, path: PathLike) -> Path:
    """CSV with header, fixed float format and the NA sentinel."""
    path = Path(path)
    frame.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT, na_rep=MISSING_SENTINEL, lineterminator="\n")
    return path


def write_matrix(matrix: np.ndarray, path: PathLike) -> Path:
    """Headerless CSV of a 1-D or 2-D array."""
    arr = np.asarray(matrix, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    frame = pd.DataFrame(arr)
    frame.to_csv(path, index=False, header=False, float_format=CSV_FLOAT_FORMAT,
                 na_rep=MISSING_SENTINEL, lineterminator="\n")
    return Path(path)


def read_matrix(path: PathLike) -> np.ndarray:
    """Inverse of write_matrix."""
    path = Path(path)
    if not path.exists():
        raise InvalidArgumentError(f"Matrix file not found: {path}")
    return pd.read_csv(
        path, header=None, na_values=[MISSING_SENTINEL], float_precision="round_trip"
    ).to_numpy(dtype=float)


def jsonable(value: Any) -> Any:
    """Convert numpy scalars/arrays and non-finite floats to plain JSON values."""
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return jsonable(value.tolist())
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not np.isfinite(value):
        return None
    if isinstance(value, Path):
        return str(value)
    return value


def write_json(data: Any, path: PathLike) -> Path:
    """Deterministic JSON: sorted keys, two-space indent, trailing newline."""
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(jsonable(data), f, indent=2, sort_keys=True, ensure_ascii=False, allow_nan=False)
        f.write("\n")
    return path
