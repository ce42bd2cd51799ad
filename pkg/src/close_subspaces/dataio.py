"""Plain-text persistence for :class:`DataSet`.

Each matrix is its own whitespace-delimited text file, one matrix row per
line, written with 17 significant digits so values round-trip exactly. A
JSON descriptor ties the files together::

    {
      "M": 8, "R": 2, "T": 6, "K": 2,
      "sigma2": 0.25, "seed": 7,
      "config": {...ScenarioConfig fields...},
      "X": ["X1.txt", "X2.txt"],
      "H_true": ["H1.txt", "H2.txt"]
    }

Relative paths are resolved against the descriptor's directory.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .model import DataSet, ScenarioConfig

FLOAT_FMT = "%.17g"


class DataFormatError(ValueError):
    """A descriptor or matrix file is malformed; the message names the field."""


def write_matrix(path, A) -> None:
    np.savetxt(path, np.atleast_2d(np.asarray(A, dtype=float)), fmt=FLOAT_FMT)


def read_matrix(path, shape=None, field_name="matrix") -> np.ndarray:
    try:
        A = np.loadtxt(path, dtype=float, ndmin=2)
    except (OSError, ValueError) as exc:
        raise DataFormatError(f"{field_name}: cannot read {path}: {exc}") from exc
    if shape is not None and A.shape != tuple(shape):
        raise DataFormatError(f"{field_name}: {path} has shape {A.shape}, expected {tuple(shape)}")
    return A


def save_dataset(data: DataSet, descriptor_path) -> Path:
    """Write all matrices next to ``descriptor_path`` and the JSON descriptor itself."""
    descriptor_path = Path(descriptor_path)
    folder = descriptor_path.parent
    folder.mkdir(parents=True, exist_ok=True)
    stem = descriptor_path.stem
    x_files, h_files = [], []
    for k, (X, H) in enumerate(zip(data.X, data.H_true), start=1):
        xf, hf = f"{stem}_X{k}.txt", f"{stem}_H{k}.txt"
        write_matrix(folder / xf, X)
        write_matrix(folder / hf, H)
        x_files.append(xf)
        h_files.append(hf)
    c = data.config
    desc = {
        "M": c.M,
        "R": c.R,
        "T": c.T,
        "K": c.K,
        "sigma2": float(data.sigma2),
        "seed": c.seed,
        "config": c.to_dict(),
        "X": x_files,
        "H_true": h_files,
    }
    descriptor_path.write_text(json.dumps(desc, indent=2) + "\n", encoding="utf-8")
    return descriptor_path


def load_dataset(descriptor_path) -> DataSet:
    """Read a descriptor and its matrices back into a :class:`DataSet`."""
    descriptor_path = Path(descriptor_path)
    try:
        desc = json.loads(descriptor_path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise DataFormatError(f"descriptor: cannot read {descriptor_path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"descriptor: invalid JSON: {exc}") from exc
    if not isinstance(desc, dict):
        raise DataFormatError("descriptor: top level must be a JSON object")

    for key in ("M", "R", "T", "K", "sigma2", "X", "H_true"):
        if key not in desc:
            raise DataFormatError(f"{key}: missing from descriptor")
    cfg = dict(desc.get("config") or {})
    for key in ("M", "R", "T", "K"):
        cfg[key] = desc[key]
    if "seed" in desc:
        cfg["seed"] = desc["seed"]
    if "kappa" not in cfg:
        raise DataFormatError("config.kappa: missing from descriptor")
    cfg.setdefault("true_angles", [0.0] * int(desc["R"]))
    try:
        config = ScenarioConfig(**cfg)
    except TypeError as exc:
        raise DataFormatError(f"config: {exc}") from exc
    except ValueError as exc:
        raise DataFormatError(str(exc)) from exc

    sigma2 = desc["sigma2"]
    if isinstance(sigma2, bool) or not isinstance(sigma2, (int, float)) or not sigma2 > 0:
        raise DataFormatError(f"sigma2: must be a positive number, got {sigma2!r}")

    folder = descriptor_path.parent
    mats = {}
    for key, shape in (("X", (config.M, config.T)), ("H_true", (config.M, config.R))):
        files = desc[key]
        if not isinstance(files, list) or len(files) != config.K:
            raise DataFormatError(f"{key}: expected a list of K={config.K} file paths")
        mats[key] = [
            read_matrix(folder / f, shape, field_name=f"{key}[{i}]") for i, f in enumerate(files)
        ]
    try:
        return DataSet(mats["X"], mats["H_true"], float(sigma2), config)
    except ValueError as exc:
        raise DataFormatError(str(exc)) from exc
