"""File formats: sensor CSV, feature/label/spectrum CSV, model artifacts.

CSV files may carry leading ``#`` comment lines recording the config hash
and seed; readers skip them. Model artifacts are versioned JSON documents
that round-trip field-for-field.
"""
from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .context import NaiveBayesModel
from .errors import ValidationError
from .gmm import GmmParams
from .series import (
    AdherenceLabels,
    ScalarSeries,
    SpectrumEstimate,
    TimestampedTriaxial,
)
from .swar import ArPrior, ArState, SwitchingArModel

ARTIFACT_VERSION = 1
_FLOAT_FMT = "%.12g"


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _header_lines(meta: dict | None) -> list[str]:
    if not meta:
        return []
    return [f"# {key}={value}" for key, value in sorted(meta.items())]


def _write_table(path: Path, header: str, rows: np.ndarray,
                 meta: dict | None = None) -> None:
    lines = _header_lines(meta)
    lines.append(header)
    for row in np.atleast_2d(rows):
        lines.append(",".join(_FLOAT_FMT % v for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def _read_table(path: Path, expected_columns: int) -> np.ndarray:
    rows = []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(",")
        try:
            rows.append([float(p) for p in parts])
        except ValueError:
            continue  # header line
    data = np.asarray(rows, dtype=float)
    if data.ndim != 2 or data.shape[1] != expected_columns:
        raise ValidationError(
            f"{path}: expected {expected_columns} columns, got shape {data.shape}")
    return data


# -- sensor / feature CSV -----------------------------------------------------

def read_accelerometer_csv(path: Path) -> TimestampedTriaxial:
    """Read ``t,x,y,z`` (seconds, m/s^2)."""
    data = _read_table(path, 4)
    return TimestampedTriaxial(timestamps=data[:, 0], samples=data[:, 1:])


def read_audio_csv(path: Path, rate: float = 44_100.0) -> ScalarSeries:
    """Read ``t,v`` audio samples; the time column fixes nothing beyond order."""
    data = _read_table(path, 2)
    return ScalarSeries(rate=rate, values=data[:, 1], unit="energy")


def write_scalar_csv(path: Path, series: ScalarSeries,
                     meta: dict | None = None) -> None:
    rows = np.column_stack([series.times, series.values])
    _write_table(path, "t,v", rows, meta)


def read_scalar_csv(path: Path, unit: str = "magnitude") -> ScalarSeries:
    data = _read_table(path, 2)
    t = data[:, 0]
    if len(t) < 2:
        raise ValidationError(f"{path}: need at least 2 samples")
    rate = 1.0 / float(np.median(np.diff(t)))
    return ScalarSeries(rate=rate, values=data[:, 1], unit=unit)


def write_spectrum_csv(path: Path, spectrum: SpectrumEstimate,
                       meta: dict | None = None) -> None:
    rows = np.column_stack([spectrum.frequencies, spectrum.power])
    _write_table(path, "f,power", rows, meta)


def write_labels_csv(path: Path, labels: AdherenceLabels,
                     confidence: np.ndarray | None = None,
                     meta: dict | None = None) -> None:
    t = np.arange(len(labels)) / labels.rate
    if confidence is None:
        _write_table(path, "t,u", np.column_stack([t, labels.labels]), meta)
    else:
        _write_table(path, "t,u,confidence",
                     np.column_stack([t, labels.labels, confidence]), meta)


def read_labels_csv(path: Path) -> AdherenceLabels:
    data = _read_table(path, 2)
    t = data[:, 0]
    rate = 1.0 / float(np.median(np.diff(t))) if len(t) > 1 else 1.0
    return AdherenceLabels(rate=rate, labels=data[:, 1].astype(int))


def write_decomposition_csv(path: Path, times: np.ndarray, trend: np.ndarray,
                            dynamic: np.ndarray, meta: dict | None = None) -> None:
    rows = np.column_stack([times, trend, dynamic])
    _write_table(path, "t,gx,gy,gz,dx,dy,dz", rows, meta)


# -- model artifacts ----------------------------------------------------------

def _artifact(kind: str, payload: dict, config: dict | None, seed: int | None) -> dict:
    return {
        "format": "clinqc-model",
        "version": ARTIFACT_VERSION,
        "kind": kind,
        "seed": seed,
        "config": config or {},
        "config_hash": config_hash(config or {}),
        "payload": payload,
    }


def save_model(path: Path, model, config: dict | None = None,
               seed: int | None = None) -> None:
    if isinstance(model, SwitchingArModel):
        payload = {
            "order": model.order,
            "truncation": model.truncation,
            "alpha": model.alpha,
            "gamma": model.gamma,
            "kappa": model.kappa,
            "seed": model.seed,
            "beta": model.beta.tolist(),
            "transitions": model.transitions.tolist(),
            "states": [{"coefficients": s.coefficients.tolist(),
                        "mean": s.mean, "variance": s.variance}
                       for s in model.states],
            "prior": {"coef_scale": model.prior.coef_scale,
                      "shape": model.prior.shape, "scale": model.prior.scale},
        }
        doc = _artifact("switching-ar", payload, config, seed)
    elif isinstance(model, GmmParams):
        payload = {"means": model.means.tolist(),
                   "variances": model.variances.tolist(),
                   "weights": model.weights.tolist()}
        doc = _artifact("gmm", payload, config, seed)
    elif isinstance(model, NaiveBayesModel):
        payload = {"attribute_probs": model.attribute_probs.tolist(),
                   "priors": model.priors.tolist(),
                   "seen": model.seen.astype(int).tolist(),
                   "smoothing": model.smoothing}
        doc = _artifact("naive-bayes", payload, config, seed)
    else:
        raise ValidationError(f"cannot serialize model of type {type(model)!r}")
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def load_model(path: Path):
    doc = json.loads(Path(path).read_text())
    if doc.get("format") != "clinqc-model":
        raise ValidationError(f"{path}: not a model artifact")
    if doc.get("version") != ARTIFACT_VERSION:
        raise ValidationError(f"{path}: unsupported artifact version")
    kind = doc["kind"]
    payload = doc["payload"]
    if kind == "switching-ar":
        return SwitchingArModel(
            order=payload["order"], truncation=payload["truncation"],
            states=[ArState(coefficients=np.array(s["coefficients"]),
                            mean=s["mean"], variance=s["variance"])
                    for s in payload["states"]],
            transitions=np.array(payload["transitions"]),
            beta=np.array(payload["beta"]),
            alpha=payload["alpha"], gamma=payload["gamma"],
            kappa=payload["kappa"], seed=payload["seed"],
            prior=ArPrior(**payload["prior"]))
    if kind == "gmm":
        return GmmParams(means=np.array(payload["means"]),
                         variances=np.array(payload["variances"]),
                         weights=np.array(payload["weights"]))
    if kind == "naive-bayes":
        return NaiveBayesModel(
            attribute_probs=np.array(payload["attribute_probs"]),
            priors=np.array(payload["priors"]),
            seen=np.array(payload["seen"], dtype=bool),
            smoothing=payload["smoothing"])
    raise ValidationError(f"{path}: unknown model kind {kind!r}")
