"""Gait-trial ingestion, resampling, and the RMSE metric.

Trial file format (CSV with comment headers)::

    # subject_id = S1
    # sex = F
    # body_mass_kg = 61.0
    # walking_speed_mps = 1.25
    # cycle_duration_s = 1.08
    # torque_unit = N*m
    phase,theta_rad,tau_ref
    0.0,0.0412,-3.91
    ...

``phase`` runs from 0 to 1 over one gait cycle (heel-strike to heel-strike).
A ``time_s`` column may replace ``phase``; it must span exactly one
``cycle_duration_s`` and is converted on load.  ``theta_rad`` is the ankle
angle, dorsiflexion-positive.  ``tau_ref`` is the reference inverse-dynamics
torque in whatever unit the exporter used; the unit string is carried along
verbatim and never rescaled.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Mapping

import numpy as np

REQUIRED_META = ("subject_id", "sex", "body_mass_kg", "walking_speed_mps",
                 "cycle_duration_s", "torque_unit")
MIN_SAMPLES = 11
_ENDPOINT_TOL = 1e-9


class TrialParseError(ValueError):
    """A trial file violated the schema; the message names line and field."""


@dataclass(frozen=True)
class GaitTrial:
    """One subject's cycle-normalized ankle angle and reference torque."""

    subject_id: str
    sex: str                 # "F" or "M"
    body_mass: float         # kg
    walking_speed: float     # m/s (metadata only)
    cycle_duration: float    # s
    phase: np.ndarray        # strictly increasing, 0 ... 1
    theta: np.ndarray        # rad, dorsiflexion-positive
    tau_ref: np.ndarray      # reference torque, unit as supplied
    torque_unit: str = "unspecified"

    def __post_init__(self) -> None:
        object.__setattr__(self, "phase", np.asarray(self.phase, dtype=float))
        object.__setattr__(self, "theta", np.asarray(self.theta, dtype=float))
        object.__setattr__(self, "tau_ref", np.asarray(self.tau_ref, dtype=float))
        for name in ("body_mass", "walking_speed", "cycle_duration"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if self.sex not in ("F", "M"):
            raise ValueError(f"sex must be 'F' or 'M', got {self.sex!r}")
        if not self.body_mass > 0:
            raise ValueError("body_mass must be > 0")
        if not self.cycle_duration > 0:
            raise ValueError("cycle_duration must be > 0")
        n = len(self.phase)
        if len(self.theta) != n or len(self.tau_ref) != n:
            raise ValueError("phase, theta, and tau_ref must have equal length")
        if n < MIN_SAMPLES:
            raise ValueError(f"at least {MIN_SAMPLES} samples required, got {n}")
        if self.phase[0] != 0.0 or self.phase[-1] != 1.0:
            raise ValueError("phase must start at 0 and end at 1")
        if np.any(np.diff(self.phase) <= 0):
            raise ValueError("phase must be strictly increasing")
        for name in ("phase", "theta", "tau_ref"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise ValueError(f"{name} contains NaN or inf")

    @property
    def n_samples(self) -> int:
        return len(self.phase)


@dataclass(frozen=True)
class SubjectSplit:
    """Disjoint train/test partition of trials."""

    train: tuple[GaitTrial, ...]
    test: tuple[GaitTrial, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "train", tuple(self.train))
        object.__setattr__(self, "test", tuple(self.test))
        train_ids = {t.subject_id for t in self.train}
        test_ids = {t.subject_id for t in self.test}
        overlap = train_ids & test_ids
        if overlap:
            raise ValueError(f"subjects appear in both splits: {sorted(overlap)}")


def _read_lines(source) -> list[str]:
    if isinstance(source, (str, Path)):
        text = Path(source).read_text(encoding="utf-8")
    elif isinstance(source, bytes):
        text = source.decode("utf-8")
    else:
        data = source.read()
        text = data.decode("utf-8") if isinstance(data, bytes) else data
    return text.splitlines()


def load_trial(source, meta: Mapping[str, str] | None = None) -> GaitTrial:
    """Parse and validate one trial file.

    ``source`` may be a path, bytes, or an open file.  ``meta`` supplies or
    overrides header keys (same names as in the file).
    """
    lines = _read_lines(source)
    headers: dict[str, str] = {}
    columns: list[str] | None = None
    rows: list[list[float]] = []

    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line.lstrip("#").strip()
            if "=" not in body:
                raise TrialParseError(f"line {lineno}: header comment without '=': {line!r}")
            key, _, value = body.partition("=")
            headers[key.strip()] = value.strip()
            continue
        if columns is None:
            columns = [c.strip() for c in line.split(",")]
            continue
        fields = line.split(",")
        if len(fields) != len(columns):
            raise TrialParseError(
                f"line {lineno}: expected {len(columns)} fields, got {len(fields)}")
        parsed = []
        for col, field in zip(columns, fields):
            try:
                value = float(field)
            except ValueError:
                raise TrialParseError(
                    f"line {lineno}: invalid number in column '{col}': {field.strip()!r}") from None
            if not np.isfinite(value):
                raise TrialParseError(f"line {lineno}: non-finite value in column '{col}'")
            parsed.append(value)
        rows.append(parsed)

    if columns is None:
        raise TrialParseError("empty file: no column header found")
    if not rows:
        raise TrialParseError("empty file: no data rows")
    if meta:
        headers.update({k: str(v) for k, v in meta.items()})
    for key in REQUIRED_META:
        if key not in headers:
            raise TrialParseError(f"missing metadata key '{key}'")

    try:
        body_mass = float(headers["body_mass_kg"])
        walking_speed = float(headers["walking_speed_mps"])
        cycle_duration = float(headers["cycle_duration_s"])
    except ValueError as exc:
        raise TrialParseError(f"invalid numeric metadata: {exc}") from None

    data = {col: np.array([r[i] for r in rows]) for i, col in enumerate(columns)}
    for col in ("theta_rad", "tau_ref"):
        if col not in data:
            raise TrialParseError(f"missing column '{col}'")
    if "phase" in data:
        phase = data["phase"]
    elif "time_s" in data:
        if cycle_duration <= 0:
            raise TrialParseError("cycle_duration_s must be > 0 to convert time_s")
        phase = data["time_s"] / cycle_duration
    else:
        raise TrialParseError("missing column 'phase' (or 'time_s')")

    if abs(phase[0]) > _ENDPOINT_TOL or abs(phase[-1] - 1.0) > _ENDPOINT_TOL:
        raise TrialParseError(
            f"phase must span 0..1 (got {phase[0]!r} .. {phase[-1]!r}); "
            "a time_s column must cover exactly one cycle_duration_s")
    phase = phase.copy()
    phase[0], phase[-1] = 0.0, 1.0
    if np.any(np.diff(phase) <= 0):
        bad = int(np.argmax(np.diff(phase) <= 0))
        raise TrialParseError(f"non-monotone phase near sample {bad + 1}")

    try:
        return GaitTrial(subject_id=headers["subject_id"], sex=headers["sex"],
                         body_mass=body_mass, walking_speed=walking_speed,
                         cycle_duration=cycle_duration, phase=phase,
                         theta=data["theta_rad"], tau_ref=data["tau_ref"],
                         torque_unit=headers["torque_unit"])
    except ValueError as exc:
        raise TrialParseError(str(exc)) from None


def save_trial(trial: GaitTrial, dest) -> None:
    """Write a trial in the load_trial format (floats at full precision)."""
    out = io.StringIO()
    out.write(f"# subject_id = {trial.subject_id}\n")
    out.write(f"# sex = {trial.sex}\n")
    out.write(f"# body_mass_kg = {trial.body_mass!r}\n")
    out.write(f"# walking_speed_mps = {trial.walking_speed!r}\n")
    out.write(f"# cycle_duration_s = {trial.cycle_duration!r}\n")
    out.write(f"# torque_unit = {trial.torque_unit}\n")
    out.write("phase,theta_rad,tau_ref\n")
    for p, th, tau in zip(trial.phase, trial.theta, trial.tau_ref):
        out.write(f"{float(p)!r},{float(th)!r},{float(tau)!r}\n")
    text = out.getvalue()
    if isinstance(dest, (str, Path)):
        Path(dest).write_text(text, encoding="utf-8")
    else:
        dest.write(text)


def resample_trial(trial: GaitTrial, n: int) -> GaitTrial:
    """Linearly resample onto n uniform phases 0..1 inclusive."""
    if n < 2:
        raise ValueError("n must be >= 2")
    grid = np.linspace(0.0, 1.0, n)
    return replace(trial,
                   phase=grid,
                   theta=np.interp(grid, trial.phase, trial.theta),
                   tau_ref=np.interp(grid, trial.phase, trial.tau_ref))


def rmse(pred, ref) -> float:
    """Root mean square error between two equal-length traces."""
    pred = np.asarray(pred, dtype=float)
    ref = np.asarray(ref, dtype=float)
    if pred.shape != ref.shape:
        raise ValueError(f"length mismatch: {pred.shape} vs {ref.shape}")
    if pred.size == 0:
        raise ValueError("traces must be non-empty")
    diff = pred - ref
    return float(np.sqrt(np.mean(diff * diff)))
