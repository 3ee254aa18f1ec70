"""Periodic activation curves parameterized by gait-cycle phase.

A curve is a list of (phase, amplitude) nodes interpolated piecewise-linearly
and wrapped modulo one cycle.  Exactly one node, ``peak_index``, is exposed
to the optimizer; everything else is a fixed template describing when in the
cycle the muscle fires.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ActivationCurve:
    phases: tuple[float, ...]      # strictly increasing, first 0, last 1
    amplitudes: tuple[float, ...]  # in [0, 1]; first equals last (periodic)
    peak_index: int                # the single optimizable node

    def __post_init__(self) -> None:
        ph, am = self.phases, self.amplitudes
        if len(ph) != len(am):
            raise ValueError("phases and amplitudes must have equal length")
        if len(ph) < 2:
            raise ValueError("a curve needs at least two nodes")
        if ph[0] != 0.0 or ph[-1] != 1.0:
            raise ValueError("node phases must start at 0 and end at 1")
        if any(b <= a for a, b in zip(ph, ph[1:])):
            raise ValueError("node phases must be strictly increasing")
        if any(not 0 <= v <= 1 for v in am):
            raise ValueError("amplitudes must lie in [0, 1]")
        if am[0] != am[-1]:
            raise ValueError("first and last amplitudes must match (periodicity)")
        if not 0 <= self.peak_index < len(ph):
            raise ValueError("peak_index out of range")


def evaluate_activation(curve: ActivationCurve, phase):
    """Activation at a gait phase (wrapped modulo 1), clamped to [0, 1]."""
    wrapped = np.mod(phase, 1.0)
    value = np.interp(wrapped, curve.phases, curve.amplitudes)
    value = np.clip(value, 0.0, 1.0)
    return float(value) if np.isscalar(phase) else value


def single_node_curve(template: ActivationCurve, amplitude: float) -> ActivationCurve:
    """Copy of the template with the optimizable node set to ``amplitude``.

    If the peak node is an endpoint, both endpoints are set so the curve
    stays periodic.
    """
    if not 0 <= amplitude <= 1:
        raise ValueError("amplitude must lie in [0, 1]")
    amps = list(template.amplitudes)
    amps[template.peak_index] = amplitude
    if template.peak_index in (0, len(amps) - 1):
        amps[0] = amps[-1] = amplitude
    return ActivationCurve(phases=template.phases, amplitudes=tuple(amps),
                           peak_index=template.peak_index)


def default_anterior_template(peak_amplitude: float = 0.05) -> ActivationCurve:
    """Swing-phase dorsiflexor burst peaking at 65% of the cycle."""
    return ActivationCurve(phases=(0.0, 0.55, 0.65, 0.75, 1.0),
                           amplitudes=(0.0, 0.0, peak_amplitude, 0.0, 0.0),
                           peak_index=2)


def default_posterior_template(peak_amplitude: float = 0.10) -> ActivationCurve:
    """Push-off plantarflexor burst peaking at 45% of the cycle."""
    return ActivationCurve(phases=(0.0, 0.30, 0.45, 0.60, 1.0),
                           amplitudes=(0.0, 0.0, peak_amplitude, 0.0, 0.0),
                           peak_index=2)
