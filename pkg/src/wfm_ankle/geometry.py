"""Two-point attachment geometry of the virtual ankle muscles.

Each virtual muscle runs straight from an origin on the shank to an
insertion on the foot.  With the included angle between the two segments
written phi(theta) = phi_neutral + sign * theta, the path length follows the
law of cosines and the moment arm is its derivative magnitude |dL/dtheta|.

Sign conventions (used everywhere in this package):
  * theta is the ankle angle, dorsiflexion-positive, radians;
  * dorsiflexion shortens the anterior muscle (sign = -1) and lengthens the
    posterior one (sign = +1);
  * net ankle torque is dorsiflexion-positive, so the anterior muscle
    contributes + and the posterior muscle -.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

SIDE_SIGN = {"anterior": -1.0, "posterior": 1.0}

DEFAULT_ATTACHMENTS = {
    # side: (r_origin m, r_insertion m, phi_neutral rad)
    "anterior": (0.30, 0.10, math.radians(80.0)),
    "posterior": (0.35, 0.05, math.radians(100.0)),
}


class GeometryRangeError(ValueError):
    """Included angle left the open interval (0, pi)."""


@dataclass(frozen=True)
class AttachmentGeometry:
    r_origin: float      # attachment distance from the joint along the shank, m
    r_insertion: float   # attachment distance from the joint along the foot, m
    phi_neutral: float   # included angle at theta = 0, rad
    side: str            # "anterior" or "posterior"

    def __post_init__(self) -> None:
        if self.side not in SIDE_SIGN:
            raise ValueError(f"side must be 'anterior' or 'posterior', got {self.side!r}")
        if not self.r_origin > 0:
            raise ValueError("r_origin must be > 0")
        if not self.r_insertion > 0:
            raise ValueError("r_insertion must be > 0")
        if not 0 < self.phi_neutral < math.pi:
            raise ValueError("phi_neutral must lie in (0, pi)")

    @property
    def sign(self) -> float:
        return SIDE_SIGN[self.side]


@dataclass(frozen=True)
class JointSample:
    """One ankle configuration: angle plus its gait-cycle phase."""

    theta: float  # rad, dorsiflexion-positive
    phase: float  # gait-cycle fraction in [0, 1]

    def __post_init__(self) -> None:
        if not 0 <= self.phase <= 1:
            raise ValueError("phase must lie in [0, 1]")


def included_angle(theta, g: AttachmentGeometry):
    """phi(theta) = phi_neutral + sign * theta, validated to (0, pi)."""
    phi = g.phi_neutral + g.sign * theta
    if not bool(np.all((np.asarray(phi) > 0) & (np.asarray(phi) < math.pi))):
        raise GeometryRangeError(
            f"included angle out of (0, pi) for side {g.side!r}; "
            "ankle angle outside the geometry's valid range")
    return phi


def muscle_length(theta, g: AttachmentGeometry):
    """Straight-line origin-to-insertion length at ankle angle theta, m."""
    phi = included_angle(theta, g)
    return np.sqrt(g.r_origin ** 2 + g.r_insertion ** 2
                   - 2.0 * g.r_origin * g.r_insertion * np.cos(phi))


def moment_arm(theta, g: AttachmentGeometry):
    """|dL/dtheta| at ankle angle theta, m; always reported positive."""
    phi = included_angle(theta, g)
    return g.r_origin * g.r_insertion * np.sin(phi) / muscle_length(theta, g)


def ankle_torque(f_anterior, f_posterior, theta,
                 g_anterior: AttachmentGeometry, g_posterior: AttachmentGeometry):
    """Net dorsiflexion-positive ankle torque from the two muscle tensions, N*m."""
    if g_anterior.side != "anterior" or g_posterior.side != "posterior":
        raise ValueError("geometry pair must be (anterior, posterior)")
    if not bool(np.all(np.asarray(f_anterior) >= 0)):
        raise ValueError("f_anterior must be >= 0")
    if not bool(np.all(np.asarray(f_posterior) >= 0)):
        raise ValueError("f_posterior must be >= 0")
    return (moment_arm(theta, g_anterior) * f_anterior
            - moment_arm(theta, g_posterior) * f_posterior)


def default_geometry(side: str) -> AttachmentGeometry:
    """Shank-scale default attachment for one side."""
    if side not in DEFAULT_ATTACHMENTS:
        raise ValueError(f"side must be 'anterior' or 'posterior', got {side!r}")
    r_o, r_i, phi = DEFAULT_ATTACHMENTS[side]
    return AttachmentGeometry(r_origin=r_o, r_insertion=r_i, phi_neutral=phi, side=side)
