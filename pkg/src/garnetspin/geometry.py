"""Six-site garnet geometry and magnetic-field projections.

The dopant substitutes into six crystallographically equivalent but
orientationally inequivalent sites of the cubic garnet cell.  Each site
carries an orthonormal local (x, y, z) frame fixed by its D2 point
symmetry; a laboratory field projects differently onto each frame.

Angles are degrees at every public interface and radians internally.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

SITE_IDS = (1, 2, 3, 4, 5, 6)

# Projection conventions for mapping a lab-frame field into a site frame:
#  "si-table"        -- literal dot products with the site axes (default).
#  "equal-projection"-- keep the x projection, split the remaining in-plane
#                       magnitude equally between y and z.  Reproduces the
#                       (0, 1/sqrt2, 1/sqrt2) projection quoted for a <111>
#                       field on sites 1, 3, 5 and is provided for
#                       cross-checking published single-direction numbers.
CONVENTIONS = ("si-table", "equal-projection")

_SQ2 = math.sqrt(2.0)

# Local axes per site, rows x/y/z, in the cubic crystal frame.  Axis signs
# are a fixed convention (z chosen pointing into the unit cell); flipping
# signs changes only signs of projections, never magnitudes.
_SITE_AXES = {
    1: ((1, -1, 0), (1, 1, 0), (0, 0, 1)),
    2: ((1, 1, 0), (-1, 1, 0), (0, 0, 1)),
    3: ((0, 1, -1), (0, 1, 1), (1, 0, 0)),
    4: ((0, 1, 1), (0, -1, 1), (1, 0, 0)),
    5: ((-1, 0, 1), (1, 0, 1), (0, 1, 0)),
    6: ((1, 0, 1), (1, 0, -1), (0, 1, 0)),
}


class GeometryError(ValueError):
    """Invalid geometric input (bad site id, zero field, ...)."""


@dataclass(frozen=True)
class SiteFrame:
    """Orthonormal local axes of one dopant site, in the cubic frame."""

    site_id: int
    x_axis: np.ndarray
    y_axis: np.ndarray
    z_axis: np.ndarray

    def matrix(self) -> np.ndarray:
        """Rows are the local x, y, z axes; maps cubic vectors to local."""
        return np.vstack([self.x_axis, self.y_axis, self.z_axis])


@dataclass(frozen=True)
class LabField:
    """Applied field in spherical coordinates relative to the cubic axes.

    theta is the polar angle from <001>, phi the azimuth from <100>,
    both in degrees.
    """

    magnitude: float
    theta: float
    phi: float

    def __post_init__(self):
        if self.magnitude < 0:
            raise GeometryError("field magnitude must be >= 0")
        if not 0.0 <= self.theta <= 180.0:
            raise GeometryError("theta must lie in [0, 180] degrees")
        if not -180.0 < self.phi <= 180.0:
            raise GeometryError("phi must lie in (-180, 180] degrees")


@dataclass(frozen=True)
class LocalField:
    """Field components (tesla) along one site's local axes."""

    b_x: float
    b_y: float
    b_z: float

    def as_array(self) -> np.ndarray:
        return np.array([self.b_x, self.b_y, self.b_z])

    def norm(self) -> float:
        return math.sqrt(self.b_x ** 2 + self.b_y ** 2 + self.b_z ** 2)


@dataclass(frozen=True)
class RotationScan:
    """Field rotation in the plane perpendicular to the optical axis.

    ``reference_axis`` fixes the zero of the scan angle: its normalized
    projection onto the rotation plane is the angle-0 field direction.
    ``angular_offset`` is a global misalignment correction added to every
    nominal angle.
    """

    optical_axis: tuple[float, float, float]
    field_magnitude: float
    angle_start: float
    angle_stop: float
    angle_step: float
    angular_offset: float = 0.0
    reference_axis: tuple[float, float, float] | None = None

    def __post_init__(self):
        if self.angle_step <= 0:
            raise GeometryError("angle_step must be positive")
        if np.linalg.norm(self.optical_axis) == 0:
            raise GeometryError("optical_axis must be nonzero")


def site_frame(site_id: int) -> SiteFrame:
    """Return the normalized local frame of ``site_id`` (1..6)."""
    if site_id not in _SITE_AXES:
        raise GeometryError(f"site_id must be in 1..6, got {site_id!r}")
    x, y, z = (np.asarray(a, dtype=float) for a in _SITE_AXES[site_id])
    x = x / np.linalg.norm(x)
    y = y / np.linalg.norm(y)
    z = z / np.linalg.norm(z)
    frame = SiteFrame(site_id, x, y, z)
    frame.x_axis.setflags(write=False)
    frame.y_axis.setflags(write=False)
    frame.z_axis.setflags(write=False)
    return frame


def lab_to_cartesian(f: LabField) -> np.ndarray:
    """Spherical lab field to a cartesian vector in the cubic frame."""
    th = math.radians(f.theta)
    ph = math.radians(f.phi)
    return f.magnitude * np.array(
        [math.sin(th) * math.cos(ph), math.sin(th) * math.sin(ph), math.cos(th)]
    )


def cartesian_to_angles(b: np.ndarray) -> tuple[float, float]:
    """Inverse of :func:`lab_to_cartesian` for a nonzero vector (degrees)."""
    r = np.linalg.norm(b)
    if r == 0:
        raise GeometryError("zero vector has no direction")
    theta = math.degrees(math.acos(np.clip(b[2] / r, -1.0, 1.0)))
    phi = math.degrees(math.atan2(b[1], b[0]))
    if phi <= -180.0:
        phi += 360.0
    return theta, phi


def project_onto_site(
    b: np.ndarray, frame: SiteFrame, convention: str = "si-table"
) -> LocalField:
    """Project a cubic-frame field vector onto one site's local axes.

    The "si-table" convention takes literal dot products.  The
    "equal-projection" convention keeps the x component and splits the
    remaining in-plane magnitude equally between y and z; the total norm
    is preserved by both.
    """
    b = np.asarray(b, dtype=float)
    if convention == "si-table":
        bx, by, bz = (float(axis @ b) for axis in (frame.x_axis, frame.y_axis, frame.z_axis))
    elif convention == "equal-projection":
        bx = float(frame.x_axis @ b)
        inplane = math.sqrt(max(float(b @ b) - bx * bx, 0.0))
        by = bz = inplane / _SQ2
    else:
        raise GeometryError(f"unknown projection convention {convention!r}")
    return LocalField(bx, by, bz)


def symmetry_classes(b: np.ndarray, tol: float = 1e-9) -> list[list[int]]:
    """Partition sites 1..6 by equal local |projection| triples.

    Sites whose (|b_x|, |b_y|, |b_z|) agree componentwise within ``tol``
    tesla see magnetically identical fields and share every splitting.
    """
    b = np.asarray(b, dtype=float)
    if np.linalg.norm(b) == 0:
        raise GeometryError("symmetry classes are undefined for a zero field")
    classes: list[tuple[np.ndarray, list[int]]] = []
    for sid in SITE_IDS:
        triple = np.abs(project_onto_site(b, site_frame(sid)).as_array())
        for key, members in classes:
            if np.all(np.abs(key - triple) <= tol):
                members.append(sid)
                break
        else:
            classes.append((triple, [sid]))
    return [members for _, members in classes]


def _scan_basis(scan: RotationScan) -> tuple[np.ndarray, np.ndarray]:
    """In-plane orthonormal basis (e1, e2); e1 is the angle-0 direction."""
    n = np.asarray(scan.optical_axis, dtype=float)
    n = n / np.linalg.norm(n)
    if scan.reference_axis is not None:
        ref = np.asarray(scan.reference_axis, dtype=float)
    else:
        ref = np.array([0.0, 0.0, 1.0])
        if abs(n @ ref) > 1.0 - 1e-9:
            ref = np.array([1.0, 0.0, 0.0])
    e1 = ref - (ref @ n) * n
    norm = np.linalg.norm(e1)
    if norm < 1e-12:
        raise GeometryError("reference_axis is parallel to the optical axis")
    e1 = e1 / norm
    e2 = np.cross(n, e1)
    return e1, e2


def field_at_angle(scan: RotationScan, angle_deg: float) -> np.ndarray:
    """Cubic-frame field vector at one nominal scan angle (offset applied)."""
    e1, e2 = _scan_basis(scan)
    a = math.radians(angle_deg + scan.angular_offset)
    return scan.field_magnitude * (math.cos(a) * e1 + math.sin(a) * e2)


def scan_fields(scan: RotationScan) -> list[tuple[float, np.ndarray]]:
    """Ordered (nominal angle, field vector) samples of a rotation scan."""
    n_steps = int(math.floor((scan.angle_stop - scan.angle_start) / scan.angle_step + 1e-9))
    angles = [scan.angle_start + i * scan.angle_step for i in range(n_steps + 1)]
    return [(a, field_at_angle(scan, a)) for a in angles]
