"""Orientation-space searches: clock transitions, broadening, branching.

For a fixed field direction u the optical transition shift is exactly
quadratic in the field magnitude,

    dE(B) = sigma(u) B + q(u) B^2,

where sigma combines the two doublet splittings per tesla for the
chosen spin branch and q is the difference of the quadratic Zeeman
coefficients.  A clock transition is a field point where the magnitude
derivative and both angular derivatives vanish simultaneously; the grid
seeds candidates and local refinement polishes them.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np

from .geometry import cartesian_to_angles, lab_to_cartesian, LabField, site_frame
from .hamiltonian import LevelModel, default_models

SPLITTING_MODELS = ("sqrt", "linear")
BRANCHES = ((-0.5, -0.5), (0.5, 0.5), (0.5, -0.5), (-0.5, 0.5))

FIELD_DERIV_TOL = 1e-6     # MHz/T
ANGULAR_GRAD_TOL = 1e-3    # MHz/degree
HZ_PER_G2_PER_MHZ_PER_T2 = 0.01
_FD_ANGLE_DEG = 0.01
_CURV_STEP_T = 1e-4


class SearchError(ValueError):
    """Invalid search input."""


@dataclass(frozen=True)
class GridSpec:
    """Search mesh: field magnitudes and angular steps."""

    b_max: float = 0.1
    b_step: float = 1e-3
    theta_step: float = 1.0
    phi_step: float = 1.0

    def __post_init__(self):
        if self.b_step <= 0 or self.theta_step <= 0 or self.phi_step <= 0:
            raise SearchError("grid steps must be positive")
        if self.b_step > self.b_max:
            raise SearchError("b_step must not exceed b_max")


@dataclass(frozen=True)
class ClockTransition:
    """One converged zero-derivative field point."""

    site: int
    b_star: float
    theta: float
    phi: float
    branch: tuple[float, float]
    curvature: float
    gradient_norm: float


@dataclass(frozen=True)
class OrientationMap:
    """Value surface over a (theta, phi) grid with located extrema."""

    thetas: np.ndarray
    phis: np.ndarray
    values: np.ndarray
    extrema: tuple = ()

    def __post_init__(self):
        if self.values.shape != (len(self.thetas), len(self.phis)):
            raise SearchError("surface dimensions must match the grid")


def _unit_vectors(theta_deg, phi_deg):
    th = np.radians(theta_deg)
    ph = np.radians(phi_deg)
    st = np.sin(th)
    return np.stack([st * np.cos(ph), st * np.sin(ph), np.cos(th)], axis=-1)


class SiteModel:
    """Per-site evaluator of sigma(u), q(u) and the transition shift.

    ``splitting_model`` selects how the doublet splitting per tesla is
    formed from the local direction cosines: "sqrt" is the quadrature
    form sqrt(sum g_a^2 u_a^2) (the physical model), "linear" is the
    signed sum g_a u_a kept as a published-table compatibility
    diagnostic (see the verify report).
    """

    def __init__(
        self,
        site_id: int,
        ground: LevelModel | None = None,
        excited: LevelModel | None = None,
        convention: str = "si-table",
        splitting_model: str = "sqrt",
    ):
        if splitting_model not in SPLITTING_MODELS:
            raise SearchError(f"unknown splitting model {splitting_model!r}")
        if ground is None or excited is None:
            g_default, e_default = default_models()
            ground = ground or g_default
            excited = excited or e_default
        self.site_id = site_id
        self.ground = ground
        self.excited = excited
        self.convention = convention
        self.splitting_model = splitting_model
        self.frame = site_frame(site_id).matrix()
        self._gg = ground.g.as_array()
        self._ge = excited.g.as_array()
        gc, ec = ground.constants_, excited.constants_
        # transition quadratic coefficients per local axis, MHz/T^2
        self._dq = (
            gc.g_j ** 2 * ground.tensor.as_array() - ec.g_j ** 2 * excited.tensor.as_array()
        ) * gc.mu_b ** 2
        # plain-float copies for the scalar hot path used in refinement
        self._frame_rows = tuple(tuple(float(v) for v in row) for row in self.frame)
        self._gg2 = tuple(float(v) ** 2 for v in self._gg)
        self._ge2 = tuple(float(v) ** 2 for v in self._ge)
        self._ggf = tuple(float(v) for v in self._gg)
        self._gef = tuple(float(v) for v in self._ge)
        self._dqf = tuple(float(v) for v in self._dq)

    def local_components(self, u):
        """Signed local direction cosines under the active convention."""
        u = np.asarray(u, dtype=float)
        c = u @ self.frame.T
        if self.convention == "equal-projection":
            cx = c[..., 0]
            inplane = np.sqrt(np.clip(1.0 - cx ** 2, 0.0, None) / 2.0)
            c = np.stack([cx, inplane, inplane], axis=-1)
        return c

    def splittings_per_tesla(self, u):
        """(ground, excited) doublet splitting slopes, MHz/T."""
        c = self.local_components(u)
        if self.splitting_model == "sqrt":
            sg = np.sqrt((c ** 2) @ (self._gg ** 2))
            se = np.sqrt((c ** 2) @ (self._ge ** 2))
        else:
            sg = c @ self._gg
            se = c @ self._ge
        return sg, se

    def sigma(self, u, branch):
        m_g, m_e = branch
        sg, se = self.splittings_per_tesla(u)
        return m_g * sg - m_e * se

    def quad_coeff(self, u):
        c = self.local_components(u)
        return (c ** 2) @ self._dq

    def shift(self, b_mag, u, branch):
        """Optical transition shift dE(B, u), MHz."""
        return self.sigma(u, branch) * b_mag + self.quad_coeff(u) * b_mag ** 2

    def shift_db(self, b_mag, u, branch):
        """Analytic magnitude derivative d(dE)/dB, MHz/T."""
        return self.sigma(u, branch) + 2.0 * self.quad_coeff(u) * b_mag

    # -- scalar fast path (pure python floats, used by refinement) --

    def _scalar_sigma_q(self, ux, uy, uz, branch):
        r0, r1, r2 = self._frame_rows
        c0 = ux * r0[0] + uy * r0[1] + uz * r0[2]
        c1 = ux * r1[0] + uy * r1[1] + uz * r1[2]
        c2 = ux * r2[0] + uy * r2[1] + uz * r2[2]
        if self.convention == "equal-projection":
            inplane2 = max(1.0 - c0 * c0, 0.0) / 2.0
            c1 = c2 = math.sqrt(inplane2)
        p0, p1, p2 = c0 * c0, c1 * c1, c2 * c2
        if self.splitting_model == "sqrt":
            sg = math.sqrt(self._gg2[0] * p0 + self._gg2[1] * p1 + self._gg2[2] * p2)
            se = math.sqrt(self._ge2[0] * p0 + self._ge2[1] * p1 + self._ge2[2] * p2)
        else:
            sg = self._ggf[0] * c0 + self._ggf[1] * c1 + self._ggf[2] * c2
            se = self._gef[0] * c0 + self._gef[1] * c1 + self._gef[2] * c2
        m_g, m_e = branch
        sigma = m_g * sg - m_e * se
        q = self._dqf[0] * p0 + self._dqf[1] * p1 + self._dqf[2] * p2
        return sigma, q

    def _scalar_objective(self, theta, phi, branch, b_max, step_deg=_FD_ANGLE_DEG):
        """(angular gradient norm at the extremum field, that field).

        Returns (inf, nan) when the orientation has no positive-field
        magnitude extremum within b_max.
        """
        th, ph = math.radians(theta), math.radians(phi)
        st, ct = math.sin(th), math.cos(th)
        sp, cp = math.sin(ph), math.cos(ph)
        u = (st * cp, st * sp, ct)
        sigma, q = self._scalar_sigma_q(*u, branch)
        if q == 0:
            return math.inf, math.nan
        b = -sigma / (2.0 * q)
        if not (0.0 < b <= b_max) or not math.isfinite(b):
            return math.inf, math.nan
        if abs(st) > 1e-9:
            e_t = (ct * cp, ct * sp, -st)
            e_p = (-sp, cp, 0.0)
        else:
            e_t = (1.0, 0.0, 0.0)
            e_p = (0.0, ct, 0.0) if ct > 0 else (0.0, -ct, 0.0)
        h = math.radians(step_deg)
        ch, sh = math.cos(h), math.sin(h)
        comps = []
        for t in (e_t, e_p):
            total = 0.0
            for sign in (1.0, -1.0):
                v = (
                    ch * u[0] + sign * sh * t[0],
                    ch * u[1] + sign * sh * t[1],
                    ch * u[2] + sign * sh * t[2],
                )
                s2, q2 = self._scalar_sigma_q(*v, branch)
                total += sign * (s2 * b + q2 * b * b)
            comps.append(total / (2.0 * step_deg))
        return math.hypot(comps[0], comps[1]), b


def _tangent_basis(u):
    """Orthonormal tangent vectors (e_theta-like, e_phi-like) at u.

    Built from the polar axis away from the poles and from <100> at
    them, so angular derivatives are great-circle derivatives
    everywhere (MHz per degree of arc).
    """
    u = np.asarray(u, dtype=float)
    pole = np.zeros_like(u)
    pole[..., 2] = 1.0
    near_pole = np.abs(u[..., 2:3]) > 1.0 - 1e-9
    alt = np.zeros_like(u)
    alt[..., 0] = 1.0
    ref = np.where(near_pole, alt, pole)
    e_phi = np.cross(ref, u)
    e_phi = e_phi / np.linalg.norm(e_phi, axis=-1, keepdims=True)
    e_theta = np.cross(e_phi, u)
    return e_theta, e_phi


def _rotate_towards(u, t, angle_rad):
    return math.cos(angle_rad) * u + math.sin(angle_rad) * t


def _angular_gradient_components(model: SiteModel, b_mag, u, branch, step_deg=_FD_ANGLE_DEG):
    e_theta, e_phi = _tangent_basis(u)
    h = math.radians(step_deg)
    out = []
    for t in (e_theta, e_phi):
        up = _rotate_towards(u, t, h)
        um = _rotate_towards(u, t, -h)
        out.append((model.shift(b_mag, up, branch) - model.shift(b_mag, um, branch)) / (2.0 * step_deg))
    return out[0], out[1]


def angular_gradient(
    model: SiteModel, b_mag: float, theta: float, phi: float, branch, step_deg=_FD_ANGLE_DEG
) -> float:
    """Norm of the angular derivative of the shift, MHz/degree."""
    if b_mag <= 0:
        raise SearchError("field magnitude must be positive")
    u = _unit_vectors(theta, phi)
    ft, fp = _angular_gradient_components(model, b_mag, u, branch, step_deg)
    return float(np.hypot(ft, fp))


def field_extremum(
    model: SiteModel, theta: float, phi: float, branch, grid: GridSpec
) -> float | None:
    """Positive field magnitude where d(dE)/dB = 0, if any in (0, b_max].

    Coarse scan at ``b_step`` locates a sign change of the analytic
    derivative, then bisection tightens it below 1e-6 MHz/T.
    """
    u = _unit_vectors(theta, phi)
    n = int(math.floor(grid.b_max / grid.b_step + 1e-9))
    bs = grid.b_step * np.arange(0, n + 1)
    d = model.shift_db(bs, u, branch)
    sign_change = np.nonzero(np.sign(d[:-1]) * np.sign(d[1:]) < 0)[0]
    exact = np.nonzero(np.abs(d) < FIELD_DERIV_TOL)[0]
    if len(sign_change) == 0:
        if len(exact) and bs[exact[0]] > 0:
            return float(bs[exact[0]])
        return None
    lo, hi = bs[sign_change[0]], bs[sign_change[0] + 1]
    dlo = model.shift_db(lo, u, branch)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        dm = model.shift_db(mid, u, branch)
        if abs(dm) < FIELD_DERIV_TOL:
            return float(mid)
        if np.sign(dm) == np.sign(dlo):
            lo, dlo = mid, dm
        else:
            hi = mid
    return float(0.5 * (lo + hi))


def curvature(model: SiteModel, ct_b: float, theta: float, phi: float, branch) -> float:
    """Second magnitude derivative at a solution, Hz/G^2 (central FD)."""
    u = _unit_vectors(theta, phi)
    h = _CURV_STEP_T
    d2 = (
        model.shift(ct_b + h, u, branch)
        - 2.0 * model.shift(ct_b, u, branch)
        + model.shift(ct_b - h, u, branch)
    ) / h ** 2
    return float(d2) * HZ_PER_G2_PER_MHZ_PER_T2


def _b_star_grid(model: SiteModel, u, branch, grid: GridSpec):
    """Vectorized closed-form extremum field (quadratic model)."""
    sigma = model.sigma(u, branch)
    q = model.quad_coeff(u)
    with np.errstate(divide="ignore", invalid="ignore"):
        b = -sigma / (2.0 * q)
    b = np.where((b > 0) & (b <= grid.b_max) & np.isfinite(b), b, np.nan)
    return b


def _grad_norm_grid(model: SiteModel, b, u, branch):
    e_theta, e_phi = _tangent_basis(u)
    h = math.radians(_FD_ANGLE_DEG)
    bt = b[..., None] if b.ndim < u.ndim else b
    comps = []
    for t in (e_theta, e_phi):
        up = np.cos(h) * u + np.sin(h) * t
        um = np.cos(h) * u - np.sin(h) * t
        comps.append(
            (model.shift(b, up, branch) - model.shift(b, um, branch)) / (2.0 * _FD_ANGLE_DEG)
        )
    return np.hypot(comps[0], comps[1])


def _golden_min(fn, lo, hi, tol):
    g = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - g * (b - a)
    d = a + g * (b - a)
    fc, fd = fn(c), fn(d)
    while (b - a) > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = fn(d)
    return 0.5 * (a + b)


def _refine(model: SiteModel, theta, phi, branch, grid: GridSpec):
    """Cyclic coordinate descent on the angular gradient norm.

    The magnitude coordinate is eliminated analytically: at each
    orientation the candidate field is the quadratic-model extremum, so
    only (theta, phi) are searched.
    """

    def objective(th, ph):
        return model._scalar_objective(th, ph, branch, grid.b_max)

    span = max(grid.theta_step, grid.phi_step)
    for _ in range(20):
        theta = _golden_min(lambda t: objective(t, phi)[0], theta - span, theta + span, 1e-5)
        phi = _golden_min(lambda p: objective(theta, p)[0], phi - span, phi + span, 1e-5)
        span *= 0.5
        if span < 1e-4:
            break
    norm, b = objective(theta, phi)
    return theta, phi, b, norm


def _canonical_angles(theta, phi):
    theta = theta % 360.0
    if theta > 180.0:
        theta = 360.0 - theta
        phi += 180.0
    phi = (phi + 180.0) % 360.0 - 180.0
    if phi <= -180.0:
        phi += 360.0
    return theta, phi


def find_clock_transitions(
    model: SiteModel,
    grid: GridSpec | None = None,
    branches=BRANCHES,
    seed_gradient: float = 1.0,
) -> list[ClockTransition]:
    """All zero-derivative field points of one site, one per branch cluster.

    Every grid orientation with a positive-field magnitude extremum is a
    seed; local minima of the angular gradient norm below
    ``seed_gradient`` MHz/degree are refined, and refined points are
    accepted when both derivative thresholds hold.  Duplicates within
    2 degrees and 2 mT collapse to the lowest-gradient representative.
    """
    grid = grid or GridSpec()
    thetas = np.arange(0.0, 180.0 + 1e-9, grid.theta_step)
    phis = np.arange(-180.0 + grid.phi_step, 180.0 + 1e-9, grid.phi_step)
    tg, pg = np.meshgrid(thetas, phis, indexing="ij")
    u = _unit_vectors(tg, pg)
    results: list[ClockTransition] = []
    for branch in branches:
        b = _b_star_grid(model, u, branch, grid)
        norm = np.where(np.isfinite(b), _grad_norm_grid(model, b, u, branch), np.inf)
        seeds = _local_minima(norm, seed_gradient)
        for i, j in seeds:
            th, ph, b_ref, g_ref = _refine(model, tg[i, j], pg[i, j], branch, grid)
            if not np.isfinite(b_ref) or b_ref <= 0 or b_ref > grid.b_max:
                continue
            th, ph = _canonical_angles(th, ph)
            db = abs(model.shift_db(b_ref, _unit_vectors(th, ph), branch))
            if db >= FIELD_DERIV_TOL or g_ref >= ANGULAR_GRAD_TOL:
                continue
            curv = curvature(model, b_ref, th, ph, branch)
            results.append(
                ClockTransition(model.site_id, float(b_ref), th, ph, branch, curv, g_ref)
            )
    return _deduplicate(results)


def _local_minima(norm, threshold):
    """Indices of 8-neighborhood local minima (phi wraps) below threshold."""
    padded = np.pad(norm, ((1, 1), (0, 0)), constant_values=np.inf)
    padded = np.concatenate([padded[:, -1:], padded, padded[:, :1]], axis=1)
    center = padded[1:-1, 1:-1]
    is_min = center <= threshold
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di == 0 and dj == 0:
                continue
            neighbor = padded[1 + di : padded.shape[0] - 1 + di, 1 + dj : padded.shape[1] - 1 + dj]
            is_min &= center <= neighbor
    return list(zip(*np.nonzero(is_min)))


def _deduplicate(results, angle_tol=2.0, b_tol=2e-3):
    kept: list[ClockTransition] = []
    for ct in sorted(results, key=lambda c: c.gradient_norm):
        u = _unit_vectors(ct.theta, ct.phi)
        dup = False
        for other in kept:
            if other.branch != ct.branch:
                continue
            v = _unit_vectors(other.theta, other.phi)
            ang = math.degrees(math.acos(float(np.clip(u @ v, -1.0, 1.0))))
            if ang <= angle_tol and abs(ct.b_star - other.b_star) <= b_tol:
                dup = True
                break
        if not dup:
            kept.append(ct)
    return sorted(kept, key=lambda c: (c.branch, c.theta, c.phi))


def max_workers() -> int:
    """Worker cap for grid parallelism, honoring GARNETSPIN_THREADS."""
    env = os.environ.get("GARNETSPIN_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def all_clock_transitions(
    sites=range(1, 7),
    grid: GridSpec | None = None,
    ground: LevelModel | None = None,
    excited: LevelModel | None = None,
    convention: str = "si-table",
    splitting_model: str = "sqrt",
) -> list[ClockTransition]:
    """Clock transitions for several sites, deterministically ordered."""
    out: list[ClockTransition] = []
    for sid in sites:
        model = SiteModel(sid, ground, excited, convention, splitting_model)
        out.extend(find_clock_transitions(model, grid))
    return sorted(out, key=lambda c: (c.site, c.branch, c.theta, c.phi))


def broadening_map(
    model: SiteModel, b_mag: float, grid: GridSpec | None = None, grad_tol: float = 1e-3
) -> OrientationMap:
    """Ground-splitting surface over orientation with classified extrema.

    Extrema are grid-local stationary points (angular gradient of the
    splitting below ``grad_tol`` MHz/degree after refinement would be
    ideal; here the grid minimum of the finite-difference norm is
    reported), classified max/min/saddle by the 2x2 angular Hessian.
    """
    if b_mag <= 0:
        raise SearchError("field magnitude must be positive")
    grid = grid or GridSpec()
    thetas = np.arange(0.0, 180.0 + 1e-9, grid.theta_step)
    phis = np.arange(-180.0 + grid.phi_step, 180.0 + 1e-9, grid.phi_step)
    tg, pg = np.meshgrid(thetas, phis, indexing="ij")
    u = _unit_vectors(tg, pg)
    sg, _ = model.splittings_per_tesla(u)
    values = sg * b_mag

    e_theta, e_phi = _tangent_basis(u)
    h = math.radians(_FD_ANGLE_DEG)

    def split_at(vec):
        s, _ = model.splittings_per_tesla(vec)
        return s * b_mag

    ft = (split_at(np.cos(h) * u + np.sin(h) * e_theta) - split_at(np.cos(h) * u - np.sin(h) * e_theta)) / (2 * _FD_ANGLE_DEG)
    fp = (split_at(np.cos(h) * u + np.sin(h) * e_phi) - split_at(np.cos(h) * u - np.sin(h) * e_phi)) / (2 * _FD_ANGLE_DEG)
    norm = np.hypot(ft, fp)
    extrema = []
    for i, j in _local_minima(norm, grad_tol * 100):
        kind = _classify_extremum(split_at, u[i, j], e_theta[i, j], e_phi[i, j])
        extrema.append(
            {
                "theta_deg": float(tg[i, j]),
                "phi_deg": float(pg[i, j]),
                "splitting_MHz": float(values[i, j]),
                "gradient_MHz_per_deg": float(norm[i, j]),
                "kind": kind,
            }
        )
    return OrientationMap(thetas, phis, values, tuple(extrema))


def _classify_extremum(fn, u, et, ep, step_deg=0.1):
    h = math.radians(step_deg)
    f0 = fn(u)
    out = []
    for t in (et, ep):
        fpp = fn(np.cos(h) * u + np.sin(h) * t)
        fmm = fn(np.cos(h) * u - np.sin(h) * t)
        out.append((fpp - 2 * f0 + fmm) / step_deg ** 2)
    htt, hpp = out
    if htt > 0 and hpp > 0:
        return "min"
    if htt < 0 and hpp < 0:
        return "max"
    return "saddle"


def branching_ratio(model: SiteModel, u) -> np.ndarray:
    """R = tan^2(psi/2) between the two g-scaled effective field vectors."""
    c = model.local_components(u)
    vg = c * model._gg
    ve = c * model._ge
    ng = np.linalg.norm(vg, axis=-1)
    ne = np.linalg.norm(ve, axis=-1)
    if np.any(ng == 0) or np.any(ne == 0):
        raise SearchError("zero effective field vector: branching undefined")
    cospsi = np.clip(np.sum(vg * ve, axis=-1) / (ng * ne), -1.0, 1.0)
    psi = np.arccos(cospsi)
    return np.tan(psi / 2.0) ** 2


def branching_map(model: SiteModel, grid: GridSpec | None = None) -> OrientationMap:
    """Branching-ratio surface with the global maximum as sole extremum."""
    grid = grid or GridSpec()
    thetas = np.arange(0.0, 180.0 + 1e-9, grid.theta_step)
    phis = np.arange(-180.0 + grid.phi_step, 180.0 + 1e-9, grid.phi_step)
    tg, pg = np.meshgrid(thetas, phis, indexing="ij")
    u = _unit_vectors(tg, pg)
    values = branching_ratio(model, u)
    i, j = np.unravel_index(np.argmax(values), values.shape)
    x_axis = site_frame(model.site_id).x_axis
    udir = u[i, j]
    angle_to_x = math.degrees(
        math.acos(min(abs(float(udir @ x_axis)), 1.0))
    )
    extremum = {
        "theta_deg": float(tg[i, j]),
        "phi_deg": float(pg[i, j]),
        "ratio": float(values[i, j]),
        "angle_to_local_x_deg": angle_to_x,
        "kind": "max",
    }
    return OrientationMap(thetas, phis, values, (extremum,))
