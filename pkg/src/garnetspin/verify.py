"""Self-check suite comparing computed values against reference numbers.

Each check returns a VerifyCheck with the measured value, the expected
value, the tolerance and a pass flag; the CLI renders one line per
check.  The clock-transition comparison is run under both projection
conventions and both splitting models so disagreements are surfaced
rather than hidden.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import constants
from .geometry import LabField, lab_to_cartesian, project_onto_site, site_frame
from .hamiltonian import (
    EffectiveGTensor,
    effective_g,
    EXCITED_CONSTANTS,
    EXCITED_TENSOR,
    GROUND_CONSTANTS,
    GROUND_TENSOR,
    hyperfine_splitting,
)
from .search import (
    BRANCHES,
    GridSpec,
    SiteModel,
    branching_map,
    find_clock_transitions,
)

# Independently reported clock-transition solutions used as the
# comparison target: (site, B tesla, theta deg, phi deg, m_g, m_e).
REFERENCE_CLOCK_ROWS = (
    (1, 0.019, 55.0, -15.0, -0.5, -0.5),
    (1, 0.019, 125.0, 166.0, 0.5, 0.5),
    (1, 0.036, 64.0, -150.0, 0.5, -0.5),
    (1, 0.036, 117.0, 31.0, -0.5, 0.5),
    (2, 0.019, 54.0, 76.0, -0.5, -0.5),
    (2, 0.019, 125.0, -105.0, 0.5, 0.5),
    (2, 0.036, 116.0, 120.0, -0.5, 0.5),
    (2, 0.036, 63.0, -60.0, 0.5, -0.5),
    (3, 0.019, 102.0, 54.0, -0.5, -0.5),
    (3, 0.019, 79.0, -127.0, 0.5, 0.5),
    (3, 0.036, 64.0, 120.0, 0.5, -0.5),
    (3, 0.036, 118.0, 60.0, -0.5, 0.5),
    (4, 0.019, 38.0, 20.0, -0.5, -0.5),
    (4, 0.019, 143.0, -160.0, 0.5, 0.5),
    (4, 0.036, 140.0, -45.0, -0.5, 0.5),
    (4, 0.036, 40.0, 135.0, 0.5, -0.5),
    (5, 0.019, 38.0, 110.0, -0.5, -0.5),
    (5, 0.019, 142.0, -70.0, 0.5, 0.5),
    (5, 0.036, 140.0, 45.0, -0.5, 0.5),
    (5, 0.019, 40.0, -135.0, 0.5, -0.5),
    (6, 0.019, 78.0, 37.0, -0.5, -0.5),
    (6, 0.019, 102.0, -144.0, 0.5, 0.5),
    (6, 0.036, 62.0, 30.0, -0.5, 0.5),
    (6, 0.036, 118.0, -150.0, 0.5, -0.5),
)

REFERENCE_CURVATURE_HZ_PER_G2 = 36.0


@dataclass(frozen=True)
class VerifyCheck:
    name: str
    measured: str
    expected: str
    tolerance: str
    passed: bool


def _equal_projection_111():
    b = lab_to_cartesian(LabField(1.0, math.degrees(math.acos(1 / math.sqrt(3))), 45.0))
    return project_onto_site(b, site_frame(1), "equal-projection")


def check_g_reconstruction() -> VerifyCheck:
    """Derived effective g values against the fitted reference values."""
    calc_g = effective_g(GROUND_CONSTANTS, GROUND_TENSOR).as_array()
    calc_e = effective_g(EXCITED_CONSTANTS, EXCITED_TENSOR).as_array()
    ref_g = np.array(constants.GROUND_G_MEASURED)
    ref_e = np.array(constants.EXCITED_G_MEASURED)
    tols = np.array([0.1, 3.0, 0.1]), np.array([0.1, 0.1, 0.1])
    ok = np.all(np.abs(calc_g - ref_g) <= tols[0]) and np.all(
        np.abs(calc_e - ref_e) <= tols[1]
    )
    return VerifyCheck(
        "effective-g reconstruction",
        f"g=({calc_g[0]:.2f},{calc_g[1]:.2f},{calc_g[2]:.2f}) "
        f"e=({calc_e[0]:.2f},{calc_e[1]:.2f},{calc_e[2]:.2f}) MHz/T",
        "g=(27,146,36) e=(7,92,16) MHz/T",
        "0.1 MHz/T (3.0 on ground y)",
        bool(ok),
    )


def check_linear_zeeman() -> VerifyCheck:
    """Splitting slopes for a <111> field, equal-projection convention."""
    local = _equal_projection_111()
    dg = hyperfine_splitting(EffectiveGTensor(*constants.GROUND_G_MEASURED), local)
    de = hyperfine_splitting(EffectiveGTensor(*constants.EXCITED_G_MEASURED), local)
    ok = abs(dg - 106.3) <= 0.5 and abs(de - 66.0) <= 0.5
    return VerifyCheck(
        "linear Zeeman at <111> (equal-projection)",
        f"ground {dg:.2f}, excited {de:.2f} MHz/T",
        "ground 106.3, excited 66.0 MHz/T",
        "0.5 MHz/T",
        ok,
    )


def check_linear_zeeman_si_table() -> VerifyCheck:
    """Same slopes under the literal axis-table convention (informational)."""
    b = lab_to_cartesian(LabField(1.0, math.degrees(math.acos(1 / math.sqrt(3))), 45.0))
    local = project_onto_site(b, site_frame(1), "si-table")
    dg = hyperfine_splitting(EffectiveGTensor(*constants.GROUND_G_MEASURED), local)
    de = hyperfine_splitting(EffectiveGTensor(*constants.EXCITED_G_MEASURED), local)
    return VerifyCheck(
        "linear Zeeman at <111> (si-table, informational)",
        f"ground {dg:.2f}, excited {de:.2f} MHz/T",
        "ground ~121 MHz/T (known convention discrepancy)",
        "n/a (always passes)",
        True,
    )


def check_quadratic_zeeman() -> VerifyCheck:
    """Transition quadratic coefficient for a <111> field, GHz/T^2."""
    local = _equal_projection_111()
    b2 = local.as_array() ** 2
    cg = GROUND_CONSTANTS.g_j ** 2 * constants.MU_B_MHZ_PER_T ** 2 * (
        GROUND_TENSOR.as_array() @ b2
    )
    ce = EXCITED_CONSTANTS.g_j ** 2 * constants.MU_B_MHZ_PER_T ** 2 * (
        EXCITED_TENSOR.as_array() @ b2
    )
    coeff_ghz = (cg - ce) / 1000.0
    ok = abs(coeff_ghz - 1.11) <= 0.03 and 0.84 <= coeff_ghz <= 1.34
    return VerifyCheck(
        "quadratic Zeeman at <111> (equal-projection)",
        f"{coeff_ghz:.3f} GHz/T^2",
        "1.11 GHz/T^2 (reference 1.09 +- 0.25)",
        "0.03 GHz/T^2 of 1.11",
        ok,
    )


def check_branching_maximum() -> VerifyCheck:
    model = SiteModel(1)
    m = branching_map(model, GridSpec(theta_step=1.0, phi_step=1.0))
    ext = m.extrema[0]
    ok = abs(ext["ratio"] - 0.05) <= 0.015 and ext["angle_to_local_x_deg"] <= 15.0
    return VerifyCheck(
        "branching-ratio maximum",
        f"{ext['ratio']:.4f} at {ext['angle_to_local_x_deg']:.1f} deg from local x",
        "0.05 within 15 deg of local x",
        "0.015 on ratio, 15 deg on direction",
        ok,
    )


def match_clock_rows(transitions, b_tol=1e-3, angle_tol=2.0):
    """Count reference rows matched by a computed transition list."""
    matched = 0
    details = []
    for site, b_ref, th_ref, ph_ref, m_g, m_e in REFERENCE_CLOCK_ROWS:
        u_ref = np.array(
            [
                math.sin(math.radians(th_ref)) * math.cos(math.radians(ph_ref)),
                math.sin(math.radians(th_ref)) * math.sin(math.radians(ph_ref)),
                math.cos(math.radians(th_ref)),
            ]
        )
        hit = None
        for ct in transitions:
            # inverting the field maps branch (m_g, m_e) to
            # (-m_g, -m_e) at the antipodal orientation, so accept
            # either labeling together with the |cos| angle comparison
            if ct.site != site or ct.branch not in ((m_g, m_e), (-m_g, -m_e)):
                continue
            u = np.array(
                [
                    math.sin(math.radians(ct.theta)) * math.cos(math.radians(ct.phi)),
                    math.sin(math.radians(ct.theta)) * math.sin(math.radians(ct.phi)),
                    math.cos(math.radians(ct.theta)),
                ]
            )
            # accept sign aliases: the field and its inverse give the
            # same physics, so compare |cos| of the separation
            ang = math.degrees(math.acos(min(abs(float(u @ u_ref)), 1.0)))
            if ang <= angle_tol and abs(ct.b_star - b_ref) <= b_tol:
                hit = ct
                break
        details.append((site, m_g, m_e, hit))
        if hit is not None:
            matched += 1
    return matched, details


def check_clock_table(convention: str, splitting_model: str, grid=None) -> VerifyCheck:
    grid = grid or GridSpec(b_max=0.06, theta_step=2.0, phi_step=2.0)
    transitions = []
    for sid in range(1, 7):
        model = SiteModel(sid, convention=convention, splitting_model=splitting_model)
        transitions.extend(find_clock_transitions(model, grid))
    matched, _ = match_clock_rows(transitions)
    ok = matched == len(REFERENCE_CLOCK_ROWS)
    return VerifyCheck(
        f"clock-transition table ({convention}, {splitting_model} splitting)",
        f"{matched}/24 reference rows matched, {len(transitions)} solutions found",
        "24/24 matched within 1 mT and 2 deg",
        "1 mT, 2 deg",
        ok,
    )


def run_all(include_clock: bool = True) -> list[VerifyCheck]:
    checks = [
        check_g_reconstruction(),
        check_linear_zeeman(),
        check_linear_zeeman_si_table(),
        check_quadratic_zeeman(),
        check_branching_maximum(),
    ]
    if include_clock:
        for convention in ("si-table", "equal-projection"):
            for model in ("sqrt", "linear"):
                checks.append(check_clock_table(convention, model))
    return checks
