import numpy as np
import pytest

from garnetspin.fitting import (
    DIFFERENCE_SPLITTING,
    GROUND_SPLITTING,
    Resonance,
    predicted_splitting,
)
from garnetspin.geometry import RotationScan


def make_scan(**kw):
    base = dict(
        optical_axis=(1.0, -1.0, 0.0),
        field_magnitude=0.3,
        angle_start=0.0,
        angle_stop=180.0,
        angle_step=10.0,
    )
    base.update(kw)
    return RotationScan(**base)


def synth_resonances(
    ground,
    scan,
    angles,
    sites=range(1, 7),
    convention="si-table",
    noise=0.0,
    rng=None,
    excited=None,
):
    """Noiseless or multiplicative-noise resonance points from known tensors."""
    rng = rng or np.random.default_rng(0)
    kind = GROUND_SPLITTING if excited is None else DIFFERENCE_SPLITTING
    out = []
    for angle in angles:
        for sid in sites:
            freq = predicted_splitting(ground, scan, angle, sid, convention)
            if excited is not None:
                freq = abs(freq - predicted_splitting(excited, scan, angle, sid, convention))
            if noise > 0:
                freq *= 1.0 + rng.normal(0.0, noise)
            if freq <= 1e-9:
                continue
            out.append(Resonance(angle, freq, kind, sid))
    return out
