"""Scale-invariant signal-to-distortion ratio."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError

SI_SDR_CAP_DB = 100.0


@dataclass
class SiSdrResult:
    value: float
    alpha: float
    length: int
    truncated: bool = False


def si_sdr(estimate, reference) -> SiSdrResult:
    """SI-SDR in dB without mean removal, capped at 100 dB.

    alpha = <est, ref> / ||ref||^2 and the ratio is ||alpha ref||^2 over
    ||alpha ref - est||^2. Unequal lengths are truncated to the shorter one.
    """
    est = np.asarray(getattr(estimate, "samples", estimate), dtype=np.float64).reshape(-1)
    ref = np.asarray(getattr(reference, "samples", reference), dtype=np.float64).reshape(-1)
    n = min(len(est), len(ref))
    truncated = len(est) != len(ref)
    est, ref = est[:n], ref[:n]
    ref_energy = float(ref @ ref)
    if ref_energy == 0.0:
        raise DegenerateInputError("reference signal is silent; SI-SDR undefined")
    alpha = float(est @ ref) / ref_energy
    target = alpha * ref
    err = target - est
    num = float(target @ target)
    den = float(err @ err)
    if den == 0.0 or num / den >= 10.0 ** (SI_SDR_CAP_DB / 10.0):
        value = SI_SDR_CAP_DB
    elif num == 0.0:
        value = -SI_SDR_CAP_DB
    else:
        value = 10.0 * np.log10(num / den)
    return SiSdrResult(float(value), alpha, n, truncated)
