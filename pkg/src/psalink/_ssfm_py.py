"""Pure-numpy split-step loop with the same contract as the compiled kernel."""

from __future__ import annotations

import numpy as np
import scipy.fft


def run(samples: np.ndarray, half: np.ndarray, full: np.ndarray, gamma_h: float, n_steps: int) -> int:
    """Advance ``samples`` in place through ``n_steps`` symmetrized steps.

    The spectral multipliers are pre-divided by the transform length, as for
    the compiled kernel, so both transforms here are unnormalized.
    """
    n = samples.shape[0]
    if half.shape[0] != n or full.shape[0] != n:
        raise ValueError("multiplier length does not match samples")
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    spec = scipy.fft.ifft(samples, norm="forward")
    spec *= half
    for step in range(n_steps):
        a = scipy.fft.fft(spec, norm="backward", overwrite_x=True)
        p = a.real * a.real + a.imag * a.imag
        if not np.isfinite(p.sum()):
            return step
        a *= np.exp(1j * gamma_h * p)
        spec = scipy.fft.ifft(a, norm="forward", overwrite_x=True)
        spec *= half if step == n_steps - 1 else full
    samples[:] = scipy.fft.fft(spec, norm="backward", overwrite_x=True)
    return -1
