"""Two-channel periodic nonuniform sampling (PNS) of bandpass signals.

A real signal with spectrum confined to ``(omega_l, omega_u)`` and its
mirror can be sampled by two uniform streams of period ``T = 2*pi/B``
(``B`` the bandwidth) offset by a shift ``d`` and reconstructed exactly,
provided ``d*K0/T`` and ``d*(K0+1)/T`` are not integers, where
``K0 = ceil(2*omega_l/B)``.  The interpolant ``g_bp`` below is
Kohlenberg's second-order sampling kernel: its spectrum is piecewise
constant on the two sub-segments of the band that alias onto the mirror
band under shifts of ``K0*B`` and ``(K0+1)*B`` respectively, which is
what makes the alias contributions of the two sample streams cancel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .signals import BandSpec, TWO_PI

__all__ = [
    "PnsGrid",
    "PnsSamples",
    "DegenerateShiftError",
    "shift_is_degenerate",
    "sample_pns",
    "kernel_gbp",
    "reconstruct_pns",
]

DEGENERACY_TOL = 1e-9


class DegenerateShiftError(ValueError):
    """The channel shift makes the interpolation kernel singular."""


def shift_is_degenerate(shift: float, period: float, k0: int, tol: float = DEGENERACY_TOL) -> bool:
    """True when ``shift*k0/period`` or ``shift*(k0+1)/period`` is an integer.

    At those shifts one of the kernel's ``sin`` denominators vanishes and
    the two sample streams no longer separate the spectral aliases.
    """
    for k in (k0, k0 + 1):
        frac = shift * k / period
        if abs(frac - round(frac)) <= tol:
            return True
    return False


@dataclass(frozen=True)
class PnsGrid:
    """Sampling geometry: channel A at ``k*period``, channel B at ``k*period + shift``."""

    period: float
    shift: float
    window: tuple
    band: BandSpec

    def __post_init__(self):
        object.__setattr__(self, "window", (float(self.window[0]), float(self.window[1])))
        if not (0.0 < self.shift < self.period):
            raise ValueError(f"shift must lie in (0, period), got {self.shift}")
        nominal = self.band.period
        if abs(self.period - nominal) > 1e-12 * nominal:
            raise ValueError(
                f"period {self.period} does not match 2*pi/bandwidth = {nominal}"
            )
        if shift_is_degenerate(self.shift, self.period, self.band.k0):
            raise DegenerateShiftError(
                f"shift {self.shift} is degenerate for k0={self.band.k0}: "
                f"shift*k/period hits an integer for k in (k0, k0+1)"
            )


@dataclass(frozen=True)
class PnsSamples:
    """Interleaved sample record: even entries from channel A, odd from B."""

    times: np.ndarray
    values: np.ndarray
    grid: PnsGrid

    def __post_init__(self):
        object.__setattr__(self, "times", np.asarray(self.times, dtype=float))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        if self.times.shape != self.values.shape:
            raise ValueError("times and values must have matching shapes")


def sample_pns(sig, grid: PnsGrid) -> PnsSamples:
    """Sample ``sig`` on the grid; keeps indices k with both instants in window."""
    w0, w1 = grid.window
    T, d = grid.period, grid.shift
    k_min = math.ceil(w0 / T - 1e-12)
    k_max = math.floor((w1 - d) / T + 1e-12)
    ks = np.arange(k_min, k_max + 1)
    times = np.empty(2 * ks.size)
    times[0::2] = ks * T
    times[1::2] = ks * T + d
    return PnsSamples(times, np.asarray(sig(times), dtype=float), grid)


def _kernel_factors(d, band: BandSpec):
    """Frequencies, phases and weights of the kernel's two cosine-pair terms.

    Each term is ``-2*sin(p*t - phi)*sin(q*t) / (B*t*sin(phi))``; written
    with sin(q*t)/(q*t) it has no singularity at t = 0.  Returns
    ``((p2, q2, phi2), (p1, q1, phi1))`` for the outer and inner spectral
    segments, with ``phi`` broadcast against ``d``.
    """
    b_ = band.bandwidth
    a_hi = band.omega_u
    a_mid = band.k0 * b_ - band.omega_l
    a_lo = band.omega_l
    d = np.asarray(d, dtype=float)
    phi2 = 0.5 * (band.k0 + 1) * b_ * d
    phi1 = 0.5 * band.k0 * b_ * d
    return (
        (0.5 * (a_hi + a_mid), 0.5 * (a_hi - a_mid), phi2),
        (0.5 * (a_mid + a_lo), 0.5 * (a_mid - a_lo), phi1),
    )


def kernel_gbp(t, d, band: BandSpec):
    """Bandpass interpolation kernel ``g_bp(t, d)``; broadcasts over t and d.

    ``kernel_gbp(0, d, band) == 1`` and the kernel vanishes at every other
    grid instant ``k*period`` and ``k*period + d`` (channel A viewpoint);
    the channel-B interpolant is its time reverse ``kernel_gbp(-t, d, band)``.

    Raises :class:`DegenerateShiftError` when a ``sin`` denominator is
    within tolerance of zero.
    """
    t = np.asarray(t, dtype=float)
    b_ = band.bandwidth
    out = 0.0
    for p, q, phi in _kernel_factors(d, band):
        sin_phi = np.sin(phi)
        if np.any(np.abs(sin_phi) < math.pi * DEGENERACY_TOL):
            raise DegenerateShiftError(
                f"kernel denominator sin(phi) ~ 0 for shift(s) {d!r} with k0={band.k0}"
            )
        # sin(q*t)/(q*t) * q = sin(q*t)/t without the t=0 singularity
        out = out - 2.0 * np.sin(p * t - phi) * np.sinc(q * t / math.pi) * q / (b_ * sin_phi)
    return out


def _gbp_cosine_terms(d: float, band: BandSpec):
    """The kernel as four signed terms ``sign*cos(a*t - phi)/(B*t*sin(phi))``."""
    b_ = band.bandwidth
    a_mid = band.k0 * b_ - band.omega_l
    phi1 = 0.5 * band.k0 * b_ * d
    phi2 = 0.5 * (band.k0 + 1) * b_ * d
    return [
        (+1.0, band.omega_u, phi2),
        (-1.0, a_mid, phi2),
        (+1.0, a_mid, phi1),
        (-1.0, band.omega_l, phi1),
    ]


def _reconstruct_direct(samples, grid, t_arr, chunk):
    even_t, even_v = samples.times[0::2], samples.values[0::2]
    odd_t, odd_v = samples.times[1::2], samples.values[1::2]
    d = grid.shift
    out = np.zeros_like(t_arr)
    for lo in range(0, t_arr.size, chunk):
        block = t_arr[lo:lo + chunk, None]
        acc = kernel_gbp(block - even_t[None, :], d, grid.band) @ even_v
        acc += kernel_gbp(odd_t[None, :] - block, d, grid.band) @ odd_v
        out[lo:lo + chunk] = acc
    return out


def _reconstruct_separated(samples, grid, t_arr, chunk):
    """Same sum as :func:`_reconstruct_direct`, reorganized for large records.

    Writing each kernel term as ``cos(a*t - c_k)/(t - tau_k)`` and expanding
    the cosine of a difference turns the double sum into a handful of
    weighted sums ``sum_k w_k/(t - tau_k)``, evaluated as one matrix product
    per channel.  Points that fall within ``1e-5 * period`` of a sample
    instant are recomputed with the cancellation-free direct kernel.
    """
    d = grid.shift
    band = grid.band
    terms = _gbp_cosine_terms(d, band)
    out = np.zeros_like(t_arr)
    guard = 1e-5 * grid.period
    for reversed_kernel in (False, True):
        tau = samples.times[1::2] if reversed_kernel else samples.times[0::2]
        val = samples.values[1::2] if reversed_kernel else samples.values[0::2]
        weights = np.empty((tau.size, 8))
        combine = []  # per weight column: callable of t giving the cofactor
        for j, (sign, a, phi) in enumerate(terms):
            scale = sign / (band.bandwidth * math.sin(phi))
            if reversed_kernel:
                # cos(a*(tau - t) - phi)/(tau - t)
                weights[:, 2 * j] = -val * np.cos(a * tau - phi) * scale
                weights[:, 2 * j + 1] = -val * np.sin(a * tau - phi) * scale
                combine.append(lambda t, a=a: np.cos(a * t))
                combine.append(lambda t, a=a: np.sin(a * t))
            else:
                weights[:, 2 * j] = val * np.cos(a * tau) * scale
                weights[:, 2 * j + 1] = val * np.sin(a * tau) * scale
                combine.append(lambda t, a=a, phi=phi: np.cos(a * t - phi))
                combine.append(lambda t, a=a, phi=phi: np.sin(a * t - phi))
        with np.errstate(divide="ignore", invalid="ignore"):
            for lo in range(0, t_arr.size, chunk):
                block = t_arr[lo:lo + chunk]
                recip = 1.0 / (block[:, None] - tau[None, :])
                sums = recip @ weights  # (m, 8)
                acc = np.zeros_like(block)
                for col, cof in enumerate(combine):
                    acc += cof(block) * sums[:, col]
                out[lo:lo + chunk] += acc
    # Repair points that sat (nearly) on a sample instant.
    near = _near_any(t_arr, samples.times, guard)
    if np.any(near):
        out[near] = _reconstruct_direct(samples, grid, t_arr[near], chunk)
    return out


def _near_any(t_arr, sorted_times, guard):
    """Boolean mask of entries of ``t_arr`` within ``guard`` of any sorted time."""
    if sorted_times.size == 0:
        return np.zeros(t_arr.shape, dtype=bool)
    idx = np.searchsorted(sorted_times, t_arr)
    left = sorted_times[np.clip(idx - 1, 0, sorted_times.size - 1)]
    right = sorted_times[np.clip(idx, 0, sorted_times.size - 1)]
    return np.minimum(np.abs(t_arr - left), np.abs(t_arr - right)) < guard


def reconstruct_pns(samples: PnsSamples, grid: PnsGrid, t, chunk: int = 2048,
                    method: str = "auto"):
    """Evaluate the truncated interpolation series at times ``t``.

    Even samples contribute ``x_2k * g_bp(t - k*T, d)``; odd samples the
    time-reversed kernel about their own instants.  The sum runs over all
    samples in the record, so accuracy near the window edges is limited by
    the 1/t kernel decay; callers should evaluate inside a guard margin.

    ``method`` selects the evaluation strategy: ``"direct"`` evaluates the
    kernel per (point, sample) pair, ``"separated"`` uses an algebraically
    identical factorization that is much faster for long sample records,
    and ``"auto"`` picks by problem size.  The two strategies agree to
    float round-off.
    """
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    if method == "auto":
        method = "separated" if t_arr.size * samples.times.size > 2_000_000 else "direct"
    if method == "direct":
        out = _reconstruct_direct(samples, grid, t_arr, chunk)
    elif method == "separated":
        # keep the per-chunk scratch (chunk x n_samples) within ~100 MB
        sep_chunk = max(16, min(chunk, int(1.2e7 / max(1, samples.times.size // 2))))
        out = _reconstruct_separated(samples, grid, t_arr, sep_chunk)
    else:
        raise ValueError(f"unknown method {method!r}")
    return out if np.ndim(t) else float(out[0])
