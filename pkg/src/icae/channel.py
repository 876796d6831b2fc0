"""Real-valued AWGN and symmetric m-user Gaussian interference channel.

Conventions
-----------
Transmitted codewords carry a fixed per-component power of 0.5 (squared
norm ``n`` over ``2n`` real components). Eb/N0 sets the noise variance per
real component,

    sigma^2 = n / (2 k 10^(EbN0_dB / 10)),

so ``Eb = n / k`` and ``N0 = 2 sigma^2``. The signal-to-noise ratio is
``SNR = 0.5 / sigma^2``, the interference-to-noise ratio is ``SNR**alpha``
and each receiver sees

    y_n = x_n + sqrt(INR / SNR) * sum_{j != n} x_j + noise_n.

Noise is drawn with ``Generator.standard_normal`` from the handle passed in
(numpy's PCG64 bit generator, ziggurat sampling).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import erfc

from .errors import DimensionError

REGIMES = ("noisy", "weak", "moderate", "boundary_alpha_1", "strong", "very_strong")


@dataclass(frozen=True)
class ChannelSpec:
    m: int = 1
    alpha: float = 0.0
    ebn0_db: float = 7.0
    n: int = 4
    k: int = 4
    seed: int = 0
    # False keeps the SNR-dependent mixing coefficient but adds no noise
    noise: bool = True

    def __post_init__(self):
        if self.m < 1:
            raise ValueError(f"user count m must be >= 1, got {self.m}")
        if self.alpha < 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")
        if self.n < 1 or self.k < 1:
            raise ValueError(f"n and k must be >= 1, got n={self.n}, k={self.k}")
        if math.isnan(self.ebn0_db):
            raise ValueError("ebn0_db is NaN")

    def at(self, ebn0_db=None, alpha=None, **changes):
        """Copy with a different operating point."""
        if ebn0_db is not None:
            changes["ebn0_db"] = ebn0_db
        if alpha is not None:
            changes["alpha"] = alpha
        return replace(self, **changes)

    @property
    def sigma2(self):
        return ebn0_to_sigma2(self)

    @property
    def snr(self):
        return linear_snr(self)

    @property
    def coefficient(self):
        return mixing_coefficient(self)


@dataclass(frozen=True)
class RegimeLabel:
    name: str
    dof: float


def ebn0_to_sigma2(spec):
    """Per-real-component noise variance for the channel's Eb/N0."""
    return spec.n / (2.0 * spec.k * 10.0 ** (spec.ebn0_db / 10.0))


def linear_snr(spec):
    sigma2 = ebn0_to_sigma2(spec)
    if not sigma2 > 0:
        raise ValueError(f"noise variance must be positive to define SNR, got {sigma2}")
    return 0.5 / sigma2


def inr_from_snr(snr, alpha):
    if not snr > 0:
        raise ValueError(f"SNR must be positive, got {snr}")
    return snr**alpha


def mixing_coefficient(spec):
    """Interference gain sqrt(INR/SNR) = SNR**((alpha - 1) / 2)."""
    if spec.alpha == 1.0:
        return 1.0
    snr = linear_snr(spec)
    return math.sqrt(inr_from_snr(snr, spec.alpha) / snr)


def awgn(x, spec, rng):
    x = np.asarray(x, dtype=np.float64)
    if not spec.noise:
        return x.copy()
    return x + math.sqrt(ebn0_to_sigma2(spec)) * rng.standard_normal(x.shape)


def interference_apply(x_all, spec, rng):
    """Pass one codeword per user through the interference channel.

    ``x_all`` has shape ``(m, 2n)`` or ``(m, batch, 2n)``; the output has the
    same shape, row ``u`` being what receiver ``u`` observes.
    """
    x_all = np.asarray(x_all, dtype=np.float64)
    if x_all.ndim not in (2, 3) or x_all.shape[0] != spec.m or x_all.shape[-1] != 2 * spec.n:
        raise DimensionError(
            f"expected {spec.m} codewords of length {2 * spec.n}, got array of shape {x_all.shape}"
        )
    if spec.m == 1:
        return awgn(x_all, spec, rng)
    c = mixing_coefficient(spec)
    clean = np.empty_like(x_all)
    for u in range(spec.m):
        others = np.zeros_like(x_all[u])
        for j in range(spec.m):
            if j != u:
                others += x_all[j]
        clean[u] = x_all[u] + c * others
    return awgn(clean, spec, rng)


def receive(x_desired, interferers, spec, rng):
    """Observation at one receiver; ``interferers`` has shape ``(m - 1, batch, 2n)``.

    Same law as :func:`interference_apply` restricted to a single user, which
    is all the training and evaluation loops need.
    """
    x_desired = np.asarray(x_desired, dtype=np.float64)
    if spec.m == 1 or interferers is None or len(interferers) == 0:
        return awgn(x_desired, spec, rng)
    c = mixing_coefficient(spec)
    return awgn(x_desired + c * np.sum(interferers, axis=0), spec, rng)


def classify_regime(alpha, m=2):
    """Interference regime and generalized degrees of freedom d(alpha)."""
    if alpha < 0:
        raise ValueError(f"alpha must be >= 0, got {alpha}")
    if alpha < 0.5:
        return RegimeLabel("noisy", 1.0 - alpha)
    if alpha < 2.0 / 3.0:
        return RegimeLabel("weak", float(alpha))
    if alpha < 1.0:
        return RegimeLabel("moderate", 1.0 - alpha / 2.0)
    if alpha == 1.0:
        return RegimeLabel("boundary_alpha_1", 1.0 / m)
    if alpha < 2.0:
        return RegimeLabel("strong", alpha / 2.0)
    return RegimeLabel("very_strong", 1.0)


def q_function(x):
    return 0.5 * erfc(np.asarray(x, dtype=np.float64) / math.sqrt(2.0))


def qpsk_ser_oracle(ebn0_db):
    """Closed-form Gray-mapped QPSK symbol error rate over AWGN."""
    ebn0 = 10.0 ** (np.asarray(ebn0_db, dtype=np.float64) / 10.0)
    q = q_function(np.sqrt(2.0 * ebn0))
    return 2.0 * q * (1.0 - 0.5 * q)


def simulate_qpsk_ser(ebn0_db, n_symbols, rng, chunk=1 << 18):
    """Monte Carlo QPSK SER through :func:`awgn` with n=1 complex use, k=2 bits."""
    spec = ChannelSpec(m=1, ebn0_db=ebn0_db, n=1, k=2)
    amp = math.sqrt(0.5)
    errors = 0
    remaining = n_symbols
    while remaining:
        size = min(chunk, remaining)
        bits = rng.integers(0, 2, size=(size, 2))
        x = amp * (1.0 - 2.0 * bits)
        y = awgn(x, spec, rng)
        errors += int(np.count_nonzero(((y < 0) != bits.astype(bool)).any(axis=1)))
        remaining -= size
    return errors / n_symbols
