"""Time-series containers, generators, noise, and compression.

Provides the sampled-series types used everywhere else plus:

- gen_sinusoid:      fixed-frequency sine sampled on a uniform grid
- integrate_lorenz:  Lorenz system, fixed-step RK4, x component
- integrate_rossler: Rossler system, fixed-step RK4, x component
- add_awgn:          white Gaussian noise calibrated to a target SNR
- peak_compress:     windowed peak detection that keeps timestamps
- derive_channels:   amplitude/phase channels from an I/Q pair
- segment:           split a series into equal-length pieces

Integration is deliberately fixed-step (classic RK4 with step = dt) so that
a given (n, dt, init) always yields the same trajectory, bit for bit.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from .errors import NumericOverflowError

__all__ = [
    "TimeSeries",
    "MultiChannelSignal",
    "PeakDetectParams",
    "gen_sinusoid",
    "integrate_lorenz",
    "integrate_rossler",
    "add_awgn",
    "peak_compress",
    "derive_channels",
    "segment",
]

LORENZ_INIT = (2.0, 2.0, 20.0)
ROSSLER_INIT = (-1.0, 0.0, 1.0)


@dataclass(frozen=True)
class TimeSeries:
    """A finite sampled series.

    ``values`` are the samples; ``dt``/``t0`` define the implicit uniform
    grid t_i = t0 + i*dt. After compression the kept samples no longer sit
    on a uniform grid, in which case ``times`` carries their explicit
    timestamps (strictly increasing, same length as ``values``).
    """

    values: np.ndarray
    dt: float
    t0: float = 0.0
    times: np.ndarray | None = None

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.ndim != 1 or vals.size == 0:
            raise ValueError("values must be a non-empty 1-D array")
        if not np.isfinite(vals).all():
            raise ValueError("values must be finite")
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ValueError(f"dt must be finite and positive, got {self.dt}")
        if not math.isfinite(self.t0):
            raise ValueError("t0 must be finite")
        object.__setattr__(self, "values", vals)
        if self.times is not None:
            ts = np.asarray(self.times, dtype=np.float64)
            if ts.shape != vals.shape:
                raise ValueError("times must align with values")
            if not np.isfinite(ts).all():
                raise ValueError("times must be finite")
            if ts.size > 1 and not (np.diff(ts) > 0).all():
                raise ValueError("times must be strictly increasing")
            object.__setattr__(self, "times", ts)

    def __len__(self) -> int:
        return int(self.values.size)

    def timestamps(self) -> np.ndarray:
        """Timestamps per sample: explicit if present, else the uniform grid."""
        if self.times is not None:
            return self.times
        return self.t0 + self.dt * np.arange(len(self), dtype=np.float64)


@dataclass(frozen=True)
class MultiChannelSignal:
    """Aligned raw channels of one signal plus its labeling metadata.

    All channels share one length and one dt; snr_db is None for clean
    signals. Compressed channels drop out of alignment and are handled as
    plain per-channel TimeSeries, not through this type.
    """

    channels: dict[str, TimeSeries]
    label: str
    snr_db: float | None = None

    def __post_init__(self):
        if not self.channels:
            raise ValueError("signal needs at least one channel")
        if not self.label:
            raise ValueError("signal needs a non-empty label")
        lengths = {len(ts) for ts in self.channels.values()}
        dts = {ts.dt for ts in self.channels.values()}
        if len(lengths) != 1 or len(dts) != 1:
            raise ValueError("channels must share length and dt")
        for name, ts in self.channels.items():
            if ts.times is not None:
                raise ValueError(f"channel {name!r}: raw channels use the uniform grid")

    def __len__(self) -> int:
        return len(next(iter(self.channels.values())))

    @property
    def dt(self) -> float:
        return next(iter(self.channels.values())).dt


@dataclass(frozen=True)
class PeakDetectParams:
    """Half-window width for peak compression."""

    w: int = 3

    def __post_init__(self):
        if not isinstance(self.w, int) or self.w < 1:
            raise ValueError(f"w must be a positive integer, got {self.w}")


def gen_sinusoid(n: int, dt: float, t0: float = 0.0) -> TimeSeries:
    """Sine of fixed angular frequency 5*pi sampled at t0 + i*dt.

    t0 acts as a phase offset; the default grid starts at zero so the first
    sample is exactly sin(0) = 0.
    """
    _check_grid(n, dt)
    t = t0 + dt * np.arange(n, dtype=np.float64)
    return TimeSeries(np.sin(5.0 * np.pi * t), dt=dt, t0=t0)


def _lorenz_deriv(s):
    x, y, z = s
    return (-10.0 * (x - y), -y + 28.0 * x - x * z, x * y - (8.0 / 3.0) * z)


def _rossler_deriv(s):
    x, y, z = s
    return (-y - z, x + 0.2 * y, 0.2 + z * (x - 5.7))


def _rk4_first_component(deriv, init, n: int, dt: float) -> np.ndarray:
    """Classic fixed-step RK4; returns the first state component per step."""
    xs = np.empty(n, dtype=np.float64)
    s = (float(init[0]), float(init[1]), float(init[2]))
    xs[0] = s[0]
    h = float(dt)
    for i in range(1, n):
        k1 = deriv(s)
        k2 = deriv((s[0] + 0.5 * h * k1[0], s[1] + 0.5 * h * k1[1], s[2] + 0.5 * h * k1[2]))
        k3 = deriv((s[0] + 0.5 * h * k2[0], s[1] + 0.5 * h * k2[1], s[2] + 0.5 * h * k2[2]))
        k4 = deriv((s[0] + h * k3[0], s[1] + h * k3[1], s[2] + h * k3[2]))
        s = (
            s[0] + h * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]) / 6.0,
            s[1] + h * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]) / 6.0,
            s[2] + h * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2]) / 6.0,
        )
        if not (math.isfinite(s[0]) and math.isfinite(s[1]) and math.isfinite(s[2])):
            raise NumericOverflowError(f"state became non-finite at step {i}", step=i)
        xs[i] = s[0]
    return xs


def integrate_lorenz(n: int, dt: float, init=LORENZ_INIT) -> TimeSeries:
    """x component of the Lorenz system from ``init``, fixed-step RK4.

    Derivatives: dx = -10(x - y), dy = -y + 28x - xz, dz = xy - (8/3)z.
    """
    _check_grid(n, dt)
    _check_init(init)
    return TimeSeries(_rk4_first_component(_lorenz_deriv, init, n, dt), dt=dt)


def integrate_rossler(n: int, dt: float, init=ROSSLER_INIT) -> TimeSeries:
    """x component of the Rossler system from ``init``, fixed-step RK4.

    Derivatives: dx = -y - z, dy = x + 0.2y, dz = 0.2 + z(x - 5.7).
    """
    _check_grid(n, dt)
    _check_init(init)
    return TimeSeries(_rk4_first_component(_rossler_deriv, init, n, dt), dt=dt)


def add_awgn(series: TimeSeries, snr_db: float, seed: int) -> TimeSeries:
    """Add white Gaussian noise at the requested signal-to-noise ratio.

    Noise variance is mean(x^2) / 10^(snr_db/10), i.e. the SNR is measured
    against the mean squared value of the input. snr_db = +inf is the
    "clean" sentinel and returns the samples unchanged. Deterministic for a
    given (series, snr_db, seed).

    Raises ValueError for a zero-power input (the ratio is undefined).
    """
    if snr_db == math.inf:
        return TimeSeries(series.values.copy(), dt=series.dt, t0=series.t0,
                          times=None if series.times is None else series.times.copy())
    if not math.isfinite(snr_db):
        raise ValueError(f"snr_db must be finite or +inf, got {snr_db}")
    power = float(np.mean(series.values ** 2))
    if power == 0.0:
        raise ValueError("signal power is zero; SNR is undefined")
    var = power / (10.0 ** (snr_db / 10.0))
    rng = np.random.default_rng(seed)
    noisy = series.values + rng.normal(0.0, math.sqrt(var), size=len(series))
    return TimeSeries(noisy, dt=series.dt, t0=series.t0,
                      times=None if series.times is None else series.times.copy())


def peak_compress(series: TimeSeries, params: PeakDetectParams) -> TimeSeries:
    """Keep only windowed peaks; retained samples keep their timestamps.

    The series is padded with w zeros on both ends. Sample x_k is kept iff

        (max(x_{k-w}..x_k) + max(x_k..x_{k+w})) / 2 <= x_k

    where both window maxima include x_k itself, so a sample survives exactly
    when it is the maximum of both its windows. The global maximum always
    qualifies, so the output is never empty. The zero padding is part of the
    definition and biases the boundary decision when samples are negative.

    Output timestamps are the original t_k of the kept samples (explicit,
    not a resampled grid).
    """
    if params.w >= len(series):
        raise ValueError(f"w={params.w} must be smaller than the series length {len(series)}")
    x = series.values
    n = x.size
    w = params.w
    padded = np.concatenate([np.zeros(w), x, np.zeros(w)])
    windows = np.lib.stride_tricks.sliding_window_view(padded, w + 1)
    wmax = windows.max(axis=1)
    left_max = wmax[:n]        # window ending at x_k
    right_max = wmax[w:w + n]  # window starting at x_k
    keep = (left_max + right_max) / 2.0 <= x
    return TimeSeries(x[keep], dt=series.dt, t0=series.t0,
                      times=series.timestamps()[keep])


def derive_channels(i_series: TimeSeries, q_series: TimeSeries) -> tuple[TimeSeries, TimeSeries]:
    """Amplitude and phase channels from an in-phase/quadrature pair.

    A = sqrt(I^2 + Q^2) and W = atan2(Q, I) (quadrant aware; the (0, 0)
    sample maps to phase 0).
    """
    if len(i_series) != len(q_series) or i_series.dt != q_series.dt:
        raise ValueError("I and Q channels must share length and dt")
    i = i_series.values
    q = q_series.values
    amp = np.hypot(i, q)
    phase = np.arctan2(q, i)
    return (
        TimeSeries(amp, dt=i_series.dt, t0=i_series.t0),
        TimeSeries(phase, dt=i_series.dt, t0=i_series.t0),
    )


def segment(series: TimeSeries, k: int) -> list[TimeSeries]:
    """Split into k equal-length contiguous pieces, timestamps preserved.

    The length must be divisible by k; anything else raises ValueError
    rather than silently truncating.
    """
    if not isinstance(k, int) or k < 1:
        raise ValueError(f"k must be a positive integer, got {k}")
    n = len(series)
    if n % k != 0:
        raise ValueError(f"length {n} is not divisible by k={k}")
    size = n // k
    ts = series.timestamps()
    out = []
    for j in range(k):
        sl = slice(j * size, (j + 1) * size)
        out.append(TimeSeries(series.values[sl], dt=series.dt,
                              t0=float(ts[j * size]),
                              times=ts[sl] if series.times is not None else None))
    return out


def _check_grid(n, dt):
    if not isinstance(n, int) or n < 1:
        raise ValueError(f"n must be a positive integer, got {n}")
    if not (math.isfinite(dt) and dt > 0):
        raise ValueError(f"dt must be finite and positive, got {dt}")


def _check_init(init):
    if len(init) != 3 or not all(math.isfinite(float(v)) for v in init):
        raise ValueError(f"init must be three finite numbers, got {init!r}")
