"""Uniformly sampled time series and trajectory containers with CSV I/O.

All CSV emitted by this package uses 17 significant digits so that repeated
runs are byte-identical and diffs stay meaningful.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError

FLOAT_FMT = "%.17g"


def _format_row(values):
    return ",".join(FLOAT_FMT % v for v in values)


@dataclass
class Signal:
    """Real signal sampled on a uniform time grid.

    ``normalization`` records the divisor and its time when the signal was
    produced by :func:`lineport.inversion.normalize_max_abs`; ``meta`` holds
    method diagnostics (for example the IFFT inversion quality metrics).
    """

    t0: float
    dt: float
    samples: np.ndarray
    normalization: tuple[float, float] | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)
        if self.samples.ndim != 1:
            raise ValidationError("signal samples must be one-dimensional")
        if not np.all(np.isfinite(self.samples)):
            raise ValidationError("signal samples must be finite")
        if self.dt <= 0:
            raise ValidationError("signal sample spacing must be positive")

    @property
    def t_grid(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(len(self.samples))

    @property
    def t_max(self) -> float:
        return self.t0 + self.dt * (len(self.samples) - 1)

    def __len__(self):
        return len(self.samples)

    def __call__(self, t, extend: str = "error"):
        """Linear interpolation at ``t``.

        extend='error' rejects out-of-domain times, extend='zero' returns 0
        outside the sampled window.
        """
        t = np.asarray(t, dtype=float)
        inside = (t >= self.t0 - 1e-12 * self.dt) & (t <= self.t_max + 1e-12 * self.dt)
        if extend == "error":
            if not np.all(inside):
                raise ValidationError(
                    f"time {float(np.atleast_1d(t)[~np.atleast_1d(inside)][0]):g} outside "
                    f"signal domain [{self.t0:g}, {self.t_max:g}]"
                )
        elif extend != "zero":
            raise ValidationError(f"unknown extend policy {extend!r}")
        out = np.interp(t, self.t_grid, self.samples, left=0.0, right=0.0)
        if extend == "zero":
            out = np.where(inside, out, 0.0)
        return out if out.ndim else float(out)

    @classmethod
    def zeros(cls, t_grid) -> "Signal":
        t_grid = np.asarray(t_grid, dtype=float)
        return cls(t0=float(t_grid[0]), dt=float(t_grid[1] - t_grid[0]),
                   samples=np.zeros(len(t_grid)))

    @classmethod
    def from_samples(cls, t_grid, samples) -> "Signal":
        t_grid = np.asarray(t_grid, dtype=float)
        if len(t_grid) < 2:
            raise ValidationError("signal needs at least two samples")
        steps = np.diff(t_grid)
        if not np.allclose(steps, steps[0], rtol=1e-9, atol=0.0):
            raise ValidationError("signal time grid must be uniform")
        return cls(t0=float(t_grid[0]), dt=float(steps[0]),
                   samples=np.asarray(samples, dtype=float))

    def to_csv(self, path, header="t,value"):
        with open(path, "w", newline="") as fh:
            fh.write(header + "\n")
            for t, v in zip(self.t_grid, self.samples):
                fh.write(_format_row((t, v)) + "\n")

    @classmethod
    def from_csv(cls, path) -> "Signal":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls.from_samples(data[:, 0], data[:, 1])


@dataclass
class Trajectory:
    """Time evolution of the reduced circuit state on a uniform grid.

    phi, q are (T, N) arrays; q0, v0 are (T,) arrays. ``meta`` records the
    integrator name, dt, and any solver diagnostics.
    """

    t_grid: np.ndarray
    phi: np.ndarray
    q: np.ndarray
    q0: np.ndarray
    v0: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.t_grid = np.asarray(self.t_grid, dtype=float)
        steps = np.diff(self.t_grid)
        if len(self.t_grid) < 2 or np.any(steps <= 0):
            raise ValidationError("trajectory time grid must be strictly increasing")
        if not np.allclose(steps, steps[0], rtol=1e-9, atol=0.0):
            raise ValidationError("trajectory time grid must be uniform")

    @property
    def dt(self) -> float:
        return float(self.t_grid[1] - self.t_grid[0])

    @property
    def n_nodes(self) -> int:
        return self.phi.shape[1]

    def signal(self, which="phi", node=0) -> Signal:
        if which == "phi":
            samples = self.phi[:, node]
        elif which == "q":
            samples = self.q[:, node]
        elif which == "q0":
            samples = self.q0
        elif which == "v0":
            samples = self.v0
        else:
            raise ValidationError(f"unknown trajectory column {which!r}")
        return Signal.from_samples(self.t_grid, samples)

    def to_csv(self, path):
        n = self.n_nodes
        cols = ["t"] + [f"phi{i+1}" for i in range(n)] + [f"q{i+1}" for i in range(n)]
        cols += ["q0", "v0"]
        with open(path, "w", newline="") as fh:
            fh.write(",".join(cols) + "\n")
            for k in range(len(self.t_grid)):
                row = [self.t_grid[k], *self.phi[k], *self.q[k], self.q0[k], self.v0[k]]
                fh.write(_format_row(row) + "\n")


def peak_envelope(t_grid, samples):
    """Local maxima of |samples|, refined by parabolic interpolation.

    Returns (times, amplitudes); used for decay-rate and envelope checks on
    oscillatory signals.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    a = np.abs(np.asarray(samples, dtype=float))
    idx = np.where((a[1:-1] >= a[:-2]) & (a[1:-1] >= a[2:]))[0] + 1
    if len(idx) == 0:
        return np.array([]), np.array([])
    dt = t_grid[1] - t_grid[0]
    ts, amps = [], []
    for i in idx:
        y0, y1, y2 = a[i - 1], a[i], a[i + 1]
        denom = y0 - 2.0 * y1 + y2
        if denom < 0.0:
            shift = 0.5 * (y0 - y2) / denom
            ts.append(t_grid[i] + shift * dt)
            amps.append(y1 - 0.25 * (y0 - y2) * shift)
        else:
            ts.append(t_grid[i])
            amps.append(y1)
    return np.asarray(ts), np.asarray(amps)
