"""Semi-infinite transmission line: parameters, d'Alembert waves, one-port source.

The line carries a flux field phi(t;x) obeying the wave equation with speed
v_p = 1/sqrt(ell*c) and characteristic impedance Z_c = sqrt(ell/c). Seen from
its end at x = 0 it acts as a resistor Z_c in series with a voltage source
e0(t) = 2 v_bwd(t), where the backward voltage wave is fixed by the initial
flux and charge-density profiles:

    v_bwd(t) = q0(v_p t) / (2 c)  +  (v_p / 2) * dphi0/dx (v_p t)

Note the 1/(2c) prefactor on the charge-density term: the two wave-splitting
formulas are used in the dimensionally consistent form that the d'Alembert
split of the initial data forces (1/(c Z_c) = v_p).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .signals import Signal


@dataclass(frozen=True)
class LineParams:
    """Per-unit-length line constants and the derived wave quantities."""

    ell: float          # inductance per length [H/m]
    c_per_len: float    # capacitance per length [F/m]
    v_p: float          # propagation speed [m/s]
    z_c: float          # characteristic impedance [ohm]


def line_params(ell: float, c_per_len: float) -> LineParams:
    if not (ell > 0) or not (c_per_len > 0):
        raise ValidationError("line constants must be positive")
    return LineParams(ell=ell, c_per_len=c_per_len,
                      v_p=1.0 / np.sqrt(ell * c_per_len),
                      z_c=np.sqrt(ell / c_per_len))


@dataclass
class LineInitialState:
    """Sampled initial profiles phi0(x) [weber] and q0(x) [coulomb/m] on a
    uniform grid x = 0, dx, ..., x_max, with linear interpolation between
    samples and an explicit out-of-domain policy ('error' or 'zero')."""

    dx: float
    phi0: np.ndarray
    q0: np.ndarray
    extend: str = "error"

    def __post_init__(self):
        self.phi0 = np.asarray(self.phi0, dtype=float)
        self.q0 = np.asarray(self.q0, dtype=float)
        if self.dx <= 0:
            raise ValidationError("profile spacing dx must be positive")
        if self.phi0.shape != self.q0.shape or self.phi0.ndim != 1 or len(self.phi0) < 3:
            raise ValidationError("profiles must be equal-length 1-D arrays (>= 3 samples)")
        if not (np.all(np.isfinite(self.phi0)) and np.all(np.isfinite(self.q0))):
            raise ValidationError("profiles must be finite")
        if self.extend not in ("error", "zero"):
            raise ValidationError(f"unknown extend policy {self.extend!r}")
        # central differences inside, one-sided at the ends
        self._phi0_x = np.gradient(self.phi0, self.dx)

    @property
    def x_grid(self) -> np.ndarray:
        return self.dx * np.arange(len(self.phi0))

    @property
    def x_max(self) -> float:
        return self.dx * (len(self.phi0) - 1)

    @classmethod
    def from_functions(cls, phi_fn, q_fn, x_max, dx, extend="error") -> "LineInitialState":
        x = np.arange(0.0, x_max + 0.5 * dx, dx)
        return cls(dx=dx, phi0=phi_fn(x), q0=q_fn(x), extend=extend)

    @classmethod
    def rest(cls, x_max, dx, extend="zero") -> "LineInitialState":
        n = int(round(x_max / dx)) + 1
        return cls(dx=dx, phi0=np.zeros(n), q0=np.zeros(n), extend=extend)

    @classmethod
    def from_csv(cls, phi_path=None, q_path=None, extend="error") -> "LineInitialState":
        """Load profiles from two-column CSV files (x, value); either file may
        be omitted, in which case that profile is zero. Grids must agree."""
        from .signals import Signal
        if phi_path is None and q_path is None:
            raise ValidationError("need at least one profile file")
        phi_sig = Signal.from_csv(phi_path) if phi_path else None
        q_sig = Signal.from_csv(q_path) if q_path else None
        ref = phi_sig or q_sig
        if phi_sig and q_sig:
            if len(phi_sig) != len(q_sig) or abs(phi_sig.dt - q_sig.dt) > 1e-12 * ref.dt:
                raise ValidationError("profile files must share one x grid")
        zeros = np.zeros(len(ref))
        return cls(dx=ref.dt,
                   phi0=phi_sig.samples if phi_sig else zeros,
                   q0=q_sig.samples if q_sig else zeros,
                   extend=extend)

    def _interp(self, values, x):
        x = np.asarray(x, dtype=float)
        inside = (x >= -1e-12 * self.dx) & (x <= self.x_max + 1e-12 * self.dx)
        if self.extend == "error" and not np.all(inside):
            bad = float(np.atleast_1d(x)[~np.atleast_1d(inside)][0])
            raise ValidationError(
                f"position {bad:g} outside sampled profile [0, {self.x_max:g}]; "
                "supply a longer profile or construct the state with extend='zero'")
        out = np.interp(x, self.x_grid, values, left=0.0, right=0.0)
        out = np.where(inside, out, 0.0)
        return out if out.ndim else float(out)

    def phi_at(self, x):
        return self._interp(self.phi0, x)

    def q_at(self, x):
        return self._interp(self.q0, x)

    def phi_x_at(self, x):
        return self._interp(self._phi0_x, x)


def backward_wave(initial: LineInitialState, params: LineParams, t):
    """Backward voltage wave v_bwd(t) at x = 0 from the initial line state."""
    x = params.v_p * np.asarray(t, dtype=float)
    return (initial.q_at(x) / (2.0 * params.c_per_len)
            + 0.5 * params.v_p * initial.phi_x_at(x))


def forward_wave(initial: LineInitialState, params: LineParams, eta):
    """Forward voltage wave v_fwd(eta) for retarded argument eta <= 0."""
    eta = np.asarray(eta, dtype=float)
    if np.any(eta > 1e-12):
        raise ValidationError("forward wave from initial data is defined for eta <= 0 only")
    x = -params.v_p * eta
    return (initial.q_at(x) / (2.0 * params.c_per_len)
            - 0.5 * params.v_p * initial.phi_x_at(x))


def thevenin_source(initial: LineInitialState, params: LineParams, t_grid) -> Signal:
    """One-port source e0(t) = 2 v_bwd(t) sampled on ``t_grid``."""
    t_grid = np.asarray(t_grid, dtype=float)
    return Signal.from_samples(t_grid, 2.0 * backward_wave(initial, params, t_grid))


def dalembert_eval(v_fwd: Signal, v_bwd: Signal, params: LineParams, x, t):
    """Voltage and current at (x, t) from the two traveling voltage waves.

    v = v_fwd(t - x/v_p) + v_bwd(t + x/v_p);
    i = (v_fwd(t - x/v_p) - v_bwd(t + x/v_p)) / Z_c.
    """
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    vf = v_fwd(t - x / params.v_p)
    vb = v_bwd(t + x / params.v_p)
    return vf + vb, (vf - vb) / params.z_c
