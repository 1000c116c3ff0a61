"""Time-domain dynamics: reduced one-port integration and the LC-ladder oracle.

Three independent formulations of the same physics live here:

* ``integrate`` evolves the reduced state (Phi, Q, Q0) under
      dPhi/dt = Cb^-1 Q + p Q0
      dQ/dt   = -dU/dPhi
      dQ0/dt  = -Q0/tau - (p.Q)/Z_c + e0(t)/Z_c
  with an exact matrix-exponential stepper for linear circuits (default)
  or classic RK4 when Josephson junctions make the potential nonlinear.

* ``langevin_form`` evolves the convolution formulation
      dPhi/dt = A Q + B (g * dQ/dt) + w(t),   g(t) = exp(-t/tau),
  realizing the exponential-memory convolution exactly through one auxiliary
  state per node instead of quadrature.

* ``ladder_oracle`` discretizes the line into n LC sections and integrates
  the closed Hamiltonian system with symplectic leapfrog; with the far end
  open and the no-echo time window it is an independent oracle for the
  reduced model.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve, expm

from .errors import NumericalPreconditionError, ValidationError
from .netlist import (CircuitTopology, ReducedModel, potential_energy,
                      potential_gradient, stiffness_matrix)
from .signals import Signal, Trajectory
from .tline import LineInitialState, LineParams

DT_SAFETY_FACTOR = 20.0


@dataclass
class ReducedState:
    """Instantaneous reduced state: node fluxes, node charges, and the
    conjugate momentum Q0 of the line-end flux."""

    phi: np.ndarray
    q: np.ndarray
    q0: float

    def __post_init__(self):
        self.phi = np.atleast_1d(np.asarray(self.phi, dtype=float))
        self.q = np.atleast_1d(np.asarray(self.q, dtype=float))
        if self.phi.shape != self.q.shape:
            raise ValidationError("phi and q must have the same length")

    def v0(self, model: ReducedModel) -> float:
        """Port voltage V0 = p.Q + Q0/C_p (definitional identity)."""
        return float(model.p @ self.q + self.q0 / model.c_p)

    def packed(self) -> np.ndarray:
        return np.concatenate([self.phi, self.q, [self.q0]])


def _as_gradient(grad_u, n):
    """Accept a stiffness matrix (linear circuit) or a gradient callable."""
    if callable(grad_u):
        return None, grad_u
    k = np.asarray(grad_u, dtype=float)
    if k.shape != (n, n):
        raise ValidationError(f"stiffness matrix must be {n}x{n}")
    return k, lambda phi: k @ phi


@dataclass
class ReducedRhs:
    """Right-hand side of the reduced equations, callable as f(t, y) on the
    packed state y = [phi, q, q0]. ``flow_matrix`` is set for linear circuits
    and enables the exact exponential stepper."""

    model: ReducedModel
    grad_u: object
    e0: Signal | None = None
    stiffness: np.ndarray | None = field(default=None)
    flow_matrix: np.ndarray | None = field(default=None)

    def __post_init__(self):
        n = self.model.n_nodes
        self.stiffness, self._grad = _as_gradient(self.grad_u, n)
        if self.stiffness is not None:
            self.flow_matrix = _reduced_flow_matrix(self.model, self.stiffness)

    @property
    def is_linear(self) -> bool:
        return self.flow_matrix is not None

    def e0_at(self, t):
        if self.e0 is None:
            return np.zeros(np.shape(t))
        return self.e0(t)

    def source_index(self) -> int:
        return 2 * self.model.n_nodes

    def __call__(self, t, y):
        m = self.model
        n = m.n_nodes
        phi, q, q0 = y[:n], y[n:2 * n], y[2 * n]
        dphi = m.cb_inv @ q + m.p * q0
        dq = -self._grad(phi)
        dq0 = -q0 / m.tau - (m.p @ q) / m.z_c + self.e0_at(t) / m.z_c
        return np.concatenate([dphi, dq, [dq0]])


def _reduced_flow_matrix(model: ReducedModel, k: np.ndarray) -> np.ndarray:
    n = model.n_nodes
    m = np.zeros((2 * n + 1, 2 * n + 1))
    m[:n, n:2 * n] = model.cb_inv
    m[:n, 2 * n] = model.p
    m[n:2 * n, :n] = -k
    m[2 * n, n:2 * n] = -model.p / model.z_c
    m[2 * n, 2 * n] = -1.0 / model.tau
    return m


def assemble_rhs(model: ReducedModel, grad_u, e0: Signal | None = None) -> ReducedRhs:
    """Build the reduced right-hand side.

    ``grad_u`` is either the inductive stiffness matrix K (grad U = K phi,
    linear circuit) or a callable phi -> grad U (junction circuits).
    """
    return ReducedRhs(model=model, grad_u=grad_u, e0=e0)


def _check_dt(dt, model: ReducedModel, stiffness, accuracy_depends_on_dt=True):
    """Warn when dt fails to resolve min(tau, 1/omega_max)/20. The exact
    homogeneous exponential stepper is dt-independent, so the check only
    applies where accuracy depends on the step (RK4, sampled sources)."""
    if stiffness is None or not accuracy_depends_on_dt:
        return
    omega_max = np.sqrt(np.linalg.norm(model.cb_inv, 2) * max(np.linalg.norm(stiffness, 2), 1e-300))
    limit = min(model.tau, 1.0 / omega_max) / DT_SAFETY_FACTOR
    if dt > limit:
        warnings.warn(
            f"dt={dt:.3g} does not resolve the fastest scale; "
            f"recommended dt <= {limit:.3g}", stacklevel=3)


def _lti_step_operators(m, dt):
    """Exact step operators for u' = M u + b(t) with piecewise-linear b:
    u1 = E u0 + F b0 + G (b1 - b0)."""
    d = m.shape[0]
    w = np.zeros((3 * d, 3 * d))
    w[:d, :d] = m * dt
    w[:d, d:2 * d] = np.eye(d) * dt
    w[d:2 * d, 2 * d:] = np.eye(d) * dt
    ew = expm(w)
    return ew[:d, :d], ew[:d, d:2 * d], ew[:d, 2 * d:] / dt


def _propagate_homogeneous(e_step, u0, n_samples):
    """All iterates [u0, E u0, E^2 u0, ...] via repeated doubling."""
    us = u0[:, None]
    ek = e_step
    while us.shape[1] < n_samples:
        us = np.hstack([us, ek @ us])
        ek = ek @ ek
    return us[:, :n_samples]


def _propagate_affine(flow, b_samples, u0, dt):
    n_samples = b_samples.shape[1]
    if not b_samples.any():
        e_step = expm(flow * dt)
        return _propagate_homogeneous(e_step, u0, n_samples)
    e_step, f_op, g_op = _lti_step_operators(flow, dt)
    out = np.empty((len(u0), n_samples))
    u = u0.copy()
    for k in range(n_samples - 1):
        out[:, k] = u
        b0 = b_samples[:, k]
        b1 = b_samples[:, k + 1]
        u = e_step @ u + f_op @ b0 + g_op @ (b1 - b0)
    out[:, -1] = u
    return out


def _rk4(rhs, y0, t_grid):
    dt = t_grid[1] - t_grid[0]
    out = np.empty((len(y0), len(t_grid)))
    y = y0.copy()
    for i, t in enumerate(t_grid):
        out[:, i] = y
        if i == len(t_grid) - 1:
            break
        k1 = rhs(t, y)
        k2 = rhs(t + 0.5 * dt, y + 0.5 * dt * k1)
        k3 = rhs(t + 0.5 * dt, y + 0.5 * dt * k2)
        k4 = rhs(t + dt, y + dt * k3)
        y = y + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(y)):
            raise NumericalPreconditionError(
                f"integration diverged at t={t + dt:.6g}: non-finite state; reduce dt")
    return out


def integrate(rhs: ReducedRhs, initial: ReducedState, t_grid,
              method: str = "auto") -> Trajectory:
    """Integrate the reduced system on a uniform time grid.

    method='expm' uses the exact matrix-exponential stepper (linear circuits;
    exact for e0 piecewise linear on the grid), method='rk4' the classic
    4th-order Runge-Kutta scheme; 'auto' picks 'expm' when available.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    dt = t_grid[1] - t_grid[0]
    model = rhs.model
    n = model.n_nodes
    if method == "auto":
        method = "expm" if rhs.is_linear else "rk4"
    _check_dt(dt, model, rhs.stiffness,
              accuracy_depends_on_dt=(method != "expm" or rhs.e0 is not None))
    if method == "expm":
        if not rhs.is_linear:
            raise ValidationError("matrix-exponential stepper requires a linear circuit")
        b = np.zeros((2 * n + 1, len(t_grid)))
        if rhs.e0 is not None:
            b[rhs.source_index()] = rhs.e0(t_grid) / model.z_c
        ys = _propagate_affine(rhs.flow_matrix, b, initial.packed(), dt)
    elif method == "rk4":
        ys = _rk4(rhs, initial.packed(), t_grid)
    else:
        raise ValidationError(f"unknown integration method {method!r}")
    if not np.all(np.isfinite(ys)):
        raise NumericalPreconditionError("integration produced non-finite state; reduce dt")
    phi = ys[:n].T
    q = ys[n:2 * n].T
    q0 = ys[2 * n]
    v0 = q @ model.p + q0 / model.c_p
    return Trajectory(t_grid=t_grid, phi=phi, q=q, q0=q0, v0=v0,
                      meta={"integrator": method, "dt": float(dt)})


def langevin_form(model: ReducedModel, grad_u, e0: Signal | None,
                  initial: ReducedState, t_grid, method: str = "auto") -> Trajectory:
    """Integrate the Langevin convolution form of the reduced dynamics.

    The exponential-memory convolution g * dQ/dt is realized exactly by the
    auxiliary state m' = dQ/dt - m/tau (one extra variable per node), and the
    source term by y' = -y/tau + e0(t)/tau with y(0) = V0 at t=0. The port
    voltage is V0(t) = p.m + y.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    dt = t_grid[1] - t_grid[0]
    n = model.n_nodes
    stiffness, grad = _as_gradient(grad_u, n)
    if method == "auto":
        method = "rk4" if stiffness is None else "expm"
    _check_dt(dt, model, stiffness,
              accuracy_depends_on_dt=(method != "expm" or e0 is not None))
    v0_init = initial.v0(model)
    y0 = np.concatenate([initial.phi, initial.q, np.zeros(n), [v0_init]])
    cpp = model.c_p * model.p

    if method == "expm":
        if stiffness is None:
            raise ValidationError("matrix-exponential stepper requires a linear circuit")
        dim = 3 * n + 1
        flow = np.zeros((dim, dim))
        flow[:n, n:2 * n] = model.a
        flow[:n, 2 * n:3 * n] = np.outer(cpp, model.p)
        flow[:n, 3 * n] = cpp
        flow[n:2 * n, :n] = -stiffness
        flow[2 * n:3 * n, :n] = -stiffness
        flow[2 * n:3 * n, 2 * n:3 * n] = -np.eye(n) / model.tau
        flow[3 * n, 3 * n] = -1.0 / model.tau
        b = np.zeros((dim, len(t_grid)))
        if e0 is not None:
            b[3 * n] = e0(t_grid) / model.tau
        ys = _propagate_affine(flow, b, y0, dt)
    elif method == "rk4":
        def rhs(t, y):
            phi, q, mem, yv = y[:n], y[n:2 * n], y[2 * n:3 * n], y[3 * n]
            dq = -grad(phi)
            v0 = model.p @ mem + yv
            dphi = model.a @ q + cpp * v0
            dmem = dq - mem / model.tau
            drive = e0(t) / model.tau if e0 is not None else 0.0
            dy = -yv / model.tau + drive
            return np.concatenate([dphi, dq, dmem, [dy]])
        ys = _rk4(rhs, y0, t_grid)
    else:
        raise ValidationError(f"unknown integration method {method!r}")

    phi = ys[:n].T
    q = ys[n:2 * n].T
    v0 = ys[2 * n:3 * n].T @ model.p + ys[3 * n]
    q0 = model.c_p * (v0 - q @ model.p)
    return Trajectory(t_grid=t_grid, phi=phi, q=q, q0=q0, v0=v0,
                      meta={"integrator": f"langevin-{method}", "dt": float(dt)})


class LadderSystem:
    """Closed Hamiltonian system: lumped circuit + coupling capacitor + an
    n-section LC ladder of total ``length`` standing in for the line.

    Coordinates are [Phi_1..Phi_N, phi_0, phi_1..phi_n]; each ladder node
    carries the capacitance of its dual cell (c dx, halved at both ends) and
    neighboring nodes are linked by series inductors ell dx. The far end is
    left open; trajectories are only valid inside the no-echo window
    t < 2 length / v_p.
    """

    def __init__(self, topology: CircuitTopology, line: LineParams,
                 n_sections: int, length: float):
        if n_sections < 100:
            raise ValidationError("ladder oracle needs n_sections >= 100")
        if length <= 0:
            raise ValidationError("ladder length must be positive")
        self.topology = topology
        self.line = line
        self.n_sections = int(n_sections)
        self.length = float(length)
        self.dx = self.length / self.n_sections
        self.n_circ = topology.node_count

        from .netlist import build_capacitance_matrix, reduce_ground
        cb = reduce_ground(build_capacitance_matrix(topology), topology.ground)
        self.cb = cb
        c_c = topology.coupling_capacitance
        n = self.n_circ
        cells = np.full(self.n_sections + 1, line.c_per_len * self.dx)
        cells[0] *= 0.5
        cells[-1] *= 0.5
        self.cells = cells
        head = np.zeros((n + 1, n + 1))
        head[:n, :n] = cb
        head[0, 0] += c_c
        head[0, n] -= c_c
        head[n, 0] -= c_c
        head[n, n] = c_c + cells[0]
        self._head = head
        self._head_chol = cho_factor(head)
        self._head_inv = cho_solve(self._head_chol, np.eye(n + 1))
        self._k_line = 1.0 / (line.ell * self.dx)
        self._k_circ = stiffness_matrix(topology) if topology.is_linear else None
        self.dim = n + 1 + self.n_sections

    # -- Hamiltonian structure ------------------------------------------------

    def grad_potential(self, q):
        n = self.n_circ
        out = np.empty_like(q)
        phi_circ = q[:n]
        line = q[n:]
        if self._k_circ is not None:
            out[:n] = self._k_circ @ phi_circ
        else:
            out[:n] = potential_gradient(self.topology, phi_circ)
        d = np.diff(line)
        out[n] = -self._k_line * d[0]
        out[n + 1:-1] = self._k_line * (d[:-1] - d[1:])
        out[-1] = self._k_line * d[-1]
        return out

    def velocities(self, p):
        n = self.n_circ
        out = np.empty_like(p)
        out[:n + 1] = cho_solve(self._head_chol, p[:n + 1])
        out[n + 1:] = p[n + 1:] / self.cells[1:]
        return out

    def potential(self, q):
        n = self.n_circ
        u_circ = potential_energy(self.topology, q[:n])
        return u_circ + 0.5 * self._k_line * np.sum(np.diff(q[n:]) ** 2)

    def hamiltonian(self, q, p):
        return 0.5 * float(p @ self.velocities(p)) + self.potential(q)

    def mass_matrix(self) -> np.ndarray:
        m = np.zeros((self.dim, self.dim))
        n = self.n_circ
        m[:n + 1, :n + 1] = self._head
        m[np.arange(n + 1, self.dim), np.arange(n + 1, self.dim)] = self.cells[1:]
        return m

    def stiffness_full(self) -> np.ndarray:
        if self._k_circ is None:
            raise ValidationError("full stiffness requires a linear circuit")
        n = self.n_circ
        k = np.zeros((self.dim, self.dim))
        k[:n, :n] = self._k_circ
        idx = np.arange(n, self.dim)
        k[idx, idx] += self._k_line
        k[idx[1:-1], idx[1:-1]] += self._k_line
        k[idx[:-1], idx[1:]] -= self._k_line
        k[idx[1:], idx[:-1]] -= self._k_line
        return k

    def one_step_matrix(self, dt: float) -> np.ndarray:
        """Linear map of one leapfrog step on the stacked state [q, p]."""
        k = self.stiffness_full()
        minv = np.zeros((self.dim, self.dim))
        n = self.n_circ
        minv[:n + 1, :n + 1] = self._head_inv
        minv[np.arange(n + 1, self.dim), np.arange(n + 1, self.dim)] = 1.0 / self.cells[1:]
        eye = np.eye(self.dim)
        a = minv @ k
        s = np.zeros((2 * self.dim, 2 * self.dim))
        s[:self.dim, :self.dim] = eye - 0.5 * dt * dt * a
        s[:self.dim, self.dim:] = dt * minv
        s[self.dim:, :self.dim] = -dt * k + 0.25 * dt ** 3 * (k @ a)
        s[self.dim:, self.dim:] = eye - 0.5 * dt * dt * (k @ minv)
        return s

    def cfl_dt(self) -> float:
        """Leapfrog stability bound of the interior ladder modes."""
        return self.dx / self.line.v_p

    # -- state construction ---------------------------------------------------

    def initial_state(self, initial: ReducedState,
                      line_initial: LineInitialState | None = None):
        """Map reduced + line initial data onto ladder coordinates/momenta.

        Node velocities come from the canonical identities dPhi/dt =
        Cb^-1 (Q + Q0 e1) and dphi_0/dt = dPhi_1/dt + Q0/C_c; momenta are
        M times velocities, so node 0 reproduces Q0 = -C_c (dPhi1 - dphi0)/dt
        up to the vanishing half-cell capacitance term.
        """
        n = self.n_circ
        x_nodes = self.dx * np.arange(self.n_sections + 1)
        q_pos = np.zeros(self.dim)
        q_pos[:n] = initial.phi
        if line_initial is not None:
            q_pos[n:] = line_initial.phi_at(x_nodes)
        vel = np.zeros(self.dim)
        e1 = np.zeros(n)
        e1[0] = 1.0
        dphi = np.linalg.solve(self.cb, initial.q + initial.q0 * e1)
        vel[:n] = dphi
        vel[n] = dphi[0] + initial.q0 / self.topology.coupling_capacitance
        if line_initial is not None:
            vel[n + 1:] = line_initial.q_at(x_nodes[1:]) / self.line.c_per_len
        p = np.empty(self.dim)
        p[:n + 1] = self._head @ vel[:n + 1]
        p[n + 1:] = self.cells[1:] * vel[n + 1:]
        return q_pos, p

    def circuit_observables(self, q_pos, p):
        n = self.n_circ
        vel = self.velocities(p)
        v0 = vel[n]
        q0 = p[n] - self.cells[0] * v0
        return q_pos[:n].copy(), p[:n].copy(), q0, v0


def ladder_oracle(line: LineParams, n_sections: int, length: float,
                  topology: CircuitTopology, initial: ReducedState, t_grid,
                  line_initial: LineInitialState | None = None,
                  dt: float | None = None, courant: float = 0.5,
                  energy_drift_tol: float = 0.01) -> Trajectory:
    """Leapfrog the closed ladder+circuit system; return circuit observables.

    The requested window must satisfy the no-echo condition
    t_max < 2 length / v_p so that the open far end never influences x = 0.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    t_max = float(t_grid[-1])
    if t_max >= 2.0 * length / line.v_p:
        needed = line.v_p * t_max / 2.0
        raise NumericalPreconditionError(
            f"echo window violated: t_max={t_max:g} needs line length > {needed:g} "
            f"(have {length:g})")
    system = LadderSystem(topology, line, n_sections, length)
    dt_out = float(t_grid[1] - t_grid[0])
    if dt is None:
        dt = courant * system.cfl_dt()
    n_sub = max(1, int(np.ceil(dt_out / dt - 1e-12)))
    dt = dt_out / n_sub
    if dt > system.cfl_dt():
        raise NumericalPreconditionError(
            f"leapfrog unstable: dt={dt:g} exceeds CFL bound {system.cfl_dt():g}; "
            "decrease dt or the output spacing")

    q_pos, p = system.initial_state(initial, line_initial)
    n_out = len(t_grid)
    n = system.n_circ
    phi_out = np.empty((n_out, n))
    q_out = np.empty((n_out, n))
    q0_out = np.empty(n_out)
    v0_out = np.empty(n_out)
    energy = np.empty(n_out)

    grad = system.grad_potential(q_pos)
    for k in range(n_out):
        phi_out[k], q_out[k], q0_out[k], v0_out[k] = system.circuit_observables(q_pos, p)
        energy[k] = system.hamiltonian(q_pos, p)
        if k == n_out - 1:
            break
        for _ in range(n_sub):
            p_half = p - 0.5 * dt * grad
            q_pos = q_pos + dt * system.velocities(p_half)
            grad = system.grad_potential(q_pos)
            p = p_half - 0.5 * dt * grad
    if not np.all(np.isfinite(energy)):
        raise NumericalPreconditionError("ladder integration diverged; reduce dt")
    scale = max(abs(energy[0]), abs(energy).max() * 1e-12, 1e-300)
    drift = float(np.abs(energy - energy[0]).max() / scale)
    if drift > energy_drift_tol:
        raise NumericalPreconditionError(
            f"ladder energy drift {drift:.3g} exceeds {energy_drift_tol:.3g}; reduce dt")
    return Trajectory(t_grid=t_grid, phi=phi_out, q=q_out, q0=q0_out, v0=v0_out,
                      meta={"integrator": "leapfrog", "dt": float(dt),
                            "n_sections": n_sections, "dx": system.dx,
                            "energy_drift": drift, "energy0": float(energy[0])})
