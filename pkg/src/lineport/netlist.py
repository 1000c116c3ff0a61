"""Lumped-circuit description and its reduction to the one-port form.

The circuit has N internal nodes labeled 1..N, ground N+1, and couples to the
transmission line's end node 0 through a single capacitor C_c (fixed by
convention between nodes 0 and 1). Only capacitors, linear inductors, and
Josephson junctions are supported, and every internal node must be active:
at least one capacitor and one inductive element incident.

Reduction produces the quantities the reduced dynamics needs: the grounded
capacitance matrix Cb, its inverse, the coupling row p (first row of Cb^-1,
so that Cb @ p equals the first unit vector), the series capacitance C_p with
1/C_p = 1/C_c + p_1, the split Cb^-1 = A + B with B = C_p p p^T, and the
port time constant tau = Z_c * C_p.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.constants import e as _e_charge, hbar as _hbar
from scipy.linalg import cho_factor, cho_solve

from .errors import NetlistParseError, ValidationError

#: default junction flux scale, the reduced flux quantum hbar/2e in weber
PHI0_JOSEPHSON = _hbar / (2.0 * _e_charge)

CONDITION_WARNING_THRESHOLD = 1e12


@dataclass(frozen=True)
class CircuitTopology:
    """Node/branch description of the lumped circuit plus its line coupling.

    capacitors/inductors are (i, j, value) with node indices in 1..N+1
    (N+1 = ground); junctions are (i, j, josephson_energy, flux_scale).
    Node 0 never appears in branch lists: it couples only through
    ``coupling_capacitance``.
    """

    node_count: int
    capacitors: tuple = ()
    inductors: tuple = ()
    junctions: tuple = ()
    coupling_capacitance: float = 0.0

    def __post_init__(self):
        n = self.node_count
        if n < 1:
            raise ValidationError("circuit needs at least one internal node")
        if not (self.coupling_capacitance > 0):
            raise ValidationError("coupling capacitance C_c must be positive")
        object.__setattr__(self, "capacitors", tuple(tuple(c) for c in self.capacitors))
        object.__setattr__(self, "inductors", tuple(tuple(l) for l in self.inductors))
        junctions = []
        for jn in self.junctions:
            if len(jn) == 3:
                jn = (*jn, PHI0_JOSEPHSON)
            junctions.append(tuple(jn))
        object.__setattr__(self, "junctions", tuple(junctions))
        for i, j, c in self.capacitors:
            self._check_branch(i, j, "capacitor")
            if not (c > 0):
                raise ValidationError(f"capacitance must be positive, got {c!r}")
        for i, j, l in self.inductors:
            self._check_branch(i, j, "inductor")
            if not (l > 0):
                raise ValidationError(f"inductance must be positive, got {l!r}")
        for i, j, ej, phi0 in self.junctions:
            self._check_branch(i, j, "junction")
            if not (ej > 0) or not (phi0 > 0):
                raise ValidationError("junction energy and flux scale must be positive")

    def _check_branch(self, i, j, kind):
        n = self.node_count
        for node in (i, j):
            if node == 0:
                raise ValidationError(
                    f"{kind} may not reference node 0; the line couples only through C_c")
            if not (1 <= node <= n + 1):
                raise ValidationError(f"{kind} node {node} outside 1..{n + 1}")
        if i == j:
            raise ValidationError(f"{kind} connects node {i} to itself")

    @property
    def ground(self) -> int:
        return self.node_count + 1

    def validate_active(self):
        """Check the active-node assumption: every internal node carries at
        least one capacitor and one inductive element."""
        n = self.node_count
        has_cap = [False] * (n + 1)
        has_ind = [False] * (n + 1)
        for i, j, _ in self.capacitors:
            for node in (i, j):
                if node <= n:
                    has_cap[node] = True
        for branch in list(self.inductors) + [jn[:2] for jn in self.junctions]:
            for node in branch[:2]:
                if node <= n:
                    has_ind[node] = True
        for node in range(1, n + 1):
            if not has_cap[node]:
                raise ValidationError(f"inactive node {node}: no incident capacitor")
            if not has_ind[node]:
                raise ValidationError(f"inactive node {node}: no incident inductive element")

    @property
    def is_linear(self) -> bool:
        return len(self.junctions) == 0


@dataclass(frozen=True)
class ReducedModel:
    """Matrices of the reduced one-port dynamics; see module docstring."""

    cb: np.ndarray
    cb_inv: np.ndarray
    p: np.ndarray
    c_p: float
    a: np.ndarray
    b: np.ndarray
    tau: float
    z_c: float
    coupling_capacitance: float
    warnings: tuple = field(default=())

    @property
    def n_nodes(self) -> int:
        return len(self.p)

    def to_json_dict(self) -> dict:
        return {
            "cb": [float(v) for v in self.cb.ravel()],
            "p": [float(v) for v in self.p],
            "c_p": float(self.c_p),
            "a": [float(v) for v in self.a.ravel()],
            "b": [float(v) for v in self.b.ravel()],
            "tau": float(self.tau),
            "z_c": float(self.z_c),
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_json_dict(), **kwargs)

    @classmethod
    def from_json_dict(cls, d) -> "ReducedModel":
        p = np.asarray(d["p"], dtype=float)
        n = len(p)
        cb = np.asarray(d["cb"], dtype=float).reshape(n, n)
        a = np.asarray(d["a"], dtype=float).reshape(n, n)
        b = np.asarray(d["b"], dtype=float).reshape(n, n)
        c_p = float(d["c_p"])
        tau = float(d["tau"])
        z_c = float(d["z_c"])
        # 1/C_p = 1/C_c + p_1 recovers the coupling capacitor
        c_c = 1.0 / (1.0 / c_p - p[0])
        return cls(cb=cb, cb_inv=a + b, p=p, c_p=c_p, a=a, b=b, tau=tau,
                   z_c=z_c, coupling_capacitance=c_c)

    @classmethod
    def from_json(cls, text) -> "ReducedModel":
        return cls.from_json_dict(json.loads(text))


def build_capacitance_matrix(topology: CircuitTopology) -> np.ndarray:
    """(N+1)x(N+1) capacitance matrix over nodes 1..N+1.

    Off-diagonal (r, s) entries are -C_rs (capacitances between the same node
    pair summed); each diagonal entry is the opposite of its row sum, so all
    row sums vanish. The coupling capacitor C_c is not part of this matrix.
    """
    n = topology.node_count
    full = np.zeros((n + 1, n + 1))
    for i, j, c in topology.capacitors:
        full[i - 1, j - 1] -= c
        full[j - 1, i - 1] -= c
        full[i - 1, i - 1] += c
        full[j - 1, j - 1] += c
    return full


def reduce_ground(full_matrix, ground_index) -> np.ndarray:
    """Remove the ground node's row and column (``ground_index`` is 1-based)."""
    full_matrix = np.asarray(full_matrix, dtype=float)
    m = full_matrix.shape[0]
    if full_matrix.shape != (m, m):
        raise ValidationError("capacitance matrix must be square")
    if not np.allclose(full_matrix, full_matrix.T, rtol=1e-12, atol=0.0):
        raise ValidationError("capacitance matrix must be symmetric")
    if not (1 <= ground_index <= m):
        raise ValidationError(f"ground index {ground_index} outside 1..{m}")
    keep = [k for k in range(m) if k != ground_index - 1]
    cb = full_matrix[np.ix_(keep, keep)]
    try:
        cho_factor(cb)
    except np.linalg.LinAlgError:
        raise ValidationError(
            "grounded capacitance matrix is singular: inactive node / floating island")
    return cb


def derive_reduced_model(topology: CircuitTopology, z_c: float,
                         condition_threshold: float = CONDITION_WARNING_THRESHOLD,
                         ) -> ReducedModel:
    """Assemble the reduced one-port model for a line of impedance ``z_c``."""
    if not (z_c > 0):
        raise ValidationError("characteristic impedance must be positive")
    topology.validate_active()
    full = build_capacitance_matrix(topology)
    cb = reduce_ground(full, topology.ground)
    factor = cho_factor(cb)
    cb_inv = cho_solve(factor, np.eye(len(cb)))
    cb_inv = 0.5 * (cb_inv + cb_inv.T)
    warnings = []
    cond = np.linalg.cond(cb)
    if cond > condition_threshold:
        warnings.append(
            f"grounded capacitance matrix condition number {cond:.3g} exceeds "
            f"{condition_threshold:.3g}; reduced matrices may lose accuracy")
    p = cb_inv[0].copy()
    c_c = topology.coupling_capacitance
    c_p = 1.0 / (1.0 / c_c + p[0])
    b = c_p * np.outer(p, p)
    a = cb_inv - b
    return ReducedModel(cb=cb, cb_inv=cb_inv, p=p, c_p=c_p, a=a, b=b,
                        tau=z_c * c_p, z_c=z_c, coupling_capacitance=c_c,
                        warnings=tuple(warnings))


def invariant_report(model: ReducedModel) -> dict:
    """Residuals of the defining identities, for validation output."""
    n = model.n_nodes
    e1 = np.zeros(n)
    e1[0] = 1.0
    cb_norm = np.abs(model.cb).max()
    inv_norm = np.abs(model.cb_inv).max()
    return {
        "cb_p_residual": float(np.abs(model.cb @ model.p - e1).max() / cb_norm / np.abs(model.p).max()),
        "c_p_residual": float(abs(1.0 / model.c_p - (1.0 / model.coupling_capacitance + model.p[0]))
                              * model.c_p),
        "a_plus_b_residual": float(np.abs(model.a + model.b - model.cb_inv).max() / inv_norm),
        "tau_residual": float(abs(model.tau - model.z_c * model.c_p) / model.tau),
        "cb_symmetry": float(np.abs(model.cb - model.cb.T).max() / cb_norm),
    }


def potential_gradient(topology: CircuitTopology, phi) -> np.ndarray:
    """Gradient of the inductive potential energy with respect to node fluxes.

    The potential sums (phi_i - phi_j)^2 / 2L over linear inductors and
    -E_J cos((phi_i - phi_j)/phi0) over junctions; ground flux is zero.
    """
    phi = np.asarray(phi, dtype=float)
    n = topology.node_count
    if phi.shape != (n,):
        raise ValidationError(f"flux vector must have shape ({n},)")
    if not np.all(np.isfinite(phi)):
        raise ValidationError("flux vector must be finite")

    def node_flux(k):
        return phi[k - 1] if k <= n else 0.0

    grad = np.zeros(n)
    for i, j, l in topology.inductors:
        force = (node_flux(i) - node_flux(j)) / l
        if i <= n:
            grad[i - 1] += force
        if j <= n:
            grad[j - 1] -= force
    for i, j, ej, phi0 in topology.junctions:
        force = (ej / phi0) * math.sin((node_flux(i) - node_flux(j)) / phi0)
        if i <= n:
            grad[i - 1] += force
        if j <= n:
            grad[j - 1] -= force
    return grad


def potential_energy(topology: CircuitTopology, phi) -> float:
    phi = np.asarray(phi, dtype=float)
    n = topology.node_count

    def node_flux(k):
        return phi[k - 1] if k <= n else 0.0

    u = 0.0
    for i, j, l in topology.inductors:
        u += 0.5 * (node_flux(i) - node_flux(j)) ** 2 / l
    for i, j, ej, phi0 in topology.junctions:
        u -= ej * math.cos((node_flux(i) - node_flux(j)) / phi0)
    return u


def stiffness_matrix(topology: CircuitTopology) -> np.ndarray:
    """Inductive stiffness K with grad U = K phi; linear circuits only."""
    if not topology.is_linear:
        raise ValidationError("stiffness matrix requires a linear circuit (no junctions)")
    n = topology.node_count
    k = np.zeros((n, n))
    for i, j, l in topology.inductors:
        w = 1.0 / l
        if i <= n:
            k[i - 1, i - 1] += w
        if j <= n:
            k[j - 1, j - 1] += w
        if i <= n and j <= n:
            k[i - 1, j - 1] -= w
            k[j - 1, i - 1] -= w
    return k


def parse_netlist(text: str) -> CircuitTopology:
    """Parse the plain-text netlist format.

    One element per line::

        C i j value      # capacitor [farad]
        L i j value      # inductor [henry]
        J i j E_J [phi0] # junction [joule], flux scale defaults to hbar/2e
        COUPLE value     # coupling capacitor C_c [farad], nodes 0-1
        GROUND auto      # ground = highest node index (or an explicit index)

    '#' starts a comment; blank lines are ignored.
    """
    capacitors, inductors, junctions = [], [], []
    couple = None
    ground_spec = None
    max_node = 0

    def parse_float(token, line_no, what):
        try:
            return float(token)
        except ValueError:
            raise NetlistParseError(f"bad {what} {token!r}", line_no)

    def parse_node(token, line_no):
        try:
            node = int(token)
        except ValueError:
            raise NetlistParseError(f"bad node index {token!r}", line_no)
        return node

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        kind = tokens[0].upper()
        if kind in ("C", "L"):
            if len(tokens) != 4:
                raise NetlistParseError(f"{kind} line needs 'i j value'", line_no)
            i = parse_node(tokens[1], line_no)
            j = parse_node(tokens[2], line_no)
            value = parse_float(tokens[3], line_no, "element value")
            (capacitors if kind == "C" else inductors).append((i, j, value))
            max_node = max(max_node, i, j)
        elif kind == "J":
            if len(tokens) not in (4, 5):
                raise NetlistParseError("J line needs 'i j E_J [phi0]'", line_no)
            i = parse_node(tokens[1], line_no)
            j = parse_node(tokens[2], line_no)
            ej = parse_float(tokens[3], line_no, "junction energy")
            phi0 = (parse_float(tokens[4], line_no, "flux scale")
                    if len(tokens) == 5 else PHI0_JOSEPHSON)
            junctions.append((i, j, ej, phi0))
            max_node = max(max_node, i, j)
        elif kind == "COUPLE":
            if len(tokens) != 2:
                raise NetlistParseError("COUPLE line needs a single value", line_no)
            couple = parse_float(tokens[1], line_no, "coupling capacitance")
        elif kind == "GROUND":
            if len(tokens) != 2:
                raise NetlistParseError("GROUND line needs 'auto' or a node index", line_no)
            ground_spec = (tokens[1], line_no)
        else:
            raise NetlistParseError(f"unknown element {tokens[0]!r}", line_no)

    if couple is None:
        raise NetlistParseError("missing COUPLE line")
    if max_node < 2:
        raise NetlistParseError("netlist must reference at least nodes 1 and ground")
    if ground_spec is not None and ground_spec[0].lower() != "auto":
        ground = parse_node(ground_spec[0], ground_spec[1])
        if ground != max_node:
            raise NetlistParseError(
                f"ground must be the highest node index ({max_node})", ground_spec[1])
    try:
        return CircuitTopology(
            node_count=max_node - 1,
            capacitors=tuple(capacitors),
            inductors=tuple(inductors),
            junctions=tuple(junctions),
            coupling_capacitance=couple,
        )
    except ValidationError:
        raise


def parse_netlist_file(path) -> CircuitTopology:
    with open(path) as fh:
        return parse_netlist(fh.read())
