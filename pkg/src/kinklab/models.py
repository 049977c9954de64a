"""Nonlinear chain models: potential energy and its exact derivatives.

Two one-dimensional lattices of unit-mass particles are supported:

* ``sine_gordon`` -- cosine substrate, nearest-neighbour springs, chain
  closed into a ring through a stiff winding spring so a fixed number of
  substrate periods is trapped (the topological charge).
* ``phi4`` -- double-well substrate ``k x**2 / 2 + x**4`` with ``k < 0``,
  nearest-neighbour springs, end particles anchored to their nearest well
  by stiff springs.

Positions are absolute for the sine-Gordon chain (default lattice constant
``2*pi``, one substrate period per site) and measured from the local well
for the phi4 chain (default lattice constant 0, wells at ``+-sqrt(-k/4)``).
All quantities are dimensionless.

The potential is harmonic in the springs, so third and fourth derivative
tensors are diagonal: only the on-site substrate survives beyond second
order.  ``derivatives`` therefore returns the full gradient and Hessian but
only the diagonals of the rank-3 and rank-4 tensors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

SINE_GORDON = "sine_gordon"
PHI4 = "phi4"
FIXED_ENDS = "fixed_ends"
PERIODIC_WINDING = "periodic_winding"

_KIND_ALIASES = {
    "sinegordon": SINE_GORDON,
    "sine_gordon": SINE_GORDON,
    "sg": SINE_GORDON,
    "phi4": PHI4,
    "phi_4": PHI4,
}
_BOUNDARY_ALIASES = {
    "fixedends": FIXED_ENDS,
    "fixed_ends": FIXED_ENDS,
    "periodicwinding": PERIODIC_WINDING,
    "periodic_winding": PERIODIC_WINDING,
}


def _canonical(value: str, aliases: dict, what: str) -> str:
    key = str(value).strip().lower().replace("-", "_")
    key_nosep = key.replace("_", "")
    if key in aliases:
        return aliases[key]
    if key_nosep in aliases:
        return aliases[key_nosep]
    raise ConfigError(f"unknown {what}: {value!r}")


@dataclass
class ModelSpec:
    """Static definition of a chain model.

    Parameters
    ----------
    kind : str
        ``"sine_gordon"`` or ``"phi4"``.
    n_particles : int
        Number of particles N (at least 3).
    couplings : array_like
        Per-bond spring constants ``g_i``, length N-1, all non-negative.
    lattice_const : float
        Equilibrium bond length ``a0``.
    end_stiffness : float
        Boundary spring constant ``g0 > 0``.
    substrate_k : float
        Quadratic substrate coefficient ``k`` (phi4 only, must be negative).
    topo_charge : int
        Number of extra substrate periods wound into the ring
        (sine-Gordon only).
    boundary : str
        ``"fixed_ends"`` (phi4) or ``"periodic_winding"`` (sine-Gordon).
    """

    kind: str
    n_particles: int
    couplings: np.ndarray
    lattice_const: float
    end_stiffness: float
    substrate_k: float = 0.0
    topo_charge: int = 0
    boundary: str = ""

    def __post_init__(self):
        self.kind = _canonical(self.kind, _KIND_ALIASES, "model kind")
        if not self.boundary:
            self.boundary = (
                PERIODIC_WINDING if self.kind == SINE_GORDON else FIXED_ENDS
            )
        self.boundary = _canonical(self.boundary, _BOUNDARY_ALIASES, "boundary")
        self.n_particles = int(self.n_particles)
        if self.n_particles < 3:
            raise ConfigError(f"n_particles must be >= 3, got {self.n_particles}")
        self.couplings = np.asarray(self.couplings, dtype=float)
        if self.couplings.shape != (self.n_particles - 1,):
            raise ConfigError(
                f"couplings must have length N-1 = {self.n_particles - 1}, "
                f"got shape {self.couplings.shape}"
            )
        if np.any(self.couplings < 0) or not np.all(np.isfinite(self.couplings)):
            raise ConfigError("couplings must be finite and non-negative")
        self.lattice_const = float(self.lattice_const)
        self.end_stiffness = float(self.end_stiffness)
        if not self.end_stiffness > 0:
            raise ConfigError("end_stiffness must be positive")
        self.substrate_k = float(self.substrate_k)
        self.topo_charge = int(self.topo_charge)
        if self.kind == PHI4:
            if self.substrate_k >= 0:
                raise ConfigError("phi4 requires substrate_k < 0")
            if self.boundary != FIXED_ENDS:
                raise ConfigError("phi4 pairs with fixed_ends boundary")
        else:
            if self.boundary != PERIODIC_WINDING:
                raise ConfigError("sine_gordon pairs with periodic_winding boundary")

    @property
    def well_position(self) -> float:
        """Location of the positive substrate well (phi4 only)."""
        if self.kind != PHI4:
            raise ConfigError("well_position is defined for phi4 only")
        return math.sqrt(-self.substrate_k / 4.0)

    def to_json_dict(self) -> dict:
        return {
            "kind": self.kind,
            "n": self.n_particles,
            "g": [float(v) for v in self.couplings],
            "a0": self.lattice_const,
            "k": self.substrate_k,
            "g0": self.end_stiffness,
            "s": self.topo_charge,
            "boundary": self.boundary,
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "ModelSpec":
        """Build a spec from its JSON document.

        ``g`` may be an explicit per-bond list or a generator block such as
        ``{"profile": "constant", "value": 4.0}`` or
        ``{"profile": "gaussian_well", "base": 1.0, "depth": 0.9,
        "center": 20.5, "width": 3.0}``.
        """
        try:
            kind = doc["kind"]
            n = int(doc["n"])
        except KeyError as exc:
            raise ConfigError(f"model config missing key: {exc.args[0]}") from exc
        g_entry = doc.get("g")
        if g_entry is None:
            raise ConfigError("model config missing key: g")
        if isinstance(g_entry, dict):
            g = expand_profile(n, g_entry)
        else:
            g = np.asarray(g_entry, dtype=float)
        kind_c = _canonical(kind, _KIND_ALIASES, "model kind")
        a0_default = 2.0 * math.pi if kind_c == SINE_GORDON else 0.0
        g0_default = 100.0 * float(np.max(g)) if len(g) else 1.0
        return cls(
            kind=kind,
            n_particles=n,
            couplings=g,
            lattice_const=float(doc.get("a0", a0_default)),
            end_stiffness=float(doc.get("g0", g0_default)),
            substrate_k=float(doc.get("k", 0.0)),
            topo_charge=int(doc.get("s", 0)),
            boundary=doc.get("boundary", ""),
        )


def sine_gordon_spec(n_particles, couplings, topo_charge=1, lattice_const=None,
                     end_stiffness=None) -> ModelSpec:
    """Convenience constructor with the standard sine-Gordon defaults."""
    g = np.asarray(couplings, dtype=float)
    if g.ndim == 0:
        g = np.full(n_particles - 1, float(g))
    if lattice_const is None:
        lattice_const = 2.0 * math.pi
    if end_stiffness is None:
        # stiff enough to pin the winding without wrecking conditioning
        end_stiffness = 100.0 * float(np.max(g))
    return ModelSpec(
        kind=SINE_GORDON,
        n_particles=n_particles,
        couplings=g,
        lattice_const=lattice_const,
        end_stiffness=end_stiffness,
        topo_charge=topo_charge,
        boundary=PERIODIC_WINDING,
    )


def phi4_spec(n_particles, couplings, substrate_k, lattice_const=0.0,
              end_stiffness=None) -> ModelSpec:
    """Convenience constructor with the standard phi4 defaults."""
    g = np.asarray(couplings, dtype=float)
    if g.ndim == 0:
        g = np.full(n_particles - 1, float(g))
    if end_stiffness is None:
        end_stiffness = 100.0 * float(np.max(g))
    return ModelSpec(
        kind=PHI4,
        n_particles=n_particles,
        couplings=g,
        substrate_k=substrate_k,
        lattice_const=lattice_const,
        end_stiffness=end_stiffness,
        boundary=FIXED_ENDS,
    )


def constant_profile(n_particles: int, value: float) -> np.ndarray:
    """Uniform per-bond coupling array of length N-1."""
    return np.full(n_particles - 1, float(value))


def gaussian_well_profile(n_particles: int, base: float, depth: float,
                          center: float, width: float) -> np.ndarray:
    """Coupling profile with a Gaussian dip.

    Bond ``i`` (1-based, joining particles ``i`` and ``i+1``) sits at
    position ``i + 0.5``; its coupling is
    ``base - depth * exp(-(pos - center)**2 / (2 * width**2))``,
    floored at zero.  A dip centred on the kink softens the lattice there
    and pushes the localized modes deeper below the band.
    """
    pos = np.arange(1, n_particles) + 0.5
    g = base - depth * np.exp(-((pos - center) ** 2) / (2.0 * width ** 2))
    return np.clip(g, 0.0, None)


def expand_profile(n_particles: int, block: dict) -> np.ndarray:
    """Expand a profile generator block into an explicit per-bond array."""
    profile = block.get("profile")
    if profile == "constant":
        return constant_profile(n_particles, block["value"])
    if profile == "gaussian_well":
        return gaussian_well_profile(
            n_particles, block["base"], block["depth"],
            block["center"], block["width"],
        )
    raise ConfigError(f"unknown coupling profile: {profile!r}")


@dataclass
class ChainState:
    """Instantaneous positions and velocities of the chain."""

    positions: np.ndarray
    velocities: np.ndarray

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=float)
        self.velocities = np.asarray(self.velocities, dtype=float)
        if self.positions.shape != self.velocities.shape or self.positions.ndim != 1:
            raise ConfigError("positions and velocities must be equal-length vectors")
        if not (np.all(np.isfinite(self.positions))
                and np.all(np.isfinite(self.velocities))):
            raise ConfigError("chain state entries must be finite")

    def copy(self) -> "ChainState":
        return ChainState(self.positions.copy(), self.velocities.copy())


@dataclass
class DerivativeBundle:
    """Derivatives of the potential at one configuration.

    ``hessian`` is stored exactly symmetric.  ``third_diag[i]`` and
    ``fourth_diag[i]`` are the only nonzero entries of the rank-3 and
    rank-4 derivative tensors (index ``iii`` resp. ``iiii``); every
    off-diagonal entry is identically zero by the harmonic-spring
    structure, not merely small.
    """

    grad: np.ndarray
    hessian: np.ndarray
    third_diag: np.ndarray
    fourth_diag: np.ndarray


def _check_positions(spec: ModelSpec, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (spec.n_particles,):
        raise ConfigError(
            f"positions must have length {spec.n_particles}, got shape {x.shape}"
        )
    return x


def _end_anchor(x_end: float, well: float) -> float:
    # ends anchor to the nearest well; x == 0 resolves to the positive one
    return well if x_end >= 0.0 else -well


def potential_energy(spec: ModelSpec, x) -> float:
    """Total potential energy of configuration ``x``.

    Sum of spring, substrate and boundary terms, accumulated in ascending
    site order so repeated evaluations are bit-identical.
    """
    x = _check_positions(spec, x)
    n = spec.n_particles
    a0 = spec.lattice_const
    g = spec.couplings

    v = 0.0
    for i in range(n - 1):
        d = x[i + 1] - x[i] - a0
        v += 0.5 * g[i] * d * d
    if spec.kind == SINE_GORDON:
        for i in range(n):
            v += 1.0 - math.cos(x[i])
        r = x[0] - x[n - 1] + (n - 1 + spec.topo_charge) * a0
        v += 0.5 * spec.end_stiffness * r * r
    else:
        k = spec.substrate_k
        for i in range(n):
            xi = x[i]
            v += 0.5 * k * xi * xi + xi ** 4
        w = spec.well_position
        r1 = x[0] - _end_anchor(x[0], w)
        rn = x[n - 1] - _end_anchor(x[n - 1], w)
        v += 0.5 * spec.end_stiffness * (r1 * r1)
        v += 0.5 * spec.end_stiffness * (rn * rn)
    return v


def gradient(spec: ModelSpec, x) -> np.ndarray:
    """Gradient of the potential alone; the cheap path for time stepping."""
    x = _check_positions(spec, x)
    n = spec.n_particles
    g0 = spec.end_stiffness
    grad = np.empty(n)

    d = x[1:] - x[:-1] - spec.lattice_const
    gd = spec.couplings * d
    if spec.kind == SINE_GORDON:
        np.sin(x, out=grad)
        r = x[0] - x[n - 1] + (n - 1 + spec.topo_charge) * spec.lattice_const
        grad[0] += g0 * r
        grad[n - 1] -= g0 * r
    else:
        grad[:] = spec.substrate_k * x + 4.0 * x ** 3
        w = spec.well_position
        grad[0] += g0 * (x[0] - _end_anchor(x[0], w))
        grad[n - 1] += g0 * (x[n - 1] - _end_anchor(x[n - 1], w))
    grad[:-1] -= gd
    grad[1:] += gd
    return grad


def derivatives(spec: ModelSpec, x) -> DerivativeBundle:
    """Analytic gradient, Hessian and diagonal 3rd/4th tensors at ``x``."""
    x = _check_positions(spec, x)
    n = spec.n_particles
    g = spec.couplings
    a0 = spec.lattice_const
    g0 = spec.end_stiffness

    grad = np.zeros(n)
    hess = np.zeros((n, n))

    # springs: tridiagonal block, independent of the substrate
    d = x[1:] - x[:-1] - a0
    gd = g * d
    grad[:-1] -= gd
    grad[1:] += gd
    idx = np.arange(n - 1)
    np.add.at(hess, (idx, idx), g)
    np.add.at(hess, (idx + 1, idx + 1), g)
    hess[idx, idx + 1] -= g
    hess[idx + 1, idx] -= g

    diag = np.arange(n)
    if spec.kind == SINE_GORDON:
        grad += np.sin(x)
        hess[diag, diag] += np.cos(x)
        third = -np.sin(x)
        fourth = -np.cos(x)
        r = x[0] - x[n - 1] + (n - 1 + spec.topo_charge) * a0
        grad[0] += g0 * r
        grad[n - 1] -= g0 * r
        hess[0, 0] += g0
        hess[n - 1, n - 1] += g0
        hess[0, n - 1] -= g0
        hess[n - 1, 0] -= g0
    else:
        k = spec.substrate_k
        grad += k * x + 4.0 * x ** 3
        hess[diag, diag] += k + 12.0 * x ** 2
        third = 24.0 * x
        fourth = np.full(n, 24.0)
        w = spec.well_position
        grad[0] += g0 * (x[0] - _end_anchor(x[0], w))
        grad[n - 1] += g0 * (x[n - 1] - _end_anchor(x[n - 1], w))
        hess[0, 0] += g0
        hess[n - 1, n - 1] += g0

    return DerivativeBundle(grad=grad, hessian=hess, third_diag=third,
                            fourth_diag=fourth)


def continuum_seed(spec: ModelSpec, center: float | None = None) -> np.ndarray:
    """Continuum kink profile sampled on the lattice sites.

    Used as a starting guess for the minimizer.  The profile width is set
    from the mean coupling; location-dependent couplings only shift where
    the minimizer ends up, not whether it converges.

    Parameters
    ----------
    spec : ModelSpec
    center : float, optional
        Kink centre in 1-based site coordinates; defaults to the chain
        middle ``(N + 1) / 2``.
    """
    n = spec.n_particles
    if center is None:
        center = 0.5 * (n + 1)
    if not 1.0 <= center <= float(n):
        raise ConfigError(f"center must lie within [1, {n}], got {center}")
    g_mean = float(np.mean(spec.couplings))
    if g_mean <= 0:
        raise ConfigError("continuum seed needs a positive mean coupling")
    sites = np.arange(1, n + 1, dtype=float)
    if spec.kind == SINE_GORDON:
        width = math.sqrt(g_mean)
        return sites * spec.lattice_const + 4.0 * spec.topo_charge * np.arctan(
            np.exp((sites - center) / width)
        )
    w = spec.well_position
    b = math.sqrt(-spec.substrate_k / (2.0 * g_mean))
    return w * np.tanh(b * (sites - center))
