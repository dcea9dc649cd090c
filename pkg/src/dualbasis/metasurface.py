"""Spatially varying Jones operator of the dual-basis metasurface.

The unit cell carries a linear (H/V) phase ramp along x and a circular (R/L)
phase ramp along y::

    J(x, y) = exp(i a(x) sigma_z) exp(i b(y) sigma_y)
    a(x) = 2 pi beta_z frac(x / period_x)
    b(y) = 2 pi beta_y frac(y / period_y)

``beta_z`` and ``beta_y`` are ramp depths as fractions of a full 2 pi winding.
Full depth gives a blazed grating that sends each eigenpolarization into a
single first order.

Meta-atoms are modelled at the Jones level only. The effective index of a fin
of width ``w`` is the phenomenological map

    n_eff(w) = n_env + (n_host - n_env) * clip((w / w_max)**2, 0, 1)

with ``w_max`` equal to the lattice pitch. It stands in for a full-wave solver
and carries no dispersion. The helical inclusion is reduced to a circular
retardance ``phi_c`` applied as ``exp(i phi_c sigma_y)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from .polarization import pauli

SIGMA_Y = pauli("Y")
SIGMA_Z = pauli("Z")

DEFAULT_PERIOD_UM = 8.0
DEFAULT_PITCH_UM = 0.5
DEFAULT_WAVELENGTH_UM = 1.55
DEFAULT_N_HOST = 3.48
DEFAULT_N_ENV = 1.0
# Tall enough that n_eff spans more than one 2 pi of propagation phase.
DEFAULT_HEIGHT_NM = 1000.0

ARCHITECTURES = ("ChiralRetarder", "GeometricPhase")
MIN_SAMPLES = 8


@dataclass(frozen=True)
class PhaseProfile:
    """Phase ramps over one rectangular unit cell.

    For ``shape="CustomSamples"`` the ramp values ``2 phi`` (radians) are given
    directly as piecewise-constant samples over equal sub-intervals of each
    period, and the depths are ignored.
    """

    period_x: float = DEFAULT_PERIOD_UM
    period_y: float = DEFAULT_PERIOD_UM
    depth_z: float = 1.0
    depth_y: float = 1.0
    shape: str = "SawtoothRamp"
    samples_x: tuple | None = None
    samples_y: tuple | None = None

    def __post_init__(self):
        if not (self.period_x > 0 and self.period_y > 0):
            raise ValueError("periods must be positive")
        for name in ("depth_z", "depth_y"):
            val = getattr(self, name)
            if not 0.0 <= val <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {val!r}")
        if self.shape == "CustomSamples":
            for name in ("samples_x", "samples_y"):
                val = getattr(self, name)
                if val is None or len(val) < MIN_SAMPLES:
                    raise ValueError(f"{name} needs at least {MIN_SAMPLES} samples")
                object.__setattr__(self, name, tuple(float(v) for v in val))
        elif self.shape != "SawtoothRamp":
            raise ValueError(f"unknown profile shape {self.shape!r}")

    def linear_phase(self, x) -> np.ndarray:
        """``2 phi_lin(x)`` in radians."""
        u = np.mod(np.asarray(x, dtype=float) / self.period_x, 1.0)
        if self.shape == "CustomSamples":
            return _piecewise(self.samples_x, u)
        return 2 * np.pi * self.depth_z * u

    def circular_phase(self, y) -> np.ndarray:
        """``2 phi_circ(y)`` in radians."""
        u = np.mod(np.asarray(y, dtype=float) / self.period_y, 1.0)
        if self.shape == "CustomSamples":
            return _piecewise(self.samples_y, u)
        return 2 * np.pi * self.depth_y * u


def _piecewise(samples: Sequence[float], u: np.ndarray) -> np.ndarray:
    vals = np.asarray(samples, dtype=float)
    idx = np.minimum((u * len(vals)).astype(int), len(vals) - 1)
    return vals[idx]


def linear_retarder(a) -> np.ndarray:
    """``exp(i a sigma_z)``, broadcast over ``a``."""
    a = np.asarray(a, dtype=float)
    out = np.zeros(a.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = np.exp(1j * a)
    out[..., 1, 1] = np.exp(-1j * a)
    return out


def circular_retarder(b) -> np.ndarray:
    """``exp(i b sigma_y) = cos b I + i sin b sigma_y``, broadcast over ``b``."""
    b = np.asarray(b, dtype=float)
    c, s = np.cos(b), np.sin(b)
    out = np.zeros(b.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = c
    out[..., 0, 1] = s
    out[..., 1, 0] = -s
    out[..., 1, 1] = c
    return out


def eq1_jones_at(profile: PhaseProfile, x, y) -> np.ndarray:
    """Jones matrix of the ideal dual-ramp surface at ``(x, y)`` (µm).

    ``x`` and ``y`` broadcast against each other; the result has trailing
    shape ``(2, 2)``.
    """
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    return linear_retarder(profile.linear_phase(x)) @ circular_retarder(profile.circular_phase(y))


# -- meta-atoms -------------------------------------------------------------


@dataclass(frozen=True)
class MetaAtom:
    """One nanopost. Lengths in nm, rotation in radians."""

    w1: float
    w2: float
    theta: float = 0.0
    height: float = DEFAULT_HEIGHT_NM
    n_host: float = DEFAULT_N_HOST
    n_env: float = DEFAULT_N_ENV
    circ_retardance: float = 0.0
    w_max: float = DEFAULT_PITCH_UM * 1e3

    def __post_init__(self):
        if not (self.w1 > 0 and self.w2 > 0 and self.height > 0):
            raise ValueError("widths and height must be positive")
        if not self.n_host > self.n_env >= 1.0:
            raise ValueError("need n_host > n_env >= 1")
        if self.w_max <= 0:
            raise ValueError("w_max must be positive")


def effective_index(w, n_host: float = DEFAULT_N_HOST, n_env: float = DEFAULT_N_ENV,
                    w_max: float = DEFAULT_PITCH_UM * 1e3) -> np.ndarray:
    u = np.clip((np.asarray(w, dtype=float) / w_max) ** 2, 0.0, 1.0)
    return n_env + (n_host - n_env) * u


def width_for_index(n, n_host: float = DEFAULT_N_HOST, n_env: float = DEFAULT_N_ENV,
                    w_max: float = DEFAULT_PITCH_UM * 1e3) -> np.ndarray:
    """Inverse of :func:`effective_index` on ``[n_env, n_host]``."""
    u = (np.asarray(n, dtype=float) - n_env) / (n_host - n_env)
    if np.any(u < -1e-12) or np.any(u > 1 + 1e-12):
        raise ValueError("index outside [n_env, n_host]")
    return w_max * np.sqrt(np.clip(u, 0.0, 1.0))


def rotation(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]], dtype=complex)


def atom_phases(atom: MetaAtom, wavelength_nm: float) -> tuple[float, float]:
    k = 2 * np.pi * atom.height / wavelength_nm
    n1, n2 = effective_index([atom.w1, atom.w2], atom.n_host, atom.n_env, atom.w_max)
    return float(k * n1), float(k * n2)


def atom_jones(atom: MetaAtom, wavelength_nm: float) -> np.ndarray:
    """``R(theta) diag(e^{i phi1}, e^{i phi2}) R(-theta) exp(i phi_c sigma_y)``.

    With a half-wave retardance the rotated rod maps ``R -> exp(+2i theta) L``
    and ``L -> exp(-2i theta) R`` under this package's conventions.
    """
    if wavelength_nm <= 0:
        raise ValueError("wavelength must be positive")
    phi1, phi2 = atom_phases(atom, wavelength_nm)
    rot = rotation(atom.theta)
    lin = rot @ np.diag([np.exp(1j * phi1), np.exp(1j * phi2)]) @ rot.T
    return lin @ circular_retarder(atom.circ_retardance)


# -- sampled fields ---------------------------------------------------------


@dataclass(frozen=True, eq=False)
class JonesField:
    """Jones matrices on a midpoint grid over one unit cell.

    ``samples[i, j]`` sits at ``((i + 1/2) dx, (j + 1/2) dy)``.
    """

    samples: np.ndarray
    period_x: float
    period_y: float

    def __post_init__(self):
        arr = np.array(self.samples, dtype=complex)
        if arr.ndim != 4 or arr.shape[2:] != (2, 2):
            raise ValueError(f"samples must have shape (Nx, Ny, 2, 2), got {arr.shape}")
        if arr.shape[0] < MIN_SAMPLES or arr.shape[1] < MIN_SAMPLES:
            raise ValueError(f"grid must be at least {MIN_SAMPLES}x{MIN_SAMPLES}")
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)

    @property
    def shape(self) -> tuple[int, int]:
        return self.samples.shape[:2]

    @property
    def spacing(self) -> tuple[float, float]:
        nx, ny = self.shape
        return self.period_x / nx, self.period_y / ny

    def coordinates(self) -> tuple[np.ndarray, np.ndarray]:
        nx, ny = self.shape
        dx, dy = self.spacing
        return (np.arange(nx) + 0.5) * dx, (np.arange(ny) + 0.5) * dy

    def max_unitarity_error(self) -> float:
        prod = np.conj(np.swapaxes(self.samples, -1, -2)) @ self.samples
        return float(np.max(np.linalg.norm(prod - np.eye(2), axis=(-2, -1))))

    def to_dict(self) -> dict:
        nx, ny = self.shape
        dx, dy = self.spacing
        flat = self.samples.reshape(-1)
        return {
            "type": "JonesField",
            "nx": nx,
            "ny": ny,
            "period_x": self.period_x,
            "period_y": self.period_y,
            "spacing_x": dx,
            "spacing_y": dy,
            "layout": "row-major [ix][iy][row][col], entries as [re, im]",
            "entries": [[float(z.real), float(z.imag)] for z in flat],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "JonesField":
        if doc.get("type") != "JonesField":
            raise ValueError("not a JonesField document")
        pairs = np.asarray(doc["entries"], dtype=float)
        data = (pairs[:, 0] + 1j * pairs[:, 1]).reshape(doc["nx"], doc["ny"], 2, 2)
        return cls(data, float(doc["period_x"]), float(doc["period_y"]))

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def loads(cls, text: str) -> "JonesField":
        return cls.from_dict(json.loads(text))


def sample_field(source, nx: int, ny: int) -> JonesField:
    """Sample a :class:`PhaseProfile` or resample a :class:`JonesField`.

    Profiles are evaluated at cell midpoints. Fields are resampled by taking
    the nearest existing site, which is the identity when the grid matches.
    """
    if nx < MIN_SAMPLES or ny < MIN_SAMPLES:
        raise ValueError(f"grid too coarse: need at least {MIN_SAMPLES} samples per axis")
    if isinstance(source, PhaseProfile):
        xs = (np.arange(nx) + 0.5) * source.period_x / nx
        ys = (np.arange(ny) + 0.5) * source.period_y / ny
        grid = eq1_jones_at(source, xs[:, None], ys[None, :])
        return JonesField(grid, source.period_x, source.period_y)
    if isinstance(source, JonesField):
        sx, sy = source.shape
        if (sx, sy) == (nx, ny):
            return source
        ix = np.minimum(((np.arange(nx) + 0.5) * sx / nx).astype(int), sx - 1)
        iy = np.minimum(((np.arange(ny) + 0.5) * sy / ny).astype(int), sy - 1)
        return JonesField(source.samples[np.ix_(ix, iy)], source.period_x, source.period_y)
    raise TypeError(f"cannot sample {type(source).__name__}")


# -- lattice synthesis ------------------------------------------------------


def jones_distance(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.linalg.norm(np.asarray(a) - np.asarray(b)))


@dataclass(frozen=True, eq=False)
class SynthesisResult:
    field: JonesField
    atoms: tuple = field(repr=False)
    residuals: np.ndarray = field(repr=False)
    architecture: str = "ChiralRetarder"

    @property
    def max_error(self) -> float:
        return float(np.max(self.residuals))

    @property
    def rms_error(self) -> float:
        return float(np.sqrt(np.mean(self.residuals ** 2)))

    def summary(self) -> dict:
        return {
            "architecture": self.architecture,
            "sites": int(self.residuals.size),
            "max_error": self.max_error,
            "mean_error": float(np.mean(self.residuals)),
            "rms_error": self.rms_error,
        }


def _index_for_phase(phase: float, height_nm: float, wavelength_nm: float,
                     n_host: float, n_env: float) -> float:
    # propagation phase 2 pi n h / lambda is only defined mod 2 pi
    step = wavelength_nm / height_nm
    if (n_host - n_env) < step:
        raise ValueError("post too short: index range covers less than one 2 pi of phase")
    n = np.mod(phase, 2 * np.pi) * step / (2 * np.pi)
    n += np.ceil((n_env - n) / step) * step
    if n <= n_env + 1e-9:
        n += step
    if n > n_host + 1e-12:
        n -= step
    return float(min(n, n_host))


def _atom_for_phases(phi1: float, phi2: float, theta: float, circ: float, height_nm: float,
                     wavelength_nm: float, n_host: float, n_env: float, w_max: float) -> MetaAtom:
    w = [float(width_for_index(_index_for_phase(p, height_nm, wavelength_nm, n_host, n_env),
                               n_host, n_env, w_max)) for p in (phi1, phi2)]
    return MetaAtom(w1=w[0], w2=w[1], theta=theta, height=height_nm, n_host=n_host,
                    n_env=n_env, circ_retardance=circ, w_max=w_max)


def _fit_linear_retarder(target: np.ndarray) -> tuple[float, float, float]:
    """Best ``R(t) diag(e^{i p1}, e^{i p2}) R(-t)`` in Frobenius norm."""

    def cost(v):
        rot = rotation(v[2])
        m = rot @ np.diag([np.exp(1j * v[0]), np.exp(1j * v[1])]) @ rot.T
        return float(np.sum(np.abs(m - target) ** 2))

    starts = [(p1, p2, t) for p1 in (0.0, np.pi) for p2 in (0.0, np.pi)
              for t in (0.0, np.pi / 4, np.pi / 2, 3 * np.pi / 4)]
    guess = np.angle(np.diag(target))
    starts.insert(0, (guess[0], guess[1], 0.0))
    best = None
    for s in starts:
        res = minimize(cost, np.array(s), method="BFGS", options={"gtol": 1e-12})
        if best is None or res.fun < best.fun - 1e-14:
            best = res
    p1, p2, t = best.x
    return float(p1), float(p2), float(t)


def synthesize_lattice(profile: PhaseProfile, lattice_pitch: float = DEFAULT_PITCH_UM,
                       wavelength: float = DEFAULT_WAVELENGTH_UM,
                       architecture: str = "ChiralRetarder", *,
                       height_nm: float = DEFAULT_HEIGHT_NM, n_host: float = DEFAULT_N_HOST,
                       n_env: float = DEFAULT_N_ENV) -> SynthesisResult:
    """Choose one meta-atom per lattice site to reproduce the ideal profile.

    ``lattice_pitch`` and ``wavelength`` are in µm. ``ChiralRetarder`` sets
    the fin widths for the linear phase and the helix retardance for the
    circular phase, which is exact. ``GeometricPhase`` only has a rotated
    linear retarder per site; the best such atom is found numerically and
    whatever it cannot match is left in ``residuals``.
    """
    if architecture not in ARCHITECTURES:
        raise ValueError(f"unknown architecture {architecture!r}")
    nx = profile.period_x / lattice_pitch
    ny = profile.period_y / lattice_pitch
    if abs(nx - round(nx)) > 1e-9 or abs(ny - round(ny)) > 1e-9:
        raise ValueError("lattice pitch must divide both periods")
    nx, ny = int(round(nx)), int(round(ny))
    if nx < MIN_SAMPLES or ny < MIN_SAMPLES:
        raise ValueError(f"need at least {MIN_SAMPLES} sites per period")

    target = sample_field(profile, nx, ny).samples
    wl_nm = wavelength * 1e3
    w_max = lattice_pitch * 1e3
    xs = (np.arange(nx) + 0.5) * lattice_pitch
    ys = (np.arange(ny) + 0.5) * lattice_pitch
    lin = profile.linear_phase(xs)
    circ = profile.circular_phase(ys)

    atoms = []
    grid = np.empty((nx, ny, 2, 2), dtype=complex)
    resid = np.empty((nx, ny))
    cache: dict = {}
    for i in range(nx):
        row = []
        for j in range(ny):
            if architecture == "ChiralRetarder":
                atom = _atom_for_phases(lin[i], -lin[i], 0.0, float(circ[j]), height_nm,
                                        wl_nm, n_host, n_env, w_max)
            else:
                key = (float(lin[i]), float(circ[j]))
                if key not in cache:
                    cache[key] = _fit_linear_retarder(target[i, j])
                p1, p2, t = cache[key]
                atom = _atom_for_phases(p1, p2, t, 0.0, height_nm, wl_nm, n_host, n_env, w_max)
            grid[i, j] = atom_jones(atom, wl_nm)
            resid[i, j] = jones_distance(grid[i, j], target[i, j])
            row.append(atom)
        atoms.append(tuple(row))
    return SynthesisResult(JonesField(grid, profile.period_x, profile.period_y), tuple(atoms),
                           resid, architecture)
