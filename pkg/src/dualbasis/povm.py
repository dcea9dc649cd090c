"""Diffraction orders of a periodic Jones field as a measurement.

A periodic element ``J(x, y)`` sends an input Jones vector into far-field
order ``(m, n)`` with amplitude operator

    K_mn = (1/A) * integral J(x, y) exp(-2 pi i (m x / period_x + n y / period_y)) dA

so ``{K_mn}`` is a Kraus set and ``E_mn = K_mn^dag K_mn`` a POVM over orders.
Four of the orders are designated signal ports, labelled by the sign of the
x order (``s_x``, the H/V outcome) and of the y order (``s_y``, the R/L
outcome). Everything else counts as loss.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

import numpy as np

from .metasurface import JonesField, PhaseProfile, circular_retarder, linear_retarder
from .polarization import jones_vector, pauli, projector

DEFAULT_ORDER_BOUND = 8
MIN_GRID = 32
COMPLETENESS_TOL = 1e-9
PROB_FLOOR = -1e-12


class NoSignalError(ValueError):
    """Raised when no probability reaches the signal ports."""


# -- Fourier coefficients ---------------------------------------------------


def sawtooth_coefficient(beta, m):
    """Fourier coefficient of ``exp(2 pi i beta u)`` on ``u in [0, 1)``.

    ``c_m = exp(i pi (beta - m)) sinc(beta - m)`` with the normalized sinc.
    """
    d = np.asarray(beta, dtype=float) - np.asarray(m, dtype=float)
    return np.exp(1j * np.pi * d) * np.sinc(d)


def midpoint_coefficients(values: np.ndarray, orders: np.ndarray, axis: int = 0) -> np.ndarray:
    """Midpoint-rule Fourier coefficients along ``axis`` of periodic samples.

    Uses the DFT with the half-cell phase shift of the midpoint grid. The
    order axis replaces ``axis`` in the output.
    """
    values = np.moveaxis(np.asarray(values), axis, 0)
    n = values.shape[0]
    spec = np.fft.fft(values, axis=0) / n
    orders = np.asarray(orders)
    shift = np.exp(-1j * np.pi * orders / n)
    out = spec[np.mod(orders, n)] * shift.reshape((-1,) + (1,) * (values.ndim - 1))
    return np.moveaxis(out, 0, axis)


# -- Kraus sets -------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class KrausSet:
    """Kraus operators for orders ``|m| <= m_max``, ``|n| <= n_max``.

    ``ops[m + m_max, n + n_max]`` is the 2x2 operator of order ``(m, n)``.
    """

    ops: np.ndarray
    m_max: int
    n_max: int

    def __post_init__(self):
        arr = np.array(self.ops, dtype=complex)
        if arr.shape != (2 * self.m_max + 1, 2 * self.n_max + 1, 2, 2):
            raise ValueError(f"ops shape {arr.shape} inconsistent with bounds")
        arr.setflags(write=False)
        object.__setattr__(self, "ops", arr)

    def __getitem__(self, order) -> np.ndarray:
        m, n = order
        if abs(m) > self.m_max or abs(n) > self.n_max:
            raise KeyError(f"order {order} outside truncation ({self.m_max}, {self.n_max})")
        return self.ops[m + self.m_max, n + self.n_max]

    def orders(self):
        return list(itertools.product(range(-self.m_max, self.m_max + 1),
                                      range(-self.n_max, self.n_max + 1)))

    def effects(self) -> np.ndarray:
        """``K^dag K`` for every order, same layout as ``ops``."""
        return np.conj(np.swapaxes(self.ops, -1, -2)) @ self.ops

    def total_effect(self) -> np.ndarray:
        return self.effects().sum(axis=(0, 1))

    def order_norms(self) -> np.ndarray:
        return np.linalg.norm(self.ops, axis=(-2, -1))

    def truncate(self, m_max: int, n_max: int) -> "KrausSet":
        if m_max > self.m_max or n_max > self.n_max:
            raise ValueError("cannot truncate to larger bounds")
        sl = (slice(self.m_max - m_max, self.m_max + m_max + 1),
              slice(self.n_max - n_max, self.n_max + n_max + 1))
        return KrausSet(self.ops[sl], m_max, n_max)

    def to_dict(self) -> dict:
        entries = []
        for (m, n) in self.orders():
            k = self[m, n]
            entries.append({"m": m, "n": n,
                            "K": [[[float(z.real), float(z.imag)] for z in row] for row in k]})
        return {"type": "KrausSet", "m_max": self.m_max, "n_max": self.n_max,
                "completeness_residual": completeness_check(self), "orders": entries}

    @classmethod
    def from_dict(cls, doc: dict) -> "KrausSet":
        m_max, n_max = int(doc["m_max"]), int(doc["n_max"])
        ops = np.zeros((2 * m_max + 1, 2 * n_max + 1, 2, 2), dtype=complex)
        for e in doc["orders"]:
            k = np.asarray(e["K"], dtype=float)
            ops[e["m"] + m_max, e["n"] + n_max] = k[..., 0] + 1j * k[..., 1]
        return cls(ops, m_max, n_max)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=1)


def kraus_decompose(jones_field: JonesField, m_max: int = DEFAULT_ORDER_BOUND,
                    n_max: int = DEFAULT_ORDER_BOUND) -> KrausSet:
    """Fourier-decompose a sampled unit cell into diffraction-order operators."""
    nx, ny = jones_field.shape
    if nx < MIN_GRID or ny < MIN_GRID:
        raise ValueError(f"grid {nx}x{ny} too coarse; need at least {MIN_GRID}x{MIN_GRID}")
    if nx < 4 * (m_max + 1) or ny < 4 * (n_max + 1):
        raise ValueError(f"grid {nx}x{ny} aliases orders up to ({m_max}, {n_max}); "
                         f"need at least {4 * (m_max + 1)}x{4 * (n_max + 1)} samples")
    ms = np.arange(-m_max, m_max + 1)
    ns = np.arange(-n_max, n_max + 1)
    coef = midpoint_coefficients(jones_field.samples, ms, axis=0)
    coef = midpoint_coefficients(coef, ns, axis=1)
    return KrausSet(coef, m_max, n_max)


def sawtooth_kraus(profile: PhaseProfile, m_max: int = DEFAULT_ORDER_BOUND,
                   n_max: int = DEFAULT_ORDER_BOUND) -> KrausSet:
    """Closed-form Kraus set of an ideal sawtooth profile.

    ``K_mn = (c_m(bz) P_H + c_m(-bz) P_V) (c_n(by) P_R + c_n(-by) P_L)``.
    """
    if profile.shape != "SawtoothRamp":
        raise ValueError("closed form only exists for SawtoothRamp profiles")
    kx = axis_kraus_linear(profile.depth_z, m_max)
    ky = axis_kraus_circular(profile.depth_y, n_max)
    return KrausSet(kx[:, None] @ ky[None, :], m_max, n_max)


def axis_kraus_linear(beta: float, bound: int) -> np.ndarray:
    """1-D orders of ``exp(2 pi i beta u sigma_z)``, shape ``(2*bound+1, 2, 2)``."""
    ms = np.arange(-bound, bound + 1)
    ph, pv = projector("H"), projector("V")
    return (sawtooth_coefficient(beta, ms)[:, None, None] * ph
            + sawtooth_coefficient(-beta, ms)[:, None, None] * pv)


def axis_kraus_circular(beta: float, bound: int) -> np.ndarray:
    """1-D orders of ``exp(2 pi i beta u sigma_y)``."""
    ns = np.arange(-bound, bound + 1)
    pr, pl = projector("R"), projector("L")
    return (sawtooth_coefficient(beta, ns)[:, None, None] * pr
            + sawtooth_coefficient(-beta, ns)[:, None, None] * pl)


def completeness_check(kraus: KrausSet) -> float:
    """``||sum K^dag K - I||_F`` over the truncated order set."""
    return float(np.linalg.norm(kraus.total_effect() - np.eye(2)))


def excess_over_identity(kraus: KrausSet) -> float:
    """Largest eigenvalue of ``sum K^dag K - I``; positive means unphysical."""
    return float(np.linalg.eigvalsh(kraus.total_effect() - np.eye(2))[-1])


def _require_subnormalized(kraus: KrausSet, tol: float = COMPLETENESS_TOL):
    # truncation tails are genuine loss, so only an excess over I is an error
    excess = excess_over_identity(kraus)
    if excess > tol:
        raise ValueError(f"Kraus set is not trace non-increasing (excess {excess:.3e})")


# -- ports ------------------------------------------------------------------


@dataclass(frozen=True)
class Port:
    order: tuple
    s_x: int | None = None
    s_y: int | None = None


@dataclass(frozen=True)
class PortAssignment:
    """Signal ports and their basis labels; defaults to orders ``(+-1, +-1)``."""

    ports: tuple = field(default_factory=lambda: tuple(
        Port((sx, sy), sx, sy) for sy in (1, -1) for sx in (1, -1)))

    def __post_init__(self):
        object.__setattr__(self, "ports", tuple(self.ports))
        orders = [tuple(p.order) for p in self.ports]
        if len(set(orders)) != len(orders):
            raise ValueError("port orders must be distinct")
        if not 1 <= len(orders) <= 4:
            raise ValueError("between one and four signal ports are supported")

    @classmethod
    def x_only(cls, n: int = 0) -> "PortAssignment":
        """Two ports at ``(+-1, n)`` labelled by ``s_x`` only."""
        return cls((Port((1, n), 1, None), Port((-1, n), -1, None)))

    @classmethod
    def y_only(cls, m: int = 0) -> "PortAssignment":
        return cls((Port((m, 1), None, 1), Port((m, -1), None, -1)))

    @property
    def labels(self) -> list:
        return [(p.s_x, p.s_y) for p in self.ports]

    @property
    def has_x(self) -> bool:
        return any(p.s_x is not None for p in self.ports)

    @property
    def has_y(self) -> bool:
        return any(p.s_y is not None for p in self.ports)

    def sx(self) -> np.ndarray:
        return np.array([p.s_x or 0 for p in self.ports], dtype=float)

    def sy(self) -> np.ndarray:
        return np.array([p.s_y or 0 for p in self.ports], dtype=float)


def port_effects(kraus: KrausSet, ports: PortAssignment) -> np.ndarray:
    """POVM elements ``K^dag K`` of the signal ports, shape ``(n_ports, 2, 2)``."""
    out = []
    for p in ports.ports:
        try:
            k = kraus[p.order]
        except KeyError as exc:
            raise ValueError(f"port order {p.order} beyond truncation") from exc
        out.append(k.conj().T @ k)
    return np.array(out)


def _as_density(state) -> np.ndarray:
    if isinstance(state, str):
        return projector(state)
    arr = np.asarray(state, dtype=complex)
    if arr.shape == (2,):
        return np.outer(arr, arr.conj())
    if arr.shape == (2, 2):
        return arr
    raise ValueError(f"expected a Jones vector or 2x2 density, got shape {arr.shape}")


def port_probabilities(kraus: KrausSet, ports: PortAssignment, state) -> dict:
    """Outcome probabilities of the signal ports for one input photon.

    ``state`` is a label (``"H"``, ``"R"``, ...), a Jones vector or a 2x2
    density matrix. Returns ``{"probs": array, "loss": float}`` with ``probs``
    ordered like ``ports.ports``.
    """
    _require_subnormalized(kraus)
    rho = _as_density(state)
    probs = np.einsum("kij,ji->k", port_effects(kraus, ports), rho).real
    if np.any(probs < PROB_FLOOR):
        raise ValueError("negative port probability")
    probs = np.clip(probs, 0.0, None)
    return {"probs": probs, "loss": float(1.0 - probs.sum())}


@dataclass(frozen=True)
class Visibilities:
    eta_z: float
    eta_y: float
    capture: float

    def __post_init__(self):
        for name in ("eta_z", "eta_y", "capture"):
            val = getattr(self, name)
            if not -1e-10 <= val <= 1 + 1e-10:
                raise ValueError(f"{name} = {val!r} outside [0, 1]")
            object.__setattr__(self, name, float(min(max(val, 0.0), 1.0)))

    def to_dict(self) -> dict:
        return {"eta_z": self.eta_z, "eta_y": self.eta_y, "capture": self.capture}


def _conditional_mean(probs: np.ndarray, labels: np.ndarray) -> float:
    total = probs.sum()
    return float(probs @ labels / total) if total > 0 else 0.0


def calibrate_visibilities(kraus: KrausSet, ports: PortAssignment) -> Visibilities:
    """Capture-conditioned visibilities from H, V, R, L calibration photons.

    ``eta_z = (E[s_x | H] - E[s_x | V]) / 2`` and likewise ``eta_y`` with R
    and L, each expectation renormalized over the signal ports. ``capture``
    is the mean signal-port probability over the four inputs.
    """
    res = {lab: port_probabilities(kraus, ports, lab)["probs"] for lab in "HVRL"}
    capture = float(np.mean([res[lab].sum() for lab in "HVRL"]))
    if capture <= 0.0:
        raise NoSignalError("no signal: calibration photons never reach the signal ports")
    sx, sy = ports.sx(), ports.sy()
    eta_z = 0.5 * (_conditional_mean(res["H"], sx) - _conditional_mean(res["V"], sx))
    eta_y = 0.5 * (_conditional_mean(res["R"], sy) - _conditional_mean(res["L"], sy))
    return Visibilities(abs(eta_z), abs(eta_y), capture)


def effective_parity_operators(kraus: KrausSet, ports: PortAssignment,
                               vis: Visibilities | None = None) -> dict:
    """Signed sums ``Z_eff = sum s_x E``, ``Y_eff = sum s_y E`` over signal ports.

    The report also gives the distance of each operator from the scaled
    Pauli ``eta * capture * sigma`` expected of an unbiased splitter.
    """
    effects = port_effects(kraus, ports)
    z_eff = np.einsum("k,kij->ij", ports.sx(), effects)
    y_eff = np.einsum("k,kij->ij", ports.sy(), effects)
    out = {"Z_eff": z_eff, "Y_eff": y_eff}
    if vis is None:
        try:
            vis = calibrate_visibilities(kraus, ports)
        except NoSignalError:
            vis = None
    if vis is not None:
        out["z_bias"] = float(np.linalg.norm(z_eff - vis.eta_z * vis.capture * pauli("Z")))
        out["y_bias"] = float(np.linalg.norm(y_eff - vis.eta_y * vis.capture * pauli("Y")))
    return out


# -- same-axis control experiment -------------------------------------------


def _classify(k: np.ndarray, tol: float = 1e-9) -> str:
    """Name the basis structure of one order's Kraus operator."""
    if np.linalg.norm(k) < tol:
        return "empty"

    def basis(op):
        op = op - np.trace(op) / 2 * np.eye(2)
        if np.linalg.norm(op) < tol:
            return "I"
        for ax in "ZYX":
            s = pauli(ax)
            if np.linalg.norm(op @ s - s @ op) < tol * max(1.0, np.linalg.norm(op)):
                return ax
        return "?"

    b_in, b_out = basis(k.conj().T @ k), basis(k @ k.conj().T)
    if b_in == "I" and b_out == "I":
        return "unitary-like"
    if b_in == b_out and b_in in "ZY":
        return f"{b_in.lower()}-projector"
    if {b_in, b_out} == {"Z", "Y"}:
        return "mixed-basis composite"
    return "general"


def _same_axis_kraus(beta_z: float, beta_y: float, bound: int) -> KrausSet:
    # product of two Fourier series: K_m = sum_k A_k B_{m-k}
    full = 2 * bound + 4
    ax = axis_kraus_linear(beta_z, full)
    ay = axis_kraus_circular(beta_y, full)
    ops = np.zeros((2 * bound + 1, 1, 2, 2), dtype=complex)
    for i, m in enumerate(range(-bound, bound + 1)):
        for k in range(-full, full + 1):
            j = m - k
            if abs(j) <= full:
                ops[i, 0] += ax[k + full] @ ay[j + full]
    return KrausSet(ops, bound, 0)


def _signed_visibility(p_plus: np.ndarray, p_minus: np.ndarray, lab: np.ndarray) -> np.ndarray:
    """Capture-conditioned ``(E[s|+] - E[s|-]) / 2`` for rows of port probabilities."""
    with np.errstate(invalid="ignore", divide="ignore"):
        e_plus = np.where(p_plus.sum(-1) > 0, (p_plus * lab).sum(-1) / p_plus.sum(-1), 0.0)
        e_minus = np.where(p_minus.sum(-1) > 0, (p_minus * lab).sum(-1) / p_minus.sum(-1), 0.0)
    return np.abs(0.5 * (e_plus - e_minus))


def same_axis_mixing_demo(beta_z: float, beta_y: float, bound: int = 3,
                          eta_threshold: float = 0.5, leak_threshold: float = 0.1) -> dict:
    """Put both ramps along x and look for a usable four-port assignment.

    Builds ``J(x) = exp(2 pi i bz u sigma_z) exp(2 pi i by u sigma_y)`` with
    ``u = frac(x / period)``, expands it in 1-D orders, and scans every way
    of placing the four signal ports on distinct orders ``|m| <= bound``.
    An assignment is "clean" when both capture-conditioned visibilities
    reach ``eta_threshold`` and at most ``leak_threshold`` of the light
    misses the ports. Best two-port splitters for each basis alone are
    reported too, as the control.
    """
    for b in (beta_z, beta_y):
        if not 0.0 <= b <= 1.0:
            raise ValueError(f"depth {b!r} outside [0, 1]")
    kraus = _same_axis_kraus(beta_z, beta_y, bound)
    orders = list(range(-bound, bound + 1))
    effects = kraus.effects()[:, 0]
    # probs[input, order]
    probs = {lab: np.einsum("mij,ji->m", effects, projector(lab)).real for lab in "HVRL"}

    combos = np.array(list(itertools.permutations(range(len(orders)), 4)))
    sx = np.array([1, -1, 1, -1], dtype=float)
    sy = np.array([1, 1, -1, -1], dtype=float)
    sel = {lab: probs[lab][combos] for lab in "HVRL"}
    eta_z = _signed_visibility(sel["H"], sel["V"], sx)
    eta_y = _signed_visibility(sel["R"], sel["L"], sy)
    capture = np.mean([sel[lab].sum(-1) for lab in "HVRL"], axis=0)
    score = np.where(capture > 0, np.minimum(eta_z, eta_y), -1.0)
    best = int(np.argmax(score))
    clean = (eta_z >= eta_threshold) & (eta_y >= eta_threshold) & (1 - capture <= leak_threshold)

    pairs = np.array(list(itertools.permutations(range(len(orders)), 2)))
    two = np.array([1.0, -1.0])

    def best_single(plus, minus):
        p, q = probs[plus][pairs], probs[minus][pairs]
        eta = _signed_visibility(p, q, two)
        cap = 0.5 * (p.sum(-1) + q.sum(-1))
        i = int(np.lexsort((-cap, -eta))[0])
        return {"orders": tuple(orders[j] for j in pairs[i]), "eta": float(eta[i]),
                "capture": float(cap[i])}

    return {
        "beta_z": beta_z,
        "beta_y": beta_y,
        "kraus": kraus,
        "order_norms": {m: float(np.linalg.norm(kraus[m, 0])) for m in orders},
        "order_kinds": {m: _classify(kraus[m, 0]) for m in orders},
        "best_assignment": tuple(orders[j] for j in combos[best]),
        "best_visibilities": Visibilities(float(eta_z[best]), float(eta_y[best]),
                                          float(max(capture[best], 0.0))),
        "max_dual_visibility": float(score[best]),
        "clean_assignment_exists": bool(clean.any()),
        "best_z_splitter": best_single("H", "V"),
        "best_y_splitter": best_single("R", "L"),
        "eta_threshold": eta_threshold,
        "leak_threshold": leak_threshold,
    }
