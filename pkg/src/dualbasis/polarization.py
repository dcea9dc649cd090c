"""Polarization qubit and photon-pair algebra.

Convention sheet
----------------
All Jones vectors are written in the {H, V} basis.

- ``|H> = (1, 0)``, ``|V> = (0, 1)``
- ``|D> = (1, 1)/sqrt(2)``, ``|A> = (1, -1)/sqrt(2)``
- ``|R> = (1, i)/sqrt(2)``, ``|L> = (1, -i)/sqrt(2)``
- ``sigma_z = diag(1, -1)`` (H is +1), ``sigma_y = [[0, -i], [i, 0]]`` (R is +1),
  ``sigma_x = [[0, 1], [1, 0]]`` (D is +1)

The R/L naming follows the "R is the +1 eigenvector of sigma_y" rule. Optics
texts disagree on handedness, so every circular result in this package is
relative to this choice.

Two-photon operators act on ``C^2 (x) C^2`` with photon A as the first
(most significant) tensor factor.
"""

from __future__ import annotations

import numpy as np

SQRT2 = np.sqrt(2.0)

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = 1e-10
NORM_TOL = 1e-12

_STATES = {
    "H": np.array([1.0, 0.0], dtype=complex),
    "V": np.array([0.0, 1.0], dtype=complex),
    "D": np.array([1.0, 1.0], dtype=complex) / SQRT2,
    "A": np.array([1.0, -1.0], dtype=complex) / SQRT2,
    "R": np.array([1.0, 1.0j], dtype=complex) / SQRT2,
    "L": np.array([1.0, -1.0j], dtype=complex) / SQRT2,
}

_PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

# Bell vectors in the |HH>, |HV>, |VH>, |VV> ordering.
_BELL = {
    "PhiPlus": np.array([1, 0, 0, 1], dtype=complex) / SQRT2,
    "PhiMinus": np.array([1, 0, 0, -1], dtype=complex) / SQRT2,
    "PsiPlus": np.array([0, 1, 1, 0], dtype=complex) / SQRT2,
    "PsiMinus": np.array([0, 1, -1, 0], dtype=complex) / SQRT2,
}

BELL_KINDS = tuple(_BELL)

# (sign of <ZZ>, sign of <YY>) for each Bell state.
BELL_PARITY_SIGNS = {
    "PhiPlus": (1, -1),
    "PhiMinus": (1, 1),
    "PsiPlus": (-1, 1),
    "PsiMinus": (-1, -1),
}


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


def jones_vector(label: str) -> np.ndarray:
    """Normalized Jones vector for one of H, V, D, A, R, L."""
    try:
        return _frozen(_STATES[label])
    except KeyError:
        raise ValueError(f"unknown polarization label {label!r}") from None


def polarization_state(a_h: complex, a_v: complex) -> np.ndarray:
    """Validated Jones vector from explicit amplitudes."""
    vec = np.array([a_h, a_v], dtype=complex)
    norm = np.vdot(vec, vec).real
    if abs(norm - 1.0) > NORM_TOL:
        raise ValueError(f"Jones vector not normalized: |a|^2 = {norm!r}")
    return _frozen(vec)


def projector(label_or_vec) -> np.ndarray:
    """Rank-one projector onto a polarization state."""
    vec = jones_vector(label_or_vec) if isinstance(label_or_vec, str) else np.asarray(label_or_vec)
    return np.outer(vec, vec.conj())


def pauli(axis: str) -> np.ndarray:
    """Pauli matrix for axis ``"X"``, ``"Y"`` or ``"Z"`` (``"I"`` gives identity)."""
    try:
        return _frozen(_PAULI[axis.upper()])
    except (KeyError, AttributeError):
        raise ValueError(f"unknown Pauli axis {axis!r}") from None


def is_unitary(mat: np.ndarray, tol: float = 1e-10) -> bool:
    mat = np.asarray(mat)
    return bool(np.linalg.norm(mat.conj().T @ mat - np.eye(mat.shape[0])) <= tol)


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def validate_density(rho, *, dim: int = 4) -> np.ndarray:
    """Check and return a density operator as a read-only array.

    Hermiticity and unit trace are required within 1e-12. Eigenvalues in
    ``[-1e-10, 0)`` are treated as round-off and clipped to zero; anything
    more negative raises ``ValueError``.
    """
    rho = np.array(rho, dtype=complex)
    if rho.shape != (dim, dim):
        raise ValueError(f"density operator must be {dim}x{dim}, got {rho.shape}")
    if np.max(np.abs(rho - rho.conj().T)) > HERMITIAN_TOL:
        raise ValueError("density operator is not Hermitian")
    tr = np.trace(rho).real
    if abs(tr - 1.0) > TRACE_TOL:
        raise ValueError(f"density operator trace is {tr!r}, expected 1")
    rho = 0.5 * (rho + rho.conj().T)
    evals, evecs = np.linalg.eigh(rho)
    if evals[0] < -PSD_TOL:
        raise ValueError(f"density operator has eigenvalue {evals[0]:.3e} < 0")
    if evals[0] < 0:
        evals = np.clip(evals, 0.0, None)
        rho = (evecs * evals) @ evecs.conj().T
        rho /= np.trace(rho).real
    return _frozen(rho)


def pure_density(vec) -> np.ndarray:
    vec = np.asarray(vec, dtype=complex)
    vec = vec / np.linalg.norm(vec)
    return validate_density(np.outer(vec, vec.conj()), dim=vec.size)


def bell_state(kind: str = "PhiPlus") -> np.ndarray:
    """Density operator of one of the four Bell states."""
    if kind not in _BELL:
        raise ValueError(f"unknown Bell state {kind!r}; expected one of {BELL_KINDS}")
    return pure_density(_BELL[kind])


def bell_vector(kind: str) -> np.ndarray:
    return _frozen(_BELL[kind])


def werner_state(p: float, kind: str = "PsiMinus") -> np.ndarray:
    """``p |Bell><Bell| + (1 - p) I/4``."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"Werner weight p must lie in [0, 1], got {p!r}")
    rho = p * bell_state(kind) + (1.0 - p) * np.eye(4) / 4.0
    return validate_density(rho)


def maximally_mixed() -> np.ndarray:
    return validate_density(np.eye(4) / 4.0)


def correlator(rho: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    """``Tr[(A (x) B) rho]`` for single-photon observables ``A`` and ``B``."""
    return float(np.trace(np.kron(a, b) @ rho).real)


def correlator_from_projectors(rho: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    """Same value as :func:`correlator`, built from outcome probabilities.

    Each observable is split into its +1/-1 eigenprojectors, and the joint
    probabilities are combined as ``P(+,+) + P(-,-) - P(+,-) - P(-,+)``.
    """
    total = 0.0
    for sa, pa in _eigenprojectors(a):
        for sb, pb in _eigenprojectors(b):
            prob = np.trace(np.kron(pa, pb) @ rho).real
            total += sa * sb * prob
    return float(total)


def _eigenprojectors(op: np.ndarray):
    evals, evecs = np.linalg.eigh(op)
    out = []
    for val, vec in zip(evals, evecs.T):
        out.append((float(np.round(val)), np.outer(vec, vec.conj())))
    return out


def commutator_checks() -> dict:
    """Frobenius norms of ``[Z, Y]`` and ``[Z(x)Z, Y(x)Y]``."""
    z, y = pauli("Z"), pauli("Y")
    zz, yy = np.kron(z, z), np.kron(y, y)
    return {
        "single_photon_norm": float(np.linalg.norm(commutator(z, y))),
        "two_photon_norm": float(np.linalg.norm(commutator(zz, yy))),
    }


def partial_transpose(rho: np.ndarray) -> np.ndarray:
    """Transpose on the second photon of a 4x4 operator."""
    return np.asarray(rho).reshape(2, 2, 2, 2).transpose(0, 3, 2, 1).reshape(4, 4)


def ppt_is_entangled(rho: np.ndarray, tol: float = PSD_TOL) -> dict:
    """Peres-Horodecki test, exact for two qubits."""
    min_eig = float(np.linalg.eigvalsh(partial_transpose(rho))[0])
    return {"entangled": min_eig < -tol, "min_eigenvalue": min_eig}


def random_pure_state(rng: np.random.Generator, dim: int = 4) -> np.ndarray:
    vec = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return pure_density(vec)


def random_mixed_state(rng: np.random.Generator, dim: int = 4, rank: int | None = None) -> np.ndarray:
    """Wishart-style mixed state ``G G^dag / Tr(G G^dag)``."""
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    return validate_density(rho / np.trace(rho).real, dim=dim)
