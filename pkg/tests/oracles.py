"""Reference computations that share no code path with the package."""

import numpy as np
from scipy import integrate
from scipy.linalg import expm

SZ = np.array([[1, 0], [0, -1]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)

KET = {
    "H": np.array([1, 0], dtype=complex),
    "V": np.array([0, 1], dtype=complex),
    "R": np.array([1, 1j], dtype=complex) / np.sqrt(2),
    "L": np.array([1, -1j], dtype=complex) / np.sqrt(2),
}


def quad_fourier(beta, m):
    """Fourier coefficient of exp(2 pi i beta u) on [0, 1) by adaptive quadrature."""
    re = integrate.quad(lambda u: np.cos(2 * np.pi * (beta - m) * u), 0, 1, epsabs=1e-13, limit=200)[0]
    im = integrate.quad(lambda u: np.sin(2 * np.pi * (beta - m) * u), 0, 1, epsabs=1e-13, limit=200)[0]
    return re + 1j * im


def _expm_batch(gen, phases):
    return np.array([expm(1j * p * gen) for p in phases])


def gauss_kraus(beta_z, beta_y, m, n, nodes=80):
    """Order (m, n) of the dual-ramp cell by tensor Gauss-Legendre quadrature.

    The integrand is analytic inside the open cell, so the rule converges
    exponentially; matrix exponentials come from scipy's expm.
    """
    x, w = np.polynomial.legendre.leggauss(nodes)
    u = 0.5 * (x + 1)
    w = 0.5 * w
    jx = _expm_batch(SZ, 2 * np.pi * beta_z * u)
    jy = _expm_batch(SY, 2 * np.pi * beta_y * u)
    fx = (w * np.exp(-2j * np.pi * m * u))[:, None, None] * jx
    fy = (w * np.exp(-2j * np.pi * n * u))[:, None, None] * jy
    # the double sum over the tensor grid collapses by bilinearity
    return fx.sum(axis=0) @ fy.sum(axis=0)


def visibilities_oracle(beta_z, beta_y, nodes=80):
    """(eta_z, eta_y, capture) from quadrature Kraus operators at ports (+-1, +-1)."""
    ports = [(sx, sy) for sy in (1, -1) for sx in (1, -1)]
    effects = {}
    for sx, sy in ports:
        k = gauss_kraus(beta_z, beta_y, sx, sy, nodes)
        effects[(sx, sy)] = k.conj().T @ k

    def probs(lab):
        v = KET[lab]
        return {p: float(np.vdot(v, e @ v).real) for p, e in effects.items()}

    def cond(lab, axis):
        pr = probs(lab)
        tot = sum(pr.values())
        return sum(p[axis] * q for p, q in pr.items()) / tot, tot

    hz, ch = cond("H", 0)
    vz, cv = cond("V", 0)
    ry, cr = cond("R", 1)
    ly, cl = cond("L", 1)
    return 0.5 * (hz - vz), 0.5 * (ry - ly), (ch + cv + cr + cl) / 4


def bell_ket(kind):
    s = 1 / np.sqrt(2)
    hh, hv, vh, vv = (np.kron(KET[a], KET[b]) for a, b in ("HH", "HV", "VH", "VV"))
    return {"PhiPlus": s * (hh + vv), "PhiMinus": s * (hh - vv),
            "PsiPlus": s * (hv + vh), "PsiMinus": s * (hv - vh)}[kind]


def parity_by_probabilities(rho, basis):
    """P(++) + P(--) - P(+-) - P(-+) from explicit kets (H/V or R/L)."""
    plus, minus = ("H", "V") if basis == "Z" else ("R", "L")
    total = 0.0
    for a, sa in ((plus, 1), (minus, -1)):
        for b, sb in ((plus, 1), (minus, -1)):
            ket = np.kron(KET[a], KET[b])
            total += sa * sb * np.vdot(ket, rho @ ket).real
    return total
