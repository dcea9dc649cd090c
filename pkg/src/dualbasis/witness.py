"""Coincidence statistics through two analyzers and the parity witness.

Photon A goes to analyzer A and photon B to analyzer B. Each analyzer has up
to four signal ports carrying a linear label ``s_x`` and/or a circular label
``s_y``; coincidences between ports give the parity estimates

    C_z = E[s_x(A) s_x(B) | coincidence],   C_y = E[s_y(A) s_y(B) | coincidence].

Two witness values are always reported side by side:

``W_paper = (eta_z^2 + eta_y^2) - (|C_z| + |C_y|)``
    with observed correlators, where ``eta^2`` is the product of the two
    arms' visibilities in that basis.
``W_sep_aux = 1 - (|C_z| / (eta_zA eta_zB) + |C_y| / (eta_yA eta_yB))``
    visibility-corrected correlators against the separable bound of one.

The ``IdealBellParity`` analyzer stands for a sharp joint measurement of
both parities (a Bell-basis measurement). Its four outcomes are stored on
the diagonal of the 4x4 table in the order Phi+, Phi-, Psi+, Psi-.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .polarization import (BELL_KINDS, BELL_PARITY_SIGNS, bell_vector, jones_vector, pauli,
                           projector, validate_density)
from .povm import (KrausSet, NoSignalError, PortAssignment, Visibilities, calibrate_visibilities,
                   excess_over_identity, port_effects)

N_PORTS = 4
MIN_COINCIDENCES = 100
DEFAULT_BOOTSTRAP = 1000
ZERO_VIS = 1e-9

CERTIFIED = "EntangledCertified"
NOT_CERTIFIED = "NotCertified"


def make_rng(seed: int, *keys: int) -> np.random.Generator:
    """Counter-based generator for the stream ``(seed, *keys)``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), *map(int, keys)])))


# -- analyzers --------------------------------------------------------------


def quarter_wave_plate(theta: float) -> np.ndarray:
    """Quarter-wave plate with its fast axis at ``theta``."""
    c, s = np.cos(theta), np.sin(theta)
    rot = np.array([[c, -s], [s, c]])
    return rot @ np.diag([1.0, 1.0j]) @ rot.T


# Fast axis at +45 degrees maps R to H and L to V, up to phases.
QWP_CIRCULAR_TO_LINEAR = quarter_wave_plate(np.pi / 4)


@dataclass(frozen=True, eq=False)
class AnalyzerModel:
    """One arm of the coincidence setup.

    Use :meth:`metasurface`, :meth:`sequential` or :meth:`bell_parity` rather
    than the raw constructor.
    """

    kind: str
    kraus: KrausSet | None = None
    ports: PortAssignment | None = None
    basis: str | None = None
    visibility: float = 1.0
    efficiency: float = 1.0
    dark_count: float = 0.0

    def __post_init__(self):
        if self.kind not in ("Metasurface", "SequentialPBS", "IdealBellParity"):
            raise ValueError(f"unknown analyzer kind {self.kind!r}")
        if not 0.0 <= self.efficiency <= 1.0:
            raise ValueError("detection efficiency must lie in [0, 1]")
        if not 0.0 <= self.dark_count < 1.0:
            raise ValueError("dark-count probability must lie in [0, 1)")
        if self.kind == "Metasurface":
            if self.kraus is None:
                raise ValueError("metasurface analyzer needs a Kraus set")
            if self.ports is None:
                object.__setattr__(self, "ports", PortAssignment())
            if excess_over_identity(self.kraus) > 1e-9:
                raise ValueError("metasurface Kraus set is not trace non-increasing")
        if self.kind == "SequentialPBS":
            if self.basis not in ("Z", "Y"):
                raise ValueError("sequential analyzer basis must be 'Z' or 'Y'")
            if not 0.0 <= self.visibility <= 1.0:
                raise ValueError("visibility must lie in [0, 1]")

    @classmethod
    def metasurface(cls, kraus: KrausSet, ports: PortAssignment | None = None, **kw) -> "AnalyzerModel":
        return cls("Metasurface", kraus=kraus, ports=ports or PortAssignment(), **kw)

    @classmethod
    def sequential(cls, basis: str, visibility: float = 1.0, **kw) -> "AnalyzerModel":
        return cls("SequentialPBS", basis=basis, visibility=visibility, **kw)

    @classmethod
    def bell_parity(cls, **kw) -> "AnalyzerModel":
        return cls("IdealBellParity", **kw)

    @property
    def n_active(self) -> int:
        if self.kind == "Metasurface":
            return len(self.ports.ports)
        return 2 if self.kind == "SequentialPBS" else 4

    def effects(self) -> np.ndarray:
        """Port POVM elements padded to four ports, before detector efficiency."""
        out = np.zeros((N_PORTS, 2, 2), dtype=complex)
        if self.kind == "Metasurface":
            eff = port_effects(self.kraus, self.ports)
            out[:len(eff)] = eff
        elif self.kind == "SequentialPBS":
            # the wave plate (Y only) sends R/L to H/V, then a PBS with
            # symmetric bit-flip error (1 - v)/2
            u = QWP_CIRCULAR_TO_LINEAR if self.basis == "Y" else np.eye(2)
            ph = u.conj().T @ projector("H") @ u
            pv = u.conj().T @ projector("V") @ u
            v = self.visibility
            out[0] = 0.5 * (1 + v) * ph + 0.5 * (1 - v) * pv
            out[1] = 0.5 * (1 + v) * pv + 0.5 * (1 - v) * ph
        else:
            raise ValueError("a Bell-parity analyzer has no single-photon effects")
        return out

    def labels(self) -> tuple:
        """``(s_x, s_y)`` label arrays over the four ports; ``None`` when absent."""
        if self.kind == "Metasurface":
            sx = np.zeros(N_PORTS)
            sy = np.zeros(N_PORTS)
            sx[:len(self.ports.ports)] = self.ports.sx()
            sy[:len(self.ports.ports)] = self.ports.sy()
            return (sx if self.ports.has_x else None, sy if self.ports.has_y else None)
        if self.kind == "SequentialPBS":
            lab = np.array([1.0, -1.0, 0.0, 0.0])
            return (lab, None) if self.basis == "Z" else (None, lab)
        return (None, None)

    def visibilities(self) -> Visibilities:
        if self.kind == "Metasurface":
            return calibrate_visibilities(self.kraus, self.ports)
        if self.kind == "SequentialPBS":
            v = self.visibility
            return Visibilities(v if self.basis == "Z" else 0.0, v if self.basis == "Y" else 0.0, 1.0)
        return Visibilities(1.0, 1.0, 1.0)


def _dark_transition(an: AnalyzerModel) -> np.ndarray:
    """Map true outcome (port 0..3 or 4 = nothing) to registered outcome."""
    q, k = an.dark_count, an.n_active
    t = np.zeros((N_PORTS + 1, N_PORTS + 1))
    quiet = (1 - q) ** (k - 1)
    for i in range(k):
        t[i, i] = quiet
        t[i, N_PORTS] = 1 - quiet
    t[k:N_PORTS, N_PORTS] = 1.0
    for i in range(k):
        t[N_PORTS, i] = q * quiet
    t[N_PORTS, N_PORTS] = 1 - k * q * quiet
    return t


# -- exact joint statistics -------------------------------------------------


@dataclass(frozen=True, eq=False)
class JointTable:
    """Exact 4x4 coincidence probabilities plus the lost remainder."""

    probs: np.ndarray
    loss: float
    zz: np.ndarray | None
    yy: np.ndarray | None


def _pair_labels(a: AnalyzerModel, b: AnalyzerModel):
    if a.kind == "IdealBellParity":
        zz = np.diag([BELL_PARITY_SIGNS[k][0] for k in BELL_KINDS]).astype(float)
        yy = np.diag([BELL_PARITY_SIGNS[k][1] for k in BELL_KINDS]).astype(float)
        return zz, yy
    (ax, ay), (bx, by) = a.labels(), b.labels()
    zz = np.outer(ax, bx) if ax is not None and bx is not None else None
    yy = np.outer(ay, by) if ay is not None and by is not None else None
    return zz, yy


def joint_probabilities(rho, a: AnalyzerModel, b: AnalyzerModel,
                        pair_efficiency: float = 1.0) -> JointTable:
    """Coincidence probabilities ``Tr[(E_i (x) E_j) rho]`` with detector effects."""
    rho = validate_density(rho)
    if not 0.0 <= pair_efficiency <= 1.0:
        raise ValueError("pair efficiency must lie in [0, 1]")
    if (a.kind == "IdealBellParity") != (b.kind == "IdealBellParity"):
        raise ValueError("a Bell-parity analyzer must be paired with another Bell-parity analyzer")
    zz, yy = _pair_labels(a, b)
    if a.kind == "IdealBellParity":
        pops = np.array([np.vdot(bell_vector(k), rho @ bell_vector(k)).real for k in BELL_KINDS])
        probs = np.diag(np.clip(pops, 0.0, None)) * a.efficiency * b.efficiency * pair_efficiency
        return JointTable(probs, float(1.0 - probs.sum()), zz, yy)

    def five(an):
        e = an.effects() * an.efficiency
        rest = np.eye(2) - e.sum(axis=0)
        return np.concatenate([e, rest[None]], axis=0)

    fa, fb = five(a), five(b)
    r4 = rho.reshape(2, 2, 2, 2)
    true = np.einsum("aij,bkl,jlik->ab", fa, fb, r4).real
    reg = _dark_transition(a).T @ true @ _dark_transition(b)
    probs = np.clip(reg[:N_PORTS, :N_PORTS], 0.0, None) * pair_efficiency
    return JointTable(probs, float(1.0 - probs.sum()), zz, yy)


def _conditional(probs: np.ndarray, signs: np.ndarray | None) -> float | None:
    if signs is None:
        return None
    total = probs.sum()
    if total <= 0:
        return None
    return float(np.sum(probs * signs) / total)


def exact_correlators(rho, a: AnalyzerModel, b: AnalyzerModel) -> tuple:
    """``(C_z_obs, C_y_obs)`` conditioned on coincidence; ``None`` if unlabelled."""
    t = joint_probabilities(rho, a, b)
    return _conditional(t.probs, t.zz), _conditional(t.probs, t.yy)


# -- witness arithmetic -----------------------------------------------------


def _vis_pair(v) -> tuple[float, float]:
    if isinstance(v, Visibilities):
        return v.eta_z, v.eta_y
    return float(v[0]), float(v[1])


def witness(c_z: float | None, c_y: float | None, vis_a, vis_b=None) -> dict:
    """Literal and visibility-corrected witness values.

    ``vis_a`` / ``vis_b`` are :class:`Visibilities` or ``(eta_z, eta_y)``
    pairs; ``vis_b`` defaults to ``vis_a``. A missing correlator or a zero
    visibility makes the corrected witness undefined (``None``).
    """
    vis_b = vis_a if vis_b is None else vis_b
    (za, ya), (zb, yb) = _vis_pair(vis_a), _vis_pair(vis_b)
    ez2, ey2 = za * zb, ya * yb
    if c_z is None or c_y is None:
        return {"W_paper": None, "W_sep_aux": None, "eta_z2": ez2, "eta_y2": ey2}
    w_paper = (ez2 + ey2) - (abs(c_z) + abs(c_y))
    if ez2 <= ZERO_VIS or ey2 <= ZERO_VIS:
        w_aux = None
    else:
        w_aux = 1.0 - (abs(c_z) / ez2 + abs(c_y) / ey2)
    return {"W_paper": float(w_paper), "W_sep_aux": None if w_aux is None else float(w_aux),
            "eta_z2": ez2, "eta_y2": ey2}


def verdict(w: float | None) -> str:
    return CERTIFIED if w is not None and w < 0 else NOT_CERTIFIED


# -- counts -----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CoincidenceTable:
    """Counts over (port A, port B) plus everything that did not coincide."""

    counts: np.ndarray
    loss_count: int
    n_pairs: int
    zz: np.ndarray | None = None
    yy: np.ndarray | None = None
    label: str = ""

    def __post_init__(self):
        c = np.asarray(self.counts, dtype=np.int64)
        if c.shape != (N_PORTS, N_PORTS) or np.any(c < 0) or self.loss_count < 0:
            raise ValueError("counts must be a non-negative 4x4 integer table")
        if int(c.sum()) + int(self.loss_count) != int(self.n_pairs):
            raise ValueError("counts + loss must equal the number of pairs")
        c.setflags(write=False)
        object.__setattr__(self, "counts", c)

    @property
    def coincidences(self) -> int:
        return int(self.counts.sum())

    def to_dict(self) -> dict:
        def arr(x):
            return None if x is None else np.asarray(x).astype(int).tolist()
        return {"type": "CoincidenceTable", "label": self.label, "n_pairs": int(self.n_pairs),
                "loss_count": int(self.loss_count), "counts": self.counts.tolist(),
                "zz": arr(self.zz), "yy": arr(self.yy)}

    @classmethod
    def from_dict(cls, doc: dict) -> "CoincidenceTable":
        def arr(x):
            return None if x is None else np.asarray(x, dtype=float)
        return cls(np.asarray(doc["counts"]), int(doc["loss_count"]), int(doc["n_pairs"]),
                   arr(doc.get("zz")), arr(doc.get("yy")), doc.get("label", ""))

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=1)


def _draw(table: JointTable, n_pairs: int, rng: np.random.Generator, label: str = "") -> CoincidenceTable:
    p = np.append(table.probs.reshape(-1), max(table.loss, 0.0))
    p = p / p.sum()
    draw = rng.multinomial(n_pairs, p)
    return CoincidenceTable(draw[:-1].reshape(N_PORTS, N_PORTS), int(draw[-1]), n_pairs,
                            table.zz, table.yy, label)


def simulate_counts(rho, a: AnalyzerModel, b: AnalyzerModel, n_pairs: int, seed: int,
                    replicate: int = 0, pair_efficiency: float = 1.0) -> CoincidenceTable:
    """Multinomial draw of ``n_pairs`` pairs over 16 port pairs plus loss."""
    if n_pairs < 1:
        raise ValueError("need at least one pair")
    table = joint_probabilities(rho, a, b, pair_efficiency)
    return _draw(table, n_pairs, make_rng(seed, replicate), label=a.kind)


def bell_parity_sampler(rho, n_pairs: int, seed: int, replicate: int = 0) -> CoincidenceTable:
    """Sharp simultaneous parity reference: sample Bell-basis outcomes."""
    an = AnalyzerModel.bell_parity()
    return simulate_counts(rho, an, an, n_pairs, seed, replicate)


def table_from_probabilities(table: JointTable, n_pairs: int) -> CoincidenceTable:
    """Expected counts rounded to integers, with loss absorbing the rounding."""
    counts = np.rint(table.probs * n_pairs).astype(np.int64)
    loss = n_pairs - int(counts.sum())
    if loss < 0:
        counts[np.unravel_index(np.argmax(counts), counts.shape)] += loss
        loss = 0
    return CoincidenceTable(counts, loss, n_pairs, table.zz, table.yy)


# -- estimation -------------------------------------------------------------


@dataclass
class WitnessReport:
    c_z_obs: float | None
    c_y_obs: float | None
    c_z_corr: float | None
    c_y_corr: float | None
    eta_z: float
    eta_y: float
    w_paper: float | None
    w_sep_aux: float | None
    se_w: float | None
    se_w_aux: float | None
    se_w_boot: float | None
    se_w_aux_boot: float | None
    ci_w_aux: tuple | None
    n_used: int
    n_pairs: int
    verdict_paper: str
    verdict_aux: str
    flags: list = field(default_factory=list)

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["ci_w_aux"] = list(self.ci_w_aux) if self.ci_w_aux is not None else None
        d["flags"] = list(self.flags)
        return {"type": "WitnessReport", **d}

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True)


def _cell_stats(table: CoincidenceTable, signs: np.ndarray) -> tuple[float, float]:
    n = table.coincidences
    mean = float(np.sum(table.counts * signs) / n)
    second = float(np.sum(table.counts * signs ** 2) / n)
    return mean, second


def _sources(tables):
    tz = next((t for t in tables if t.zz is not None), None)
    ty = next((t for t in tables if t.yy is not None), None)
    return tz, ty


def _point(tz, ty, counts_z, counts_y):
    cz = float(np.sum(counts_z * tz.zz) / counts_z.sum()) if tz is not None else None
    cy = float(np.sum(counts_y * ty.yy) / counts_y.sum()) if ty is not None else None
    return cz, cy


def _delta_se(tz, ty, cz, cy, wz, wy) -> float:
    """Delta-method SE of ``-(wz |C_z| + wy |C_y|)``."""
    gz, gy = wz * np.sign(cz), wy * np.sign(cy)
    nz = tz.coincidences
    var_z = max(np.sum(tz.counts * tz.zz ** 2) / nz - cz ** 2, 0.0) / nz
    ny = ty.coincidences
    var_y = max(np.sum(ty.counts * ty.yy ** 2) / ny - cy ** 2, 0.0) / ny
    var = gz ** 2 * var_z + gy ** 2 * var_y
    if tz is ty:
        cov = (np.sum(tz.counts * tz.zz * tz.yy) / nz - cz * cy) / nz
        var += 2 * gz * gy * cov
    return float(math.sqrt(max(var, 0.0)))


def estimate_from_counts(tables, vis_a, vis_b=None, bootstrap: int = DEFAULT_BOOTSTRAP,
                         seed: int = 0) -> WitnessReport:
    """Plug-in correlators and witness values with standard errors.

    ``tables`` is one :class:`CoincidenceTable` or several (the sequential
    scheme passes its Z and Y runs separately). The linear correlator comes
    from the first table with linear labels, the circular one from the first
    with circular labels; if that is the same table their covariance enters
    the delta-method SE. The bootstrap resamples pair records within each
    table.
    """
    if isinstance(tables, CoincidenceTable):
        tables = [tables]
    vis_b = vis_a if vis_b is None else vis_b
    tz, ty = _sources(tables)
    used = [t for t in (tz, ty) if t is not None]
    if not used:
        raise ValueError("no table carries parity labels")
    if any(t.coincidences == 0 for t in used):
        raise ValueError("zero coincidences: nothing to estimate")
    n_used = sum({id(t): t.coincidences for t in used}.values())
    n_pairs = sum({id(t): t.n_pairs for t in tables}.values())

    cz, cy = _point(tz, ty, tz.counts if tz else None, ty.counts if ty else None)
    w = witness(cz, cy, vis_a, vis_b)
    ez2, ey2 = w["eta_z2"], w["eta_y2"]
    (za, ya), (zb, yb) = _vis_pair(vis_a), _vis_pair(vis_b)
    flags = []
    czc = cz / ez2 if cz is not None and ez2 > ZERO_VIS else None
    cyc = cy / ey2 if cy is not None and ey2 > ZERO_VIS else None
    if cz is None or cy is None:
        flags.append("missing_correlator")
    if ez2 <= ZERO_VIS or ey2 <= ZERO_VIS:
        flags.append("zero_visibility")

    se = se_aux = se_b = se_aux_b = None
    ci = None
    enough = all(t.coincidences >= MIN_COINCIDENCES for t in used)
    if not enough:
        flags.append("insufficient_counts")
    elif cz is not None and cy is not None:
        se = _delta_se(tz, ty, cz, cy, 1.0, 1.0)
        if w["W_sep_aux"] is not None:
            se_aux = _delta_se(tz, ty, cz, cy, 1.0 / ez2, 1.0 / ey2)
        if bootstrap > 0:
            bw, bwa = _bootstrap(tz, ty, ez2, ey2, bootstrap, seed)
            se_b = float(np.std(bw, ddof=1))
            if bwa is not None:
                se_aux_b = float(np.std(bwa, ddof=1))
                ci = (float(np.percentile(bwa, 2.5)), float(np.percentile(bwa, 97.5)))
        for c, s, name in ((czc, se_aux, "z"), (cyc, se_aux, "y")):
            if c is not None and s is not None and abs(c) > 1 + 3 * s:
                flags.append(f"over_correction_{name}")
        if se is not None and abs(w["W_paper"]) < 2 * se:
            flags.append("paper_verdict_within_noise")

    return WitnessReport(
        c_z_obs=cz, c_y_obs=cy, c_z_corr=czc, c_y_corr=cyc,
        eta_z=math.sqrt(ez2), eta_y=math.sqrt(ey2),
        w_paper=w["W_paper"], w_sep_aux=w["W_sep_aux"],
        se_w=se, se_w_aux=se_aux, se_w_boot=se_b, se_w_aux_boot=se_aux_b, ci_w_aux=ci,
        n_used=n_used, n_pairs=n_pairs,
        verdict_paper=verdict(w["W_paper"]), verdict_aux=verdict(w["W_sep_aux"]),
        flags=flags)


def _bootstrap(tz, ty, ez2, ey2, n_boot, seed):
    rng = make_rng(seed, 0xB007)

    def resample(t):
        n = t.coincidences
        return rng.multinomial(n, t.counts.reshape(-1) / n, size=n_boot).reshape(n_boot, N_PORTS, N_PORTS)

    rz = resample(tz)
    ry = rz if ty is tz else resample(ty)
    cz = np.sum(rz * tz.zz, axis=(1, 2)) / tz.coincidences
    cy = np.sum(ry * ty.yy, axis=(1, 2)) / ty.coincidences
    wp = (ez2 + ey2) - (np.abs(cz) + np.abs(cy))
    wa = None
    if ez2 > ZERO_VIS and ey2 > ZERO_VIS:
        wa = 1.0 - (np.abs(cz) / ez2 + np.abs(cy) / ey2)
    return wp, wa


# -- schemes ----------------------------------------------------------------


def sequential_tables(rho, n_total: int, visibility: float, seed: int, keys: tuple = (0,),
                      efficiency: float = 1.0, dark_count: float = 0.0) -> list:
    """Half the pairs with both arms in Z, half with both arms in Y (wave plate)."""
    if n_total % 2:
        raise ValueError("sequential run needs an even number of pairs")
    out = []
    for i, basis in enumerate(("Z", "Y")):
        an = AnalyzerModel.sequential(basis, visibility, efficiency=efficiency, dark_count=dark_count)
        table = joint_probabilities(rho, an, an)
        out.append(_draw(table, n_total // 2, make_rng(seed, *keys, i), label=f"SequentialPBS-{basis}"))
    return out


def sequential_run(rho, n_total: int, visibility: float = 1.0, seed: int = 0,
                   bootstrap: int = DEFAULT_BOOTSTRAP, **kw) -> WitnessReport:
    tables = sequential_tables(rho, n_total, visibility, seed, **kw)
    vis = (visibility, visibility)
    return estimate_from_counts(tables, vis, vis, bootstrap=bootstrap, seed=seed)


@dataclass(frozen=True, eq=False)
class Scheme:
    """A named way of collecting the two parities.

    ``kind`` is ``"sequential"``, ``"bell_parity"`` or ``"metasurface"``.
    """

    name: str
    kind: str
    visibility: float = 1.0
    kraus: KrausSet | None = None
    ports: PortAssignment | None = None

    def __post_init__(self):
        if self.kind not in ("sequential", "bell_parity", "metasurface"):
            raise ValueError(f"unknown scheme kind {self.kind!r}")
        if self.kind == "metasurface" and self.kraus is None:
            raise ValueError("metasurface scheme needs a Kraus set")

    def analyzer(self) -> AnalyzerModel:
        if self.kind == "bell_parity":
            return AnalyzerModel.bell_parity()
        if self.kind == "metasurface":
            return AnalyzerModel.metasurface(self.kraus, self.ports)
        raise ValueError("sequential scheme uses two analyzer configurations")

    def visibilities(self) -> tuple[float, float]:
        if self.kind == "sequential":
            return self.visibility, self.visibility
        if self.kind == "bell_parity":
            return 1.0, 1.0
        try:
            v = self.analyzer().visibilities()
        except NoSignalError:
            return 0.0, 0.0
        return v.eta_z, v.eta_y

    def sample_tables(self, rho, n_pairs: int, seed: int, *keys: int) -> list:
        if self.kind == "sequential":
            return sequential_tables(rho, n_pairs, self.visibility, seed, keys)
        an = self.analyzer()
        return [_draw(joint_probabilities(rho, an, an), n_pairs, make_rng(seed, *keys), self.name)]


def sample_witness(scheme: Scheme, rho, n_pairs: int, seed: int, key: int, replicates: int,
                   workers: int = 1) -> np.ndarray:
    """Corrected-witness estimates for ``replicates`` independent runs.

    Replicate ``r`` always uses the stream ``(seed, key, r)``, so the result
    does not depend on ``workers``.
    """
    vis = scheme.visibilities()

    def one(r):
        tables = scheme.sample_tables(rho, n_pairs, seed, key, r)
        tz, ty = _sources(tables)
        if tz.coincidences == 0 or ty.coincidences == 0:
            return math.nan
        cz, cy = _point(tz, ty, tz.counts, ty.counts)
        return witness(cz, cy, vis)["W_sep_aux"]

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            vals = list(pool.map(one, range(replicates)))
    else:
        vals = [one(r) for r in range(replicates)]
    return np.array(vals, dtype=float)


def fit_inverse_sqrt(ns, ses) -> dict:
    """Fit ``SE = c N^slope`` on log-log axes, plus ``c`` at fixed slope -1/2."""
    x, y = np.log(np.asarray(ns, float)), np.log(np.asarray(ses, float))
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    c_half = float(np.exp(np.mean(y + 0.5 * x)))
    return {"slope": float(slope), "c": float(np.exp(intercept)), "c_half": c_half,
            "residual": float(np.sqrt(np.mean(resid ** 2)))}


def witness_se_curve(scheme: Scheme, rho, ns, seed: int, replicates: int = 50,
                     workers: int = 1) -> dict:
    """Empirical SE of the corrected witness at each ``N`` and its power-law fit."""
    ses = []
    for i, n in enumerate(ns):
        vals = sample_witness(scheme, rho, int(n), seed, i, replicates, workers)
        ses.append(float(np.std(vals, ddof=1)))
    return {"n": [int(n) for n in ns], "se": ses, **fit_inverse_sqrt(ns, ses)}


def resource_compare(rho, epsilon: float, schemes, seed: int = 0, replicates: int = 200,
                     n_start: int = 1000, n_cap: int = 10 ** 8, min_points: int = 4,
                     workers: int = 1) -> list:
    """Smallest number of pairs for which ``SE(W_sep_aux) <= epsilon``, per scheme.

    ``N`` doubles from ``n_start`` until the measured SE drops below
    ``epsilon`` (and at least ``min_points`` sizes were tried). The SE curve
    is fitted with ``c / sqrt(N)`` and ``N_required = ceil((c / epsilon)^2)``.
    Schemes blind in one basis are reported as unbounded without sampling.
    Each row carries ``ratio_to_best``: its ``N_required`` over the smallest
    finite one.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    rows = []
    for k, scheme in enumerate(schemes):
        ez, ey = scheme.visibilities()
        row = {"scheme": scheme.name, "epsilon": epsilon}
        if min(ez, ey) <= ZERO_VIS:
            row.update(n_required=math.inf, fit_exponent=None, fit_residual=None,
                       flag="unbounded: zero visibility in a needed basis")
            rows.append(row)
            continue
        ns, ses = [], []
        n = n_start
        while True:
            vals = sample_witness(scheme, rho, n, seed, k * 1000 + len(ns), replicates, workers)
            ns.append(n)
            # runs without a single coincidence make the SE undefined at this N
            ses.append(float(np.std(vals, ddof=1)) if np.all(np.isfinite(vals)) else math.inf)
            if (ses[-1] <= epsilon and len(ns) >= min_points) or n * 2 > n_cap:
                break
            n *= 2
        ok = [i for i, s in enumerate(ses) if math.isfinite(s) and s > 0]
        if not ok and all(s == 0 for s in ses):
            # sharp outcomes (e.g. a Bell state into a Bell measurement)
            row.update(n_required=1, fit_exponent=None, fit_residual=None,
                       flag="zero variance at every N", n_grid=ns, se_grid=ses)
            rows.append(row)
            continue
        fit = fit_inverse_sqrt([ns[i] for i in ok], [ses[i] for i in ok])
        n_req = math.ceil((fit["c_half"] / epsilon) ** 2)
        flag = ""
        if ses[-1] > epsilon:
            flag = "cap reached before target SE"
        row.update(n_required=n_req, fit_exponent=fit["slope"], fit_residual=fit["residual"],
                   flag=flag, n_grid=ns, se_grid=ses)
        rows.append(row)
    finite = [r["n_required"] for r in rows if math.isfinite(r["n_required"])]
    best = min(finite) if finite else None
    for r in rows:
        r["ratio_to_best"] = (r["n_required"] / best) if best and math.isfinite(r["n_required"]) else math.inf
    return rows
