"""Experiment configuration: a flat TOML document, validated up front."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import tomli

from . import metasurface, polarization
from .metasurface import PhaseProfile, sample_field
from .povm import DEFAULT_ORDER_BOUND, KrausSet, PortAssignment, kraus_decompose
from .witness import AnalyzerModel, Scheme

SOURCES = ("analytic", "ChiralRetarder", "GeometricPhase")
SCHEME_KINDS = ("sequential", "bell_parity", "metasurface")


class ConfigError(ValueError):
    """Invalid configuration; ``module`` names the component that rejected it."""

    def __init__(self, module: str, key: str, msg: str):
        super().__init__(f"[{module}] {key}: {msg}")
        self.module = module
        self.key = key


@dataclass
class ExperimentConfig:
    period_x: float = metasurface.DEFAULT_PERIOD_UM
    period_y: float = metasurface.DEFAULT_PERIOD_UM
    depth_z: float = 1.0
    depth_y: float = 1.0
    source: str = "analytic"
    samples: int = 64
    order_bound: int = DEFAULT_ORDER_BOUND
    pitch: float = metasurface.DEFAULT_PITCH_UM
    wavelength: float = metasurface.DEFAULT_WAVELENGTH_UM

    state: str = "bell"
    bell: str = "PhiPlus"
    p: float = 1.0
    matrix_re: list | None = None
    matrix_im: list | None = None

    efficiency: float = 1.0
    dark_count: float = 0.0

    n_pairs: int = 100_000
    seed: int = 0
    bootstrap: int = 1000
    replicates: int = 50
    epsilon: float = 0.01
    schemes: list = field(default_factory=lambda: list(SCHEME_KINDS))
    sequential_visibility: float = 1.0

    sweep_depth_z: list | None = None
    sweep_depth_y: list | None = None

    def canonical(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, separators=(",", ":"))

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()

    # -- builders (each raises ConfigError naming its module) --

    def profile(self, depth_z: float | None = None, depth_y: float | None = None) -> PhaseProfile:
        dz = self.depth_z if depth_z is None else depth_z
        dy = self.depth_y if depth_y is None else depth_y
        try:
            return PhaseProfile(self.period_x, self.period_y, dz, dy)
        except ValueError as exc:
            raise ConfigError("metasurface-model", "profile", str(exc)) from exc

    def field_for(self, profile: PhaseProfile):
        try:
            if self.source == "analytic":
                return sample_field(profile, self.samples, self.samples), None
            synth = metasurface.synthesize_lattice(profile, self.pitch, self.wavelength, self.source)
            # the lattice is piecewise constant per site; hold each site over the sample grid
            return sample_field(synth.field, self.samples, self.samples), synth
        except ValueError as exc:
            raise ConfigError("metasurface-model", "profile.source", str(exc)) from exc

    def kraus_for(self, jones_field) -> KrausSet:
        try:
            return kraus_decompose(jones_field, self.order_bound, self.order_bound)
        except ValueError as exc:
            raise ConfigError("diffraction-povm", "profile.order_bound", str(exc)) from exc

    def rho(self) -> np.ndarray:
        try:
            if self.state == "bell":
                return polarization.bell_state(self.bell)
            if self.state == "werner":
                return polarization.werner_state(self.p, self.bell)
            if self.state == "matrix":
                if self.matrix_re is None:
                    raise ValueError("matrix_re is required")
                im = self.matrix_im if self.matrix_im is not None else np.zeros((4, 4))
                return polarization.validate_density(np.asarray(self.matrix_re) + 1j * np.asarray(im))
            raise ValueError(f"unknown state kind {self.state!r}")
        except ValueError as exc:
            raise ConfigError("polarization-core", "state", str(exc)) from exc

    def analyzer(self, kraus: KrausSet) -> AnalyzerModel:
        try:
            return AnalyzerModel.metasurface(kraus, PortAssignment(), efficiency=self.efficiency,
                                             dark_count=self.dark_count)
        except ValueError as exc:
            raise ConfigError("witness-engine", "analyzer", str(exc)) from exc

    def scheme_list(self, kraus: KrausSet | None) -> list:
        out = []
        for name in self.schemes:
            if name == "sequential":
                out.append(Scheme("sequential", "sequential", self.sequential_visibility))
            elif name == "bell_parity":
                out.append(Scheme("bell_parity", "bell_parity"))
            elif name == "metasurface":
                out.append(Scheme("metasurface", "metasurface", kraus=kraus, ports=PortAssignment()))
        return out

    def validate(self) -> None:
        """Check every field before any computation starts."""
        self.profile()
        if self.sweep_depth_z is not None or self.sweep_depth_y is not None:
            for dz in self.sweep_depth_z or [self.depth_z]:
                for dy in self.sweep_depth_y or [self.depth_y]:
                    self.profile(dz, dy)
        if self.source not in SOURCES:
            raise ConfigError("metasurface-model", "profile.source", f"must be one of {SOURCES}")
        if self.samples < 32:
            raise ConfigError("diffraction-povm", "profile.samples", "need at least 32 samples per period")
        if self.samples < 4 * (self.order_bound + 1):
            raise ConfigError("diffraction-povm", "profile.order_bound",
                              f"{self.samples} samples alias order {self.order_bound}")
        self.rho()
        if not 0 <= self.efficiency <= 1:
            raise ConfigError("witness-engine", "analyzer.efficiency", "must lie in [0, 1]")
        if not 0 <= self.dark_count < 1:
            raise ConfigError("witness-engine", "analyzer.dark_count", "must lie in [0, 1)")
        if not 0 <= self.sequential_visibility <= 1:
            raise ConfigError("witness-engine", "run.sequential_visibility", "must lie in [0, 1]")
        if self.n_pairs < 1:
            raise ConfigError("witness-engine", "run.n_pairs", "must be at least 1")
        if self.seed < 0 or self.seed >= 2 ** 64:
            raise ConfigError("cli-harness", "run.seed", "must be an unsigned 64-bit integer")
        if self.epsilon <= 0:
            raise ConfigError("witness-engine", "run.epsilon", "must be positive")
        if self.replicates < 2:
            raise ConfigError("witness-engine", "run.replicates", "need at least 2 replicates")
        bad = [s for s in self.schemes if s not in SCHEME_KINDS]
        if bad:
            raise ConfigError("witness-engine", "run.schemes", f"unknown scheme(s) {bad}")


_SECTIONS = {
    "profile": {"period_x", "period_y", "depth_z", "depth_y", "source", "samples", "order_bound",
                "pitch", "wavelength"},
    "state": {"kind": "state", "bell": "bell", "p": "p", "matrix_re": "matrix_re",
              "matrix_im": "matrix_im"},
    "analyzer": {"efficiency", "dark_count"},
    "run": {"n_pairs", "seed", "bootstrap", "replicates", "epsilon", "schemes",
            "sequential_visibility"},
    "sweep": {"depth_z": "sweep_depth_z", "depth_y": "sweep_depth_y"},
}


def from_dict(doc: dict) -> ExperimentConfig:
    kwargs = {}
    for section, body in doc.items():
        if section not in _SECTIONS:
            raise ConfigError("cli-harness", section, "unknown section")
        keys = _SECTIONS[section]
        mapping = keys if isinstance(keys, dict) else {k: k for k in keys}
        for key, val in body.items():
            if key not in mapping:
                raise ConfigError("cli-harness", f"{section}.{key}", "unknown key")
            kwargs[mapping[key]] = val
    try:
        return ExperimentConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError("cli-harness", "config", str(exc)) from exc


def load(path) -> ExperimentConfig:
    try:
        with open(Path(path), "rb") as fh:
            doc = tomli.load(fh)
    except (OSError, tomli.TOMLDecodeError) as exc:
        raise ConfigError("cli-harness", str(path), str(exc)) from exc
    return from_dict(doc)
