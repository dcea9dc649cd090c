"""Batch pipeline behind the command line: build, calibrate, count, report.

Every file written here embeds the config hash, and ``manifest.json`` keeps
the SHA-256 of each file body so :func:`verify` can re-check a run directory.
No timestamps are written, so equal ``(config, seed)`` give equal bytes.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, ExperimentConfig
from .povm import (NoSignalError, PortAssignment, calibrate_visibilities, completeness_check,
                   effective_parity_operators, excess_over_identity, port_probabilities)
from .witness import (Scheme, estimate_from_counts, exact_correlators, joint_probabilities,
                      resource_compare, simulate_counts, witness)

MANIFEST = "manifest.json"


def _num(x):
    if x is None:
        return None
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    return x


class Writer:
    """Writes hash-stamped outputs into one directory and tracks them."""

    def __init__(self, out: Path, cfg: ExperimentConfig):
        self.out = Path(out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.cfg = cfg
        self.hash = cfg.config_hash()
        self.files: dict[str, str] = {}

    def _put(self, name: str, text: str):
        path = self.out / name
        path.write_text(text)
        self.files[name] = hashlib.sha256(text.encode()).hexdigest()

    def json(self, name: str, doc: dict):
        body = {"config_hash": self.hash, **doc}
        self._put(name, json.dumps(body, indent=1, sort_keys=True, default=_num) + "\n")

    def csv(self, name: str, header: list, rows: list):
        buf = io.StringIO()
        buf.write(f"# config_hash={self.hash}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
        self._put(name, buf.getvalue())

    def keyvalue(self, name: str, items: dict):
        lines = [f"config_hash = {self.hash}"]
        lines += [f"{k} = {float(v)!r}" if isinstance(v, (float, np.floating)) else f"{k} = {v}"
                  for k, v in items.items()]
        self._put(name, "\n".join(lines) + "\n")

    def manifest(self, command: str):
        path = self.out / MANIFEST
        old = json.loads(path.read_text()) if path.exists() else {}
        files = dict(old.get("files", {})) if old.get("config_hash") == self.hash else {}
        files.update(self.files)
        doc = {
            "config_hash": self.hash,
            "config": json.loads(self.cfg.canonical()),
            "seed": self.cfg.seed,
            "version": __version__,
            "constants": {"order_bound": self.cfg.order_bound, "samples": self.cfg.samples,
                          "numpy": np.__version__},
            "commands": sorted(set(old.get("commands", [])) | {command})
            if old.get("config_hash") == self.hash else [command],
            "files": dict(sorted(files.items())),
        }
        path.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")


def build(cfg: ExperimentConfig, depth_z: float | None = None, depth_y: float | None = None):
    profile = cfg.profile(depth_z, depth_y)
    field, synth = cfg.field_for(profile)
    return profile, field, synth, cfg.kraus_for(field)


def povm_outputs(cfg: ExperimentConfig, w: Writer) -> dict:
    profile, field, synth, kraus = build(cfg)
    summary = {"completeness_residual": completeness_check(kraus),
               "excess_over_identity": excess_over_identity(kraus),
               "unitarity_error": field.max_unitarity_error(),
               "order_bound": kraus.m_max, "grid": list(field.shape)}
    if synth is not None:
        summary["synthesis"] = synth.summary()
    w.json("field.json", field.to_dict())
    w.json("kraus.json", kraus.to_dict())
    w.json("povm_summary.json", summary)
    return summary


def calibration_outputs(cfg: ExperimentConfig, w: Writer):
    _, _, _, kraus = build(cfg)
    ports = PortAssignment()
    try:
        vis = calibrate_visibilities(kraus, ports)
    except NoSignalError as exc:
        raise RuntimeError(f"[diffraction-povm] {exc}") from exc
    parity = effective_parity_operators(kraus, ports, vis)
    items = {"depth_z": cfg.depth_z, "depth_y": cfg.depth_y, "eta_z": vis.eta_z,
             "eta_y": vis.eta_y, "capture": vis.capture,
             "eta_z2_plus_eta_y2": vis.eta_z ** 2 + vis.eta_y ** 2,
             "completeness_residual": completeness_check(kraus),
             "z_bias": parity["z_bias"], "y_bias": parity["y_bias"]}
    w.keyvalue("calibration.txt", items)
    rows = []
    for lab in "HVRL":
        res = port_probabilities(kraus, ports, lab)
        for p, prob in zip(ports.ports, res["probs"]):
            rows.append([lab, p.order[0], p.order[1], float(prob)])
        rows.append([lab, "loss", "", float(res["loss"])])
    w.csv("port_probabilities.csv", ["input", "m", "n", "probability"], rows)
    return vis, kraus


def witness_outputs(cfg: ExperimentConfig, w: Writer):
    vis, kraus = calibration_outputs(cfg, w)
    an = cfg.analyzer(kraus)
    rho = cfg.rho()
    table = joint_probabilities(rho, an, an)
    rows = [[i, j, float(table.probs[i, j])] for i in range(4) for j in range(4)]
    rows.append(["loss", "", float(table.loss)])
    w.csv("joint_probabilities.csv", ["port_a", "port_b", "probability"], rows)
    cz, cy = exact_correlators(rho, an, an)
    wit = witness(cz, cy, vis)
    w.json("witness_exact.json", {"C_z_obs": cz, "C_y_obs": cy, **wit,
                                  "eta_z": vis.eta_z, "eta_y": vis.eta_y})
    return vis, kraus, an, rho


def montecarlo_outputs(cfg: ExperimentConfig, w: Writer):
    vis, kraus, an, rho = witness_outputs(cfg, w)
    counts = simulate_counts(rho, an, an, cfg.n_pairs, cfg.seed)
    w.json("counts.json", counts.to_dict())
    try:
        report = estimate_from_counts(counts, vis, vis, bootstrap=cfg.bootstrap, seed=cfg.seed)
    except ValueError as exc:
        raise RuntimeError(f"[witness-engine] {exc}") from exc
    w.json("witness_report.json", report.to_dict())
    return report


def compare_rows(cfg: ExperimentConfig, workers: int = 1) -> list:
    kraus = build(cfg)[3] if "metasurface" in cfg.schemes else None
    rows = resource_compare(cfg.rho(), cfg.epsilon, cfg.scheme_list(kraus), seed=cfg.seed,
                            replicates=cfg.replicates, workers=workers)
    return rows


def compare_outputs(cfg: ExperimentConfig, w: Writer, workers: int = 1):
    rows = compare_rows(cfg, workers)
    w.csv("compare.csv", ["scheme", "epsilon", "n_required", "fit_exponent", "fit_residual",
                          "ratio_to_best", "flag"],
          [[r["scheme"], r["epsilon"], r["n_required"], r["fit_exponent"], r["fit_residual"],
            r["ratio_to_best"], r["flag"]] for r in rows])
    return rows


def sweep_point(cfg: ExperimentConfig, depth_z: float, depth_y: float, key: int) -> list:
    _, _, _, kraus = build(cfg, depth_z, depth_y)
    try:
        vis = calibrate_visibilities(kraus, PortAssignment())
    except NoSignalError:
        return [depth_z, depth_y, None, None, 0.0, None, None, "no signal"]
    scheme = Scheme("metasurface", "metasurface", kraus=kraus, ports=PortAssignment())
    row = resource_compare(cfg.rho(), cfg.epsilon, [scheme], seed=cfg.seed + key,
                           replicates=cfg.replicates)[0]
    return [depth_z, depth_y, vis.eta_z, vis.eta_y, vis.capture,
            vis.eta_z ** 2 + vis.eta_y ** 2, row["n_required"], row["flag"]]


def sweep(cfg: ExperimentConfig, workers: int = 1) -> list:
    """Visibility trade-off over the configured depth grid, one row per point.

    Rows are sorted by ``(depth_z, depth_y)`` and each point draws from its
    own seed offset, so the table does not depend on ``workers``.
    """
    zs = sorted(cfg.sweep_depth_z or [cfg.depth_z])
    ys = sorted(cfg.sweep_depth_y or [cfg.depth_y])
    points = [(z, y) for z in zs for y in ys]
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(lambda a: sweep_point(cfg, a[1][0], a[1][1], a[0]), enumerate(points)))
    return [sweep_point(cfg, z, y, k) for k, (z, y) in enumerate(points)]


SWEEP_HEADER = ["depth_z", "depth_y", "eta_z", "eta_y", "capture", "eta_z2_plus_eta_y2",
                "n_required", "flag"]


def sweep_outputs(cfg: ExperimentConfig, w: Writer, workers: int = 1):
    rows = sweep(cfg, workers)
    w.csv("sweep.csv", SWEEP_HEADER, rows)
    return rows


def verify(out) -> list:
    """Problems found in a run directory; an empty list means it checks out."""
    out = Path(out)
    path = out / MANIFEST
    if not path.exists():
        return [f"missing {MANIFEST}"]
    man = json.loads(path.read_text())
    problems = []
    recomputed = hashlib.sha256(json.dumps(man["config"], sort_keys=True,
                                           separators=(",", ":")).encode()).hexdigest()
    if recomputed != man["config_hash"]:
        problems.append("manifest config does not match its hash")
    for name, digest in man["files"].items():
        f = out / name
        if not f.exists():
            problems.append(f"{name}: missing")
            continue
        text = f.read_text()
        if hashlib.sha256(text.encode()).hexdigest() != digest:
            problems.append(f"{name}: content hash mismatch")
        if man["config_hash"] not in text:
            problems.append(f"{name}: config hash not embedded")
    return problems


__all__ = ["ConfigError", "Writer", "build", "sweep", "verify"]
