"""Dual-basis metasurface polarization analyzer: Jones fields, diffraction POVMs
and two-photon parity witnesses."""

__version__ = "0.1.0"

from .polarization import (bell_state, commutator_checks, correlator, jones_vector, pauli,
                           ppt_is_entangled, werner_state)
from .metasurface import (JonesField, MetaAtom, PhaseProfile, atom_jones, eq1_jones_at,
                          sample_field, synthesize_lattice)
from .povm import (KrausSet, PortAssignment, Visibilities, calibrate_visibilities,
                   completeness_check, effective_parity_operators, kraus_decompose,
                   port_probabilities, same_axis_mixing_demo, sawtooth_kraus)
from .witness import (AnalyzerModel, CoincidenceTable, Scheme, WitnessReport,
                      bell_parity_sampler, estimate_from_counts, exact_correlators,
                      joint_probabilities, resource_compare, sequential_run, simulate_counts)

__all__ = [name for name in dir() if not name.startswith("_")
           and name not in ("polarization", "metasurface", "povm", "witness")]
