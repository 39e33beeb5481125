"""Brownian beads: excursions, cut points, half-plane capacity and bead
statistics."""

__version__ = "0.1.0"

from .sim import (Path, make_stream, sample_bm, sample_bes3, sample_excursion,
                  sample_excursion_until_height, scale_path)
from .cut import CutSet, find_cuttimes, find_cuttimes_continued, naive_cuttimes, has_cuttime_in
from .conformal import (VerticalSlit, Semidisk, PolylineHull, HullUnion, CapEstimate,
                        estimate_cap0, estimate_cap1, estimate_caps, prefix_caps, HullMap,
                        hull_map, compose, avoid_probability, f_transform, transformed_clock)
from .fitting import ExponentFit, fit_power_law
from .beads import (BeadRecord, TailCurve, extract_beads, bead_size_tail, first_cap_beyond,
                    bead_lifetime_stats)
from .experiments import (ExperimentConfig, run_exponent_experiment, run_avoidance_experiment,
                          run_subordinator_tail, run_capacity_validation, run_experiment)
