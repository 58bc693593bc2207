"""Plane-wave compounding beamforming toolkit.

Pipeline: simulate (or load) plane-wave RF channel data, convert each trace
to its analytic signal, gather a per-pixel matrix of time-aligned samples
over all transmit angles and receive elements, reduce it with one of the
compounding beamformers, and render contrast-matched displays and quality
reports.
"""

from .geometry import (ImagingGrid, PlaneWaveSequence, ProbeGeometry, aperture_mask,
                       rx_delay, tx_delay)
from .datapath import (AnalyticDataset, RFDataset, SignalMatrix, analytic_signal,
                       build_signal_matrix, sample_trace, signal_matrix_block,
                       to_analytic)
from .beamformers import (BaselineParams, BeamformedImage, JcfParams, MinVarParams,
                          METHOD_NAMES, beamform_cf, beamform_das, beamform_fdmas,
                          beamform_gcf, beamform_image, beamform_jcf, beamform_minvar,
                          beamform_pcf, beamform_ucf, cf_weights, gcf_weights, ucf_weight,
                          jcf_weights_direct, jcf_weights_factorized, minvar_weights,
                          pcf_weights)
from .display import (DisplayImage, QualityReport, contrast, export_pgm, gamma_compress,
                      image_metrics, match_contrast, write_report_csv)
from .simulator import Phantom, Pulse, make_speckle_phantom, required_duration, simulate_rf
from .io import DatasetFormatError, read_dataset, write_dataset
from .cli import MethodSpec, RunConfig, method_spec, run_bench, run_compare

__version__ = "0.1.0"

__all__ = [
    "AnalyticDataset", "BaselineParams", "BeamformedImage", "DatasetFormatError",
    "DisplayImage", "ImagingGrid", "JcfParams", "METHOD_NAMES", "MethodSpec",
    "MinVarParams", "Phantom", "PlaneWaveSequence", "ProbeGeometry", "Pulse",
    "QualityReport", "RFDataset", "RunConfig", "SignalMatrix", "analytic_signal",
    "aperture_mask", "beamform_cf", "beamform_das", "beamform_fdmas", "beamform_gcf",
    "beamform_image", "beamform_jcf", "beamform_minvar", "beamform_pcf", "beamform_ucf",
    "build_signal_matrix", "cf_weights", "contrast", "export_pgm", "gamma_compress",
    "gcf_weights", "image_metrics", "jcf_weights_direct", "jcf_weights_factorized",
    "make_speckle_phantom", "match_contrast", "method_spec", "minvar_weights",
    "pcf_weights", "ucf_weight", "read_dataset", "required_duration", "run_bench", "run_compare",
    "rx_delay", "sample_trace", "signal_matrix_block", "simulate_rf", "to_analytic",
    "tx_delay", "write_dataset", "write_report_csv",
]
