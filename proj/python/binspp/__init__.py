"""Frequency bin-wise speech presence probability estimation."""

from ._binspp import (
    FRAME_LEN,
    HOP,
    NUM_BINS,
    SAMPLE_RATE,
    Bundle,
    Error,
    auc,
    count_macs_per_frame,
    count_params,
    evaluate,
    ground_truth_labels,
    hann_window,
    init_bundle,
    load_bundle,
    log_power,
    mix_at_snr,
    oracle_spp,
    pd_at_pfa,
    power_spectrogram,
    read_wav,
    roc_curve,
    smooth_noise_psd,
    synth_corpus,
    train,
    unbiased_mmse_spp,
    write_wav,
)

__all__ = [
    "FRAME_LEN",
    "HOP",
    "NUM_BINS",
    "SAMPLE_RATE",
    "Bundle",
    "Error",
    "auc",
    "count_macs_per_frame",
    "count_params",
    "evaluate",
    "ground_truth_labels",
    "hann_window",
    "init_bundle",
    "load_bundle",
    "log_power",
    "mix_at_snr",
    "oracle_spp",
    "pd_at_pfa",
    "power_spectrogram",
    "read_wav",
    "roc_curve",
    "smooth_noise_psd",
    "synth_corpus",
    "train",
    "unbiased_mmse_spp",
    "write_wav",
]
