"""soundsight: image-to-sound encoding, decoding, and assessment toolkit."""

from .image import GrayImage, ImageFormatError, image_read, pgm_read, pgm_write
from .schemes import (
    EncodingScheme,
    ExponentialMap,
    PRESETS,
    RectifiedTanhMap,
    get_preset,
    load_scheme,
    scheme_read,
    scheme_write,
)
from .codec import (
    UndecodableGeometryError,
    decode,
    encode,
    goertzel_magnitude,
    min_row_spacing_hz,
    row_frequencies,
    sample_count,
)
from .dsp import (
    AudioClip,
    UnsupportedWavError,
    WavFormatError,
    hz_to_mel,
    log_mel_features,
    mel_filterbank,
    mel_to_hz,
    quantize_pcm16,
    stft,
    wav_read,
    wav_write,
)
from .stimuli import (
    StimulusCorpus,
    StimulusItem,
    StimulusSpec,
    corpus_read,
    corpus_write,
    gen_lesson_corpus,
    gen_lesson_set,
    gen_object_corpus,
    render_shape,
)
from .assess import (
    ConfusionMatrix,
    MetricsReport,
    SchemeComparison,
    SchemeEvaluation,
    ZeroVarianceError,
    bonferroni,
    compare_schemes,
    evaluate_scheme,
    inception_score,
    knn_posterior,
    pearson,
    permutation_test,
    prf,
    reconstruction_fidelity,
)
from .session import Session, SessionError, SessionReport, group_report
from .estimators import ImageSonifier, LogMelExtractor, NeighborsPosteriorClassifier

__all__ = [
    "AudioClip",
    "ConfusionMatrix",
    "EncodingScheme",
    "ExponentialMap",
    "GrayImage",
    "ImageFormatError",
    "ImageSonifier",
    "LogMelExtractor",
    "MetricsReport",
    "NeighborsPosteriorClassifier",
    "PRESETS",
    "RectifiedTanhMap",
    "SchemeComparison",
    "SchemeEvaluation",
    "Session",
    "SessionError",
    "SessionReport",
    "StimulusCorpus",
    "StimulusItem",
    "StimulusSpec",
    "UndecodableGeometryError",
    "UnsupportedWavError",
    "WavFormatError",
    "ZeroVarianceError",
    "bonferroni",
    "compare_schemes",
    "corpus_read",
    "corpus_write",
    "decode",
    "encode",
    "evaluate_scheme",
    "gen_lesson_corpus",
    "gen_lesson_set",
    "gen_object_corpus",
    "get_preset",
    "goertzel_magnitude",
    "group_report",
    "hz_to_mel",
    "image_read",
    "inception_score",
    "knn_posterior",
    "load_scheme",
    "log_mel_features",
    "mel_filterbank",
    "mel_to_hz",
    "min_row_spacing_hz",
    "pearson",
    "permutation_test",
    "pgm_read",
    "pgm_write",
    "prf",
    "quantize_pcm16",
    "reconstruction_fidelity",
    "render_shape",
    "row_frequencies",
    "sample_count",
    "scheme_read",
    "scheme_write",
    "stft",
    "wav_read",
    "wav_write",
]

__version__ = "0.1.0"
