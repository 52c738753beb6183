"""scikit-learn estimator adapters over the functional core.

The pipeline images -> audio -> log-mel features -> k-NN labels is exactly
fit/transform/predict shaped, so the core functions are wrapped as estimators
usable in sklearn pipelines and grid searches. All parameters are stored
verbatim (clone-compatible); fitted attributes carry the trailing underscore.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .codec import decode, encode, sample_count
from .dsp import AudioClip, log_mel_features, mel_filterbank
from .image import GrayImage
from .schemes import EncodingScheme, get_preset
from .assess import knn_posterior


def check_images(X) -> np.ndarray:
    """Coerce a batch of grayscale images to a (n, rows, cols) uint8 array."""
    if isinstance(X, GrayImage):
        X = [X]
    if isinstance(X, (list, tuple)):
        arrays = [x.pixels if isinstance(x, GrayImage) else np.asarray(x) for x in X]
        shapes = {a.shape for a in arrays}
        if len(shapes) != 1:
            raise ValueError(f"images must share one shape, got {sorted(shapes)}")
        X = np.stack(arrays)
    X = np.asarray(X)
    if X.ndim != 3:
        raise ValueError(f"expected (n, rows, cols) image batch, got shape {X.shape}")
    if X.dtype != np.uint8:
        if np.any(X < 0) or np.any(X > 255) or np.any(X != np.floor(X)):
            raise ValueError("pixel values must be integers in [0, 255]")
        X = X.astype(np.uint8)
    return X


def check_audio(X, expected_samples: int | None = None) -> np.ndarray:
    """Coerce a batch of clips to a (n, samples) float64 array in [-1, 1]."""
    if isinstance(X, AudioClip):
        X = [X]
    if isinstance(X, (list, tuple)):
        X = np.stack([x.samples if isinstance(x, AudioClip) else np.asarray(x) for x in X])
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"expected (n, samples) audio batch, got shape {X.shape}")
    if expected_samples is not None and X.shape[1] != expected_samples:
        raise ValueError(f"expected {expected_samples} samples per clip, got {X.shape[1]}")
    if np.any(np.abs(X) > 1.0):
        raise ValueError("samples must lie in [-1, 1]")
    return X


def _resolve_scheme(scheme) -> EncodingScheme:
    return get_preset(scheme) if isinstance(scheme, str) else scheme


class ImageSonifier(TransformerMixin, BaseEstimator):
    """Images to audio under one encoding scheme; inverse_transform decodes.

    `scheme` is a preset name or an EncodingScheme. Image geometry is fixed
    at fit time from the data.
    """

    def __init__(self, scheme="tanh"):
        self.scheme = scheme

    def fit(self, X, y=None):
        X = check_images(X)
        self.rows_, self.cols_ = X.shape[1], X.shape[2]
        self.scheme_ = _resolve_scheme(self.scheme)
        self.n_samples_ = sample_count(self.scheme_)
        return self

    def transform(self, X) -> np.ndarray:
        check_is_fitted(self, "scheme_")
        X = check_images(X)
        if X.shape[1:] != (self.rows_, self.cols_):
            raise ValueError(f"fitted for {self.rows_}x{self.cols_} images, got {X.shape[1:]}")
        out = np.empty((X.shape[0], self.n_samples_))
        for i, pixels in enumerate(X):
            out[i] = encode(GrayImage(pixels), self.scheme_).samples
        return out

    def inverse_transform(self, X) -> np.ndarray:
        check_is_fitted(self, "scheme_")
        X = check_audio(X, self.n_samples_)
        out = np.empty((X.shape[0], self.rows_, self.cols_), dtype=np.uint8)
        for i, samples in enumerate(X):
            clip = AudioClip(samples, self.scheme_.sample_rate_hz)
            out[i] = decode(clip, self.scheme_, self.rows_, self.cols_).pixels
        return out


class LogMelExtractor(TransformerMixin, BaseEstimator):
    """Audio clips to fixed-length log-mel feature vectors."""

    def __init__(self, sample_rate_hz=16000, frame_len=512, hop=160, n_mels=64, segments=16):
        self.sample_rate_hz = sample_rate_hz
        self.frame_len = frame_len
        self.hop = hop
        self.n_mels = n_mels
        self.segments = segments

    def fit(self, X, y=None):
        self.filterbank_ = mel_filterbank(
            n_mels=self.n_mels,
            sample_rate_hz=self.sample_rate_hz,
            frame_len_samples=self.frame_len,
        )
        return self

    def transform(self, X) -> np.ndarray:
        check_is_fitted(self, "filterbank_")
        X = check_audio(X)
        rows = [
            log_mel_features(
                AudioClip(samples, self.sample_rate_hz),
                self.filterbank_,
                frame_len_samples=self.frame_len,
                hop_samples=self.hop,
                segments=self.segments,
            )
            for samples in X
        ]
        return np.stack(rows)


class NeighborsPosteriorClassifier(ClassifierMixin, BaseEstimator):
    """k-NN with the exp(-mean_distance/tau) class posterior."""

    def __init__(self, k=5, tau=1.0):
        self.k = k
        self.tau = tau

    def fit(self, X, y):
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y)
        if X.ndim != 2 or len(y) != X.shape[0]:
            raise ValueError("X must be (n, d) with one label per row")
        self.X_ = X
        self.y_ = [str(label) for label in y]
        self.classes_ = np.array(sorted(set(self.y_)))
        return self

    def predict_proba(self, X) -> np.ndarray:
        check_is_fitted(self, "X_")
        X = np.asarray(X, dtype=np.float64)
        out = np.zeros((X.shape[0], len(self.classes_)))
        for i, query in enumerate(X):
            posterior = knn_posterior(self.X_, self.y_, query, k=self.k, tau=self.tau)
            for j, label in enumerate(self.classes_):
                out[i, j] = posterior.get(label, 0.0)
        return out

    def predict(self, X) -> np.ndarray:
        proba = self.predict_proba(X)
        # ties break toward the later class name, matching the report pipeline
        best = proba.shape[1] - 1 - np.argmax(proba[:, ::-1], axis=1)
        return self.classes_[best]
