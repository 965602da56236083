#!/usr/bin/env python3
"""
Diagnostics - temporal-locality and spectral analysis of embedding traces

Read-only: nothing here touches model parameters or checkpoints.
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from scipy.signal import find_peaks

from latent_tsf.services.data_service import WindowedSeries
from latent_tsf.services.layers import TensorF, as_tensor
from latent_tsf.utils.config import TAP_POINTS
from latent_tsf.utils.errors import ConfigError, DataLoadError, ShapeError

logger = logging.getLogger(__name__)

TRACE_SOURCES = ("raw_observations", "backbone_embeddings")
PEAK_RELATIVE_HEIGHT = 0.1
ALIGNMENT_PEAKS = 2


@dataclass
class EmbeddingTrace:
    """One row per time step; step_index holds absolute, strictly increasing time indices."""

    source: str
    matrix: TensorF
    step_index: np.ndarray
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.source not in TRACE_SOURCES:
            raise ConfigError(f"Unknown trace source '{self.source}', expected one of {TRACE_SOURCES}")
        self.matrix = as_tensor(self.matrix)
        self.step_index = np.asarray(self.step_index, dtype=np.int64)
        if self.matrix.ndim != 2:
            raise ShapeError(f"Trace matrix must be (steps, dims), got shape {tuple(self.matrix.shape)}")
        if len(self.step_index) != self.matrix.shape[0]:
            raise ShapeError.mismatch("trace step_index", (self.matrix.shape[0],), self.step_index.shape)
        if np.any(np.diff(self.step_index) <= 0):
            raise ShapeError("Trace step_index must be strictly increasing")

    @property
    def steps(self) -> int:
        return self.matrix.shape[0]

    @property
    def dims(self) -> int:
        return self.matrix.shape[1]

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(self.matrix, columns=[f"dim_{i}" for i in range(self.dims)])
        frame.insert(0, "step_index", self.step_index)
        return frame

    def save(self, csv_path: Path) -> Path:
        """Write <name>.csv and its <name>.json metadata sidecar."""
        csv_path = Path(csv_path)
        csv_path.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(csv_path, index=False)
        sidecar = {"source": self.source, "steps": self.steps, "dims": self.dims, **self.metadata}
        with open(csv_path.with_suffix(".json"), "w", encoding="utf-8") as f:
            json.dump(sidecar, f, indent=2)
        logger.info(f"💾 Exported {self.source} trace {self.steps}x{self.dims} to {csv_path}")
        return csv_path

    @classmethod
    def load(cls, csv_path: Path) -> "EmbeddingTrace":
        csv_path = Path(csv_path)
        sidecar_path = csv_path.with_suffix(".json")
        if not csv_path.is_file() or not sidecar_path.is_file():
            raise DataLoadError(f"Embedding trace not found: {csv_path} (with sidecar {sidecar_path.name})")
        frame = pd.read_csv(csv_path, float_precision="round_trip")
        if "step_index" not in frame.columns:
            raise DataLoadError(f"Embedding trace {csv_path} has no step_index column")
        with open(sidecar_path, "r", encoding="utf-8") as f:
            metadata = json.load(f)
        source = metadata.pop("source", "backbone_embeddings")
        metadata.pop("steps", None)
        metadata.pop("dims", None)
        return cls(
            source=source,
            matrix=frame.drop(columns=["step_index"]).to_numpy(dtype=np.float64),
            step_index=frame["step_index"].to_numpy(),
            metadata=metadata,
        )


def adjacent_distance(trace: EmbeddingTrace) -> float:
    """
    mean_t ||e_{t+1} - e_t|| / mean_t ||e_t||

    Scale-free and rotation-invariant; lower means stronger temporal locality.
    """
    if trace.steps < 2:
        raise ShapeError(f"adjacent_distance needs at least 2 steps, got {trace.steps}")
    mean_norm = float(np.mean(np.linalg.norm(trace.matrix, axis=1)))
    if mean_norm == 0.0:
        logger.warning("⚠️ adjacent_distance on an all-zero trace; returning 0")
        return 0.0
    gaps = np.linalg.norm(np.diff(trace.matrix, axis=0), axis=1)
    return float(np.mean(gaps)) / mean_norm


def next_power_of_two(n: int) -> int:
    return 1 << max(0, (n - 1).bit_length())


def _bit_reversal(n: int) -> np.ndarray:
    bits = n.bit_length() - 1
    index = np.arange(n)
    reversed_index = np.zeros(n, dtype=np.int64)
    for bit in range(bits):
        reversed_index |= ((index >> bit) & 1) << (bits - 1 - bit)
    return reversed_index


def fft_radix2(x: TensorF) -> np.ndarray:
    """
    Iterative decimation-in-time FFT over the last axis.

    The last axis length must be a power of two.
    """
    x = np.asarray(x)
    n = x.shape[-1]
    if n < 1 or n & (n - 1):
        raise ShapeError(f"fft_radix2 needs a power-of-two length, got {n}")
    lead = x.shape[:-1]
    values = x[..., _bit_reversal(n)].astype(np.complex128)

    size = 2
    while size <= n:
        half = size // 2
        twiddle = np.exp(-2j * np.pi * np.arange(half) / size)
        blocks = values.reshape(lead + (n // size, size))
        even = blocks[..., :half]
        odd = blocks[..., half:] * twiddle
        values = np.concatenate([even + odd, even - odd], axis=-1).reshape(lead + (n,))
        size *= 2
    return values


def dft(x: TensorF) -> np.ndarray:
    """
    Exact-length DFT over the last axis built on fft_radix2.

    Power-of-two lengths go straight to fft_radix2; other lengths use the
    chirp-z (Bluestein) identity jk = (j^2 + k^2 - (k - j)^2) / 2, which turns
    the transform into a circular convolution of power-of-two length.
    """
    x = np.asarray(x)
    n = x.shape[-1]
    if n < 1:
        raise ShapeError("dft needs a non-empty last axis")
    if not n & (n - 1):
        return fft_radix2(x)
    k = np.arange(n)
    # k^2 mod 2n keeps the chirp phase small for long inputs
    chirp = np.exp(-1j * np.pi * ((k * k) % (2 * n)) / n)
    m = next_power_of_two(2 * n - 1)
    a = np.zeros(x.shape[:-1] + (m,), dtype=np.complex128)
    a[..., :n] = x * chirp
    b = np.zeros(m, dtype=np.complex128)
    b[:n] = np.conj(chirp)
    b[m - n + 1:] = np.conj(chirp[1:])[::-1]
    spectrum_product = fft_radix2(a) * fft_radix2(b)
    convolved = np.conj(fft_radix2(np.conj(spectrum_product))) / m
    return chirp * convolved[..., :n]


@dataclass
class SpectrumReport:
    """One-sided magnitude spectrum averaged over dimensions; frequencies in cycles per step."""

    frequencies: TensorF
    magnitude: TensorF
    peaks: List[Tuple[float, float]]
    nfft: int

    def top_frequencies(self, k: int) -> List[float]:
        return [freq for freq, _ in self.peaks[:k]]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"frequency": self.frequencies, "magnitude": self.magnitude})

    def to_dict(self) -> Dict[str, Any]:
        return {
            "nfft": self.nfft,
            "frequencies": self.frequencies.tolist(),
            "magnitude": self.magnitude.tolist(),
            "peaks": [{"frequency": f, "magnitude": m} for f, m in self.peaks],
        }


def one_sided_transform(trace: EmbeddingTrace) -> Tuple[TensorF, np.ndarray]:
    """(frequencies, complex coefficients of shape (dims, bins)) of the mean-removed trace."""
    if trace.steps < 4:
        raise ShapeError(f"spectrum needs at least 4 steps, got {trace.steps}")
    centered = trace.matrix - trace.matrix.mean(axis=0)
    bins = trace.steps // 2 + 1
    return np.arange(bins) / trace.steps, dft(centered.T)[:, :bins]


def spectrum(trace: EmbeddingTrace, top_k: int = 5, relative_height: float = PEAK_RELATIVE_HEIGHT) -> SpectrumReport:
    """
    Mean-removed one-sided spectrum with ranked peaks.

    The transform length equals the trace length, so there are
    floor(steps / 2) + 1 bins at k / steps cycles per step.
    """
    frequencies, coefficients = one_sided_transform(trace)
    magnitude = np.abs(coefficients).mean(axis=0)

    peaks: List[Tuple[float, float]] = []
    top = float(magnitude.max())
    if top > 0.0:
        indices, _ = find_peaks(magnitude, height=relative_height * top)
        ranked = sorted(indices, key=lambda i: (-magnitude[i], i))[:top_k]
        peaks = [(float(frequencies[i]), float(magnitude[i])) for i in ranked]
    return SpectrumReport(frequencies=frequencies, magnitude=magnitude, peaks=peaks, nfft=trace.steps)


def export_embeddings(forecaster, windows: WindowedSeries, tap: str, slice_length: int,
                      metadata: Optional[Dict[str, Any]] = None) -> EmbeddingTrace:
    """
    Tap the model on the first `slice_length` consecutive windows of a split.

    Row t is the representation for the forecast origin step_index[t]
    (the first step after the lookback).
    """
    if tap not in TAP_POINTS:
        raise ConfigError(f"Unknown tap point '{tap}', expected one of {TAP_POINTS}")
    count = min(slice_length, len(windows))
    if count < 2:
        raise ShapeError(f"Need at least 2 windows to export embeddings, got {count}")

    rows = []
    indices = np.arange(count)
    for start in range(0, count, 256):
        x, _ = windows.batch(indices[start:start + 256])
        rows.append(forecaster.embed(x, tap))
    return EmbeddingTrace(
        source="backbone_embeddings",
        matrix=np.concatenate(rows, axis=0),
        step_index=windows.start_indices()[:count] + windows.seq_len,
        metadata={"tap": tap, **(metadata or {})},
    )


def raw_observation_trace(windows: WindowedSeries, slice_length: int,
                          metadata: Optional[Dict[str, Any]] = None) -> EmbeddingTrace:
    """Standardized observations at the same forecast origins export_embeddings uses."""
    count = min(slice_length, len(windows))
    rows = np.arange(count) + windows.seq_len
    return EmbeddingTrace(
        source="raw_observations",
        matrix=windows.view[rows],
        step_index=windows.start_indices()[:count] + windows.seq_len,
        metadata=dict(metadata or {}),
    )


@dataclass
class ComparisonReport:
    distance_a: float
    distance_b: float
    spectrum_a: SpectrumReport
    spectrum_b: SpectrumReport
    raw_spectrum: Optional[SpectrumReport] = None
    peak_alignment_a: Optional[float] = None
    peak_alignment_b: Optional[float] = None

    @property
    def difference(self) -> float:
        return self.distance_a - self.distance_b

    @property
    def sign(self) -> int:
        return int(np.sign(self.difference))

    def to_dict(self) -> Dict[str, Any]:
        report = {
            "adjacent_distance": {"a": self.distance_a, "b": self.distance_b},
            "difference": self.difference,
            "sign": self.sign,
            "peak_alignment": {"a": self.peak_alignment_a, "b": self.peak_alignment_b},
            "spectrum_a": self.spectrum_a.to_dict(),
            "spectrum_b": self.spectrum_b.to_dict(),
        }
        if self.raw_spectrum is not None:
            report["raw_spectrum"] = self.raw_spectrum.to_dict()
        return report


def peak_alignment(candidate: SpectrumReport, reference: SpectrumReport, k: int = ALIGNMENT_PEAKS) -> float:
    """Fraction of the reference's top-k peak frequencies found among the candidate's top-k."""
    wanted = reference.top_frequencies(k)
    if not wanted:
        return 0.0
    found = set(candidate.top_frequencies(k))
    return sum(1 for freq in wanted if freq in found) / len(wanted)


def compare_runs(trace_a: EmbeddingTrace, trace_b: EmbeddingTrace,
                 raw: Optional[EmbeddingTrace] = None) -> ComparisonReport:
    """Locality and spectral comparison of two traces over the same time steps."""
    if not np.array_equal(trace_a.step_index, trace_b.step_index):
        raise ShapeError(
            f"Traces cover different time steps ({trace_a.steps} vs {trace_b.steps} steps, "
            f"first {trace_a.step_index[:1].tolist()} vs {trace_b.step_index[:1].tolist()})"
        )
    report = ComparisonReport(
        distance_a=adjacent_distance(trace_a),
        distance_b=adjacent_distance(trace_b),
        spectrum_a=spectrum(trace_a),
        spectrum_b=spectrum(trace_b),
    )
    if raw is not None:
        if not np.array_equal(raw.step_index, trace_a.step_index):
            raise ShapeError("Raw-observation trace covers different time steps than the compared traces")
        report.raw_spectrum = spectrum(raw)
        report.peak_alignment_a = peak_alignment(report.spectrum_a, report.raw_spectrum)
        report.peak_alignment_b = peak_alignment(report.spectrum_b, report.raw_spectrum)
    logger.info(
        f"📊 Adjacent distance a={report.distance_a:.4f} b={report.distance_b:.4f} (sign {report.sign:+d})"
    )
    return report
