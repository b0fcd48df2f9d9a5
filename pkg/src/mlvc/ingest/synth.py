"""Synthetic multi-label video corpus with controllable label correlation.

Labels come from a Gaussian copula over a correlation matrix.  Every active
label stamps its frame-pattern prototype into a random contiguous window of
the frame sequence, on top of i.i.d. noise.  Video-level features are the
frame means, so both feature modes describe the same videos.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from statistics import NormalDist

import numpy as np

from .dataset import Dataset


@dataclass
class SynthSpec:
    seed: int = 0
    n: int = 1000
    num_labels: int = 25
    dim_rgb: int = 32
    dim_audio: int = 8
    max_frames: int = 30
    min_frames: int | None = None
    correlation: np.ndarray | None = None
    mean_labels: float = 3.4
    window: int = 4
    proto_dims: int = 6
    proto_scale: float = 1.0
    noise: float = 0.5
    rgb_only: float = 0.5
    audio_only: float = 0.2
    video_bias: float = 0.0
    label_noise: float = 0.0
    weak_frac: float = 0.0
    weak_scale: float = 0.25
    weak_partner: bool = False
    domain_frac: float = 0.0
    domain_offset: float = 1.0
    prototype_seed: int | None = None
    id_prefix: str = "syn"

    def validate(self) -> None:
        L = self.num_labels
        if self.n < 1 or L < 1:
            raise ValueError("n and num_labels must be positive")
        if self.proto_dims > self.dim_rgb or self.dim_audio < 1:
            raise ValueError(f"proto_dims={self.proto_dims} does not fit dim_rgb={self.dim_rgb} "
                             f"(dim_audio={self.dim_audio})")
        lo = self.min_frames if self.min_frames is not None else self.max_frames
        if not 1 <= lo <= self.max_frames:
            raise ValueError(f"need 1 <= min_frames <= max_frames, got {lo}, {self.max_frames}")
        if not 0 < self.mean_labels < L:
            raise ValueError(f"mean_labels must lie in (0, {L})")
        if not 0 <= self.domain_frac <= 1:
            raise ValueError("domain_frac must lie in [0, 1]")
        if self.rgb_only + self.audio_only > 1:
            raise ValueError("rgb_only + audio_only must not exceed 1")
        C = self.corr()
        if C.shape != (L, L) or not np.allclose(C, C.T) or np.any(np.abs(C) > 1) \
                or not np.allclose(np.diag(C), 1.0):
            raise ValueError("correlation must be a symmetric LxL matrix with entries in [-1,1] and unit diagonal")

    def corr(self) -> np.ndarray:
        return np.eye(self.num_labels) if self.correlation is None else np.asarray(self.correlation, dtype=np.float64)


@dataclass
class SynthTruth:
    clean_labels: np.ndarray     # (N, L) before label noise
    windows: np.ndarray          # (N, L) window start, -1 where inactive
    prototypes: np.ndarray       # (L, window, D_v + D_a)
    modality: np.ndarray         # (L,) 0 rgb, 1 audio, 2 both
    frequencies: np.ndarray      # (L,) target marginal label rates
    domains: np.ndarray | None = None   # (N,) 1 for second-domain videos
    spec: SynthSpec = field(repr=False, default=None)


def paired_correlation(num_labels: int, rho: float, pairs: int | None = None, spread: bool = False) -> np.ndarray:
    """Block correlation at ``rho``: labels (0,1), (2,3), ... or, with ``spread``,
    (0,L-1), (1,L-2), ... so that a frequent label is tied to a rare one."""
    C = np.eye(num_labels)
    count = num_labels // 2 if pairs is None else pairs
    if count > num_labels // 2:
        raise ValueError(f"{count} disjoint pairs do not fit {num_labels} labels")
    for k in range(count):
        i, j = (k, num_labels - 1 - k) if spread else (2 * k, 2 * k + 1)
        C[i, j] = C[j, i] = rho
    return C


def label_frequencies(num_labels: int, mean_labels: float) -> np.ndarray:
    q = np.exp(-np.arange(num_labels) / max(num_labels / 2.0, 1.0))
    for _ in range(50):
        q = np.clip(q * mean_labels / q.sum(), 0.01, 0.6)
    return q


def make_prototypes(spec: SynthSpec, rng: np.random.Generator):
    L, dv, da = spec.num_labels, spec.dim_rgb, spec.dim_audio
    u = rng.random(L)
    modality = np.where(u < spec.rgb_only, 0, np.where(u < spec.rgb_only + spec.audio_only, 1, 2))
    protos = np.zeros((L, spec.window, dv + da))
    for l in range(L):
        blocks = []
        if modality[l] in (0, 2):
            blocks.append(rng.choice(dv, spec.proto_dims, replace=False))
        if modality[l] in (1, 2):
            blocks.append(dv + rng.choice(da, min(spec.proto_dims, da), replace=False))
        dims = np.concatenate(blocks)
        sign = rng.choice([-1.0, 1.0], size=dims.size)
        mag = 0.5 + 0.5 * rng.random((spec.window, dims.size))
        protos[l][:, dims] = spec.proto_scale * sign * mag
    weak = rng.random(L) < spec.weak_frac
    if spec.weak_partner:
        # the later (rarer) member of every correlated pair
        C = spec.corr()
        weak |= np.array([np.any(C[:l, l] != 0) for l in range(L)])
    protos[weak] *= spec.weak_scale
    return protos, modality


def sample_labels(spec: SynthSpec, rng: np.random.Generator, freq: np.ndarray) -> np.ndarray:
    C = spec.corr()
    try:
        chol = np.linalg.cholesky(C)
    except np.linalg.LinAlgError:
        raise ValueError("correlation matrix is not positive definite") from None
    z = rng.standard_normal((spec.n, spec.num_labels)) @ chol.T
    nd = NormalDist()
    thresholds = np.array([nd.inv_cdf(1.0 - q) for q in freq])
    return (z > thresholds).astype(np.float64)


def synth_generate(spec: SynthSpec) -> tuple[Dataset, SynthTruth]:
    """Deterministic for a fixed ``spec.seed`` (prototypes from ``prototype_seed`` if set)."""
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    proto_rng = rng if spec.prototype_seed is None else np.random.default_rng(spec.prototype_seed)
    protos, modality = make_prototypes(spec, proto_rng)
    freq = label_frequencies(spec.num_labels, spec.mean_labels)
    clean = sample_labels(spec, rng, freq)

    dv, da = spec.dim_rgb, spec.dim_audio
    lo = spec.min_frames if spec.min_frames is not None else spec.max_frames
    lengths = rng.integers(lo, spec.max_frames + 1, size=spec.n)
    # second-domain videos: every frame is offset and label evidence has the opposite sign
    domains = (rng.random(spec.n) < spec.domain_frac).astype(int) if spec.domain_frac > 0 \
        else np.zeros(spec.n, dtype=int)
    windows = np.full(clean.shape, -1, dtype=int)
    rgb, audio = [], []
    for n in range(spec.n):
        F = int(lengths[n])
        frames = spec.noise * rng.standard_normal((F, dv + da))
        if spec.video_bias > 0:
            frames += spec.video_bias * rng.standard_normal(dv + da)
        sign = 1.0
        if domains[n]:
            frames += spec.domain_offset
            sign = -1.0
        for l in np.flatnonzero(clean[n]):
            w = min(spec.window, F)
            start = int(rng.integers(0, F - w + 1))
            windows[n, l] = start
            frames[start:start + w] += sign * protos[l, :w]
        rgb.append(frames[:, :dv])
        audio.append(frames[:, dv:])

    observed = clean.copy()
    if spec.label_noise > 0:
        observed[rng.random(clean.shape) < spec.label_noise] = 0.0
    ids = [f"{spec.id_prefix}{n:06d}" for n in range(spec.n)]
    data = Dataset(ids=ids, labels=observed, rgb=rgb, audio=audio)
    return data, SynthTruth(clean, windows, protos, modality, freq, domains, spec)
