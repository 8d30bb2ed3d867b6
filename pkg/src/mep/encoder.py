"""Deterministic differentiable speaker encoder.

A small fixed-weight network standing in for a pretrained speaker model
under white-box attack: log-mel frames go through a two-layer tanh MLP,
temporal statistics pooling (mean and standard deviation over frames),
a linear projection, and L2 normalization into a unit embedding.
Weights are drawn from a seed, so identical seeds give bitwise-identical
models.  The network is untrained on purpose; attacks only need a
differentiable map with non-degenerate gradients.

The backward pass is written out by hand (reverse mode through
normalization, projection, pooling, tanh layers, log, filterbank); no
autodiff framework is involved.
"""

from __future__ import annotations

import numpy as np

from . import spectral
from .errors import ShapeMismatchError
from .spectral import MelFilterbank, PowerSpectrum
from .validation import as_matrix, check_min_frames, check_unit_norm

#: Variance guard inside the std-pooling square root.
_VAR_EPS = 1e-12


class SpeakerEncoder:
    """Seeded fixed-weight embedding network.

    Layer widths: n_mels -> hidden -> hidden -> (mean || std) ->
    embedding_dim, tanh activations, unit-norm output.  Weights and
    biases are uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], drawn in a
    fixed order from ``numpy.random.default_rng(seed)``.
    """

    def __init__(self, seed: int = 0, n_mels: int = 80, hidden: int = 128,
                 embedding_dim: int = 64):
        self.seed = int(seed)
        self.n_mels = n_mels
        self.hidden = hidden
        self.embedding_dim = embedding_dim
        rng = np.random.default_rng(self.seed)

        def layer(fan_in, fan_out):
            bound = 1.0 / np.sqrt(fan_in)
            w = rng.uniform(-bound, bound, size=(fan_out, fan_in))
            b = rng.uniform(-bound, bound, size=fan_out)
            return w, b

        self.w1, self.b1 = layer(n_mels, hidden)
        self.w2, self.b2 = layer(hidden, hidden)
        self.w3, self.b3 = layer(2 * hidden, embedding_dim)

    # -- forward ------------------------------------------------------------

    def _forward_cached(self, log_mel: np.ndarray):
        """Forward pass keeping the intermediates the backward pass needs."""
        x = as_matrix(log_mel, "log-mel features")
        check_min_frames(x.shape[0])
        if x.shape[1] != self.n_mels:
            raise ShapeMismatchError(
                f"expected {self.n_mels} mel channels, got {x.shape[1]}"
            )
        h1 = np.tanh(x @ self.w1.T + self.b1)            # (M, H)
        h2 = np.tanh(h1 @ self.w2.T + self.b2)           # (M, H)
        mean = h2.mean(axis=0)                           # (H,)
        centered = h2 - mean
        var = np.mean(centered**2, axis=0)
        std = np.sqrt(var + _VAR_EPS)                    # (H,)
        pooled = np.concatenate([mean, std])             # (2H,)
        z = self.w3 @ pooled + self.b3                   # (D,)
        norm = float(np.linalg.norm(z))
        if norm == 0.0:
            raise ArithmeticError("degenerate zero embedding")
        e = z / norm
        return e, (h1, h2, centered, std, norm, e)

    def forward(self, log_mel) -> np.ndarray:
        """Unit-norm embedding of one utterance's log-mel features."""
        if isinstance(log_mel, spectral.MelFeatures):
            log_mel = log_mel.log_mel
        e, _ = self._forward_cached(log_mel)
        return e

    def embed_power(self, power_spec: PowerSpectrum | np.ndarray,
                    fb: MelFilterbank) -> np.ndarray:
        """Embedding straight from a power spectrum."""
        feats = spectral.mel_apply(power_spec, fb)
        return self.forward(feats.log_mel)

    def embed_wave(self, wave, fb: MelFilterbank,
                   config: spectral.StftConfig | None = None) -> np.ndarray:
        """Embedding of raw audio via STFT, power, log-mel."""
        spec = spectral.stft(wave, config or fb.config)
        return self.embed_power(spectral.power(spec), fb)

    # -- loss and gradients -------------------------------------------------

    @staticmethod
    def loss(e: np.ndarray, target: np.ndarray) -> float:
        """1 - cosine similarity between unit-norm embeddings; in [0, 2]."""
        e = check_unit_norm(e, "embedding")
        target = check_unit_norm(target, "target embedding")
        return float(1.0 - e @ target)

    def loss_from_power(self, power_data: np.ndarray, target: np.ndarray,
                        fb: MelFilterbank) -> float:
        """Loss as a plain function of the raw power array.

        Accepts unvalidated arrays (even slightly negative entries) so
        finite-difference probes of the gradient stay well-defined.
        """
        mel = as_matrix(power_data) @ fb.weights.T
        log_mel = np.log(np.maximum(mel, fb.log_floor))
        e, _ = self._forward_cached(log_mel)
        return float(1.0 - e @ np.asarray(target, float))

    def _backward_to_log_mel(self, grad_e: np.ndarray, cache) -> np.ndarray:
        """Reverse-mode pass from d(loss)/d(embedding) to d(loss)/d(log-mel)."""
        h1, h2, centered, std, norm, e = cache
        n_frames = h2.shape[0]

        # normalization: dz = (g - (g.e) e) / ||z||
        dz = (grad_e - (grad_e @ e) * e) / norm
        dpooled = self.w3.T @ dz
        dmean = dpooled[: self.hidden]
        dstd = dpooled[self.hidden :]

        # mean/std pooling; d(var)/d(h2[m]) = 2*centered/M, d(std) = d(var)/(2 std)
        dh2 = dmean / n_frames + dstd * centered / (n_frames * std)
        da2 = dh2 * (1.0 - h2**2)
        dh1 = da2 @ self.w2
        da1 = dh1 * (1.0 - h1**2)
        return da1 @ self.w1

    def grad_power(self, power_spec: PowerSpectrum | np.ndarray, target: np.ndarray,
                   fb: MelFilterbank) -> np.ndarray:
        """Exact gradient of the loss with respect to every bin energy."""
        _, grad = self.loss_and_grad_power(power_spec, target, fb)
        return grad

    def loss_and_grad_power(self, power_spec: PowerSpectrum | np.ndarray,
                            target: np.ndarray, fb: MelFilterbank):
        """Loss value and its gradient w.r.t. the power spectrum."""
        target = check_unit_norm(target, "target embedding")
        feats = spectral.mel_apply(power_spec, fb)
        e, cache = self._forward_cached(feats.log_mel)
        loss = float(1.0 - e @ target)
        grad_log_mel = self._backward_to_log_mel(-target, cache)
        grad = spectral.mel_backward(grad_log_mel, power_spec, fb)
        return loss, grad

    def weight_checksum(self) -> float:
        """Deterministic scalar fingerprint of all weights."""
        parts = [self.w1, self.b1, self.w2, self.b2, self.w3, self.b3]
        return float(sum(np.sum(p * p) for p in parts))
