"""Sentence pooling over encoder hidden states."""

from __future__ import annotations

import numpy as np

POOLING_MODES = ("token_mean", "cls")


def pool_hidden_states(hidden_states, attention_mask, last_n: int = 11, mode: str = "token_mean"):
    """Collapse per-layer token states into one sentence vector per input.

    ``hidden_states`` has shape ``(n_layers + 1, batch, tokens, hidden)``
    where index 0 is the embedding-layer output, as returned by encoders
    with ``output_hidden_states=True``. Only the last ``last_n`` encoder
    layers are used; with 12 layers and ``last_n=11`` that is layers 2-12.

    ``token_mean`` averages each layer over non-padding tokens, then
    averages those layer vectors. ``cls`` takes the first token of each
    layer instead of the token mean.
    """
    hs = np.asarray(hidden_states, dtype=np.float64)
    mask = np.asarray(attention_mask, dtype=np.float64)
    if hs.ndim != 4:
        raise ValueError(f"hidden_states must be 4-d, got shape {hs.shape}")
    n_encoder_layers = hs.shape[0] - 1
    if not 1 <= last_n <= n_encoder_layers:
        raise ValueError(f"last_n={last_n} outside 1..{n_encoder_layers}")
    if mode not in POOLING_MODES:
        raise ValueError(f"unknown pooling mode {mode!r}")
    layers = hs[-last_n:]
    if mode == "cls":
        per_layer = layers[:, :, 0, :]
    else:
        weights = mask[None, :, :, None]
        counts = np.clip(mask.sum(axis=1), 1.0, None)[None, :, None]
        per_layer = (layers * weights).sum(axis=2) / counts
    return per_layer.mean(axis=0)
