"""Input validation helpers for the estimators."""

import numpy as np

from .exceptions import ContractViolation
from .network import ChannelRealization


def check_channel(X):
    """Validate a channel realization against its configuration and return
    it unchanged."""
    if not isinstance(X, ChannelRealization):
        raise TypeError(f"expected a ChannelRealization, got {type(X).__name__}")
    cfg = X.config
    if len(X.H) != cfg.K or any(len(row) != cfg.K for row in X.H):
        raise ContractViolation(f"H must be {cfg.K}x{cfg.K}")
    batch = X.batch_shape
    for k in range(cfg.K):
        for l in range(cfg.K):
            h = X.H[k][l]
            if h.shape != batch + (cfg.N[k], cfg.M[l]):
                raise ContractViolation(
                    f"H[{k}][{l}] has shape {h.shape}, expected "
                    f"{batch + (cfg.N[k], cfg.M[l])}")
            if not np.all(np.isfinite(h)):
                raise ContractViolation(f"H[{k}][{l}] has non-finite entries")
    if cfg.interferer is not None and X.H_E is None:
        raise ContractViolation("config has an interferer but the draw has no "
                                "interferer channels")
    return X


def check_precoders(real, F):
    cfg = real.config
    F = [np.asarray(f, dtype=complex) for f in F]
    if len(F) != cfg.K:
        raise ContractViolation(f"expected {cfg.K} precoders, got {len(F)}")
    for l, f in enumerate(F):
        if f.shape[-2:] != (cfg.M[l], cfg.S[l]):
            raise ContractViolation(f"precoder {l} has shape {f.shape}")
        F[l] = np.broadcast_to(f, real.batch_shape + f.shape[-2:]).copy()
    return F
