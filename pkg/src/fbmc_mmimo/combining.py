"""Per-subcarrier linear combiners (MRC, ZF, MMSE) and real-part detection."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "CombinerMatrix",
    "SingularChannelError",
    "mrc",
    "zf",
    "mmse",
    "make_combiner",
    "combine_detect",
]

ZF_CONDITION_LIMIT = 1e12


class SingularChannelError(np.linalg.LinAlgError):
    """Channel matrix too ill-conditioned for zero forcing."""


@dataclass(frozen=True)
class CombinerMatrix:
    """N x K combining weights W_m for one subcarrier."""

    values: np.ndarray
    detector_kind: str
    subcarrier: int = 0

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.complex128)
        if values.ndim != 2:
            raise ValueError("combiner must be an N x K matrix")
        if not np.all(np.isfinite(values)):
            raise ValueError("combiner entries must be finite")
        object.__setattr__(self, "values", values)

    @property
    def weight_norms_sq(self) -> np.ndarray:
        """Per-user squared weight norms ||w_k||^2."""
        return np.sum(np.abs(self.values) ** 2, axis=0)


def _as_matrix(H) -> np.ndarray:
    H = np.asarray(getattr(H, "values", H), dtype=np.complex128)
    if H.ndim != 2:
        raise ValueError("channel response must be an N x K matrix")
    return H


def mrc(H, subcarrier: int = 0) -> CombinerMatrix:
    """Maximum-ratio combining H D^{-1}, D_kk = sum_i |H_m^{i,k}|^2.

    diag(W^H H) is exactly the all-ones vector.
    """
    H = _as_matrix(H)
    norms = np.sum(np.abs(H) ** 2, axis=0)
    if np.any(norms == 0.0):
        raise ValueError("channel has an all-zero column; MRC undefined")
    return CombinerMatrix(values=H / norms, detector_kind="mrc",
                          subcarrier=subcarrier)


def zf(H, subcarrier: int = 0) -> CombinerMatrix:
    """Zero-forcing H (H^H H)^{-1}; W^H H = I_K for full-column-rank H."""
    H = _as_matrix(H)
    N, K = H.shape
    if N < K:
        raise SingularChannelError(
            f"zero forcing needs at least as many antennas as users "
            f"({N} < {K})")
    if np.linalg.cond(H) > ZF_CONDITION_LIMIT:
        raise SingularChannelError(
            "channel matrix is rank deficient (condition number above "
            f"{ZF_CONDITION_LIMIT:g})")
    gram = H.conj().T @ H
    w_h = np.linalg.solve(gram, H.conj().T)  # (H^H H)^{-1} H^H
    return CombinerMatrix(values=w_h.conj().T, detector_kind="zf",
                          subcarrier=subcarrier)


def mmse(H, noise_variance: float, subcarrier: int = 0) -> CombinerMatrix:
    """MMSE combiner H (H^H H + sigma^2 I)^{-1}; well-posed for sigma^2 > 0."""
    H = _as_matrix(H)
    if noise_variance <= 0.0:
        raise ValueError("MMSE noise variance must be positive")
    K = H.shape[1]
    gram = H.conj().T @ H + noise_variance * np.eye(K)
    w_h = np.linalg.solve(gram, H.conj().T)
    return CombinerMatrix(values=w_h.conj().T, detector_kind="mmse",
                          subcarrier=subcarrier)


def make_combiner(detector: str, H, noise_variance: float,
                  subcarrier: int = 0) -> CombinerMatrix:
    """Dispatch on detector name ('mrc' | 'zf' | 'mmse')."""
    kind = detector.lower()
    if kind == "mrc":
        return mrc(H, subcarrier)
    if kind == "zf":
        return zf(H, subcarrier)
    if kind == "mmse":
        return mmse(H, noise_variance, subcarrier)
    raise ValueError(f"unknown detector {detector!r}; use mrc, zf or mmse")


def combine_detect(combiners, grids) -> np.ndarray:
    """Symbol estimates d_hat = Re{W_m^H y_{m,n}} for all users.

    ``combiners`` holds one CombinerMatrix per subcarrier. ``grids`` stacks
    the per-antenna demodulated grids as an N x M x T complex array (or a
    sequence of N grids). Returns a real K x M x T array.
    """
    grids = np.asarray(grids, dtype=np.complex128)
    if grids.ndim != 3:
        raise ValueError("grids must stack to an N x M x T array")
    N, M, T = grids.shape
    if len(combiners) != M:
        raise ValueError(
            f"got {len(combiners)} combiners for {M} subcarriers")
    W = np.stack([np.asarray(c.values, dtype=np.complex128) for c in combiners])
    if W.shape[1] != N:
        raise ValueError(
            f"combiners expect {W.shape[1]} antennas, grids have {N}")
    return np.real(np.einsum("mik,imt->kmt", W.conj(), grids, optimize=True))
