"""Dense complex linear-algebra kernels and pooled singular-value truncation.

Everything downstream (two-site updates, spectra, entropies) goes through
``svd``, ``qr`` and ``truncate_global``; the decomposition backends are
LAPACK via numpy/scipy, wrapped so that failures surface as explicit errors
instead of silently corrupted tensors.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable, Sequence

import numpy as np
import scipy.linalg

# Relative threshold below which a singular value counts as an exact zero
# when deciding ranks.
RANK_CUTOFF = 1e-14

# Relative threshold below which a bond weight is not inverted when a
# division by singular values is required.
DIVISION_CUTOFF = 1e-12


class NumericalFailure(RuntimeError):
    """A dense decomposition did not converge or produced invalid output."""


class DegradedStateError(RuntimeError):
    """A state has lost too much weight to support the requested operation."""


@dataclass(frozen=True)
class SvdResult:
    """Thin SVD ``m = left @ diag(singular_values) @ right_conj``."""

    left: np.ndarray
    singular_values: np.ndarray
    right_conj: np.ndarray


@dataclass(frozen=True)
class TruncationPolicy:
    """How many singular values survive a two-site update.

    chi_max caps the total number kept across all charge sectors.
    weight_threshold, when set, additionally drops the longest tail whose
    total squared weight stays at or below it. reorthogonalize enables a
    local re-canonicalization (QR plus a second SVD of the bond matrix)
    after each update.
    """

    chi_max: int
    weight_threshold: float | None = None
    reorthogonalize: bool = False

    def __post_init__(self) -> None:
        if self.chi_max < 1:
            raise ValueError(f"chi_max must be at least 1, got {self.chi_max}")
        if self.weight_threshold is not None and self.weight_threshold < 0:
            raise ValueError("weight_threshold must be nonnegative")


@dataclass
class TruncationOutcome:
    """Kept (group label, value) pairs in keep order plus the dropped weight."""

    kept: list[tuple[Hashable, float]]
    discarded_weight: float
    kept_by_group: dict[Hashable, np.ndarray] = field(default_factory=dict)


def _as_matrix(m: np.ndarray) -> np.ndarray:
    a = np.asarray(m, dtype=np.complex128)
    if a.ndim != 2:
        raise ValueError(f"expected a 2-d array, got shape {a.shape}")
    if a.shape[0] == 0 or a.shape[1] == 0:
        raise ValueError("matrix must be nonempty")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix contains non-finite entries")
    return a


def svd(m: np.ndarray) -> SvdResult:
    """Thin SVD with singular values sorted in descending order.

    Raises NumericalFailure if neither LAPACK driver converges.
    """
    a = _as_matrix(m)
    try:
        u, s, vh = np.linalg.svd(a, full_matrices=False)
    except np.linalg.LinAlgError:
        # gesdd occasionally fails on ill-conditioned input; gesvd is slower
        # but more robust.
        try:
            u, s, vh = scipy.linalg.svd(a, full_matrices=False, lapack_driver="gesvd")
        except Exception as exc:  # pragma: no cover - hard to trigger on purpose
            raise NumericalFailure(f"SVD did not converge for shape {a.shape}") from exc
    return SvdResult(u, s, vh)


def qr(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Reduced QR with the gauge fixed so diag(R) is real and nonnegative."""
    a = _as_matrix(m)
    q, r = np.linalg.qr(a)
    diag = np.diagonal(r).copy()
    phase = np.where(np.abs(diag) > 0, diag / np.where(np.abs(diag) > 0, np.abs(diag), 1.0), 1.0)
    q = q * phase[np.newaxis, :]
    r = r * np.conj(phase)[:, np.newaxis]
    return q, np.triu(r)


def truncate_global(
    groups: Sequence[tuple[Hashable, np.ndarray]],
    policy: TruncationPolicy,
) -> TruncationOutcome:
    """Keep the globally largest singular values pooled across charge groups.

    All values are pooled into one list and the top policy.chi_max survive;
    there are no per-group quotas. Ties break deterministically: larger value
    first, then smaller group label, then smaller original index within the
    group. Values below RANK_CUTOFF times the largest pooled value count as
    exact zeros and are always dropped. The squared weight of everything
    dropped is returned.
    """
    entries: list[tuple[float, Hashable, int]] = []
    for label, values in groups:
        vals = np.asarray(values, dtype=np.float64)
        if vals.ndim != 1:
            raise ValueError("each group must provide a 1-d value array")
        if np.any(vals < 0) or not np.all(np.isfinite(vals)):
            raise ValueError("singular values must be finite and nonnegative")
        for idx, v in enumerate(vals):
            entries.append((float(v), label, idx))

    if not entries:
        return TruncationOutcome(kept=[], discarded_weight=0.0)

    entries.sort(key=lambda e: (-e[0], e[1], e[2]))
    vmax = entries[0][0]
    floor = RANK_CUTOFF * vmax

    rank = sum(1 for v, _, _ in entries if v > floor) if vmax > 0 else 0
    keep_count = min(policy.chi_max, rank)

    if policy.weight_threshold is not None and keep_count > 0:
        # Drop the longest tail whose total squared weight fits the budget.
        sq = np.array([v * v for v, _, _ in entries[:keep_count]])
        tail = np.cumsum(sq[::-1])[::-1]  # tail[j] = weight of entries j..end
        while keep_count > 0 and tail[keep_count - 1] <= policy.weight_threshold:
            keep_count -= 1

    kept_entries = entries[:keep_count]
    discarded = sum(v * v for v, _, _ in entries[keep_count:])

    kept_by_group: dict[Hashable, list[int]] = {}
    for _, label, idx in kept_entries:
        kept_by_group.setdefault(label, []).append(idx)
    packed = {
        label: np.array(sorted(idxs), dtype=np.intp) for label, idxs in kept_by_group.items()
    }
    return TruncationOutcome(
        kept=[(label, v) for v, label, _ in kept_entries],
        discarded_weight=float(discarded),
        kept_by_group=packed,
    )


def regularized_inverse(lam: np.ndarray, scale: float | None = None) -> np.ndarray:
    """Entrywise 1/lam with entries below DIVISION_CUTOFF * scale set to zero."""
    lam = np.asarray(lam, dtype=np.float64)
    if scale is None:
        scale = float(lam.max()) if lam.size else 0.0
    cutoff = DIVISION_CUTOFF * scale
    out = np.zeros_like(lam)
    mask = lam > cutoff
    out[mask] = 1.0 / lam[mask]
    return out
