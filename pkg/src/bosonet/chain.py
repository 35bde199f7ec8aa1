"""Charge-blocked tensor trains in canonical (Vidal) form.

This module is the shared chassis for the pure-state and density-operator
simulators. A state is stored as alternating singular-value vectors and site
tensors; every bond index is resolved into symmetry sectors labeled by a
*charge* (the photon count strictly to the right of the cut, or a ket/bra
pair of such counts for vectorized density operators). Site tensors keep one
dense block per (left charge, right charge) pair, because the local
occupation is implied by the charge difference — that is what makes the
representation compact and what enforces particle-number conservation
structurally.

Layout for ``M`` sites:

- ``bonds[k]``, k = 0..M: dict charge -> descending positive float array.
  ``bonds[0]``/``bonds[M]`` carry the boundary sector decomposition.
- ``gammas[k]``, k = 0..M-1 (site k+1): dict (cl, cr) -> complex matrix of
  shape (len(bonds[k][cl]), len(bonds[k+1][cr])).

The physical amplitude of the represented (normalized) state is
lambda^[0] Gamma^1 lambda^[1] ... Gamma^M lambda^[M] contracted along the
unique charge path of a basis state; ``norm_scale`` restores the raw
(unnormalized) object, which density-operator states use to keep trace
bookkeeping while their singular values stay 2-norm normalized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Hashable

import numpy as np

from .linalg import (
    RANK_CUTOFF,
    TruncationPolicy,
    qr,
    regularized_inverse,
    svd,
    truncate_global,
)

Charge = Hashable


class PureChargeRule:
    """Integer charges; local occupation = left charge - right charge."""

    def __init__(self, local_dim: int):
        self.local_dim = local_dim

    def occupation(self, cl: int, cr: int) -> int | None:
        occ = cl - cr
        return occ if 0 <= occ < self.local_dim else None

    def gate_coeff(self, gate: np.ndarray, out_l, out_r, in_l, in_r) -> complex:
        d = self.local_dim
        return gate[out_l * d + out_r, in_l * d + in_r]


class VectorizedChargeRule:
    """Ket/bra charge pairs for vectorized density operators.

    Charges are (ket, bra) tuples; the local state is the occupation pair
    (ket_occ, bra_occ) and a two-site unitary acts as U (x) conj(U).
    """

    def __init__(self, local_dim: int):
        self.local_dim = local_dim

    def occupation(self, cl: tuple[int, int], cr: tuple[int, int]) -> tuple[int, int] | None:
        ket = cl[0] - cr[0]
        bra = cl[1] - cr[1]
        if 0 <= ket < self.local_dim and 0 <= bra < self.local_dim:
            return (ket, bra)
        return None

    def gate_coeff(self, gate: np.ndarray, out_l, out_r, in_l, in_r) -> complex:
        d = self.local_dim
        ket = gate[out_l[0] * d + out_r[0], in_l[0] * d + in_r[0]]
        bra = gate[out_l[1] * d + out_r[1], in_l[1] * d + in_r[1]]
        if ket == 0.0 or bra == 0.0:
            return 0.0 + 0.0j
        return ket * np.conj(bra)


@dataclass
class TensorTrainState:
    """Canonical-form charge-blocked tensor train (pure state or vectorized operator)."""

    num_sites: int
    rule: PureChargeRule | VectorizedChargeRule
    gammas: list[dict[tuple[Charge, Charge], np.ndarray]]
    bonds: list[dict[Charge, np.ndarray]]
    norm_scale: float = 1.0
    discarded_weight: float = 0.0

    def bond_dimension(self, k: int) -> int:
        return sum(len(v) for v in self.bonds[k].values())

    def max_bond_dimension(self) -> int:
        return max(self.bond_dimension(k) for k in range(self.num_sites + 1))

    def total_weight(self, k: int | None = None) -> float:
        """Sum of squared singular values at bond k (default: central bond)."""
        if k is None:
            k = self.num_sites // 2
        return float(sum(np.sum(v**2) for v in self.bonds[k].values()))


def product_state(
    site_vectors: list[dict[Hashable, complex]],
    left_charges: list[Charge],
    right_charge: Charge,
    rule: PureChargeRule | VectorizedChargeRule,
) -> TensorTrainState:
    """Exact canonical form of a product state, one local vector per site.

    ``site_vectors[k]`` maps local occupation labels (ints for pure states,
    (ket, bra) pairs for vectorized operators) to amplitudes. The left
    boundary enumerates the allowed total-charge sectors; singular values are
    normalized so the squared total is 1 and the raw 2-norm is returned in
    ``norm_scale``.
    """
    m = len(site_vectors)
    if m < 1:
        raise ValueError("need at least one site")

    # Forward/backward squared-weight sweeps over reachable charges.
    left_sq: list[dict[Charge, float]] = [{c: 1.0 for c in left_charges}]
    for k in range(m):
        nxt: dict[Charge, float] = {}
        for cl, w in left_sq[k].items():
            for occ, amp in site_vectors[k].items():
                if amp == 0.0:
                    continue
                cr = _step_charge(cl, occ)
                if rule.occupation(cl, cr) is None:
                    continue
                nxt[cr] = nxt.get(cr, 0.0) + w * abs(amp) ** 2
        left_sq.append(nxt)
    right_sq: list[dict[Charge, float]] = [dict() for _ in range(m + 1)]
    right_sq[m] = {right_charge: 1.0}
    for k in range(m - 1, -1, -1):
        cur: dict[Charge, float] = {}
        for cr, w in right_sq[k + 1].items():
            for occ, amp in site_vectors[k].items():
                if amp == 0.0:
                    continue
                cl = _unstep_charge(cr, occ)
                if rule.occupation(cl, cr) is None:
                    continue
                cur[cl] = cur.get(cl, 0.0) + w * abs(amp) ** 2
        right_sq[k] = cur

    total_sq = sum(
        left_sq[0].get(c, 0.0) * right_sq[0].get(c, 0.0) for c in left_sq[0]
    )
    if total_sq <= 0.0:
        raise ValueError("product state has zero weight in the requested charge sectors")
    scale = math.sqrt(total_sq)

    bonds: list[dict[Charge, np.ndarray]] = []
    for k in range(m + 1):
        spectrum: dict[Charge, np.ndarray] = {}
        for c in sorted(left_sq[k], key=_charge_sort_key):
            w = left_sq[k][c] * right_sq[k].get(c, 0.0)
            if w > 0.0:
                spectrum[c] = np.array([math.sqrt(w) / scale])
        bonds.append(spectrum)

    gammas: list[dict[tuple[Charge, Charge], np.ndarray]] = []
    for k in range(m):
        blocks: dict[tuple[Charge, Charge], np.ndarray] = {}
        for cl in bonds[k]:
            for occ, amp in site_vectors[k].items():
                if amp == 0.0:
                    continue
                cr = _step_charge(cl, occ)
                if cr not in bonds[k + 1] or rule.occupation(cl, cr) is None:
                    continue
                value = amp * scale / math.sqrt(right_sq[k][cl] * left_sq[k + 1][cr])
                blocks[(cl, cr)] = np.array([[value]], dtype=np.complex128)
        gammas.append(blocks)

    return TensorTrainState(
        num_sites=m, rule=rule, gammas=gammas, bonds=bonds, norm_scale=scale
    )


def _step_charge(cl: Charge, occ: Hashable) -> Charge:
    if isinstance(occ, tuple):
        return (cl[0] - occ[0], cl[1] - occ[1])
    return cl - occ


def _unstep_charge(cr: Charge, occ: Hashable) -> Charge:
    if isinstance(occ, tuple):
        return (cr[0] + occ[0], cr[1] + occ[1])
    return cr + occ


def _charge_sort_key(c: Charge):
    return c if isinstance(c, tuple) else (c,)


def two_site_update(
    state: TensorTrainState,
    site: int,
    gate_matrix: np.ndarray,
    policy: TruncationPolicy,
) -> float:
    """Apply a two-site gate at (site, site+1), 1-indexed; returns discarded weight.

    Per center charge, the neighborhood tensor Theta = lambda Gamma lambda
    Gamma lambda is assembled from charge-compatible blocks, SVD'd, and all
    sectors are truncated jointly against the chi budget; the site tensors
    are rebuilt by dividing the boundary singular values back out.
    """
    m = state.num_sites
    if not 1 <= site <= m - 1:
        raise ValueError(f"site must be in [1, {m - 1}], got {site}")
    rule = state.rule
    k = site - 1  # gammas index of the left site; bonds k, k+1, k+2 surround it
    left_bond = state.bonds[k]
    right_bond = state.bonds[k + 2]
    left_gamma = state.gammas[k]
    right_gamma = state.gammas[k + 1]

    # Precompute boundary-weighted blocks and their center products.
    left_weighted: dict[tuple[Charge, Charge], np.ndarray] = {}
    for (cl, ci), block in left_gamma.items():
        left_weighted[(cl, ci)] = left_bond[cl][:, None] * block
    right_weighted: dict[tuple[Charge, Charge], np.ndarray] = {}
    for (ci, cr), block in right_gamma.items():
        right_weighted[(ci, cr)] = (
            state.bonds[k + 1][ci][:, None] * block * right_bond[cr][None, :]
        )
    center: dict[tuple[Charge, Charge, Charge], np.ndarray] = {}
    for (cl, ci) in left_weighted:
        for (ci2, cr) in right_weighted:
            if ci2 == ci:
                center[(cl, ci, cr)] = left_weighted[(cl, ci)] @ right_weighted[(ci, cr)]

    # Candidate output center charges from the charge algebra.
    out_charges: set[Charge] = set()
    for (cl, ci, cr) in center:
        out_charges.update(_center_candidates(cl, cr, rule))

    # Assemble and decompose Theta per output center charge.
    svd_groups: dict[Charge, np.ndarray] = {}
    factors: dict[Charge, tuple] = {}
    for co in sorted(out_charges, key=_charge_sort_key):
        row_charges = sorted(
            {cl for (cl, ci, cr) in center if rule.occupation(cl, co) is not None},
            key=_charge_sort_key,
        )
        col_charges = sorted(
            {cr for (cl, ci, cr) in center if rule.occupation(co, cr) is not None},
            key=_charge_sort_key,
        )
        if not row_charges or not col_charges:
            continue
        row_offsets, row_total = _offsets(row_charges, left_bond)
        col_offsets, col_total = _offsets(col_charges, right_bond)
        theta = np.zeros((row_total, col_total), dtype=np.complex128)
        filled = False
        for (cl, ci, cr), prod in center.items():
            out_l = rule.occupation(cl, co)
            out_r = rule.occupation(co, cr)
            if out_l is None or out_r is None:
                continue
            in_l = rule.occupation(cl, ci)
            in_r = rule.occupation(ci, cr)
            coeff = rule.gate_coeff(gate_matrix, out_l, out_r, in_l, in_r)
            if coeff == 0.0:
                continue
            r0 = row_offsets[cl]
            c0 = col_offsets[cr]
            theta[r0 : r0 + prod.shape[0], c0 : c0 + prod.shape[1]] += coeff * prod
            filled = True
        if not filled:
            continue
        result = svd(theta)
        svd_groups[co] = result.singular_values
        factors[co] = (result, row_charges, row_offsets, col_charges, col_offsets)

    outcome = truncate_global(
        sorted(svd_groups.items(), key=lambda kv: _charge_sort_key(kv[0])), policy
    )

    # Rebuild the center bond and both site tensors from the kept columns.
    new_bond: dict[Charge, np.ndarray] = {}
    new_left: dict[tuple[Charge, Charge], np.ndarray] = {}
    new_right: dict[tuple[Charge, Charge], np.ndarray] = {}
    left_inv = {cl: regularized_inverse(left_bond[cl], _bond_max(left_bond)) for cl in left_bond}
    right_inv = {
        cr: regularized_inverse(right_bond[cr], _bond_max(right_bond)) for cr in right_bond
    }
    for co, kept_idx in outcome.kept_by_group.items():
        result, row_charges, row_offsets, col_charges, col_offsets = factors[co]
        new_bond[co] = result.singular_values[kept_idx]
        u_kept = result.left[:, kept_idx]
        v_kept = result.right_conj[kept_idx, :]
        for cl in row_charges:
            r0 = row_offsets[cl]
            rows = u_kept[r0 : r0 + len(left_bond[cl]), :]
            new_left[(cl, co)] = left_inv[cl][:, None] * rows
        for cr in col_charges:
            c0 = col_offsets[cr]
            cols = v_kept[:, c0 : c0 + len(right_bond[cr])]
            new_right[(co, cr)] = cols * right_inv[cr][None, :]

    state.bonds[k + 1] = new_bond
    state.gammas[k] = new_left
    state.gammas[k + 1] = new_right
    state.discarded_weight += outcome.discarded_weight
    if policy.reorthogonalize:
        _gauge_polish(state, site)
    return outcome.discarded_weight


def _center_candidates(cl: Charge, cr: Charge, rule) -> list[Charge]:
    d = rule.local_dim
    if isinstance(cl, tuple):
        out = []
        for ket_occ in range(d):
            for bra_occ in range(d):
                co = (cl[0] - ket_occ, cl[1] - bra_occ)
                if rule.occupation(co, cr) is not None:
                    out.append(co)
        return out
    return [cl - occ for occ in range(d) if rule.occupation(cl - occ, cr) is not None]


def _offsets(charges: list[Charge], bond: dict[Charge, np.ndarray]) -> tuple[dict[Charge, int], int]:
    offsets: dict[Charge, int] = {}
    total = 0
    for c in charges:
        offsets[c] = total
        total += len(bond[c])
    return offsets, total


def _bond_max(bond: dict[Charge, np.ndarray]) -> float:
    return max((float(v.max()) for v in bond.values() if len(v)), default=0.0)


def _gauge_polish(state: TensorTrainState, site: int) -> None:
    """Restore isometry of the two updated site tensors by QR + re-SVD.

    Regularized divisions can leave the rebuilt tensors slightly
    non-canonical when tiny singular values were inverted; this re-factors
    the neighborhood exactly (no truncation), changing gauge only.
    """
    k = site - 1
    left_bond = state.bonds[k]
    center_bond = state.bonds[k + 1]
    right_bond = state.bonds[k + 2]
    new_bond: dict[Charge, np.ndarray] = {}
    new_left: dict[tuple[Charge, Charge], np.ndarray] = {}
    new_right: dict[tuple[Charge, Charge], np.ndarray] = {}
    left_inv = {cl: regularized_inverse(left_bond[cl], _bond_max(left_bond)) for cl in left_bond}
    right_inv = {
        cr: regularized_inverse(right_bond[cr], _bond_max(right_bond)) for cr in right_bond
    }
    for co, lam in state.bonds[k + 1].items():
        row_charges = sorted(
            {cl for (cl, c) in state.gammas[k] if c == co}, key=_charge_sort_key
        )
        col_charges = sorted(
            {cr for (c, cr) in state.gammas[k + 1] if c == co}, key=_charge_sort_key
        )
        if not row_charges or not col_charges:
            new_bond[co] = lam
            continue
        row_offsets, row_total = _offsets(row_charges, left_bond)
        col_offsets, col_total = _offsets(col_charges, right_bond)
        a = np.zeros((row_total, len(lam)), dtype=np.complex128)
        for cl in row_charges:
            r0 = row_offsets[cl]
            a[r0 : r0 + len(left_bond[cl]), :] = (
                left_bond[cl][:, None] * state.gammas[k][(cl, co)]
            )
        b = np.zeros((len(lam), col_total), dtype=np.complex128)
        for cr in col_charges:
            c0 = col_offsets[cr]
            b[:, c0 : c0 + len(right_bond[cr])] = (
                state.gammas[k + 1][(co, cr)] * right_bond[cr][None, :]
            )
        qa, ra = qr(a)
        qb_t, rb_t = qr(b.conj().T)
        core = ra @ np.diag(lam).astype(np.complex128) @ rb_t.conj().T
        result = svd(core)
        keep = result.singular_values > 0.0
        new_bond[co] = result.singular_values[keep]
        u_new = qa @ result.left[:, keep]
        v_new = result.right_conj[keep, :] @ qb_t.conj().T
        for cl in row_charges:
            r0 = row_offsets[cl]
            new_left[(cl, co)] = left_inv[cl][:, None] * u_new[r0 : r0 + len(left_bond[cl]), :]
        for cr in col_charges:
            c0 = col_offsets[cr]
            new_right[(co, cr)] = (
                v_new[:, c0 : c0 + len(right_bond[cr])] * right_inv[cr][None, :]
            )
    state.bonds[k + 1] = new_bond
    state.gammas[k] = new_left
    state.gammas[k + 1] = new_right


def contract_selected(
    state: TensorTrainState,
    selectors: list[Callable[[Hashable], complex]],
) -> complex:
    """Contract the full chain with one local selector weight per site.

    ``selectors[k]`` maps a local occupation label to a complex weight (for
    example an indicator of one basis state, or the trace selector that
    weights ket==bra components by 1). Returns the scalar including the
    boundary singular values but NOT ``norm_scale``.
    """
    env = {c: lam.astype(np.complex128) for c, lam in state.bonds[0].items()}
    for k in range(state.num_sites):
        env = _propagate(state, k, env, selectors[k])
        if not env:
            return 0.0 + 0.0j
    return complex(sum(vec.sum() for vec in env.values()))


def _propagate(
    state: TensorTrainState,
    k: int,
    env: dict[Charge, np.ndarray],
    selector: Callable[[Hashable], complex],
) -> dict[Charge, np.ndarray]:
    nxt: dict[Charge, np.ndarray] = {}
    for (cl, cr), block in state.gammas[k].items():
        if cl not in env:
            continue
        weight = selector(state.rule.occupation(cl, cr))
        if weight == 0.0:
            continue
        contribution = weight * (env[cl] @ block)
        if cr in nxt:
            nxt[cr] += contribution
        else:
            nxt[cr] = contribution
    for cr in nxt:
        nxt[cr] = nxt[cr] * state.bonds[k + 1][cr]
    return nxt


def prefix_environment(
    state: TensorTrainState,
    selectors: list[Callable[[Hashable], complex]],
    start_env: dict[Charge, np.ndarray] | None = None,
    start_site: int = 0,
) -> dict[Charge, np.ndarray]:
    """Left environment after contracting sites start_site..start_site+len(selectors)-1.

    The environment includes every singular-value vector up to and including
    the bond right of the last contracted site, so for a pure state the
    squared 2-norm of the result is the marginal probability of the selected
    prefix.
    """
    if start_env is None:
        env = {c: lam.astype(np.complex128) for c, lam in state.bonds[0].items()}
    else:
        env = start_env
    for i, sel in enumerate(selectors):
        env = _propagate(state, start_site + i, env, sel)
        if not env:
            return {}
    return env


def suffix_trace_environments(
    state: TensorTrainState,
    trace_selector: Callable[[Hashable], complex],
) -> list[dict[Charge, np.ndarray]]:
    """right_envs[l][c] = contraction of sites l+1..M with the trace selector.

    The vectors exclude the bond-l singular values (the left environment
    carries those), so marginal(prefix of length l) = sum_c envL[c] . right_envs[l][c].
    """
    m = state.num_sites
    envs: list[dict[Charge, np.ndarray]] = [dict() for _ in range(m + 1)]
    envs[m] = {c: np.ones(len(lam), dtype=np.complex128) for c, lam in state.bonds[m].items()}
    for k in range(m - 1, -1, -1):
        cur: dict[Charge, np.ndarray] = {}
        for (cl, cr), block in state.gammas[k].items():
            if cr not in envs[k + 1]:
                continue
            weight = trace_selector(state.rule.occupation(cl, cr))
            if weight == 0.0:
                continue
            contribution = weight * (block @ (state.bonds[k + 1][cr] * envs[k + 1][cr]))
            if cl in cur:
                cur[cl] += contribution
            else:
                cur[cl] = contribution
        envs[k] = cur
    return envs


def spectrum_entropy(bond: dict[Charge, np.ndarray], alpha: float) -> float:
    """Renyi-alpha entropy (bits) of a renormalized copy of the bond spectrum."""
    if alpha < 0:
        raise ValueError(f"alpha must be >= 0, got {alpha}")
    values = np.concatenate([v for v in bond.values()]) if bond else np.array([])
    p = values.astype(float) ** 2
    p = p[p > 0.0]
    if p.size == 0:
        return 0.0
    p = p / p.sum()
    if alpha == 0:
        return float(math.log2(p.size))
    if alpha == 1:
        return float(-(p * np.log2(p)).sum())
    return float(math.log2((p**alpha).sum()) / (1.0 - alpha))


def max_bond_entropy(state: TensorTrainState, alpha: float) -> tuple[int, float]:
    """(bond index, value) of the maximum interior-bond entropy; ties -> smallest bond."""
    if state.num_sites < 2:
        return 1, 0.0
    best_bond = 1
    best = -1.0
    for k in range(1, state.num_sites):
        s = spectrum_entropy(state.bonds[k], alpha)
        if s > best + 1e-15:
            best = s
            best_bond = k
    return best_bond, best
