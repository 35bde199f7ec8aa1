"""Versioned on-disk container for simulator states.

A snapshot is a single ``.npz`` archive holding a JSON header plus one array
per charge block: every bond spectrum under ``bond{k}/{charge}`` and every
site block under ``site{k}/{left};{right}``.  The header records the format
version, whether the state is a pure state or a vectorized operator, and —
for lossy states — the loss parameters, so a checkpointed sweep can be
resumed without the original configuration in hand.  Arrays are stored in
their native binary form, which makes save/load round trips bit-exact and
resumed evolutions identical to uninterrupted ones.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import numpy as np

from .chain import PureChargeRule, TensorTrainState, VectorizedChargeRule
from .mpo import MpoState
from .mps import MpsState

__all__ = ["FORMAT_NAME", "FORMAT_VERSION", "save_state", "load_state", "load_header"]

FORMAT_NAME = "bosonet-state"
FORMAT_VERSION = 1


def _charge_token(charge: Any) -> str:
    if isinstance(charge, tuple):
        return ",".join(str(int(c)) for c in charge)
    return str(int(charge))


def _parse_charge(token: str, paired: bool) -> Any:
    if paired:
        ket, bra = token.split(",")
        return (int(ket), int(bra))
    return int(token)


def save_state(
    path: str | Path,
    state: MpsState | MpoState,
    extra: dict[str, Any] | None = None,
) -> None:
    """Write a state snapshot; ``extra`` must be a JSON-serializable dict."""
    if isinstance(state, MpoState):
        kind = "mpo"
        loss: dict[str, Any] | None = {"mu": state.mu}
        sector = state.sector
    elif isinstance(state, MpsState):
        kind = "mps"
        loss = None
        sector = None
    else:
        raise TypeError(f"cannot snapshot object of type {type(state).__name__}")
    chain = state.chain
    header = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "kind": kind,
        "num_modes": state.num_modes,
        "num_photons": state.num_photons,
        "local_dim": chain.rule.local_dim,
        "norm_scale": chain.norm_scale,
        "discarded_weight": chain.discarded_weight,
        "loss": loss,
        "sector": sector,
        "extra": extra or {},
    }
    arrays: dict[str, np.ndarray] = {"header": np.array(json.dumps(header))}
    for k, bond in enumerate(chain.bonds):
        for charge, lam in bond.items():
            arrays[f"bond{k}/{_charge_token(charge)}"] = lam
    for k, blocks in enumerate(chain.gammas):
        for (cl, cr), mat in blocks.items():
            arrays[f"site{k}/{_charge_token(cl)};{_charge_token(cr)}"] = mat
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)


def load_header(path: str | Path) -> dict[str, Any]:
    """Read and validate only the JSON header of a snapshot."""
    with np.load(path, allow_pickle=False) as data:
        if "header" not in data.files:
            raise ValueError(f"{path}: not a state snapshot (missing header)")
        header = json.loads(str(data["header"][()]))
    if header.get("format") != FORMAT_NAME:
        raise ValueError(f"{path}: unknown container format {header.get('format')!r}")
    if header.get("version") != FORMAT_VERSION:
        raise ValueError(
            f"{path}: unsupported snapshot version {header.get('version')!r} "
            f"(this build reads version {FORMAT_VERSION})"
        )
    return header


def load_state(path: str | Path) -> tuple[MpsState | MpoState, dict[str, Any]]:
    """Rebuild a state from a snapshot; returns ``(state, extra)``."""
    header = load_header(path)
    kind = header["kind"]
    paired = kind == "mpo"
    num_modes = int(header["num_modes"])
    local_dim = int(header["local_dim"])
    bonds: list[dict[Any, np.ndarray]] = [{} for _ in range(num_modes + 1)]
    gammas: list[dict[tuple[Any, Any], np.ndarray]] = [{} for _ in range(num_modes)]
    with np.load(path, allow_pickle=False) as data:
        for key in data.files:
            if key == "header":
                continue
            prefix, _, token = key.partition("/")
            if prefix.startswith("bond"):
                bonds[int(prefix[4:])][_parse_charge(token, paired)] = data[key]
            elif prefix.startswith("site"):
                left, right = token.split(";")
                gammas[int(prefix[4:])][
                    (_parse_charge(left, paired), _parse_charge(right, paired))
                ] = data[key]
            else:
                raise ValueError(f"{path}: unexpected snapshot member {key!r}")
    rule = VectorizedChargeRule(local_dim) if paired else PureChargeRule(local_dim)
    chain = TensorTrainState(
        num_sites=num_modes,
        rule=rule,
        gammas=gammas,
        bonds=bonds,
        norm_scale=float(header["norm_scale"]),
        discarded_weight=float(header["discarded_weight"]),
    )
    state: MpsState | MpoState
    if paired:
        state = MpoState(
            chain=chain,
            num_modes=num_modes,
            num_photons=int(header["num_photons"]),
            mu=float(header["loss"]["mu"]),
            sector=None if header["sector"] is None else int(header["sector"]),
        )
    else:
        state = MpsState(
            chain=chain,
            num_modes=num_modes,
            num_photons=int(header["num_photons"]),
        )
    return state, dict(header.get("extra", {}))
