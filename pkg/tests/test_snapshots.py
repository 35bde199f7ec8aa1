"""Round-trip tests for the state snapshot container."""

import json

import numpy as np
import pytest

from bosonet import mpo, mps
from bosonet.circuit import sample_haar_circuit
from bosonet.linalg import TruncationPolicy
from bosonet.oracle import enumerate_occupations
from bosonet.snapshots import (
    FORMAT_NAME,
    FORMAT_VERSION,
    load_header,
    load_state,
    save_state,
)


def _evolved_mps(seed=0, num_modes=6, num_photons=2, chi=4):
    plan = sample_haar_circuit(num_modes, np.random.default_rng(seed))
    state = mps.init_fock(tuple([1] * num_photons + [0] * (num_modes - num_photons)))
    mps.apply_plan(state, plan, TruncationPolicy(chi_max=chi))
    return state, plan


def _evolved_mpo(seed=1, num_modes=4, num_photons=2, mu=0.7, chi=8, sector=None):
    plan = sample_haar_circuit(num_modes, np.random.default_rng(seed))
    state = mpo.init_lossy(num_photons, num_modes, mu, sector=sector)
    mpo.apply_plan_vec(state, plan, TruncationPolicy(chi_max=chi))
    return state, plan


def test_mps_round_trip_is_bit_exact(tmp_path):
    state, _ = _evolved_mps()
    path = tmp_path / "state.npz"
    save_state(path, state)
    loaded, extra = load_state(path)
    assert isinstance(loaded, mps.MpsState)
    assert extra == {}
    assert loaded.num_modes == state.num_modes
    assert loaded.num_photons == state.num_photons
    assert loaded.chain.norm_scale == state.chain.norm_scale
    assert loaded.chain.discarded_weight == state.chain.discarded_weight
    for occ in enumerate_occupations(state.num_modes, state.num_photons):
        assert mps.amplitude(loaded, occ) == mps.amplitude(state, occ)
    for k in range(state.num_modes + 1):
        assert loaded.chain.bonds[k].keys() == state.chain.bonds[k].keys()
        for c in state.chain.bonds[k]:
            assert np.array_equal(loaded.chain.bonds[k][c], state.chain.bonds[k][c])


def test_mpo_round_trip_preserves_probabilities(tmp_path):
    state, _ = _evolved_mpo()
    path = tmp_path / "op.npz"
    save_state(path, state, extra={"layers_done": 3})
    loaded, extra = load_state(path)
    assert isinstance(loaded, mpo.MpoState)
    assert extra == {"layers_done": 3}
    assert loaded.mu == state.mu
    assert loaded.sector is None
    assert mpo.trace(loaded) == mpo.trace(state)
    for total in range(state.num_photons + 1):
        for occ in enumerate_occupations(state.num_modes, total):
            assert mpo.outcome_prob(loaded, occ) == mpo.outcome_prob(state, occ)


def test_sector_tag_round_trips(tmp_path):
    state, _ = _evolved_mpo(sector=1)
    path = tmp_path / "sector.npz"
    save_state(path, state)
    loaded, _ = load_state(path)
    assert loaded.sector == 1
    assert mpo.trace(loaded) == pytest.approx(mpo.trace(state), abs=0)


def test_header_records_kind_and_loss(tmp_path):
    pure, _ = _evolved_mps()
    lossy, _ = _evolved_mpo(mu=0.35)
    save_state(tmp_path / "pure.npz", pure)
    save_state(tmp_path / "lossy.npz", lossy)
    pure_header = load_header(tmp_path / "pure.npz")
    lossy_header = load_header(tmp_path / "lossy.npz")
    assert pure_header["format"] == FORMAT_NAME
    assert pure_header["version"] == FORMAT_VERSION
    assert pure_header["kind"] == "mps"
    assert pure_header["loss"] is None
    assert lossy_header["kind"] == "mpo"
    assert lossy_header["loss"] == {"mu": 0.35}


def test_unsupported_version_is_rejected(tmp_path):
    state, _ = _evolved_mps()
    path = tmp_path / "state.npz"
    save_state(path, state)
    with np.load(path, allow_pickle=False) as data:
        arrays = {k: data[k] for k in data.files}
    header = json.loads(str(arrays["header"][()]))
    header["version"] = FORMAT_VERSION + 1
    arrays["header"] = np.array(json.dumps(header))
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)
    with pytest.raises(ValueError, match="unsupported snapshot version"):
        load_state(path)
    header["version"] = FORMAT_VERSION
    header["format"] = "something-else"
    arrays["header"] = np.array(json.dumps(header))
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)
    with pytest.raises(ValueError, match="unknown container format"):
        load_state(path)


def test_resumed_evolution_matches_uninterrupted(tmp_path):
    # Evolve half the circuit, snapshot, reload, finish: bit-identical to a
    # straight-through run, which is what makes checkpoint resume exact.
    num_modes, num_photons = 6, 2
    plan = sample_haar_circuit(num_modes, np.random.default_rng(9))
    policy = TruncationPolicy(chi_max=6)
    occ = tuple([1] * num_photons + [0] * (num_modes - num_photons))

    straight = mps.init_fock(occ)
    mps.apply_plan(straight, plan, policy)

    half = len(plan.gates) // 2
    first = mps.init_fock(occ)
    for gate in plan.gates[:half]:
        mps.apply_gate(first, gate, policy)
    save_state(tmp_path / "mid.npz", first, extra={"gates_done": half})
    resumed, extra = load_state(tmp_path / "mid.npz")
    for gate in plan.gates[extra["gates_done"] :]:
        mps.apply_gate(resumed, gate, policy)

    for occ_out in enumerate_occupations(num_modes, num_photons):
        assert mps.amplitude(resumed, occ_out) == mps.amplitude(straight, occ_out)
    assert resumed.chain.discarded_weight == straight.chain.discarded_weight
