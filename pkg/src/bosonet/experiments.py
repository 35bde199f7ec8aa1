"""Reproducible experiment driver: configs, seeded ensembles, and recipes.

Every experiment follows the same shape: a declarative :class:`ExperimentConfig`
(usually parsed from a JSON file) names a recipe, the sweep ranges, and one
master seed; :func:`run` executes the recipe over an ensemble of circuits and
returns a :class:`RunRecord`; :func:`run_to_files` additionally writes
``results.csv`` (per-circuit rows), ``summary.csv`` (ensemble aggregates),
and ``meta.json``.  The data tables are byte-identical across reruns of the
same (config, seed, software version); wall-clock timings never enter them —
the total lives in ``meta.json`` and per-row timings in ``timings.csv``.

Randomness policy: the generator for ensemble member ``c`` of sweep point
``p`` is ``PCG64(SeedSequence(seed, spawn_key=(p, c)))``, and auxiliary
streams (e.g. the sampler) append one more integer to the spawn key.  The
derivation is counter-based, so running circuits in parallel, in any order,
or resuming after a checkpoint cannot change any result.  Sweep points are
numbered in the deterministic order the config enumerates them; recipes that
must reuse one circuit across a sweep axis (the bond-dimension sweep) key the
circuit stream on the point index with that axis removed.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable

import numpy as np

from . import __version__, mpo, mps, sampling
from .circuit import CircuitPlan, circuit_to_unitary, plan_fingerprint, sample_haar_circuit
from .entropy import lossy_mpo_ee, partition_angles
from .linalg import DegradedStateError, NumericalFailure, TruncationPolicy
from .mpo import LossSpec
from .oracle import (
    dense_evolve,
    dense_reduced_spectrum,
    enumerate_occupations,
    exact_lossy_distribution,
)
from .snapshots import load_state, save_state

EXPERIMENTS = (
    "lossless-ee",
    "fock-ee",
    "lossy-ee",
    "analytic-ee",
    "trunc-error",
    "sample",
    "prob",
    "oracle-check",
)

#: Config fields that do not influence the science and are excluded from the
#: config hash: where outputs go, how work is scheduled, and when to stop.
_PLUMBING_FIELDS = ("out_dir", "workers", "checkpoint_every", "max_seconds")


class ConfigError(ValueError):
    """A config field is missing, unknown, or invalid."""

    def __init__(self, field_name: str, message: str):
        self.field = field_name
        super().__init__(f"config field '{field_name}': {message}")


class ResourceAbort(RuntimeError):
    """Raised when the wall-clock budget is exhausted; carries partial rows."""

    def __init__(self, message: str, rows: list[dict[str, Any]] | None = None):
        super().__init__(message)
        self.rows = rows or []
        self.columns: list[str] = []


@dataclass
class ExperimentConfig:
    """Declarative description of one experiment run."""

    experiment: str
    seed: int
    num_modes: list[int]
    num_photons: list[int]
    loss: LossSpec | None = None
    gammas: list[float] | None = None
    betas: list[float] | None = None
    alphas: list[float] = field(default_factory=lambda: [1.0])
    chi_max: int = 256
    chis: list[int] | None = None
    weight_threshold: float | None = None
    n_circuits: int = 1
    num_samples: int = 0
    outcomes: list[tuple[int, ...]] | None = None
    tolerance: float = 1e-8
    out_dir: str | None = None
    checkpoint_every: int = 0
    max_seconds: float | None = None
    workers: int = 1

    def policy(self, chi: int | None = None) -> TruncationPolicy:
        kwargs: dict[str, Any] = {"chi_max": chi if chi is not None else self.chi_max}
        if self.weight_threshold is not None:
            kwargs["weight_threshold"] = self.weight_threshold
        return TruncationPolicy(**kwargs)

    def to_dict(self) -> dict[str, Any]:
        doc = asdict(self)
        if self.loss is not None:
            doc["loss"] = {"kind": self.loss.kind, "mu": self.loss.mu,
                           "beta": self.loss.beta, "gamma": self.loss.gamma}
        if self.outcomes is not None:
            doc["outcomes"] = [list(o) for o in self.outcomes]
        return doc


def config_from_dict(doc: dict[str, Any]) -> ExperimentConfig:
    """Build and validate a config from a parsed JSON document."""
    known = set(ExperimentConfig.__dataclass_fields__)
    for key in doc:
        if key not in known:
            raise ConfigError(key, "unknown field")
    if "experiment" not in doc:
        raise ConfigError("experiment", "missing (one of %s)" % ", ".join(EXPERIMENTS))
    if "seed" not in doc:
        raise ConfigError("seed", "missing: runs never default to wall-clock seeds")
    parsed = dict(doc)
    if parsed.get("loss") is not None:
        parsed["loss"] = _loss_from_dict(parsed["loss"])
    if parsed.get("outcomes") is not None:
        try:
            parsed["outcomes"] = [tuple(int(n) for n in o) for o in parsed["outcomes"]]
        except (TypeError, ValueError) as exc:
            raise ConfigError("outcomes", f"expected lists of integers: {exc}") from None
    for rng_field in ("num_modes", "num_photons"):
        if rng_field in parsed and isinstance(parsed[rng_field], int):
            parsed[rng_field] = [parsed[rng_field]]
    try:
        config = ExperimentConfig(**parsed)
    except TypeError as exc:
        raise ConfigError("experiment", f"bad config structure: {exc}") from None
    validate_config(config)
    return config


def _loss_from_dict(doc: Any) -> LossSpec:
    if isinstance(doc, LossSpec):
        return doc
    if not isinstance(doc, dict) or "kind" not in doc:
        raise ConfigError("loss", 'expected {"kind": "constant"|"power_law", ...}')
    try:
        if doc["kind"] == "constant":
            return LossSpec.constant(float(doc["mu"]))
        if doc["kind"] == "power_law":
            return LossSpec.power_law(float(doc["beta"]), float(doc["gamma"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError("loss", str(exc)) from None
    raise ConfigError("loss", f"unknown kind {doc['kind']!r}")


def validate_config(config: ExperimentConfig) -> None:
    if config.experiment not in EXPERIMENTS:
        raise ConfigError("experiment", f"unknown experiment {config.experiment!r}")
    if not isinstance(config.seed, int):
        raise ConfigError("seed", "must be an integer")
    if not config.num_modes:
        raise ConfigError("num_modes", "range must be nonempty")
    if not config.num_photons:
        raise ConfigError("num_photons", "range must be nonempty")
    for m in config.num_modes:
        if m < 2 or m % 2 != 0:
            raise ConfigError("num_modes", f"mode counts must be even and >= 2, got {m}")
    for n in config.num_photons:
        if n < 0 or n > max(config.num_modes):
            raise ConfigError(
                "num_photons", f"photon counts must be in [0, max(num_modes)], got {n}"
            )
        # Rectangular (M, N) grids simply skip the points with N > M.
    if not config.alphas:
        raise ConfigError("alphas", "range must be nonempty")
    if any(a < 0 for a in config.alphas):
        raise ConfigError("alphas", "entropy orders must be nonnegative")
    if config.chi_max < 1:
        raise ConfigError("chi_max", "bond budget must be at least 1")
    if config.chis is not None and (not config.chis or any(x < 1 for x in config.chis)):
        raise ConfigError("chis", "bond sweep must be a nonempty list of positive ints")
    if config.n_circuits < 1:
        raise ConfigError("n_circuits", "ensemble needs at least one circuit")
    if config.workers < 1:
        raise ConfigError("workers", "worker pool must be at least 1")
    if config.checkpoint_every < 0:
        raise ConfigError("checkpoint_every", "must be >= 0 (0 disables)")
    if config.max_seconds is not None and config.max_seconds < 0:
        raise ConfigError("max_seconds", "must be >= 0")
    if (config.gammas is None) != (config.betas is None):
        raise ConfigError("gammas", "gammas and betas must be given together")
    if config.gammas is not None:
        if config.loss is not None:
            raise ConfigError("loss", "give either loss or gammas/betas, not both")
        if not config.gammas or not config.betas:
            raise ConfigError("gammas", "sweep lists must be nonempty")
        for g in config.gammas:
            if not 0.0 < g <= 1.0:
                raise ConfigError("gammas", f"loss exponents must be in (0, 1], got {g}")
        for b in config.betas:
            if b <= 0:
                raise ConfigError("betas", f"loss prefactors must be positive, got {b}")
    needs_loss = config.experiment in ("lossy-ee", "analytic-ee", "trunc-error")
    if needs_loss and config.loss is None and config.gammas is None:
        raise ConfigError("loss", f"{config.experiment} needs loss or gammas/betas")
    for gamma, beta in _loss_points(config):
        for n in config.num_photons:
            mu = _mu_at(gamma, beta, n)
            if not 0.0 <= mu <= 1.0:
                raise ConfigError(
                    "betas",
                    f"survival probability {mu:.4g} outside [0, 1] "
                    f"at N={n}, gamma={gamma}, beta={beta}",
                )
    if config.experiment == "sample":
        if config.num_samples < 1:
            raise ConfigError("num_samples", "sample experiment needs num_samples >= 1")
        if len(config.num_modes) != 1 or len(config.num_photons) != 1:
            raise ConfigError("num_modes", "sample runs use a single (M, N) point")
    if config.experiment in ("sample", "prob") and len(_loss_points(config)) > 1:
        raise ConfigError("gammas", f"{config.experiment} runs use a single loss point")
    if config.experiment == "prob":
        if not config.outcomes:
            raise ConfigError("outcomes", "prob experiment needs a list of outcomes")
        if len(config.num_modes) != 1:
            raise ConfigError("num_modes", "prob runs use a single mode count")
        for occ in config.outcomes:
            if len(occ) != config.num_modes[0]:
                raise ConfigError(
                    "outcomes", f"outcome {occ} does not have {config.num_modes[0]} modes"
                )
            if any(n < 0 for n in occ):
                raise ConfigError("outcomes", f"outcome {occ} has negative occupations")
    if config.experiment == "oracle-check":
        if max(config.num_modes) > 6 or max(config.num_photons) > 3:
            raise ConfigError(
                "num_modes", "oracle-check grid is limited to M <= 6, N <= 3"
            )
    if config.tolerance <= 0:
        raise ConfigError("tolerance", "must be positive")


def _loss_points(config: ExperimentConfig) -> list[tuple[float, float]]:
    """Normalize the loss description to (gamma, beta) pairs.

    Constant survival mu is the gamma = 1 power law with beta = mu, so every
    recipe sweeps one uniform parameterization.
    """
    if config.gammas is not None and config.betas is not None:
        return [(g, b) for g in config.gammas for b in config.betas]
    if config.loss is None:
        return []
    if config.loss.kind == "constant":
        return [(1.0, config.loss.mu)]
    return [(config.loss.gamma, config.loss.beta)]


def _mu_at(gamma: float, beta: float, num_photons: int) -> float:
    if num_photons < 1:
        return 1.0
    return beta * num_photons ** (gamma - 1.0)


def config_hash(config: ExperimentConfig) -> str:
    """Short digest of the science-bearing config fields.

    Output location, worker count, checkpoint cadence, and the wall-clock
    budget cannot change any emitted number, so they are excluded; everything
    else (including the seed) is hashed canonically.
    """
    doc = config.to_dict()
    for key in _PLUMBING_FIELDS:
        doc.pop(key, None)
    canon = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


@dataclass
class RunRecord:
    """Everything one run produced, before any files are written."""

    config_hash: str
    experiment: str
    columns: list[str]
    rows: list[dict[str, Any]]
    summary_columns: list[str]
    summary: list[dict[str, Any]]
    wall_time: float
    version: str
    status: str = "ok"
    message: str = ""
    timings: list[dict[str, Any]] = field(default_factory=list)


def circuit_rng(seed: int, point_index: int, circuit_index: int, stream: int = 0
                ) -> np.random.Generator:
    """The documented counter-based stream splitting rule."""
    key = (point_index, circuit_index) if stream == 0 else (point_index, circuit_index, stream)
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key)))


def _mean_stderr(values: list[float]) -> tuple[float, float]:
    arr = np.asarray(values, dtype=float)
    mean = float(arr.mean())
    if arr.size < 2:
        return mean, 0.0
    return mean, float(arr.std(ddof=1) / math.sqrt(arr.size))


def _map_indexed(workers: int, items: list, fn: Callable) -> list:
    """Apply ``fn`` to each item, optionally on a bounded thread pool.

    Results come back in item order whatever the completion order, so the
    worker count cannot influence any output.
    """
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


class _Budget:
    """Wall-clock budget shared by one run."""

    def __init__(self, max_seconds: float | None):
        self.start = time.monotonic()
        self.deadline = None if max_seconds is None else self.start + max_seconds

    def check(self) -> None:
        if self.deadline is not None and time.monotonic() >= self.deadline:
            raise ResourceAbort("wall-clock budget exhausted")

    def elapsed(self) -> float:
        return time.monotonic() - self.start


class _Checkpointer:
    """Per-(point, circuit) snapshot files under ``out_dir/checkpoints``."""

    def __init__(self, config: ExperimentConfig, digest: str):
        self.every = config.checkpoint_every
        self.digest = digest
        self.root: Path | None = None
        if config.out_dir is not None and config.checkpoint_every > 0:
            self.root = Path(config.out_dir) / "checkpoints"

    def path(self, point_index: int, circuit_index: int) -> Path | None:
        if self.root is None:
            return None
        return self.root / f"{self.digest}_p{point_index}_c{circuit_index}.npz"

    def restore(self, point_index: int, circuit_index: int):
        path = self.path(point_index, circuit_index)
        if path is None or not path.exists():
            return None
        state, extra = load_state(path)
        if extra.get("config_hash") != self.digest:
            return None
        return state, int(extra["layers_done"]), list(extra["rows"])

    def save(self, point_index: int, circuit_index: int, state, layers_done: int,
             rows: list[dict[str, Any]]) -> None:
        path = self.path(point_index, circuit_index)
        if path is None:
            return
        save_state(path, state, extra={
            "config_hash": self.digest,
            "layers_done": layers_done,
            "rows": rows,
        })

    def clear(self, point_index: int, circuit_index: int) -> None:
        path = self.path(point_index, circuit_index)
        if path is not None and path.exists():
            path.unlink()


def _evolve_by_layers(
    state,
    plan: CircuitPlan,
    policy: TruncationPolicy,
    apply_gate,
    on_layer: Callable[[int], list[dict[str, Any]]],
    budget: _Budget,
    ckpt: _Checkpointer,
    point_index: int,
    circuit_index: int,
):
    """Drive one circuit layer by layer with checkpoint and budget hooks."""
    layers = plan.layers()
    rows: list[dict[str, Any]] = []
    start_layer = 0
    restored = ckpt.restore(point_index, circuit_index)
    if restored is not None:
        state, start_layer, rows = restored
    for layer_index in range(start_layer, len(layers)):
        try:
            budget.check()
        except ResourceAbort:
            ckpt.save(point_index, circuit_index, state, layer_index, rows)
            raise
        for gate in layers[layer_index]:
            apply_gate(state, gate, policy)
        rows.extend(on_layer_state(on_layer, layer_index, state))
        if ckpt.every > 0 and (layer_index + 1) % ckpt.every == 0:
            ckpt.save(point_index, circuit_index, state, layer_index + 1, rows)
    ckpt.clear(point_index, circuit_index)
    return state, rows


def on_layer_state(on_layer, layer_index: int, state) -> list[dict[str, Any]]:
    return on_layer(layer_index, state)


# ---------------------------------------------------------------------------
# recipes
# ---------------------------------------------------------------------------


def _ee_recipe(config: ExperimentConfig, digest: str, budget: _Budget) -> RunRecord:
    """Entropy-growth sweeps: lossless-ee, fock-ee (bunched input), lossy-ee."""
    lossy = config.experiment == "lossy-ee"
    bunched = config.experiment == "fock-ee"
    loss_axis = _loss_points(config) if lossy else [None]
    points: list[tuple] = []
    for m in config.num_modes:
        for n in config.num_photons:
            if n > m:
                continue
            for lp in loss_axis:
                points.append((m, n, lp))

    loss_cols = ["gamma", "beta", "mu", "trace"] if lossy else []
    columns = (["config_hash", "M", "N"] + loss_cols[:3]
               + ["chi", "circuit", "layer", "alpha", "max_ee", "peak_bond",
                  "max_bond_dim", "discarded_weight"]
               + (["trace"] if lossy else []))
    ckpt = _Checkpointer(config, digest)
    policy = config.policy()

    def run_unit(unit: tuple[int, int]) -> list[dict[str, Any]]:
        point_index, c = unit
        m, n, lp = points[point_index]
        plan = sample_haar_circuit(m, circuit_rng(config.seed, point_index, c))
        base: dict[str, Any] = {"config_hash": digest, "M": m, "N": n,
                                "chi": policy.chi_max, "circuit": c}
        if lossy:
            gamma, beta = lp
            mu = _mu_at(gamma, beta, n)
            base.update({"gamma": gamma, "beta": beta, "mu": mu})
            state = mpo.init_lossy(n, m, mu)
            apply_gate, max_entropy = mpo.apply_gate_vec, mpo.mpo_max_entropy
        else:
            occ = [0] * m
            if bunched:
                occ[0] = n
            else:
                occ[:n] = [1] * n
            state = mps.init_fock(tuple(occ))
            apply_gate, max_entropy = mps.apply_gate, mps.max_entropy

        def on_layer(layer_index: int, st) -> list[dict[str, Any]]:
            out = []
            for alpha in config.alphas:
                bond, value = max_entropy(st, alpha)
                row = dict(base)
                row.update({
                    "layer": layer_index + 1,
                    "alpha": alpha,
                    "max_ee": value,
                    "peak_bond": bond,
                    "max_bond_dim": st.max_bond_dimension(),
                    "discarded_weight": st.discarded_weight,
                })
                if lossy:
                    row["trace"] = mpo.trace(st)
                out.append(row)
            return out

        _, rows = _evolve_by_layers(
            state, plan, policy, apply_gate, on_layer, budget, ckpt, point_index, c
        )
        return rows

    units = [(p, c) for p in range(len(points)) for c in range(config.n_circuits)]
    rows: list[dict[str, Any]] = []
    try:
        for chunk in _map_indexed(config.workers, units, run_unit):
            rows.extend(chunk)
    except ResourceAbort as abort:
        abort.rows = rows
        abort.columns = columns
        raise

    sum_loss_cols = ["gamma", "beta", "mu"] if lossy else []
    summary_columns = (["config_hash", "M", "N"] + sum_loss_cols
                       + ["alpha", "mean_peak_ee", "stderr", "n_circuits"])
    summary = []
    for point_index, (m, n, lp) in enumerate(points):
        for alpha in config.alphas:
            peaks = []
            for c in range(config.n_circuits):
                vals = [r["max_ee"] for r in rows
                        if r["M"] == m and r["N"] == n and r["circuit"] == c
                        and r["alpha"] == alpha
                        and (not lossy or (r["gamma"], r["beta"]) == lp)]
                if vals:
                    peaks.append(max(vals))
            mean, stderr = _mean_stderr(peaks)
            srow: dict[str, Any] = {"config_hash": digest, "M": m, "N": n,
                                    "alpha": alpha, "mean_peak_ee": mean,
                                    "stderr": stderr, "n_circuits": len(peaks)}
            if lossy:
                gamma, beta = lp
                srow.update({"gamma": gamma, "beta": beta, "mu": _mu_at(gamma, beta, n)})
            summary.append(srow)
    return RunRecord(digest, config.experiment, columns, rows,
                     summary_columns, summary, 0.0, __version__)


def _analytic_recipe(config: ExperimentConfig, digest: str, budget: _Budget) -> RunRecord:
    """Closed-form lossy entropy averaged over an ensemble of circuits."""
    points = [(m, n, gamma, beta)
              for m in config.num_modes
              for n in config.num_photons
              if n <= m
              for gamma, beta in _loss_points(config)]
    columns = ["config_hash", "M", "N", "gamma", "beta", "mu", "alpha", "circuit", "ee"]

    def run_unit(unit: tuple[int, int]) -> list[dict[str, Any]]:
        budget.check()
        point_index, c = unit
        m, n, gamma, beta = points[point_index]
        mu = _mu_at(gamma, beta, n)
        plan = sample_haar_circuit(m, circuit_rng(config.seed, point_index, c))
        angles = partition_angles(circuit_to_unitary(plan), m // 2)
        out = []
        for alpha in config.alphas:
            out.append({"config_hash": digest, "M": m, "N": n, "gamma": gamma,
                        "beta": beta, "mu": mu, "alpha": alpha, "circuit": c,
                        "ee": lossy_mpo_ee(angles, mu, alpha, n)})
        return out

    units = [(p, c) for p in range(len(points)) for c in range(config.n_circuits)]
    rows: list[dict[str, Any]] = []
    try:
        for chunk in _map_indexed(config.workers, units, run_unit):
            rows.extend(chunk)
    except ResourceAbort as abort:
        abort.rows = rows
        abort.columns = columns
        raise

    summary_columns = ["N", "M", "gamma", "beta", "alpha",
                       "mean_ee", "stderr", "n_samples", "config_hash"]
    summary = []
    for m, n, gamma, beta in points:
        for alpha in config.alphas:
            vals = [r["ee"] for r in rows
                    if (r["M"], r["N"], r["gamma"], r["beta"], r["alpha"])
                    == (m, n, gamma, beta, alpha)]
            mean, stderr = _mean_stderr(vals)
            summary.append({"N": n, "M": m, "gamma": gamma, "beta": beta,
                            "alpha": alpha, "mean_ee": mean, "stderr": stderr,
                            "n_samples": len(vals), "config_hash": digest})
    return RunRecord(digest, config.experiment, columns, rows,
                     summary_columns, summary, 0.0, __version__)


def _trunc_recipe(config: ExperimentConfig, digest: str, budget: _Budget) -> RunRecord:
    """Bond-budget sweep: final norm deficit per chi, one circuit per index.

    The circuit stream is keyed on the (M, N, loss) point only, so every chi
    in the sweep sees the same circuit and the norm-deficit column is
    comparable across the chi axis.
    """
    chis = config.chis if config.chis is not None else [config.chi_max]
    points = [(m, n, gamma, beta)
              for m in config.num_modes
              for n in config.num_photons
              if n <= m
              for gamma, beta in _loss_points(config)]
    columns = ["config_hash", "M", "N", "gamma", "beta", "mu", "chi", "circuit",
               "one_minus_trace", "discarded_weight", "max_bond_dim"]
    rows: list[dict[str, Any]] = []
    timings: list[dict[str, Any]] = []

    def run_unit(unit: tuple[int, int]) -> list[tuple[dict[str, Any], dict[str, Any]]]:
        point_index, c = unit
        m, n, gamma, beta = points[point_index]
        mu = _mu_at(gamma, beta, n)
        plan = sample_haar_circuit(m, circuit_rng(config.seed, point_index, c))
        out = []
        for chi in chis:
            budget.check()
            t0 = time.perf_counter()
            state = mpo.init_lossy(n, m, mu)
            mpo.apply_plan_vec(state, plan, config.policy(chi))
            wall = time.perf_counter() - t0
            row = {"config_hash": digest, "M": m, "N": n, "gamma": gamma,
                   "beta": beta, "mu": mu, "chi": chi, "circuit": c,
                   "one_minus_trace": 1.0 - mpo.trace(state),
                   "discarded_weight": state.discarded_weight,
                   "max_bond_dim": state.max_bond_dimension()}
            timing = {"M": m, "N": n, "chi": chi, "circuit": c, "wall_seconds": wall}
            out.append((row, timing))
        return out

    units = [(p, c) for p in range(len(points)) for c in range(config.n_circuits)]
    try:
        for chunk in _map_indexed(config.workers, units, run_unit):
            for row, timing in chunk:
                rows.append(row)
                timings.append(timing)
    except ResourceAbort as abort:
        abort.rows = rows
        abort.columns = columns
        raise

    summary_columns = ["config_hash", "M", "N", "gamma", "beta", "mu", "chi",
                       "mean_one_minus_trace", "stderr", "n_circuits"]
    summary = []
    for m, n, gamma, beta in points:
        for chi in chis:
            vals = [r["one_minus_trace"] for r in rows
                    if (r["M"], r["N"], r["gamma"], r["beta"], r["chi"])
                    == (m, n, gamma, beta, chi)]
            mean, stderr = _mean_stderr(vals)
            summary.append({"config_hash": digest, "M": m, "N": n, "gamma": gamma,
                            "beta": beta, "mu": _mu_at(gamma, beta, n), "chi": chi,
                            "mean_one_minus_trace": mean, "stderr": stderr,
                            "n_circuits": len(vals)})
    record = RunRecord(digest, config.experiment, columns, rows,
                       summary_columns, summary, 0.0, __version__)
    record.timings = timings
    return record


def _build_state(config: ExperimentConfig, m: int, n: int, plan: CircuitPlan,
                 chi: int | None = None):
    """Evolved state for the sample/prob recipes: pure without loss, else lossy."""
    policy = config.policy(chi)
    points = _loss_points(config)
    if points:
        gamma, beta = points[0]
        state: Any = mpo.init_lossy(n, m, _mu_at(gamma, beta, n))
        mpo.apply_plan_vec(state, plan, policy)
    else:
        state = mps.init_fock(tuple([1] * n + [0] * (m - n)))
        mps.apply_plan(state, plan, policy)
    return state


def _sample_recipe(config: ExperimentConfig, digest: str, budget: _Budget) -> RunRecord:
    m, n = config.num_modes[0], config.num_photons[0]
    points = _loss_points(config)
    mu = _mu_at(*points[0], n) if points else None
    columns = ["config_hash", "M", "N", "mu", "chi", "circuit", "num_samples",
               "state_norm", "min_joint", "max_joint", "max_step_deficit",
               "circuit_fingerprint"]
    rows = []
    sample_files: list[tuple[int, list[sampling.SamplingResult], dict[str, str]]] = []
    for c in range(config.n_circuits):
        try:
            budget.check()
        except ResourceAbort as abort:
            abort.rows, abort.columns = rows, columns
            raise
        plan = sample_haar_circuit(m, circuit_rng(config.seed, 0, c))
        state = _build_state(config, m, n, plan)
        rng = circuit_rng(config.seed, 0, c, stream=1)
        results = sampling.sample_many(state, rng, config.num_samples, seed=config.seed)
        joints = [r.joint_probability for r in results]
        rows.append({"config_hash": digest, "M": m, "N": n,
                     "mu": "" if mu is None else mu, "chi": config.chi_max,
                     "circuit": c, "num_samples": len(results),
                     "state_norm": sampling.state_norm(state),
                     "min_joint": min(joints), "max_joint": max(joints),
                     "max_step_deficit": max(r.max_step_deficit for r in results),
                     "circuit_fingerprint": plan_fingerprint(plan)})
        metadata = {"config_hash": digest, "experiment": config.experiment,
                    "circuit": str(c), "chi": str(config.chi_max),
                    "seed": str(config.seed), "circuit_fingerprint": plan_fingerprint(plan)}
        if mu is not None:
            metadata["mu"] = repr(mu)
        sample_files.append((c, results, metadata))
    summary_columns = ["config_hash", "M", "N", "mu", "chi", "n_circuits",
                       "total_samples", "mean_state_norm"]
    summary = [{"config_hash": digest, "M": m, "N": n,
                "mu": "" if mu is None else mu, "chi": config.chi_max,
                "n_circuits": config.n_circuits,
                "total_samples": sum(r["num_samples"] for r in rows),
                "mean_state_norm": float(np.mean([r["state_norm"] for r in rows]))}]
    record = RunRecord(digest, config.experiment, columns, rows,
                       summary_columns, summary, 0.0, __version__)
    record.sample_files = sample_files  # type: ignore[attr-defined]
    return record


def _prob_recipe(config: ExperimentConfig, digest: str, budget: _Budget) -> RunRecord:
    m = config.num_modes[0]
    lossy = bool(_loss_points(config))
    columns = ["config_hash", "M", "N", "mu", "chi", "circuit", "outcome", "probability"]
    rows = []
    for n in config.num_photons:
        mu = _mu_at(*_loss_points(config)[0], n) if lossy else None
        for c in range(config.n_circuits):
            try:
                budget.check()
            except ResourceAbort as abort:
                abort.rows, abort.columns = rows, columns
                raise
            plan = sample_haar_circuit(m, circuit_rng(config.seed, 0, c))
            state = _build_state(config, m, n, plan)
            for occ in config.outcomes or []:
                if lossy:
                    p = mpo.outcome_prob(state, occ)
                else:
                    p = mps.probability(state, occ)
                rows.append({"config_hash": digest, "M": m, "N": n,
                             "mu": "" if mu is None else mu, "chi": config.chi_max,
                             "circuit": c, "outcome": " ".join(str(x) for x in occ),
                             "probability": p})
    summary_columns = ["config_hash", "M", "N", "outcome", "mean_probability",
                       "stderr", "n_circuits"]
    summary = []
    for n in config.num_photons:
        for occ in config.outcomes or []:
            key = " ".join(str(x) for x in occ)
            vals = [r["probability"] for r in rows
                    if r["outcome"] == key and r["N"] == n]
            mean, stderr = _mean_stderr(vals)
            summary.append({"config_hash": digest, "M": m, "N": n, "outcome": key,
                            "mean_probability": mean, "stderr": stderr,
                            "n_circuits": len(vals)})
    return RunRecord(digest, config.experiment, columns, rows,
                     summary_columns, summary, 0.0, __version__)


def _oracle_recipe(config: ExperimentConfig, digest: str, budget: _Budget) -> RunRecord:
    """Small-instance equivalence suite against the dense references."""
    tol = config.tolerance
    exact_policy = TruncationPolicy(chi_max=100_000)
    columns = ["config_hash", "M", "N", "circuit", "check", "deviation",
               "tolerance", "status"]
    rows = []
    loss_pts = _loss_points(config)
    grid = [(m, n) for m in config.num_modes for n in config.num_photons if n <= m]
    for point_index, (m, n) in enumerate(grid):
            mu = _mu_at(*loss_pts[0], n) if loss_pts else 0.7
            for c in range(config.n_circuits):
                try:
                    budget.check()
                except ResourceAbort as abort:
                    abort.rows, abort.columns = rows, columns
                    raise
                plan = sample_haar_circuit(m, circuit_rng(config.seed, point_index, c))
                occ_in = tuple([1] * n + [0] * (m - n))
                checks: dict[str, float] = {}

                state = mps.init_fock(occ_in)
                mps.apply_plan(state, plan, exact_policy)
                dense = dense_evolve(occ_in, plan)
                checks["amplitude"] = max(
                    abs(mps.amplitude(state, occ) - dense.amplitude(occ))
                    for occ in dense.basis
                )
                checks["completeness"] = abs(
                    sum(mps.probability(state, occ) for occ in dense.basis) - 1.0
                )
                if m >= 2 and n >= 1:
                    sim_spec = np.asarray(mps.schmidt_values(state, m // 2)) ** 2
                    ref_spec = dense_reduced_spectrum(dense, m // 2)
                    width = max(len(sim_spec), len(ref_spec))
                    sim_pad = np.zeros(width)
                    sim_pad[: len(sim_spec)] = sim_spec
                    ref_pad = np.zeros(width)
                    ref_pad[: len(ref_spec)] = ref_spec
                    checks["pure-spectrum"] = float(np.max(np.abs(sim_pad - ref_pad)))
                draws = sampling.sample_many(state, circuit_rng(config.seed, point_index, c, 1), 3)
                checks["pure-chain-rule"] = max(
                    abs(d.joint_probability - sampling.marginal_prob(state, d.outcome))
                    for d in draws
                )

                op = mpo.init_lossy(n, m, mu)
                mpo.apply_plan_vec(op, plan, exact_policy)
                reference = exact_lossy_distribution(circuit_to_unitary(plan), n, mu)
                checks["lossy-prob"] = max(
                    abs(mpo.outcome_prob(op, occ) - p)
                    for occ, p in reference.entries.items()
                )
                checks["lossy-trace"] = abs(mpo.trace(op) - 1.0)
                lossy_draws = sampling.sample_many(
                    op, circuit_rng(config.seed, point_index, c, 2), 3
                )
                checks["lossy-chain-rule"] = max(
                    abs(d.joint_probability - sampling.marginal_prob(op, d.outcome))
                    for d in lossy_draws
                )

                for name, deviation in checks.items():
                    rows.append({"config_hash": digest, "M": m, "N": n, "circuit": c,
                                 "check": name, "deviation": deviation,
                                 "tolerance": tol,
                                 "status": "pass" if deviation <= tol else "fail"})
    summary_columns = ["config_hash", "check", "max_deviation", "tolerance", "status"]
    summary = []
    for name in sorted({r["check"] for r in rows}):
        worst = max(r["deviation"] for r in rows if r["check"] == name)
        summary.append({"config_hash": digest, "check": name, "max_deviation": worst,
                        "tolerance": tol,
                        "status": "pass" if worst <= tol else "fail"})
    record = RunRecord(digest, config.experiment, columns, rows,
                       summary_columns, summary, 0.0, __version__)
    if any(r["status"] == "fail" for r in rows):
        record.status = "failed"
        worst = max(r["deviation"] for r in rows)
        record.message = f"oracle-check: max deviation {worst:.3e} exceeds {tol:g}"
    else:
        worst = max(r["deviation"] for r in rows) if rows else 0.0
        record.message = f"oracle-check: max deviation {worst:.3e} <= {tol:g}"
    return record


_RECIPES: dict[str, Callable[[ExperimentConfig, str, _Budget], RunRecord]] = {
    "lossless-ee": _ee_recipe,
    "fock-ee": _ee_recipe,
    "lossy-ee": _ee_recipe,
    "analytic-ee": _analytic_recipe,
    "trunc-error": _trunc_recipe,
    "sample": _sample_recipe,
    "prob": _prob_recipe,
    "oracle-check": _oracle_recipe,
}


def run(config: ExperimentConfig) -> RunRecord:
    """Execute the configured recipe and return its record (no files)."""
    validate_config(config)
    digest = config_hash(config)
    budget = _Budget(config.max_seconds)
    try:
        record = _RECIPES[config.experiment](config, digest, budget)
    except ResourceAbort as abort:
        record = RunRecord(digest, config.experiment, abort.columns, abort.rows,
                           [], [], budget.elapsed(), __version__,
                           status="aborted", message=str(abort))
    record.wall_time = budget.elapsed()
    return record


def _format_cell(value: Any) -> str:
    if isinstance(value, float):
        return "%.17g" % value
    return str(value)


def _write_csv(path: Path, columns: list[str], rows: Iterable[dict[str, Any]]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_format_cell(row.get(col, "")) for col in columns])


def run_to_files(config: ExperimentConfig) -> tuple[RunRecord, Path | None]:
    """Run the recipe and write results.csv / summary.csv / meta.json.

    The two CSV tables are byte-identical across reruns of the same config;
    wall-clock information goes only to ``meta.json`` and ``timings.csv``.
    """
    try:
        record = run(config)
    except (NumericalFailure, DegradedStateError) as exc:
        digest = config_hash(config)
        record = RunRecord(digest, config.experiment, [], [], [], [], 0.0,
                           __version__, status="numerical-failure", message=str(exc))
    out_dir: Path | None = None
    if config.out_dir is not None:
        out_dir = Path(config.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        if record.columns:
            _write_csv(out_dir / "results.csv", record.columns, record.rows)
        if record.summary_columns:
            _write_csv(out_dir / "summary.csv", record.summary_columns, record.summary)
        if record.timings:
            _write_csv(out_dir / "timings.csv",
                       list(record.timings[0].keys()), record.timings)
        for c, results, metadata in getattr(record, "sample_files", []):
            sampling.write_samples_csv(out_dir / f"samples_c{c}.csv", results, metadata)
        meta = {
            "config_hash": record.config_hash,
            "experiment": record.experiment,
            "version": record.version,
            "numpy_version": np.__version__,
            "seed": config.seed,
            "status": record.status,
            "message": record.message,
            "wall_time_seconds": record.wall_time,
            "num_rows": len(record.rows),
            "config": config.to_dict(),
        }
        (out_dir / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True))
    return record, out_dir
