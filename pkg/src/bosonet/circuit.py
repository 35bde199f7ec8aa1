"""Beam-splitter circuits on a line of optical modes.

A circuit is an ordered list of two-mode gates acting on neighboring modes
(site k couples modes k and k+1, 1-indexed). ``sample_haar_circuit`` draws
the nearest-neighbor brickwork whose composed mode unitary is Haar-random up
to mode phases: blocks R_1, R_3, ..., R_(M-1), R_M, R_(M-2), ..., R_2, where
block R_n applies beam splitters at the sites listed by
``gen_index_sequence(n)``. The gate at site k keeps a Beta(1, k)-distributed
fraction of the incident amplitude (transmittance cos^2 theta drawn by
``sample_reflectivity`` with exponent k) and its phase is uniform on
[0, 2pi); composing the blocks then reproduces the nested
sphere-point-picking recursion behind Haar measure.

The mode unitary U is defined by how gates move creation operators,
a_j^dag -> sum_k U_jk a_k^dag (rows are inputs), so a gate applied earlier
sits further left in the matrix product returned by ``circuit_to_unitary``.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

_TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class BeamSplitterGate:
    """One beam splitter at site ``site`` (modes site, site+1; 1-indexed)."""

    site: int
    theta: float
    phi: float

    def matrix(self) -> np.ndarray:
        """2x2 action on (a^dag, b^dag): rows input modes, columns outputs."""
        c = math.cos(self.theta)
        s = math.sin(self.theta)
        e = np.exp(1j * self.phi)
        return np.array([[c, -e * s], [s / e, c]], dtype=np.complex128)


@dataclass
class CircuitPlan:
    """An ordered gate list plus its layer and block structure.

    ``layer_boundaries`` partitions gates into runs acting on pairwise
    disjoint site pairs (safe to apply in parallel). ``block_boundaries``
    partitions them into the coarser brickwork blocks used for depth
    accounting; ``depth`` counts those blocks.
    """

    num_modes: int
    gates: list[BeamSplitterGate]
    layer_boundaries: list[int] = field(default_factory=list)
    block_boundaries: list[int] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.num_modes < 2:
            raise ValueError("a circuit needs at least two modes")
        for g in self.gates:
            if not 1 <= g.site <= self.num_modes - 1:
                raise ValueError(f"gate site {g.site} outside [1, {self.num_modes - 1}]")
        if not self.layer_boundaries:
            self.layer_boundaries = self._disjoint_boundaries()
        if not self.block_boundaries:
            self.block_boundaries = [0, len(self.gates)] if self.gates else [0]
        for bounds in (self.layer_boundaries, self.block_boundaries):
            if bounds[0] != 0 or bounds[-1] != len(self.gates) or any(np.diff(bounds) < 0):
                raise ValueError("boundaries must be a nondecreasing prefix list over gates")

    def _disjoint_boundaries(self) -> list[int]:
        bounds = [0]
        used: set[int] = set()
        for i, g in enumerate(self.gates):
            if g.site in used or g.site + 1 in used or g.site - 1 in used:
                bounds.append(i)
                used = set()
            used.add(g.site)
        bounds.append(len(self.gates))
        return bounds

    @property
    def depth(self) -> int:
        return len(self.block_boundaries) - 1

    def layers(self) -> list[list[BeamSplitterGate]]:
        b = self.layer_boundaries
        return [self.gates[b[i] : b[i + 1]] for i in range(len(b) - 1)]

    def blocks(self) -> list[list[BeamSplitterGate]]:
        b = self.block_boundaries
        return [self.gates[b[i] : b[i + 1]] for i in range(len(b) - 1)]

    def to_json(self) -> str:
        doc = {
            "num_modes": self.num_modes,
            "depth": self.depth,
            "gates": [{"site": g.site, "theta": g.theta, "phi": g.phi} for g in self.gates],
            "layer_boundaries": self.layer_boundaries,
            "block_boundaries": self.block_boundaries,
        }
        return json.dumps(doc, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "CircuitPlan":
        doc = json.loads(text)
        gates = [BeamSplitterGate(int(g["site"]), float(g["theta"]), float(g["phi"]))
                 for g in doc["gates"]]
        return cls(
            num_modes=int(doc["num_modes"]),
            gates=gates,
            layer_boundaries=[int(x) for x in doc.get("layer_boundaries", [])],
            block_boundaries=[int(x) for x in doc.get("block_boundaries", [])],
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def load(cls, path: str | Path) -> "CircuitPlan":
        return cls.from_json(Path(path).read_text())


def plan_fingerprint(plan: CircuitPlan) -> str:
    """Short stable hex digest of a circuit plan, for log and file headers."""
    return hashlib.sha256(plan.to_json().encode()).hexdigest()[:16]


def gen_index_sequence(n: int) -> tuple[int, ...]:
    """Site sequence for block R_n: odd sites below n descending, then even ascending."""
    if n < 2:
        raise ValueError(f"index sequences are defined for n >= 2, got {n}")
    odds = [k for k in range(n - 1, 0, -1) if k % 2 == 1]
    evens = [k for k in range(2, n) if k % 2 == 0]
    return tuple(odds + evens)


def sample_reflectivity(n: int, s: int, u: float) -> float:
    """Invert the reflectivity law for block n at site s: r = 1 - (1-u)^(1/(n-s))."""
    if not 1 <= s < n:
        raise ValueError(f"site {s} invalid for block {n}")
    if not 0.0 <= u < 1.0:
        raise ValueError("u must lie in [0, 1)")
    return 1.0 - (1.0 - u) ** (1.0 / (n - s))


def sample_haar_circuit(num_modes: int, rng: np.random.Generator) -> CircuitPlan:
    """Draw the brickwork circuit whose composed unitary is Haar up to mode phases.

    num_modes must be even. Per gate the reflectivity variate is drawn before
    the phase, so a fixed generator state fixes the circuit.
    """
    if num_modes < 2 or num_modes % 2 != 0:
        raise ValueError(f"num_modes must be even and >= 2, got {num_modes}")
    half = num_modes // 2
    block_ns = [2 * j - 1 for j in range(1, half + 1)] + [num_modes - 2 * i for i in range(half)]
    gates: list[BeamSplitterGate] = []
    layer_bounds = [0]
    block_bounds = [0]
    for n in block_ns:
        if n >= 2:
            seq = gen_index_sequence(n)
            split = sum(1 for k in seq if k % 2 == 1)  # odd run, then even run
            for pos, k in enumerate(seq):
                # The gate at site k closes a nested splitting chain over
                # modes 1..k+1, so its transmittance cos^2(theta) must carry
                # the Beta(1, k) law; drawing with exponent n - (n - k) = k
                # and assigning the variate to the kept fraction makes the
                # composed unitary Haar (the literal site-keyed reflectivity
                # assignment provably is not: mode M would be mixed by a
                # single uniform-reflectivity gate).
                t = sample_reflectivity(n, n - k, rng.random())
                phi = rng.uniform(0.0, _TWO_PI)
                gates.append(BeamSplitterGate(site=k, theta=math.acos(math.sqrt(t)), phi=phi))
                if pos + 1 == split:
                    layer_bounds.append(len(gates))
            if split < len(seq):
                layer_bounds.append(len(gates))
        block_bounds.append(len(gates))
    return CircuitPlan(
        num_modes=num_modes,
        gates=gates,
        layer_boundaries=layer_bounds,
        block_boundaries=block_bounds,
    )


def circuit_to_unitary(plan: CircuitPlan) -> np.ndarray:
    """Compose the full mode unitary, earliest gate leftmost."""
    u = np.eye(plan.num_modes, dtype=np.complex128)
    for g in plan.gates:
        b = g.matrix()
        k = g.site - 1
        cols = u[:, k : k + 2].copy()
        u[:, k] = cols[:, 0] * b[0, 0] + cols[:, 1] * b[1, 0]
        u[:, k + 1] = cols[:, 0] * b[0, 1] + cols[:, 1] * b[1, 1]
    return u


@dataclass(frozen=True)
class FockGateMatrix:
    """Two-site beam splitter on the truncated Fock basis.

    ``matrix`` is (d^2, d^2) with row j1*d + j2 the output occupation pair and
    column i1*d + i2 the input pair. Entries vanish unless j1 + j2 = i1 + i2,
    and each total-photon sector with total <= d-1 is unitary.
    """

    local_dim: int
    matrix: np.ndarray

    def tensor(self) -> np.ndarray:
        d = self.local_dim
        return self.matrix.reshape(d, d, d, d)


def fock_gate(gate: BeamSplitterGate, local_dim: int) -> FockGateMatrix:
    """Lift a beam splitter to occupation space by expanding transformed creation operators.

    <j1, j2| B |i1, i2> comes from expanding
    (cos(t) a^dag - e^{i phi} sin(t) b^dag)^{i1}
    (e^{-i phi} sin(t) a^dag + cos(t) b^dag)^{i2} |0, 0>
    against normalized number states.
    """
    d = local_dim
    if d < 1:
        raise ValueError("local_dim must be positive")
    t = math.cos(gate.theta)
    s_refl = math.sin(gate.theta)
    rp = -np.exp(1j * gate.phi) * s_refl  # coefficient sending input 1 to output 2
    r = np.exp(-1j * gate.phi) * s_refl  # coefficient sending input 2 to output 1
    fact = [math.factorial(k) for k in range(d)]
    out = np.zeros((d, d, d, d), dtype=np.complex128)
    for i1 in range(d):
        for i2 in range(d):
            total = i1 + i2
            for j1 in range(max(0, total - (d - 1)), min(d - 1, total) + 1):
                j2 = total - j1
                acc = 0.0 + 0.0j
                for q in range(max(0, j1 - i1), min(j1, i2) + 1):
                    p = j1 - q  # photons input 1 keeps on output 1
                    acc += (
                        math.comb(i1, p)
                        * math.comb(i2, q)
                        * t ** (p + (i2 - q))
                        * rp ** (i1 - p)
                        * r**q
                    )
                norm = math.sqrt(fact[j1] * fact[j2] / (fact[i1] * fact[i2]))
                out[j1, j2, i1, i2] = norm * acc
    return FockGateMatrix(local_dim=d, matrix=out.reshape(d * d, d * d))
