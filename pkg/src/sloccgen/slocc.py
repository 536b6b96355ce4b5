"""Post-selection onto one particle per detection region.

Spin configurations are packed integers: bit i describes region i and a set
bit means Down. Amplitude vectors are dense arrays of length 2**n indexed by
that integer.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass

import numpy as np

from .detlike import Statistics, eta_det, eta_det_batch
from .errors import (
    DegenerateNorm,
    DimensionMismatch,
    OddNUnsupported,
    OrderTooLarge,
    UnsupportedClass,
    VanishingState,
)
from .scheme import Scheme, config_to_string, gram, string_to_config

MAX_POST_SELECT_ORDER = 12
VANISHING_TOL = 1e-20
DEGENERATE_TOL = 1e-12


class ClassTag(enum.Enum):
    BELL = "bell"
    W = "w"
    DICKE = "dicke"
    GHZ = "ghz"
    CLUSTER = "cluster"

    @classmethod
    def parse(cls, value) -> "ClassTag":
        if isinstance(value, ClassTag):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise UnsupportedClass(f"unknown state class {value!r}") from None


@dataclass(frozen=True)
class PostSelectedState:
    n: int
    stats: Statistics
    raw: np.ndarray  # unnormalized S_k, length 2**n
    n_g: float
    nu: float

    @property
    def vector(self) -> np.ndarray:
        return self.raw / np.sqrt(self.n_g)

    @property
    def probability(self) -> float:
        return self.n_g / self.nu

    @property
    def amps(self) -> dict[int, complex]:
        v = self.vector
        return {int(k): complex(v[k]) for k in np.flatnonzero(np.abs(v) > 1e-15)}

    def amplitude(self, config) -> complex:
        k = string_to_config(config) if isinstance(config, str) else int(config)
        return complex(self.vector[k])


@dataclass(frozen=True)
class TargetState:
    n: int
    class_tag: ClassTag
    vector: np.ndarray

    @property
    def amps(self) -> dict[int, complex]:
        return {int(k): complex(self.vector[k]) for k in np.flatnonzero(self.vector)}


def _config_matrices(tensor: np.ndarray, configs: np.ndarray) -> np.ndarray:
    """Weight matrices for many spin configurations at once.

    Returns shape (len(configs), n, n) with m[c, i, j] = tensor[j, i, bit_i(c)].
    """
    n = tensor.shape[0]
    bits = (configs[:, None] >> np.arange(n)) & 1  # (C, n)
    # tensor[j, i, bits[c, i]] -> (C, n_regions, n_qubits)
    by_region = tensor.transpose(1, 2, 0)  # [region, spin, qubit]
    return by_region[np.arange(n)[None, :], bits]


def spin_amplitudes(s: Scheme) -> np.ndarray:
    """S_k for every spin configuration k (unnormalized)."""
    n = s.n
    if n > MAX_POST_SELECT_ORDER:
        raise OrderTooLarge(f"post-selection limited to n <= {MAX_POST_SELECT_ORDER}")
    configs = np.arange(1 << n)
    mats = _config_matrices(np.asarray(s.tensor), configs)
    # a zero row forces a zero amplitude; skip those configurations
    live = np.all(np.any(mats != 0, axis=2), axis=1)
    out = np.zeros(1 << n, dtype=complex)
    idx = np.flatnonzero(live)
    if idx.size:
        out[idx] = eta_det_batch(mats[idx], s.stats)
    return out


def self_overlap(s: Scheme) -> float:
    """Norm of the deformed N-particle state: eta-determinant of the Gram matrix."""
    value = eta_det(gram(s), s.stats)
    if abs(value.imag) > 1e-10:
        raise DegenerateNorm(f"Gram eta-determinant has imaginary part {value.imag:.3g}")
    return float(value.real)


def post_select(s: Scheme) -> PostSelectedState:
    """Project the deformed state onto one particle per region.

    Raises
    ------
    VanishingState
        If every amplitude vanishes (post-selection never succeeds).
    DegenerateNorm
        If the deformed states are linearly dependent under the statistics.
    """
    raw = spin_amplitudes(s)
    n_g = float(np.sum(np.abs(raw) ** 2))
    # checked first: a vanishing projection is the physical outcome even when nu is also zero
    if n_g <= VANISHING_TOL:
        raise VanishingState(f"post-selection never succeeds for '{s.label or 'scheme'}'")
    nu = self_overlap(s)
    if nu <= DEGENERATE_TOL:
        raise DegenerateNorm(f"deformed state has vanishing norm (nu = {nu:.3g})")
    return PostSelectedState(s.n, s.stats, raw, n_g, nu)


def fidelity(out: PostSelectedState, t: TargetState) -> float:
    if out.n != t.n:
        raise DimensionMismatch(f"state has n={out.n}, target has n={t.n}")
    return float(abs(np.vdot(t.vector, out.vector)) ** 2)


def genuine_threshold(class_tag, n: int) -> float:
    """Fidelity above which the state is genuinely n-partite entangled."""
    tag = ClassTag.parse(class_tag)
    if n < 2:
        raise ValueError("thresholds need n >= 2")
    if tag is ClassTag.W:
        return (n - 1) / n
    if tag is ClassTag.DICKE:
        if n % 2:
            raise OddNUnsupported("symmetric Dicke threshold needs even n")
        return n / (2 * (n - 1))
    if tag in (ClassTag.GHZ, ClassTag.CLUSTER, ClassTag.BELL):
        return 0.5
    raise UnsupportedClass(f"no threshold for {tag}")


def _weight(k: int) -> int:
    return bin(k).count("1")


def make_target(class_tag, n: int) -> TargetState:
    tag = ClassTag.parse(class_tag)
    if n < 2:
        raise ValueError("targets need n >= 2")
    dim = 1 << n
    v = np.zeros(dim, dtype=complex)
    all_down = dim - 1
    if tag is ClassTag.W:
        for i in range(n):
            v[all_down ^ (1 << i)] = 1.0
    elif tag is ClassTag.DICKE:
        if n % 2:
            raise OddNUnsupported("symmetric Dicke target needs even n")
        for k in range(dim):
            if _weight(k) == n // 2:
                v[k] = 1.0
    elif tag in (ClassTag.GHZ, ClassTag.BELL):
        if tag is ClassTag.BELL and n != 2:
            raise DimensionMismatch("the Bell target is two-qubit")
        v[0] = v[all_down] = 1.0
    elif tag is ClassTag.CLUSTER:
        if n % 2:
            raise OddNUnsupported("the two-block cluster form needs even n")
        half = n // 2
        first_down = (1 << half) - 1  # regions 0..half-1 Down
        v[0] = 1.0
        v[all_down] = -1.0
        v[all_down ^ first_down] += 1.0  # Up on the first half, Down on the second
        v[first_down] += 1.0
    else:  # pragma: no cover
        raise UnsupportedClass(str(tag))
    v /= np.linalg.norm(v)
    return TargetState(n, tag, v)


# --- Pauli expectations -----------------------------------------------------

def pauli_expectation(vector: np.ndarray, n: int, paulis: dict[int, str]) -> float:
    """<v| P |v> for a product of 'X'/'Z' factors keyed by region.

    Z follows the convention |Down><Down| - |Up><Up|, so Z contributes +1 on a
    Down (set) bit and -1 on an Up bit.
    """
    v = np.asarray(vector, dtype=complex)
    configs = np.arange(1 << n)
    flip = 0
    phase = np.ones(1 << n)
    for region, op in paulis.items():
        if op == "X":
            flip |= 1 << region
        elif op == "Z":
            phase = phase * np.where((configs >> region) & 1, 1.0, -1.0)
        else:
            raise ValueError(f"unsupported Pauli factor {op!r}")
    # (P v)[k ^ flip] = phase[k] v[k]
    pv = np.zeros_like(v)
    pv[configs ^ flip] = phase * v
    return float(np.vdot(v, pv).real)


def cluster_stabilizers(n: int) -> list[dict[int, str]]:
    """Stabilizer generators of the even-n two-block cluster form.

    The target is the linear cluster state up to local unitaries (Hadamards
    on the block-boundary qubits). Under that map the chain generators become
    ZZ links inside each block and two block-crossing X...X Z terms.
    """
    if n % 2 or n < 4:
        raise OddNUnsupported("cluster stabilizers are defined for even n >= 4")
    half = n // 2
    gens: list[dict[int, str]] = []
    gens.append({**{r: "X" for r in range(half)}, half: "Z"})
    for i in range(half - 1):
        gens.append({i: "Z", i + 1: "Z"})
    for i in range(half, n - 1):
        gens.append({i: "Z", i + 1: "Z"})
    gens.append({half - 1: "Z", **{r: "X" for r in range(half, n)}})
    return gens


def cluster_stabilizer_check(out) -> list[float]:
    """Expectation value of each cluster stabilizer generator.

    An ideal cluster state returns +-1 for every generator; any other state
    has at least one value of magnitude below one.
    """
    vector = out.vector
    n = out.n
    return [pauli_expectation(vector, n, g) for g in cluster_stabilizers(n)]


def chain_stabilizer_values(out) -> list[float]:
    """Literal <X_i Z_{i+1}> along the chain (Z omitted on the last region)."""
    n = out.n
    vals = []
    for i in range(n):
        ops = {i: "X"}
        if i + 1 < n:
            ops[i + 1] = "Z"
        vals.append(pauli_expectation(out.vector, n, ops))
    return vals


# --- phase alignment and serialization -------------------------------------

def align_phase(vector: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Rotate so the largest-magnitude amplitude is real and positive.

    Ties within ``tol`` go to the lowest configuration index, so rounding
    noise cannot change which amplitude sets the gauge.
    """
    v = np.asarray(vector, dtype=complex)
    mags = np.abs(v)
    k = int(np.flatnonzero(mags >= mags.max() - tol)[0])
    if v[k] == 0:
        return v.copy()
    return v * (abs(v[k]) / v[k])


def state_to_dict(out: PostSelectedState) -> dict:
    return {
        "n": out.n,
        "statistics": out.stats.value,
        "amplitudes": [
            {"config": config_to_string(k, out.n), "re": a.real, "im": a.imag}
            for k, a in sorted(out.amps.items())
        ],
        "n_g": out.n_g,
        "nu": out.nu,
        "probability": out.probability,
    }


def state_from_dict(d: dict) -> PostSelectedState:
    n = int(d["n"])
    raw = np.zeros(1 << n, dtype=complex)
    for entry in d["amplitudes"]:
        raw[string_to_config(entry["config"])] = complex(entry["re"], entry["im"])
    n_g = float(d["n_g"])
    # stored amplitudes are normalized; rescale to the unnormalized S_k
    raw *= np.sqrt(n_g)
    return PostSelectedState(n, Statistics(d["statistics"]), raw, n_g, float(d["nu"]))


STATE_SCHEMA = {
    "type": "object",
    "required": ["n", "statistics", "amplitudes", "n_g", "nu", "probability"],
    "properties": {
        "n": {"type": "integer", "minimum": 1},
        "statistics": {"enum": ["boson", "fermion"]},
        "amplitudes": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["config", "re", "im"],
                "properties": {
                    "config": {"type": "string", "pattern": "^[ud]+$"},
                    "re": {"type": "number"},
                    "im": {"type": "number"},
                },
            },
        },
        "n_g": {"type": "number", "minimum": 0},
        "nu": {"type": "number", "exclusiveMinimum": 0},
        "probability": {"type": "number", "minimum": 0, "maximum": 1},
    },
}


def dumps_state(out: PostSelectedState) -> str:
    return json.dumps(state_to_dict(out), indent=2)
