"""Generation schemes: deformed single-qubit states and their graph views.

A scheme stores, for each source qubit, its amplitude on every
(detection region, pseudospin) pair after deformation. Storage is
qubit-major; weight matrices are built with rows indexed by detection
region and columns by source qubit.
"""

from __future__ import annotations

import enum
import functools
import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .detlike import Statistics, permutation_parity
from .errors import NotNormalized, OrderTooLarge, SchemeFormatError

NORM_TOL = 1e-9
MAX_MATCHING_ORDER = 8


class Spin(enum.Enum):
    UP = "up"
    DOWN = "down"

    @property
    def bit(self) -> int:
        return 0 if self is Spin.UP else 1

    @property
    def char(self) -> str:
        return "u" if self is Spin.UP else "d"

    @classmethod
    def parse(cls, value) -> "Spin":
        if isinstance(value, Spin):
            return value
        text = str(value).lower()
        if text in ("u", "up"):
            return cls.UP
        if text in ("d", "down"):
            return cls.DOWN
        raise SchemeFormatError(f"unknown spin {value!r}")


UP, DOWN = Spin.UP, Spin.DOWN


def parse_sigma(sigma, n: int | None = None) -> tuple[Spin, ...]:
    """Accept a 'udd'-style string, an int config, or a sequence of spins."""
    if isinstance(sigma, (int, np.integer)):
        if n is None:
            raise ValueError("an integer spin configuration needs n")
        return config_to_spins(int(sigma), n)
    if isinstance(sigma, str):
        spins = tuple(Spin.parse(c) for c in sigma)
    else:
        spins = tuple(Spin.parse(s) for s in sigma)
    if n is not None and len(spins) != n:
        raise SchemeFormatError(f"spin assignment has length {len(spins)}, expected {n}")
    return spins


def config_to_spins(k: int, n: int) -> tuple[Spin, ...]:
    # region 0 is the least significant bit; a set bit means Down
    return tuple(DOWN if (k >> i) & 1 else UP for i in range(n))


def spins_to_config(spins: Sequence[Spin]) -> int:
    return sum(s.bit << i for i, s in enumerate(spins))


def config_to_string(k: int, n: int) -> str:
    return "".join(s.char for s in config_to_spins(k, n))


def string_to_config(text: str) -> int:
    return spins_to_config(parse_sigma(text))


@dataclass(frozen=True)
class DeformedQubit:
    """Output state of one qubit's deformation: amplitudes keyed by (region, spin)."""

    source_id: int
    amps: Mapping[tuple[int, Spin], complex]

    def __post_init__(self):
        cleaned = {}
        for (region, spin), amp in self.amps.items():
            amp = complex(amp)
            if amp != 0:
                cleaned[(int(region), Spin.parse(spin))] = amp
        object.__setattr__(self, "amps", cleaned)

    @property
    def norm_sq(self) -> float:
        return float(sum(abs(a) ** 2 for a in self.amps.values()))


@dataclass(frozen=True)
class Scheme:
    """N deformed qubits plus particle statistics."""

    n: int
    qubits: tuple[DeformedQubit, ...]
    stats: Statistics
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "qubits", tuple(self.qubits))
        object.__setattr__(self, "stats", Statistics.parse(self.stats))
        if self.n < 1:
            raise SchemeFormatError("a scheme needs at least one qubit")
        if len(self.qubits) != self.n:
            raise SchemeFormatError(f"expected {self.n} qubits, got {len(self.qubits)}")
        for i, q in enumerate(self.qubits):
            if not q.amps:
                raise NotNormalized(f"qubit {i} has no nonzero amplitude", qubit=i)
            for region, _ in q.amps:
                if not 0 <= region < self.n:
                    raise SchemeFormatError(f"qubit {i} references region {region} outside [0, {self.n})")
            if abs(q.norm_sq - 1.0) > NORM_TOL:
                raise NotNormalized(
                    f"qubit {i} is not normalized: squared amplitudes sum to {q.norm_sq:.12g}", qubit=i
                )

    @classmethod
    def from_array(cls, amps, stats, label: str = "") -> "Scheme":
        """Build from an array of shape (n, n, 2) indexed [qubit, region, spin bit]."""
        a = np.asarray(amps, dtype=complex)
        n = a.shape[0]
        if a.shape != (n, n, 2):
            raise SchemeFormatError(f"amplitude array must have shape (n, n, 2), got {a.shape}")
        qubits = []
        for q in range(n):
            amp_map = {
                (r, DOWN if b else UP): a[q, r, b]
                for r in range(n)
                for b in range(2)
                if a[q, r, b] != 0
            }
            qubits.append(DeformedQubit(q, amp_map))
        return cls(n, tuple(qubits), stats, label)

    @functools.cached_property
    def tensor(self) -> np.ndarray:
        """Amplitudes as a read-only array of shape (n, n, 2): [qubit, region, spin bit]."""
        a = np.zeros((self.n, self.n, 2), dtype=complex)
        for q, qubit in enumerate(self.qubits):
            for (region, spin), amp in qubit.amps.items():
                a[q, region, spin.bit] = amp
        a.flags.writeable = False
        return a

    def amplitude(self, qubit: int, region: int, spin) -> complex:
        return self.qubits[qubit].amps.get((region, Spin.parse(spin)), 0j)

    def with_stats(self, stats) -> "Scheme":
        return Scheme(self.n, self.qubits, Statistics.parse(stats), self.label)

    def permuted(self, order: Sequence[int]) -> "Scheme":
        """Reorder the qubit list (the physical deformations are unchanged)."""
        return Scheme(self.n, tuple(self.qubits[i] for i in order), self.stats, self.label)


@dataclass(frozen=True)
class Edge:
    source: int
    target: int
    spin: Spin
    weight: complex


@dataclass(frozen=True)
class Digraph:
    """Colored weighted digraph: edge i -> j with color s and weight r means
    qubit i reaches region j with pseudospin s and amplitude r."""

    n: int
    edges: tuple[Edge, ...] = field(default_factory=tuple)

    def in_degree(self, node: int) -> int:
        """Number of distinct source nodes with an edge into ``node``."""
        return len({e.source for e in self.edges if e.target == node})

    def out_edges(self, node: int) -> list[Edge]:
        return [e for e in self.edges if e.source == node]


@dataclass(frozen=True)
class WeightMatrix:
    sigma: tuple[Spin, ...]
    m: np.ndarray


def scheme_to_digraph(s: Scheme) -> Digraph:
    edges = []
    for i, q in enumerate(s.qubits):
        for (region, spin), amp in sorted(q.amps.items(), key=lambda kv: (kv[0][0], kv[0][1].bit)):
            edges.append(Edge(i, region, spin, amp))
    return Digraph(s.n, tuple(edges))


def digraph_to_scheme(g: Digraph, stats, label: str = "", source_ids: Sequence[int] | None = None) -> Scheme:
    amps: list[dict] = [{} for _ in range(g.n)]
    for e in g.edges:
        if not (0 <= e.source < g.n and 0 <= e.target < g.n):
            raise SchemeFormatError(f"edge {e.source}->{e.target} outside a {g.n}-node digraph")
        key = (e.target, e.spin)
        amps[e.source][key] = amps[e.source].get(key, 0j) + complex(e.weight)
    for i, a in enumerate(amps):
        total = sum(abs(w) ** 2 for w in a.values())
        if abs(total - 1.0) > NORM_TOL:
            raise NotNormalized(
                f"node {i}: outgoing squared weights sum to {total:.12g}, expected 1", qubit=i
            )
    ids = list(source_ids) if source_ids is not None else list(range(g.n))
    qubits = tuple(DeformedQubit(ids[i], a) for i, a in enumerate(amps))
    return Scheme(g.n, qubits, stats, label)


def has_spatial_overlap(s: Scheme) -> bool:
    """True iff some region receives amplitude from two or more qubits."""
    occupied = np.abs(s.tensor).sum(axis=2) > 0
    return bool((occupied.sum(axis=0) >= 2).any())


def weight_matrix(s: Scheme, sigma) -> WeightMatrix:
    spins = parse_sigma(sigma, s.n)
    bits = np.array([sp.bit for sp in spins])
    # m[i, j] = amplitude of qubit j on (region i, sigma_i)
    m = s.tensor[:, np.arange(s.n), bits].T.copy()
    return WeightMatrix(spins, m)


def gram(s: Scheme) -> np.ndarray:
    """Pairwise overlaps <phi_i|phi_j> of the deformed single-qubit states."""
    flat = s.tensor.reshape(s.n, -1)
    return flat.conj() @ flat.T


def perfect_matchings(s: Scheme, sigma) -> list[tuple[tuple[int, ...], complex]]:
    """All region -> qubit assignments with a nonzero weight product.

    Returns ``(perm, product)`` pairs where region ``i`` is matched to qubit
    ``perm[i]``. The statistics sign is not folded into ``product``; use
    :func:`matching_sign` for it.
    """
    if s.n > MAX_MATCHING_ORDER:
        raise OrderTooLarge(f"matching enumeration limited to n <= {MAX_MATCHING_ORDER}")
    m = weight_matrix(s, sigma).m
    n = s.n
    allowed = [[j for j in range(n) if m[i, j] != 0] for i in range(n)]
    out = []

    def extend(row, used, perm, prod):
        if row == n:
            out.append((tuple(perm), prod))
            return
        for j in allowed[row]:
            if j not in used:
                used.add(j)
                perm.append(j)
                extend(row + 1, used, perm, prod * m[row, j])
                perm.pop()
                used.discard(j)

    extend(0, set(), [], 1 + 0j)
    return out


def matching_sign(perm: Sequence[int], stats: Statistics) -> int:
    return 1 if stats is Statistics.BOSON else permutation_parity(perm)


def matching_total(s: Scheme, sigma) -> complex:
    return sum((matching_sign(p, s.stats) * w for p, w in perfect_matchings(s, sigma)), 0j)


# --- JSON -----------------------------------------------------------------

SCHEME_SCHEMA = {
    "type": "object",
    "required": ["n", "statistics", "label", "qubits"],
    "properties": {
        "n": {"type": "integer", "minimum": 1},
        "statistics": {"enum": ["boson", "fermion"]},
        "label": {"type": "string"},
        "qubits": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["source_id", "amplitudes"],
                "properties": {
                    "source_id": {"type": "integer"},
                    "amplitudes": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "required": ["region", "spin", "re", "im"],
                            "properties": {
                                "region": {"type": "integer"},
                                "spin": {"enum": ["up", "down"]},
                                "re": {"type": "number"},
                                "im": {"type": "number"},
                            },
                        },
                    },
                },
            },
        },
    },
}


def scheme_to_dict(s: Scheme) -> dict:
    return {
        "n": s.n,
        "statistics": s.stats.value,
        "label": s.label,
        "qubits": [
            {
                "source_id": q.source_id,
                "amplitudes": [
                    {"region": r, "spin": sp.value, "re": a.real, "im": a.imag}
                    for (r, sp), a in sorted(q.amps.items(), key=lambda kv: (kv[0][0], kv[0][1].bit))
                ],
            }
            for q in s.qubits
        ],
    }


def _require(obj, key, kind, where):
    if not isinstance(obj, dict) or key not in obj:
        raise SchemeFormatError(f"{where}: missing field '{key}'")
    value = obj[key]
    if kind is int and (isinstance(value, bool) or not isinstance(value, int)):
        raise SchemeFormatError(f"{where}.{key}: expected an integer, got {value!r}")
    if kind is float and (isinstance(value, bool) or not isinstance(value, (int, float))):
        raise SchemeFormatError(f"{where}.{key}: expected a number, got {value!r}")
    if kind is str and not isinstance(value, str):
        raise SchemeFormatError(f"{where}.{key}: expected a string, got {value!r}")
    if kind is list and not isinstance(value, list):
        raise SchemeFormatError(f"{where}.{key}: expected a list")
    return value


def scheme_from_dict(d: dict) -> Scheme:
    n = _require(d, "n", int, "scheme")
    stats_text = _require(d, "statistics", str, "scheme")
    if stats_text not in ("boson", "fermion"):
        raise SchemeFormatError(f"scheme.statistics: expected 'boson' or 'fermion', got {stats_text!r}")
    label = d.get("label", "")
    if not isinstance(label, str):
        raise SchemeFormatError("scheme.label: expected a string")
    raw_qubits = _require(d, "qubits", list, "scheme")
    qubits = []
    for i, rq in enumerate(raw_qubits):
        where = f"qubits[{i}]"
        source_id = _require(rq, "source_id", int, where)
        amps: dict = {}
        for j, ra in enumerate(_require(rq, "amplitudes", list, where)):
            aw = f"{where}.amplitudes[{j}]"
            region = _require(ra, "region", int, aw)
            spin_text = _require(ra, "spin", str, aw)
            if spin_text not in ("up", "down"):
                raise SchemeFormatError(f"{aw}.spin: unknown spin {spin_text!r}")
            if not 0 <= region < n:
                raise SchemeFormatError(f"{aw}.region: {region} outside [0, {n})")
            re_ = _require(ra, "re", float, aw)
            im_ = _require(ra, "im", float, aw)
            key = (region, Spin(spin_text))
            amps[key] = amps.get(key, 0j) + complex(re_, im_)
        qubits.append(DeformedQubit(source_id, amps))
    return Scheme(n, tuple(qubits), Statistics(stats_text), label)


def dumps_scheme(s: Scheme) -> str:
    return json.dumps(scheme_to_dict(s), indent=2)


def loads_scheme(text: str) -> Scheme:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemeFormatError(f"invalid JSON at line {exc.lineno}: {exc.msg}") from None
    return scheme_from_dict(data)


def load_scheme(path) -> Scheme:
    with open(path) as fh:
        return loads_scheme(fh.read())


def save_scheme(s: Scheme, path) -> None:
    with open(path, "w") as fh:
        fh.write(dumps_scheme(s))
        fh.write("\n")


def all_sigmas(n: int) -> Iterable[tuple[Spin, ...]]:
    return (config_to_spins(k, n) for k in range(1 << n))


__all__ = [
    "Spin", "UP", "DOWN", "DeformedQubit", "Scheme", "Edge", "Digraph", "WeightMatrix",
    "scheme_to_digraph", "digraph_to_scheme", "weight_matrix", "gram", "perfect_matchings",
    "matching_sign", "matching_total", "has_spatial_overlap", "parse_sigma", "config_to_spins",
    "spins_to_config", "config_to_string", "string_to_config", "scheme_to_dict", "scheme_from_dict",
    "dumps_scheme", "loads_scheme", "load_scheme", "save_scheme", "SCHEME_SCHEMA", "all_sigmas",
]
