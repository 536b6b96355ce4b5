"""Random search over digraph edge weights.

A :class:`Template` fixes a digraph topology and frees some of its edge
weights. Sampling draws the free weights uniformly, normalizes every qubit's
outgoing weights, and evaluates fidelity and success probability for whole
batches at once. Samples are processed in fixed-size blocks, each seeded from
``(seed, block index)``, so results do not depend on how blocks are spread
over worker processes.
"""

from __future__ import annotations

import csv
import enum
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import catalog
from .detlike import Statistics, eta_det_batch
from .errors import EmptyResult, UnsupportedClass
from .scheme import Scheme, Spin
from .slocc import ClassTag, TargetState, _config_matrices

BLOCK_SIZE = 8192
# Stable generator for reproducibility; changing it changes every stored result.
BIT_GENERATOR = np.random.PCG64


class WeightDomain(enum.Enum):
    NONNEGATIVE = "nonnegative"
    COMPLEX = "complex"


@dataclass(frozen=True)
class Slot:
    qubit: int
    region: int
    spin: Spin
    phase: complex = 1.0  # sampled magnitude is multiplied by this

    @property
    def name(self) -> str:
        return f"w_q{self.qubit}_r{self.region}_{self.spin.char}"


@dataclass(frozen=True)
class Template:
    n: int
    stats: Statistics
    slots: tuple[Slot, ...]
    fixed: tuple[tuple[int, int, Spin, complex], ...] = ()
    domain: WeightDomain = WeightDomain.NONNEGATIVE
    label: str = ""

    def __post_init__(self):
        touched = {s.qubit for s in self.slots} | {f[0] for f in self.fixed}
        missing = set(range(self.n)) - touched
        if missing:
            raise ValueError(f"qubits {sorted(missing)} have no allowed or fixed edge")

    @property
    def slot_names(self) -> list[str]:
        return [s.name for s in self.slots]

    def base_tensor(self) -> np.ndarray:
        a = np.zeros((self.n, self.n, 2), dtype=complex)
        for q, r, spin, w in self.fixed:
            a[q, r, spin.bit] = w
        return a

    def tensors(self, weights: np.ndarray) -> np.ndarray:
        """Normalized amplitude tensors for a batch of free-weight vectors.

        ``weights`` has shape (batch, len(slots)); the result has shape
        (batch, n, n, 2).
        """
        weights = np.atleast_2d(np.asarray(weights, dtype=complex))
        batch = weights.shape[0]
        a = np.broadcast_to(self.base_tensor(), (batch, self.n, self.n, 2)).copy()
        for k, s in enumerate(self.slots):
            a[:, s.qubit, s.region, s.spin.bit] += s.phase * weights[:, k]
        norms = np.sqrt(np.sum(np.abs(a) ** 2, axis=(2, 3)))
        norms = np.where(norms == 0, 1.0, norms)
        return a / norms[:, :, None, None]

    def instantiate(self, weights) -> Scheme:
        return Scheme.from_array(self.tensors(np.asarray(weights)[None])[0], self.stats, self.label)

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        k = len(self.slots)
        if self.domain is WeightDomain.NONNEGATIVE:
            return rng.random((count, k))
        mag = rng.random((count, k))
        phase = rng.random((count, k))
        return mag * np.exp(2j * np.pi * phase)


@dataclass(frozen=True)
class AnnealConfig:
    initial_temperature: float = 0.01
    cooling: float = 0.998
    steps: int = 3000
    chains: int = 8
    step_size: float = 0.05
    penalty: float = 10.0  # energy cost per unit of fidelity outside the window
    sweeps: int = 20  # extra passes over bins beaten by their higher-fidelity neighbour


@dataclass(frozen=True)
class SearchConfig:
    samples: int
    seed: int = 0
    bin_width: float = 0.01
    anneal: AnnealConfig | None = None
    workers: int = 1

    def __post_init__(self):
        if self.samples < 1:
            raise ValueError("samples must be >= 1")
        if not 0 < self.bin_width <= 1:
            raise ValueError("bin_width must lie in (0, 1]")


@dataclass(frozen=True)
class TradeoffPoint:
    fidelity_bin_low: float
    fidelity_bin_high: float
    max_probability: float
    best_weights: np.ndarray = field(compare=False)
    fidelity: float = 0.0  # fidelity of the achieving sample


class Evaluator:
    """Batched fidelity and probability for one template and target."""

    def __init__(self, template: Template, target: TargetState):
        if target.n != template.n:
            raise ValueError(f"target has n={target.n}, template has n={template.n}")
        self.template = template
        self.target = target
        n = template.n
        support = np.zeros((n, n, 2), dtype=bool)
        support |= template.base_tensor() != 0
        for s in template.slots:
            support[s.qubit, s.region, s.spin.bit] = True
        self.configs = _matchable_configs(support)

    def __call__(self, weights: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Return (fidelity, probability) arrays; both are 0 where the output vanishes."""
        t = self.template
        a = t.tensors(weights)
        batch = a.shape[0]
        n = t.n
        flat = a.reshape(batch, n, 2 * n)
        gram = np.einsum("bik,bjk->bij", flat.conj(), flat)
        nu = eta_det_batch(gram, t.stats).real
        raw = np.zeros((batch, len(self.configs)), dtype=complex)
        for c, k in enumerate(self.configs):
            mats = _config_matrices_batch(a, k)
            raw[:, c] = eta_det_batch(mats, t.stats)
        n_g = np.sum(np.abs(raw) ** 2, axis=1)
        overlap = raw @ self.target.vector[self.configs].conj()
        ok = (n_g > 1e-20) & (nu > 1e-12)
        safe_ng = np.where(ok, n_g, 1.0)
        safe_nu = np.where(ok, nu, 1.0)
        fid = np.where(ok, np.abs(overlap) ** 2 / safe_ng, 0.0)
        prob = np.where(ok, n_g / safe_nu, 0.0)
        return fid, prob


def _config_matrices_batch(a: np.ndarray, k: int) -> np.ndarray:
    n = a.shape[1]
    bits = (k >> np.arange(n)) & 1
    # m[b, i, j] = a[b, j, i, bits[i]]
    return a[:, :, np.arange(n), bits].transpose(0, 2, 1)


def _matchable_configs(support: np.ndarray) -> np.ndarray:
    """Spin configurations whose weight-matrix support admits a perfect matching."""
    n = support.shape[0]
    mats = _config_matrices(support.astype(float), np.arange(1 << n)) != 0
    keep = []
    for k in range(1 << n):
        if _has_perfect_matching(mats[k]):
            keep.append(k)
    return np.array(keep, dtype=int)


def _has_perfect_matching(adj: np.ndarray) -> bool:
    n = adj.shape[0]
    match_col = [-1] * n

    def augment(row, seen):
        for col in np.flatnonzero(adj[row]):
            if col in seen:
                continue
            seen.add(col)
            if match_col[col] < 0 or augment(match_col[col], seen):
                match_col[col] = row
                return True
        return False

    return all(augment(r, set()) for r in range(n))


# --- templates --------------------------------------------------------------

def templates_for(class_tag, n: int, stats, domain: WeightDomain = WeightDomain.NONNEGATIVE) -> Template:
    """Search space used for each state class.

    W and Dicke use the complete digraph (every qubit may reach every region
    with its input spin). GHZ and cluster keep the catalog topology and its
    edge phases, freeing the magnitudes.
    """
    tag = ClassTag.parse(class_tag)
    stats = Statistics.parse(stats)
    if tag in (ClassTag.W, ClassTag.DICKE):
        if tag is ClassTag.W:
            spins = [Spin.UP] + [Spin.DOWN] * (n - 1)
        else:
            if n % 2:
                raise ValueError("Dicke templates need even n")
            spins = [Spin.UP] * (n // 2) + [Spin.DOWN] * (n // 2)
        slots = tuple(Slot(q, r, spins[q]) for q in range(n) for r in range(n))
        return Template(n, stats, slots, domain=domain, label=f"{tag.value}-{n}-complete-template")
    if tag is ClassTag.GHZ:
        base = catalog.ghz_scheme(n, stats)
    elif tag is ClassTag.CLUSTER:
        base = catalog.cluster_scheme(n, stats)
    else:
        raise UnsupportedClass(f"no template for {tag.value}")
    return topology_template(base, domain=domain, label=f"{tag.value}-{n}-template")


def topology_template(base: Scheme, domain: WeightDomain = WeightDomain.NONNEGATIVE, label: str = "") -> Template:
    """Free the magnitude of every existing edge of ``base``, keeping its phase."""
    slots = []
    for q, qubit in enumerate(base.qubits):
        for (region, spin), amp in sorted(qubit.amps.items(), key=lambda kv: (kv[0][0], kv[0][1].bit)):
            slots.append(Slot(q, region, spin, amp / abs(amp)))
    return Template(base.n, base.stats, tuple(slots), domain=domain, label=label or base.label)


def fixed_template(base: Scheme) -> Template:
    """Template with every edge frozen at its catalog weight and nothing free."""
    fixed = tuple(
        (q, region, spin, amp)
        for q, qubit in enumerate(base.qubits)
        for (region, spin), amp in qubit.amps.items()
    )
    return Template(base.n, base.stats, (), fixed, label=base.label)


# --- sampling ---------------------------------------------------------------

def _bin_edges(threshold: float, bin_width: float) -> np.ndarray:
    count = max(1, math.ceil((1.0 - threshold) / bin_width - 1e-12))
    edges = threshold + bin_width * np.arange(count + 1)
    edges[-1] = 1.0
    return edges


def _block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(BIT_GENERATOR(np.random.SeedSequence([seed & (2**64 - 1), block])))


def _run_block(args):
    template, target, threshold, edges, seed, block, count = args
    ev = Evaluator(template, target)
    rng = _block_rng(seed, block)
    weights = template.sample(rng, count)
    fid, prob = ev(weights)
    nbins = len(edges) - 1
    best_p = np.full(nbins, -1.0)
    best_idx = np.full(nbins, -1, dtype=int)
    keep = fid >= threshold
    bins = np.clip(np.searchsorted(edges, fid, side="right") - 1, 0, nbins - 1)
    for i in np.flatnonzero(keep):
        b = bins[i]
        if prob[i] > best_p[b]:
            best_p[b] = prob[i]
            best_idx[b] = i
    out = {}
    for b in np.flatnonzero(best_idx >= 0):
        i = best_idx[b]
        out[int(b)] = (float(prob[i]), float(fid[i]), block * BLOCK_SIZE + int(i), weights[i])
    return out


def _better(new, old) -> bool:
    # higher probability wins; ties go to the lower global sample index
    return old is None or new[0] > old[0] or (new[0] == old[0] and new[2] < old[2])


def sample_tradeoff(t: Template, target: TargetState, threshold: float, cfg: SearchConfig) -> list[TradeoffPoint]:
    """Per-fidelity-bin maximum success probability over random weightings.

    Raises
    ------
    EmptyResult
        If no sample reaches ``threshold``.
    """
    if target.n != t.n:
        raise ValueError(f"target has n={target.n}, template has n={t.n}")
    edges = _bin_edges(threshold, cfg.bin_width)
    blocks = []
    remaining = cfg.samples
    block = 0
    while remaining > 0:
        count = min(BLOCK_SIZE, remaining)
        blocks.append((t, target, threshold, edges, cfg.seed, block, count))
        remaining -= count
        block += 1
    if cfg.workers > 1 and len(blocks) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(_run_block, blocks))
    else:
        results = [_run_block(b) for b in blocks]
    best: dict[int, tuple] = {}
    for res in results:
        for b, rec in res.items():
            if _better(rec, best.get(b)):
                best[b] = rec
    if not best:
        raise EmptyResult(f"no sample out of {cfg.samples} reached fidelity {threshold:.6g}")
    points = [
        TradeoffPoint(float(edges[b]), float(edges[b + 1]), best[b][0], np.array(best[b][3]), best[b][1])
        for b in sorted(best)
    ]
    if cfg.anneal is not None:
        points = _refine(t, target, points, cfg)
    return points


def _refine(t: Template, target: TargetState, points: list[TradeoffPoint],
            cfg: SearchConfig) -> list[TradeoffPoint]:
    """Anneal every bin's best sample without leaving its bin.

    A first pass anneals each bin from its own best sample. Later passes
    revisit bins beaten by the next higher-fidelity bin, seeding half of
    their chains from that neighbour's point; the penalty term walks those
    chains down into the lower window.
    """
    points = list(points)
    lows = np.array([p.fidelity_bin_low for p in points])
    # the top bin is closed at F = 1
    highs = np.array([np.inf if p.fidelity_bin_high >= 1.0 else p.fidelity_bin_high for p in points])
    chains = cfg.anneal.chains
    todo = np.arange(len(points))
    for sweep in range(1 + cfg.anneal.sweeps):
        if todo.size == 0:
            break
        starts = np.array([[points[b].best_weights] * chains for b in todo])
        if sweep > 0:
            for row, b in enumerate(todo):
                starts[row, chains // 2:] = points[b + 1].best_weights
        rng = _block_rng(cfg.seed, 2**40 + sweep)
        ws, fs, ps = anneal(t, target, lows[todo], starts, cfg.anneal, rng, highs[todo])
        for b, w, f, prob in zip(todo, ws, fs, ps):
            p = points[b]
            if prob > p.max_probability:
                points[b] = TradeoffPoint(p.fidelity_bin_low, p.fidelity_bin_high, float(prob), w, float(f))
        todo = np.array([b for b in range(len(points) - 1)
                         if points[b + 1].max_probability > points[b].max_probability], dtype=int)
    return points


def anneal(t: Template, target: TargetState, lows, starts: np.ndarray, cfg: AnnealConfig,
           rng: np.random.Generator, highs=None) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Simulated annealing on the free weights, maximizing probability inside fidelity windows.

    Parameters
    ----------
    lows, highs : array_like, shape (K,)
        Fidelity window ``[low, high)`` for each of K independent searches.
        ``highs`` defaults to no upper bound.
    starts : ndarray, shape (K, slots) or (K, chains, slots)
        Starting weights, shared by all chains of a search or given per chain.
        Starts outside the window are allowed; the penalty pulls them in.

    Each search runs ``cfg.chains`` chains; all K * chains chains advance in
    lockstep and share one batched evaluation per step. The chain energy is
    the probability minus ``cfg.penalty`` times the distance to the window,
    and only points inside the window are ever reported.

    Returns
    -------
    weights, fidelities, probabilities
        Best in-window point found by each search. A search that never
        entered its window reports probability -1.
    """
    ev = Evaluator(t, target)
    starts = np.asarray(starts)
    chains = cfg.chains
    if starts.ndim == 2:
        starts = np.repeat(starts[:, None, :], chains, axis=1)
    k = starts.shape[0]
    lows = np.broadcast_to(np.asarray(lows, dtype=float), (k,))
    highs = np.full(k, np.inf) if highs is None else np.broadcast_to(np.asarray(highs, dtype=float), (k,))
    lo = np.repeat(lows, chains)
    hi = np.repeat(highs, chains)

    def energy(f, p):
        miss = np.maximum(lo - f, 0.0) + np.maximum(f - hi, 0.0)
        return p - cfg.penalty * miss

    cur = starts.reshape(k * chains, -1).copy()
    cur_f, cur_p = ev(cur)
    cur_e = energy(cur_f, cur_p)
    best_w = cur[::chains].copy()
    best_f = np.zeros(k)
    best_p = np.full(k, -1.0)
    temp = cfg.initial_temperature
    for _ in range(cfg.steps + 1):
        inside = np.where((cur_f >= lo) & (cur_f < hi), cur_p, -1.0).reshape(k, chains)
        j = np.argmax(inside, axis=1)
        top = inside[np.arange(k), j]
        better = top > best_p
        if better.any():
            rows = np.arange(k)[better] * chains + j[better]
            best_w[better] = cur[rows]
            best_f[better] = cur_f[rows]
            best_p[better] = cur_p[rows]
        step = rng.normal(scale=cfg.step_size, size=cur.shape)
        if t.domain is WeightDomain.NONNEGATIVE:
            prop = np.abs(cur + step)
        else:
            prop = cur + step + 1j * rng.normal(scale=cfg.step_size, size=cur.shape)
        pf, pp = ev(prop)
        pe = energy(pf, pp)
        accept = rng.random(cur.shape[0]) < np.exp(np.minimum(0.0, (pe - cur_e) / max(temp, 1e-300)))
        cur[accept] = prop[accept]
        cur_f[accept] = pf[accept]
        cur_p[accept] = pp[accept]
        cur_e[accept] = pe[accept]
        temp *= cfg.cooling
    return best_w, best_f, best_p


def optimize_max_prob(t: Template, target: TargetState, threshold: float,
                      cfg: SearchConfig) -> tuple[Scheme, float, float]:
    """Best sampled weighting, optionally refined by annealing.

    The returned probability is never below the best pure-sampling one.
    """
    if not t.slots:
        scheme = t.instantiate(np.zeros(0))
        fid, prob = Evaluator(t, target)(np.zeros((1, 0)))
        if fid[0] < threshold:
            raise EmptyResult("the fixed scheme does not reach the threshold")
        return scheme, float(fid[0]), float(prob[0])
    plain = SearchConfig(cfg.samples, cfg.seed, cfg.bin_width, None, cfg.workers)
    points = sample_tradeoff(t, target, threshold, plain)
    top = max(points, key=lambda p: p.max_probability)
    weights, fid, prob = top.best_weights, top.fidelity, top.max_probability
    if cfg.anneal is not None:
        rng = _block_rng(cfg.seed, 2**32 + 1)
        w2, f2, p2 = anneal(t, target, threshold, weights[None], cfg.anneal, rng)
        if p2[0] > prob:
            weights, fid, prob = w2[0], float(f2[0]), float(p2[0])
    return t.instantiate(weights), fid, prob


# --- CSV --------------------------------------------------------------------

def _format_weight(w: complex, domain: WeightDomain) -> str:
    if domain is WeightDomain.NONNEGATIVE:
        return repr(float(np.real(w)))
    return repr(complex(w))


def write_tradeoff_csv(path, t: Template, points: list[TradeoffPoint]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["fidelity_bin_low", "fidelity_bin_high", "max_probability", *t.slot_names])
        for p in points:
            writer.writerow([
                repr(p.fidelity_bin_low), repr(p.fidelity_bin_high), repr(p.max_probability),
                *(_format_weight(w, t.domain) for w in p.best_weights),
            ])


def read_tradeoff_csv(path, t: Template) -> list[TradeoffPoint]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        expected = ["fidelity_bin_low", "fidelity_bin_high", "max_probability", *t.slot_names]
        if header != expected:
            raise ValueError(f"unexpected CSV header {header}")
        points = []
        for row in reader:
            parse = float if t.domain is WeightDomain.NONNEGATIVE else complex
            weights = np.array([parse(x) for x in row[3:]])
            points.append(TradeoffPoint(float(row[0]), float(row[1]), float(row[2]), weights))
    return points
