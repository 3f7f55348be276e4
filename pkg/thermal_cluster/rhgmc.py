"""Threshold of the 3D cluster state error model.

Z errors on the primal lattice of the 3D cluster state are modelled as
independent edge flips on an L x L x L periodic cubic lattice, with
vertex parity checks. Defects are paired by exact minimum-weight
perfect matching and joined along canonical geodesics.
"""
from concurrent.futures import ProcessPoolExecutor
from functools import lru_cache
import itertools
import math
from typing import Dict, List, Optional, Sequence, Tuple, Union

import networkx as nx
import numpy as np
import pandas as pd
import pymatching
from scipy import optimize, sparse, stats

from thermal_cluster import run_log
from thermal_cluster.base import BaseClass
from thermal_cluster.unitcell import UnitCell
from thermal_cluster.zchannel import QTriple, q_of_temperature

DECODERS = ("pymatching", "networkx")
SCAN_COLUMNS = ["L", "p", "trials", "failures", "rate", "ci_low", "ci_high"]
BOOTSTRAP_STREAM = 0xB007
T_BRACKET = (1e-3, 0.5)
BISECTION_RESIDUAL = 1e-10
MONOTONE_SAMPLES = 24

Seed = Union[int, np.random.SeedSequence]


class NoDecodableRegimeError(ValueError):
    """Raised when the effective error probability exceeds 1/2."""

    pass


class OddDefectCountError(ValueError):
    """Raised when a syndrome with an odd number of defects is decoded."""

    pass


class DecoderError(RuntimeError):
    """Raised when error and correction do not share a syndrome."""

    pass


class NoCrossingError(RuntimeError):
    """Raised when no pair of failure curves crosses on the grid.

    Attributes
    ----------
    direction : str
        'above' when larger lattices fail less over the whole grid
        (the threshold lies above it), 'below' when they fail more,
        'mixed' otherwise.
    scan : pd.DataFrame
        The failure counts that were analysed.
    """

    def __init__(self, msg: str, direction: str, scan: Optional[pd.DataFrame] = None):
        super().__init__(msg)
        self.direction = direction
        self.scan = scan


class BracketError(ValueError):
    """Raised when the threshold temperature cannot be bracketed."""

    pass


def xor_probability(a: float, b: float) -> float:
    """Probability that exactly one of two independent flips happens."""
    return a * (1 - b) + b * (1 - a)


class NoiseParams(BaseClass):
    """Per qubit Z error probabilities on the 3D cluster state.

    Attributes
    ----------
    q_ind : float
        Independent error probability.
    q_cor : float
        Correlated pair error probability.
    n_cor : int
        Correlated contributions folded into each qubit.
    p_eff : float
        q_ind combined with n_cor correlated contributions.
    """

    def __init__(self, q_ind: float, q_cor: float, n_cor: int, p_eff: float):
        self.q_ind = q_ind
        self.q_cor = q_cor
        self.n_cor = n_cor
        self.p_eff = p_eff


def _noise_params(q: Union[QTriple, Sequence[float]], n_cor: int) -> NoiseParams:
    q1, q2, q3 = q.as_tuple() if isinstance(q, QTriple) else tuple(float(v) for v in q)
    if any(not 0 <= v <= 0.2 for v in (q1, q2, q3)):
        raise ValueError(f"q components must lie in [0, 0.2], got {(q1, q2, q3)}")
    if n_cor < 0:
        raise ValueError(f"n_cor must be non-negative, got {n_cor}")
    q_ind = 2 * q1 + 5 * q2 + 9 * q3
    q_cor = q2 + q3
    if q_ind > 0.5:
        raise NoDecodableRegimeError(f"independent error probability {q_ind:.6g} exceeds 1/2")
    p_eff = q_ind
    for _ in range(n_cor):
        p_eff = xor_probability(p_eff, q_cor)
    if p_eff > 0.5:
        raise NoDecodableRegimeError(f"effective error probability {p_eff:.6g} exceeds 1/2")
    return NoiseParams(q_ind, q_cor, n_cor, p_eff)


def map_noise(q: Union[QTriple, Sequence[float]], n_cor: int = 2) -> NoiseParams:
    """Maps the unit cell error probabilities to the cluster state.

    q_ind = 2 q1 + 5 q2 + 9 q3 and q_cor = q2 + q3; each qubit sees
    the independent error and n_cor correlated ones as independent
    flips.

    Parameters
    ----------
    q : QTriple or (q1, q2, q3)
        Components in [0, 0.2].
    n_cor : int, optional
        Correlated contributions per qubit, by default 2.

    Returns
    -------
    NoiseParams
        The mapped probabilities.

    Raises
    ------
    ValueError
        If a component lies outside [0, 0.2] or n_cor is negative.
    NoDecodableRegimeError
        If q_ind or p_eff exceeds 1/2.
    """
    try:
        return _noise_params(q, n_cor)
    except ValueError as e:
        run_log.error(str(e))
        raise


class TorusLattice(BaseClass):
    """
    An L x L x L periodic cubic lattice with qubits on the 3 L^3 edges
    and parity checks on the L^3 vertices.

    Vertex v = x L^2 + y L + z and edge e = d L^3 + v joins v to its
    neighbour one step along axis d.

    Attributes
    ----------
    L : int
        Linear size.
    """

    def __init__(self, L: int):
        if isinstance(L, bool) or int(L) != L or L < 2:
            msg = f"lattice size must be an integer of at least 2, got {L!r}"
            run_log.error(msg)
            raise ValueError(msg)
        self.L = int(L)
        self._check_matrix: Optional[sparse.csr_matrix] = None

    @property
    def n_checks(self) -> int:
        return self.L**3

    @property
    def n_edges(self) -> int:
        return 3 * self.L**3

    def vertex(self, x: int, y: int, z: int) -> int:
        L = self.L
        return (x % L) * L * L + (y % L) * L + (z % L)

    def coords(self, v: int) -> Tuple[int, int, int]:
        L = self.L
        return (v // (L * L), (v // L) % L, v % L)

    def edge(self, axis: int, v: int) -> int:
        """The edge leaving v in the positive axis direction."""
        return axis * self.n_checks + v

    def step(self, v: int, axis: int, direction: int = 1) -> int:
        coords = list(self.coords(v))
        coords[axis] += direction
        return self.vertex(*coords)

    def endpoints(self, e: int) -> Tuple[int, int]:
        axis, v = divmod(e, self.n_checks)
        return v, self.step(v, axis)

    @property
    def check_matrix(self) -> sparse.csr_matrix:
        """The (L^3, 3 L^3) vertex-edge incidence matrix over GF(2)."""
        if self._check_matrix is None:
            edges = np.arange(self.n_edges)
            axes, starts = np.divmod(edges, self.n_checks)
            ends = np.array([self.step(int(v), int(d)) for v, d in zip(starts, axes)])
            rows = np.concatenate([starts, ends])
            cols = np.concatenate([edges, edges])
            data = np.ones(2 * self.n_edges, dtype=np.uint8)
            self._check_matrix = sparse.csr_matrix(
                (data, (rows, cols)), shape=(self.n_checks, self.n_edges)
            )
        return self._check_matrix

    def distance(self, u: int, v: int) -> int:
        """Periodic Manhattan distance between two vertices."""
        total = 0
        for a, b in zip(self.coords(u), self.coords(v)):
            delta = (b - a) % self.L
            total += min(delta, self.L - delta)
        return total

    def geodesic(self, u: int, v: int) -> List[int]:
        """The canonical shortest path from u to v.

        Axes are walked in the order x, y, z, each along the shorter
        wrap, and in the positive direction when both wraps are equal.
        """
        path = []
        current = u
        for axis, (a, b) in enumerate(zip(self.coords(u), self.coords(v))):
            delta = (b - a) % self.L
            if delta <= self.L - delta:
                for _ in range(delta):
                    path.append(self.edge(axis, current))
                    current = self.step(current, axis)
            else:
                for _ in range(self.L - delta):
                    current = self.step(current, axis, -1)
                    path.append(self.edge(axis, current))
        return path

    def straight_cycle(self, axis: int, start: int = 0) -> np.ndarray:
        """The non contractible loop of L edges along an axis."""
        edges = np.zeros(self.n_edges, dtype=bool)
        current = start
        for _ in range(self.L):
            edges[self.edge(axis, current)] = True
            current = self.step(current, axis)
        return edges

    def logical_class(self, edges: np.ndarray) -> Tuple[int, int, int]:
        """Homology class of a syndrome free edge set.

        Bit d is the parity of the d-edges crossing the plane between
        coordinate L-1 and 0 along axis d.
        """
        bits = []
        for axis in range(3):
            start = axis * self.n_checks
            block = edges[start : start + self.n_checks].reshape(self.L, self.L, self.L)
            crossing = np.take(block, self.L - 1, axis=axis)
            bits.append(int(np.count_nonzero(crossing) % 2))
        return tuple(bits)

    def to_dict(self, exclusions: list = []) -> dict:
        return dict(L=self.L, n_edges=self.n_edges, n_checks=self.n_checks)


def trial_seed(seed: int, L: int, p_index: int, trial: int) -> np.random.SeedSequence:
    """The key of one Monte Carlo trial."""
    return np.random.SeedSequence([seed, L, p_index, trial])


def make_rng(seed: Seed) -> np.random.Generator:
    """A counter based Philox generator keyed by the seed."""
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)
    return np.random.Generator(np.random.Philox(seed))


def sample_errors(lattice: TorusLattice, p: float, seed: Seed) -> np.ndarray:
    """Independent Bernoulli(p) flips on every edge.

    Parameters
    ----------
    lattice : TorusLattice
        The lattice.
    p : float
        Flip probability in [0, 1].
    seed : int or SeedSequence
        Key of the random stream.

    Returns
    -------
    np.ndarray
        Boolean edge set.
    """
    if not 0 <= p <= 1:
        msg = f"error probability must lie in [0, 1], got {p}"
        run_log.error(msg)
        raise ValueError(msg)
    return make_rng(seed).random(lattice.n_edges) < p


def syndrome(lattice: TorusLattice, errors: np.ndarray) -> np.ndarray:
    """Vertices with an odd number of flipped incident edges."""
    counts = lattice.check_matrix @ np.asarray(errors, dtype=np.uint8)
    return (counts % 2).astype(bool)


@lru_cache(maxsize=None)
def _matcher(L: int) -> pymatching.Matching:
    return pymatching.Matching.from_check_matrix(TorusLattice(L).check_matrix)


def match_defects(
    lattice: TorusLattice, defects: np.ndarray, decoder: str = "pymatching"
) -> List[Tuple[int, int]]:
    """Pairs the defects with an exact minimum-weight perfect matching
    under the periodic Manhattan distance.

    Parameters
    ----------
    lattice : TorusLattice
        The lattice.
    defects : np.ndarray
        Boolean vertex set with an even number of entries.
    decoder : str, optional
        'pymatching' (sparse blossom on the lattice graph) or
        'networkx' (blossom on the complete defect graph).

    Returns
    -------
    list
        Sorted (u, v) pairs with u < v.
    """
    nodes = np.flatnonzero(defects)
    if len(nodes) % 2:
        msg = f"{len(nodes)} defects cannot be paired"
        run_log.error(msg)
        raise OddDefectCountError(msg)
    if len(nodes) == 0:
        return []
    if decoder == "pymatching":
        matched = _matcher(lattice.L).decode_to_matched_dets_array(defects.astype(np.uint8))
        pairs = [tuple(sorted((int(a), int(b)))) for a, b in matched]
    elif decoder == "networkx":
        graph = nx.Graph()
        largest = 3 * (lattice.L // 2)
        for u, v in itertools.combinations(nodes.tolist(), 2):
            graph.add_edge(u, v, weight=largest + 1 - lattice.distance(u, v))
        matched = nx.max_weight_matching(graph, maxcardinality=True)
        pairs = [tuple(sorted((int(a), int(b)))) for a, b in matched]
    else:
        msg = f"decoder must be one of {DECODERS}, got {decoder!r}"
        run_log.error(msg)
        raise ValueError(msg)
    if len(pairs) * 2 != len(nodes):
        msg = f"matching left {len(nodes) - 2 * len(pairs)} defects unpaired"
        run_log.error(msg)
        raise DecoderError(msg)
    return sorted(pairs)


def pairing_weight(lattice: TorusLattice, pairs: Sequence[Tuple[int, int]]) -> int:
    return sum(lattice.distance(u, v) for u, v in pairs)


def decode_mwpm(
    lattice: TorusLattice, defects: np.ndarray, decoder: str = "pymatching"
) -> np.ndarray:
    """The correction joining matched defects along canonical geodesics.

    Parameters
    ----------
    lattice : TorusLattice
        The lattice.
    defects : np.ndarray
        Boolean vertex set.
    decoder : str, optional
        Matching backend, by default 'pymatching'.

    Returns
    -------
    np.ndarray
        Boolean edge set whose syndrome equals the defects.

    Raises
    ------
    OddDefectCountError
        If the number of defects is odd.
    """
    correction = np.zeros(lattice.n_edges, dtype=bool)
    for u, v in match_defects(lattice, np.asarray(defects, dtype=bool), decoder):
        for e in lattice.geodesic(u, v):
            correction[e] ^= True
    return correction


def trial_fails(
    lattice: TorusLattice, p: float, seed: Seed, decoder: str = "pymatching"
) -> Tuple[int, int, int]:
    """One Monte Carlo trial: sample, decode and classify.

    Returns
    -------
    tuple
        The homology class of error plus correction; the trial fails
        when any bit is set.

    Raises
    ------
    DecoderError
        If error plus correction has a non empty syndrome.
    """
    errors = sample_errors(lattice, p, seed)
    defects = syndrome(lattice, errors)
    residual = errors ^ decode_mwpm(lattice, defects, decoder)
    if syndrome(lattice, residual).any():
        msg = f"correction does not cancel the syndrome on L={lattice.L}, p={p}"
        run_log.error(msg)
        raise DecoderError(msg)
    return lattice.logical_class(residual)


def _count_failures(task: Tuple[int, float, int, int, int, int, str]) -> int:
    """Failures over a range of trial indices of one (L, p) point."""
    L, p, p_index, seed, start, stop, decoder = task
    lattice = TorusLattice(L)
    return sum(
        any(trial_fails(lattice, p, trial_seed(seed, L, p_index, trial), decoder))
        for trial in range(start, stop)
    )


def wilson_interval(failures: int, trials: int, confidence: float = 0.95) -> Tuple[float, float]:
    """The Wilson score interval of a binomial rate."""
    z = stats.norm.ppf(0.5 + confidence / 2)
    denominator = trials + z**2
    center = (failures + z**2 / 2) / denominator
    half = z / denominator * math.sqrt(failures * (trials - failures) / trials + z**2 / 4)
    rate = failures / trials
    return max(0.0, min(center - half, rate)), min(1.0, max(center + half, rate))


def run_scan(
    sizes: Sequence[int],
    p_grid: Sequence[float],
    trials: int,
    seed: int,
    decoder: str = "pymatching",
    threads: int = 1,
    chunk: int = 500,
) -> pd.DataFrame:
    """Failure counts for every (L, p) point.

    Trials are split into chunks that may run in separate processes;
    every trial has its own key, so the counts do not depend on the
    number of workers.

    Returns
    -------
    pd.DataFrame
        Columns L, p, trials, failures, rate, ci_low, ci_high.
    """
    if isinstance(trials, bool) or int(trials) != trials or trials < 1:
        msg = f"trials must be a positive integer, got {trials!r}"
        run_log.error(msg)
        raise ValueError(msg)
    if decoder not in DECODERS:
        msg = f"decoder must be one of {DECODERS}, got {decoder!r}"
        run_log.error(msg)
        raise ValueError(msg)
    points = [(L, p_index, p) for L in sizes for p_index, p in enumerate(p_grid)]
    tasks = [
        (int(L), float(p), p_index, int(seed), start, min(start + chunk, trials), decoder)
        for L, p_index, p in points
        for start in range(0, trials, chunk)
    ]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            counts = list(pool.map(_count_failures, tasks))
    else:
        counts = [_count_failures(task) for task in tasks]
    failures: Dict[Tuple[int, int], int] = {}
    for task, count in zip(tasks, counts):
        key = (task[0], task[2])
        failures[key] = failures.get(key, 0) + count
    rows = []
    for L, p_index, p in points:
        k = failures[(int(L), p_index)]
        low, high = wilson_interval(k, trials)
        rows.append([int(L), float(p), int(trials), int(k), k / trials, low, high])
        run_log.info(f"L={L} p={p:.6g}: {k}/{trials} failures")
    return pd.DataFrame(rows, columns=SCAN_COLUMNS)


def _rates(scan: pd.DataFrame) -> Tuple[List[int], np.ndarray, np.ndarray, np.ndarray]:
    sizes = sorted(scan["L"].unique().tolist())
    p_grid = np.sort(scan["p"].unique())
    table = scan.pivot(index="L", columns="p", values="failures").loc[sizes, p_grid]
    trials = scan.pivot(index="L", columns="p", values="trials").loc[sizes, p_grid]
    return sizes, p_grid, table.to_numpy(dtype=float), trials.to_numpy(dtype=float)


def curve_crossing(p_grid: np.ndarray, small: np.ndarray, large: np.ndarray) -> Optional[float]:
    """First crossing of two failure curves by linear interpolation.

    The crossing is where the larger lattice stops failing less than
    the smaller one.

    Returns
    -------
    float or None
        None when the difference never changes sign upwards.
    """
    difference = large - small
    for i in range(len(p_grid) - 1):
        d0, d1 = difference[i], difference[i + 1]
        if d0 <= 0 < d1:
            return float(p_grid[i] + (p_grid[i + 1] - p_grid[i]) * (-d0) / (d1 - d0))
    return None


def _pair_crossings(p_grid: np.ndarray, rates: np.ndarray) -> Dict[Tuple[int, int], float]:
    crossings = {}
    for a, b in itertools.combinations(range(rates.shape[0]), 2):
        crossing = curve_crossing(p_grid, rates[a], rates[b])
        if crossing is not None:
            crossings[(a, b)] = crossing
    return crossings


def _direction(rates: np.ndarray) -> str:
    difference = rates[1:] - rates[:-1]
    if np.all(difference <= 0):
        return "above"
    if np.all(difference >= 0):
        return "below"
    return "mixed"


def crossing_estimate(
    scan: pd.DataFrame, bootstrap: int = 1000, seed: int = 0
) -> Tuple[float, Tuple[float, float], Dict[str, float]]:
    """The threshold from pairwise curve crossings.

    Crossings are combined with inverse variance weights whose
    variances come from a parametric bootstrap of the binomial counts;
    the confidence interval is the 2.5 and 97.5 percentiles of the
    bootstrapped weighted crossing.

    Parameters
    ----------
    scan : pd.DataFrame
        Failure counts as produced by run_scan.
    bootstrap : int, optional
        Number of replicates, by default 1000.
    seed : int, optional
        Key of the bootstrap stream.

    Returns
    -------
    p_star : float
        The weighted crossing.
    confidence_interval : tuple
        (low, high) with low <= p_star <= high.
    crossings : dict
        The crossing of each pair of sizes, keyed 'La-Lb'.

    Raises
    ------
    NoCrossingError
        If no pair of curves crosses on the grid.
    """
    sizes, p_grid, failures, trials = _rates(scan)
    if len(sizes) < 2 or len(p_grid) < 3:
        msg = f"a threshold needs at least 2 sizes and 3 grid points, got {sizes} and {len(p_grid)}"
        run_log.error(msg)
        raise ValueError(msg)
    rates = failures / trials
    observed = _pair_crossings(p_grid, rates)
    if not observed:
        direction = _direction(rates)
        msg = (
            f"no crossing of the failure curves on p in [{p_grid[0]}, {p_grid[-1]}], "
            f"threshold lies {direction} the grid"
        )
        run_log.error(msg)
        raise NoCrossingError(msg, direction, scan)
    rng = make_rng(np.random.SeedSequence([seed, BOOTSTRAP_STREAM]))
    replicates: List[Dict[Tuple[int, int], float]] = []
    for _ in range(bootstrap):
        resampled = rng.binomial(trials.astype(np.int64), rates) / trials
        replicates.append(_pair_crossings(p_grid, resampled))
    weights = {}
    for pair in observed:
        values = [rep[pair] for rep in replicates if pair in rep]
        variance = float(np.var(values)) if len(values) > 1 else 0.0
        weights[pair] = 1.0 / max(variance, 1e-12)
    total = sum(weights.values())
    p_star = sum(weights[pair] * observed[pair] for pair in observed) / total
    combined = []
    for rep in replicates:
        present = [pair for pair in observed if pair in rep]
        if present:
            norm = sum(weights[pair] for pair in present)
            combined.append(sum(weights[pair] * rep[pair] for pair in present) / norm)
    if combined:
        low, high = np.percentile(combined, [2.5, 97.5])
    else:
        low = high = p_star
    low, high = min(float(low), p_star), max(float(high), p_star)
    named = {f"{sizes[a]}-{sizes[b]}": value for (a, b), value in sorted(observed.items())}
    return p_star, (low, high), named


def _check_extremes(scan: pd.DataFrame):
    sizes, p_grid, failures, trials = _rates(scan)
    rates = failures / trials
    if np.any(np.diff(rates[:, 0]) > 0):
        run_log.warning(f"failure rate grows with L at the lowest p={p_grid[0]}")
    if np.any(np.diff(rates[:, -1]) < 0):
        run_log.warning(f"failure rate falls with L at the highest p={p_grid[-1]}")


class ThresholdEstimate(BaseClass):
    """The threshold found by a Monte Carlo scan.

    Attributes
    ----------
    p_star : float
        Weighted crossing probability.
    confidence_interval : tuple
        95% bootstrap interval, low <= p_star <= high.
    sizes : list
        Lattice sizes.
    trials_per_point : int
        Trials at each (L, p).
    decoder : str
        Matching backend.
    crossings : dict
        Crossing of each pair of sizes.
    T_star_over_delta : float or None
        Threshold temperature once inverted.
    scan : pd.DataFrame
        The failure counts.
    """

    def __init__(
        self,
        p_star: float,
        confidence_interval: Tuple[float, float],
        sizes: Sequence[int],
        trials_per_point: int,
        decoder: str,
        crossings: Dict[str, float],
        scan: pd.DataFrame,
        T_star_over_delta: Optional[float] = None,
    ):
        self.p_star = p_star
        self.confidence_interval = tuple(confidence_interval)
        self.sizes = list(sizes)
        self.trials_per_point = trials_per_point
        self.decoder = decoder
        self.crossings = crossings
        self.T_star_over_delta = T_star_over_delta
        self._scan = scan

    @property
    def scan(self) -> pd.DataFrame:
        return self._scan


def estimate_threshold(
    sizes: Sequence[int],
    p_grid: Sequence[float],
    trials: int,
    seed: int,
    decoder: str = "pymatching",
    threads: int = 1,
    bootstrap: int = 1000,
) -> ThresholdEstimate:
    """Runs the Monte Carlo scan and locates the crossing.

    Parameters
    ----------
    sizes : Sequence[int]
        At least two lattice sizes.
    p_grid : Sequence[float]
        At least three error probabilities straddling the crossing.
    trials : int
        Trials per point, at least 1.
    seed : int
        Master seed.
    decoder : str, optional
        Matching backend, by default 'pymatching'.
    threads : int, optional
        Worker processes, by default 1.
    bootstrap : int, optional
        Bootstrap replicates, by default 1000.

    Returns
    -------
    ThresholdEstimate
        With the scan attached.

    Raises
    ------
    NoCrossingError
        If no pair of curves crosses on the grid.
    """
    if len(sizes) < 2 or len(p_grid) < 3:
        msg = f"a threshold needs at least 2 sizes and 3 grid points, got {list(sizes)} and {list(p_grid)}"
        run_log.error(msg)
        raise ValueError(msg)
    scan = run_scan(sizes, p_grid, trials, seed, decoder, threads)
    _check_extremes(scan)
    p_star, interval, crossings = crossing_estimate(scan, bootstrap, seed)
    run_log.info(
        f"threshold p*={p_star:.6g} in [{interval[0]:.6g}, {interval[1]:.6g}] "
        f"from crossings {crossings}"
    )
    return ThresholdEstimate(p_star, interval, sizes, trials, decoder, crossings, scan)


def effective_probability(cell: UnitCell, T_over_delta: float, n_cor: int) -> float:
    """p_eff of map_noise at a temperature, 1 where no decodable regime
    exists."""
    try:
        return _noise_params(q_of_temperature(cell, T_over_delta), n_cor).p_eff
    except ValueError:
        return 1.0


def threshold_temperature(cell: UnitCell, p_star: float, n_cor: int = 2) -> float:
    """Inverts p_eff(T) = p_star by bisection on T/delta.

    Parameters
    ----------
    cell : UnitCell
        The unit cell.
    p_star : float
        Threshold probability in (0, 0.1).
    n_cor : int, optional
        Correlated contributions per qubit, by default 2.

    Returns
    -------
    float
        T*/delta with |p_eff(T*) - p_star| <= 1e-10.

    Raises
    ------
    BracketError
        If p_star is out of range, p_eff is not monotone on the bracket
        or the bracket does not contain the root.
    """
    if not 0 < p_star < 0.1:
        msg = f"threshold probability must lie in (0, 0.1), got {p_star}"
        run_log.error(msg)
        raise BracketError(msg)
    low, high = T_BRACKET
    samples = [
        effective_probability(cell, t, n_cor)
        for t in np.linspace(low, high, MONOTONE_SAMPLES)
    ]
    if np.any(np.diff(samples) < -1e-15):
        msg = f"p_eff is not monotone in T on [{low}, {high}] for n_cor={n_cor}"
        run_log.error(msg)
        raise BracketError(msg)
    if not samples[0] < p_star < samples[-1]:
        msg = (
            f"p_star={p_star} is not bracketed by p_eff in "
            f"[{samples[0]:.3g}, {samples[-1]:.3g}] on T/delta in [{low}, {high}]"
        )
        run_log.error(msg)
        raise BracketError(msg)
    root = optimize.bisect(
        lambda t: effective_probability(cell, t, n_cor) - p_star,
        low,
        high,
        xtol=1e-15,
        rtol=4 * np.finfo(float).eps,
        maxiter=200,
    )
    residual = abs(effective_probability(cell, root, n_cor) - p_star)
    if residual > BISECTION_RESIDUAL:
        msg = f"bisection residual {residual:.3e} exceeds {BISECTION_RESIDUAL}"
        run_log.error(msg)
        raise BracketError(msg)
    run_log.info(f"T*/delta={root:.6g} for p*={p_star:.6g}, n_cor={n_cor}")
    return float(root)


def n_cor_sensitivity(
    cell: UnitCell, p_star: float, n_cor_values: Sequence[int] = range(5)
) -> Dict[int, Optional[float]]:
    """T*/delta for several correlated multiplicities, None where the
    inversion fails."""
    table: Dict[int, Optional[float]] = {}
    for n_cor in n_cor_values:
        try:
            table[int(n_cor)] = threshold_temperature(cell, p_star, int(n_cor))
        except BracketError:
            table[int(n_cor)] = None
    return table
