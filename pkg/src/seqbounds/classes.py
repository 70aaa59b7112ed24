"""Hypothesis-class descriptors and their capacity quantities.

Growth functions for enumerable classes, the Sauer cap, the empirical
L2 pseudo-metric, and covering numbers of finite evaluated function sets
(greedy estimator plus an exhaustive reference search for small sets).
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

KINDS = ("finite", "threshold1d", "linear_ball", "kernel_ball", "codebook")


class UnsupportedClassError(ValueError):
    """The operation does not support this class kind."""


@dataclass(frozen=True)
class FunctionClassDescriptor:
    """A hypothesis class with its capacity metadata.

    Only the fields relevant to ``kind`` are set; use the module-level
    constructors (``finite_class``, ``threshold_class``, ...) rather than
    building instances by hand.
    """

    kind: str
    functions: tuple = None        # finite: callables on the evaluation grid
    dim: int = None                # linear_ball: input dimension
    radius: float = None           # linear_ball / kernel_ball / codebook ball
    with_offset: bool = False      # linear_ball: include an intercept term
    bandwidth: float = None        # kernel_ball: gaussian kernel width
    n_codepoints: int = None       # codebook: number of codepoints
    vc_dim: int = None
    output_range: tuple = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise UnsupportedClassError(f"unknown class kind {self.kind!r}")
        if self.kind == "finite":
            if not self.functions:
                raise ValueError("finite class needs at least one function")
        elif self.kind == "threshold1d":
            object.__setattr__(self, "vc_dim", 1)
        elif self.kind == "linear_ball":
            if self.dim is None or self.dim < 1:
                raise ValueError("linear_ball needs dim >= 1")
            if self.radius is None or self.radius <= 0:
                raise ValueError("linear_ball needs radius > 0")
            object.__setattr__(
                self, "vc_dim", self.dim + 1 if self.with_offset else self.dim
            )
        elif self.kind == "kernel_ball":
            if self.radius is None or self.radius <= 0:
                raise ValueError("kernel_ball needs radius > 0")
            if self.bandwidth is None or self.bandwidth <= 0:
                raise ValueError("kernel_ball needs bandwidth > 0")
        elif self.kind == "codebook":
            if self.n_codepoints is None or self.n_codepoints < 1:
                raise ValueError("codebook needs n_codepoints >= 1")
            if self.radius is None or self.radius <= 0:
                raise ValueError("codebook needs radius > 0")


def finite_class(functions, vc_dim=None, output_range=None):
    return FunctionClassDescriptor(
        kind="finite", functions=tuple(functions), vc_dim=vc_dim,
        output_range=output_range,
    )


def threshold_class():
    """1-D thresholds x -> sign(x - b) with sign(0) = +1 (fixed orientation)."""
    return FunctionClassDescriptor(kind="threshold1d", output_range=(-1.0, 1.0))


def linear_ball_class(dim, radius, with_offset=False):
    return FunctionClassDescriptor(
        kind="linear_ball", dim=dim, radius=float(radius), with_offset=with_offset
    )


def kernel_ball_class(radius, bandwidth=1.0):
    return FunctionClassDescriptor(
        kind="kernel_ball", radius=float(radius), bandwidth=float(bandwidth)
    )


def codebook_class(n_codepoints, radius):
    return FunctionClassDescriptor(
        kind="codebook", n_codepoints=int(n_codepoints), radius=float(radius)
    )


def threshold_dichotomies(points):
    """All labelings sign(x - b) realized on ``points``.

    Returns ``(thresholds, labels)`` where row k of ``labels`` is the
    labeling produced by the k-th canonical threshold.  Canonical
    thresholds are one below the minimum, the midpoints between
    consecutive sorted points, and one above the maximum (n+1 in total
    for distinct points).
    """
    pts = np.asarray(points, dtype=float).ravel()
    if pts.size == 0:
        raise ValueError("need at least one point")
    srt = np.sort(pts)
    mids = (srt[:-1] + srt[1:]) / 2.0
    thresholds = np.concatenate(([srt[0] - 1.0], mids, [srt[-1] + 1.0]))
    labels = np.where(pts[None, :] >= thresholds[:, None], 1.0, -1.0)
    return thresholds, labels


def growth_function_exact(cls: FunctionClassDescriptor, points) -> int:
    """Exact number of distinct label vectors the class realizes on ``points``.

    Only enumerable kinds (finite, threshold1d) are supported.
    """
    if cls.kind == "threshold1d":
        pts = np.asarray(points, dtype=float).ravel()
        if np.unique(pts).size != pts.size:
            raise ValueError("threshold1d growth needs pairwise distinct points")
        _, labels = threshold_dichotomies(pts)
        return len({tuple(row) for row in labels})
    if cls.kind == "finite":
        rows = set()
        for f in cls.functions:
            rows.add(tuple(float(f(p)) for p in points))
        return len(rows)
    raise UnsupportedClassError(
        f"growth function enumeration not available for kind {cls.kind!r}"
    )


def sauer_growth_bound(d_vc: int, n: int) -> float:
    """Growth-function cap min(2^n, (e*n/d)^d) for n >= d, and 2^n below d."""
    if d_vc < 1 or n < 1:
        raise ValueError("need d_vc >= 1 and n >= 1")
    two_n = float(2 ** n) if n < 1024 else math.inf
    if n < d_vc:
        return two_n
    try:
        poly = (math.e * n / d_vc) ** d_vc
    except OverflowError:
        poly = math.inf
    return min(two_n, poly)


@dataclass
class PseudoMetricSample:
    """Evaluation points t_1..t_n with cached function evaluations."""

    points: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float)
        if self.points.shape[0] < 1:
            raise ValueError("need at least one evaluation point")

    @property
    def n(self):
        return self.points.shape[0]

    def evaluate(self, f):
        """Vector of f over the sample points (cached per function object)."""
        key = id(f)
        if key not in self._cache:
            try:
                vals = np.asarray(f(self.points), dtype=float)
                if vals.shape != (self.n,):
                    raise ValueError
            except (TypeError, ValueError):
                vals = np.array([float(f(t)) for t in self.points])
            if not np.all(np.isfinite(vals)):
                raise ValueError("function evaluations must be finite")
            self._cache[key] = vals
        return self._cache[key]


def pseudo_metric(f, f_prime, sample: PseudoMetricSample) -> float:
    """Empirical L2 pseudo-distance sqrt(mean (f - f')^2) on the sample."""
    a = sample.evaluate(f)
    b = sample.evaluate(f_prime)
    return float(np.sqrt(np.mean((a - b) ** 2)))


def evaluation_matrix(functions, sample: PseudoMetricSample = None) -> np.ndarray:
    """Rows of function values; accepts callables, a finite descriptor,
    or an already-evaluated 2-D array."""
    if isinstance(functions, np.ndarray):
        if functions.ndim != 2:
            raise ValueError("evaluated function set must be a 2-D array")
        return np.asarray(functions, dtype=float)
    if isinstance(functions, FunctionClassDescriptor):
        if functions.kind != "finite":
            raise UnsupportedClassError("need a finite class or explicit values")
        functions = functions.functions
    if sample is None:
        raise ValueError("callables need a PseudoMetricSample to evaluate on")
    return np.vstack([sample.evaluate(f) for f in functions])


def pseudo_metric_matrix(values: np.ndarray) -> np.ndarray:
    """Pairwise empirical L2 pseudo-distances between rows of ``values``."""
    diffs = values[:, None, :] - values[None, :, :]
    return np.sqrt(np.mean(diffs ** 2, axis=2))


def _greedy_net_size(dm: np.ndarray, epsilon: float) -> int:
    """Farthest-point greedy sweep from each start; smallest net wins."""
    m = dm.shape[0]
    best = m
    for start in range(m):
        centers = 1
        covered = dm[start] < epsilon
        dmin = dm[start].copy()
        while not covered.all() and centers < best:
            cand = int(np.argmax(np.where(covered, -np.inf, dmin)))
            centers += 1
            covered |= dm[cand] < epsilon
            dmin = np.minimum(dmin, dm[cand])
        if covered.all():
            best = min(best, centers)
    return best


def _exhaustive_net_size(dm: np.ndarray, epsilon: float, cap: int = None) -> int:
    m = dm.shape[0]
    masks = []
    for c in range(m):
        mask = 0
        for j in range(m):
            if dm[c, j] < epsilon:
                mask |= 1 << j
        masks.append(mask)
    full = (1 << m) - 1
    for k in range(1, (cap or m) + 1):
        for combo in itertools.combinations(range(m), k):
            acc = 0
            for c in combo:
                acc |= masks[c]
            if acc == full:
                return k
    return m


_EXACT_CUTOFF = 12


def covering_number_greedy(functions, epsilon: float,
                           sample: PseudoMetricSample = None) -> int:
    """Size of a proper epsilon-net (a function counts as covered when its
    distance to the net is strictly below epsilon).

    Greedy farthest-point sweep (repeated from every start, smallest net
    kept), cross-checked against the exhaustive subset search for sets of
    at most 12 functions, where the returned value is exact.  Beyond that
    it is an upper bound on the true covering number, which is all the
    chaining bound needs.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be > 0")
    values = evaluation_matrix(functions, sample)
    dm = pseudo_metric_matrix(values)
    greedy = _greedy_net_size(dm, epsilon)
    if dm.shape[0] <= _EXACT_CUTOFF:
        # the greedy sweep can overshoot the optimum; small sets are cheap
        # to solve exactly with the greedy size capping the subset search
        return _exhaustive_net_size(dm, epsilon, cap=greedy)
    return greedy


def covering_number_exhaustive(functions, epsilon: float,
                               sample: PseudoMetricSample = None) -> int:
    """Minimal proper epsilon-net size by exhaustive subset search
    (limited to 16 functions)."""
    if epsilon <= 0:
        raise ValueError("epsilon must be > 0")
    values = evaluation_matrix(functions, sample)
    dm = pseudo_metric_matrix(values)
    if dm.shape[0] > 16:
        raise ValueError("exhaustive covering search is limited to 16 functions")
    return _exhaustive_net_size(dm, epsilon)


def vc_dimension_exact(cls: FunctionClassDescriptor, points) -> int:
    """Largest subset of ``points`` shattered by an enumerable class."""
    pts = list(points)
    if len(pts) > 12:
        raise ValueError("shattering enumeration is limited to 12 points")
    if cls.kind == "threshold1d":
        _, labels = threshold_dichotomies(pts)
    elif cls.kind == "finite":
        labels = np.array([[float(f(p)) for p in pts] for f in cls.functions])
    else:
        raise UnsupportedClassError(
            f"VC enumeration not available for kind {cls.kind!r}"
        )
    for k in range(len(pts), 0, -1):
        for idx in itertools.combinations(range(len(pts)), k):
            realized = {tuple(row[list(idx)]) for row in labels}
            if len(realized) == 2 ** k:
                return k
    return 0
