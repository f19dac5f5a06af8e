"""Mean-shift iteration engine.

Two update rules over a weighted point cloud, both driven by a radial
influence kernel:

* blurring: every point is replaced by the influence-weighted average of the
  current cloud, all points updated synchronously from the same snapshot;
* nonblurring: a set of centers is repeatedly averaged against a fixed
  reference cloud, which never moves.

Updates are dense: every pair is evaluated exactly, no neighbor pruning. At
desk scale the full influence matrix is materialized; above a size threshold
the same sums are accumulated over cache-sized tiles with a fixed traversal
order, so results do not depend on problem size thresholds beyond float
rounding and never depend on scheduling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .kernels import GaussianKernel, Kernel

__all__ = [
    "PointSet",
    "RunConfig",
    "TraceRecord",
    "IterationTrace",
    "ClusterResult",
    "IsolatedCenterError",
    "blurring_step",
    "nonblurring_step",
    "run",
    "extract_clusters",
    "majority_mode",
    "DEFAULT_STOP_DISPLACEMENT",
    "DEFAULT_MAX_ITERATIONS",
    "DEFAULT_MERGE_TOLERANCE",
]

DEFAULT_STOP_DISPLACEMENT = 1e-10
DEFAULT_MAX_ITERATIONS = 500
DEFAULT_MERGE_TOLERANCE = 1e-6

# full influence matrix below this many points, tiled accumulation above
_DENSE_LIMIT = 3000
_TILE_ROWS = 128
_TILE_COLS = 2048
# largest exponent the factorized Gaussian tile path may produce
_EXP_ARG_LIMIT = 700.0


class IsolatedCenterError(RuntimeError):
    """A nonblurring center fell outside the support of every data point."""

    def __init__(self, center_index: int):
        self.center_index = int(center_index)
        super().__init__(
            f"center {center_index} has zero total influence from the data; "
            "it is beyond the kernel support of every point"
        )


@dataclass
class PointSet:
    """Weighted points: positions (n, p), strictly positive weights (n,).

    A 1-d positions array of length n is accepted and treated as (n, 1).
    Weights default to 1.
    """

    positions: np.ndarray
    weights: Optional[np.ndarray] = None

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float)
        if pos.ndim == 1:
            pos = pos[:, None]
        if pos.ndim != 2 or pos.shape[0] < 1 or pos.shape[1] < 1:
            raise ValueError("positions must be a nonempty (n, p) array")
        if not np.all(np.isfinite(pos)):
            raise ValueError("positions must be finite")
        if self.weights is None:
            w = np.ones(pos.shape[0])
        else:
            w = np.asarray(self.weights, dtype=float)
            if w.shape != (pos.shape[0],):
                raise ValueError("weights must be a length-n vector")
            if not np.all(np.isfinite(w)) or np.any(w <= 0):
                raise ValueError("weights must be finite and strictly positive")
        self.positions = pos
        self.weights = w

    @property
    def n(self) -> int:
        return self.positions.shape[0]

    @property
    def dimension(self) -> int:
        return self.positions.shape[1]


@dataclass
class RunConfig:
    """Iteration settings.

    mode: "blurring" or "nonblurring".
    stop_displacement: declare convergence once the largest per-point move in
        one iteration falls below this.
    trace_level: "none" records nothing, "summary" records displacement,
        radius and per-dimension std per iteration, "full" adds positions.
    """

    kernel: Kernel
    mode: str = "blurring"
    stop_displacement: float = DEFAULT_STOP_DISPLACEMENT
    max_iterations: int = DEFAULT_MAX_ITERATIONS
    trace_level: str = "summary"

    def __post_init__(self):
        if self.mode not in ("blurring", "nonblurring"):
            raise ValueError(f"unknown mode: {self.mode!r}")
        if self.trace_level not in ("none", "summary", "full"):
            raise ValueError(f"unknown trace_level: {self.trace_level!r}")
        if not self.stop_displacement > 0:
            raise ValueError("stop_displacement must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if not isinstance(self.kernel, Kernel):
            raise ValueError("kernel must be a Kernel instance")


@dataclass
class TraceRecord:
    iteration: int
    max_displacement: float  # nan on the initial snapshot
    radius: float  # largest pairwise distance
    stds: np.ndarray  # per-dimension sample std, length p
    positions: Optional[np.ndarray] = None


@dataclass
class IterationTrace:
    records: list
    trace_level: str
    converged: bool = False
    iterations: int = 0

    def radii(self) -> np.ndarray:
        return np.array([r.radius for r in self.records])

    def max_displacements(self) -> np.ndarray:
        return np.array([r.max_displacement for r in self.records])

    def stds(self) -> np.ndarray:
        return np.array([r.stds for r in self.records])

    def positions_list(self) -> list:
        if self.trace_level != "full":
            raise ValueError("positions are only recorded at trace_level='full'")
        return [r.positions for r in self.records]

    @property
    def dimension(self) -> int:
        if not self.records:
            raise ValueError("trace has no records")
        return len(self.records[0].stds)


@dataclass
class ClusterResult:
    labels: np.ndarray  # (n,) cluster index per point, 0-based
    centers: np.ndarray  # (k, p) weighted mean of each cluster
    sizes: np.ndarray  # (k,) member counts
    converged: bool
    iterations_used: int

    @property
    def n_clusters(self) -> int:
        return len(self.sizes)


def _sq_dists(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Squared euclidean distances, (len(a), len(b)). Expanded form."""
    aa = np.einsum("ij,ij->i", a, a)
    bb = np.einsum("ij,ij->i", b, b)
    s = aa[:, None] + bb[None, :] - 2.0 * (a @ b.T)
    np.maximum(s, 0.0, out=s)
    return s


def _weighted_average(F: np.ndarray, x: np.ndarray, w: np.ndarray):
    num = F @ (w[:, None] * x)
    den = F @ w
    return num, den


def _blurring_dense(x: np.ndarray, w: np.ndarray, kernel: Kernel) -> np.ndarray:
    s = _sq_dists(x, x)
    np.fill_diagonal(s, 0.0)  # keep the self term at exactly f(0) = 1
    F = kernel.evaluate_sq(s)
    num, den = _weighted_average(F, x, w)
    return num / den[:, None]


def _blurring_tiled_gaussian(x: np.ndarray, w: np.ndarray, tau: float) -> np.ndarray:
    """Blurring step for an untruncated Gaussian kernel, accumulated over
    symmetric tiles via exp(-|ui-uj|^2) = e^{-|ui|^2} e^{-|uj|^2} e^{2 ui.uj}.

    Equals the dense path up to a few ulps while touching each pair once and
    keeping every intermediate inside the cache.
    """
    n, p = x.shape
    u = x / (math.sqrt(2.0) * tau)
    a = np.exp(-np.einsum("ij,ij->i", u, u))
    V = np.empty((n, p + 1))
    V[:, :p] = (a * w)[:, None] * x
    V[:, p] = a * w
    acc = np.zeros((n, p + 1))
    u2 = 2.0 * u
    buf = np.empty((_TILE_ROWS, max(_TILE_ROWS, _TILE_COLS)))
    for i0 in range(0, n, _TILE_ROWS):
        i1 = min(i0 + _TILE_ROWS, n)
        ui = u[i0:i1]
        z = buf[: i1 - i0, : i1 - i0]
        np.matmul(ui, u2[i0:i1].T, out=z)
        np.exp(z, out=z)
        acc[i0:i1] += z @ V[i0:i1]
        for j0 in range(i1, n, _TILE_COLS):
            j1 = min(j0 + _TILE_COLS, n)
            z = buf[: i1 - i0, : j1 - j0]
            np.matmul(ui, u2[j0:j1].T, out=z)
            np.exp(z, out=z)
            acc[i0:i1] += z @ V[j0:j1]
            acc[j0:j1] += z.T @ V[i0:i1]
    num = acc[:, :p] * a[:, None]
    den = acc[:, p] * a
    return num / den[:, None]


def _reduce_tiled_generic(
    targets: np.ndarray, x: np.ndarray, w: np.ndarray, kernel: Kernel, self_pairs: bool
):
    """Influence-weighted sums of rows of (w, w*x) at each target, row-tiled.

    With self_pairs=True, targets are assumed to be x itself and the
    diagonal squared distance is pinned to exactly 0.
    """
    n, p = x.shape
    m = targets.shape[0]
    rows = max(1, int(20_000_000 // max(n, 1)))
    num = np.empty((m, p))
    den = np.empty(m)
    wx = w[:, None] * x
    for i0 in range(0, m, rows):
        i1 = min(i0 + rows, m)
        s = _sq_dists(targets[i0:i1], x)
        if self_pairs:
            s[np.arange(i1 - i0), np.arange(i0, i1)] = 0.0
        F = kernel.evaluate_sq(s)
        num[i0:i1] = F @ wx
        den[i0:i1] = F @ w
    return num, den


def blurring_step(points: PointSet, kernel: Kernel) -> PointSet:
    """One synchronous blurring update of the whole cloud.

    Every point moves to the influence-weighted average of the current
    cloud; all updates read the same snapshot. The self term enters with
    influence exactly 1, so denominators are always positive.
    """
    x, w = points.positions, points.weights
    n = x.shape[0]
    if n <= _DENSE_LIMIT:
        return PointSet(_blurring_dense(x, w, kernel), w.copy())
    if isinstance(kernel, GaussianKernel) and not math.isfinite(kernel.support_radius):
        # The update commutes with translation, so center first: the factored
        # cross term e^{2 ui.uj} then stays within exp range whenever
        # max |x - mean|^2 / tau^2 is moderate, which covers any cloud whose
        # spread is within ~26 tau of its mean.
        mu = x.mean(axis=0)
        xc = x - mu
        if float(np.max(np.einsum("ij,ij->i", xc, xc))) < _EXP_ARG_LIMIT * kernel.tau**2:
            return PointSet(
                _blurring_tiled_gaussian(xc, w, kernel.tau) + mu, w.copy()
            )
    num, den = _reduce_tiled_generic(x, x, w, kernel, self_pairs=True)
    return PointSet(num / den[:, None], w.copy())


def nonblurring_step(centers: np.ndarray, data: PointSet, kernel: Kernel) -> np.ndarray:
    """One update of ``centers`` against the fixed ``data`` cloud.

    Raises IsolatedCenterError if some center collects zero influence from
    every data point (possible under a truncated kernel).
    """
    c = np.asarray(centers, dtype=float)
    if c.ndim == 1:
        c = c[:, None]
    if c.shape[1] != data.dimension:
        raise ValueError("centers and data must share a dimension")
    x, w = data.positions, data.weights
    if c.shape[0] * x.shape[0] <= _DENSE_LIMIT * _DENSE_LIMIT:
        F = kernel.evaluate_sq(_sq_dists(c, x))
        num, den = _weighted_average(F, x, w)
    else:
        num, den = _reduce_tiled_generic(c, x, w, kernel, self_pairs=False)
    zero = np.flatnonzero(den == 0.0)
    if zero.size:
        raise IsolatedCenterError(int(zero[0]))
    return num / den[:, None]


def _max_pairwise_distance(x: np.ndarray) -> float:
    n = x.shape[0]
    if n < 2:
        return 0.0
    # Distances are shift-invariant; centering first keeps the factorized
    # form's cancellation error at eps * extent^2 instead of eps * |x|^2,
    # so the reported diameter stays accurate once the cloud has collapsed
    # far from the origin.
    xc = x - x.mean(axis=0)
    if n <= 4000:
        return float(np.sqrt(np.max(_sq_dists(xc, xc))))
    best = 0.0
    rows = max(1, int(20_000_000 // n))
    for i0 in range(0, n, rows):
        best = max(best, float(np.max(_sq_dists(xc[i0 : i0 + rows], xc))))
    return math.sqrt(best)


def _cloud_stds(x: np.ndarray) -> np.ndarray:
    if x.shape[0] < 2:
        return np.zeros(x.shape[1])
    return x.std(axis=0, ddof=1)


def run(points: PointSet, config: RunConfig, data: Optional[PointSet] = None):
    """Iterate until the largest per-point displacement drops below
    ``config.stop_displacement`` or ``config.max_iterations`` is exhausted.

    Blurring mode iterates ``points`` as the moving cloud. Nonblurring mode
    treats ``points`` as the initial centers and averages them against
    ``data`` (defaulting to the same cloud, centers start on the data).

    Returns (final PointSet, IterationTrace). Exhausting the iteration
    budget is not an error; the trace's ``converged`` flag reports it.
    """
    if config.mode == "blurring":
        if data is not None:
            raise ValueError("blurring mode does not take separate data")
        fixed = None
    else:
        fixed = data if data is not None else points
    x = points.positions.copy()
    w = points.weights.copy()
    tracing = config.trace_level != "none"
    full = config.trace_level == "full"
    records = []
    if tracing:
        records.append(
            TraceRecord(
                iteration=0,
                max_displacement=math.nan,
                radius=_max_pairwise_distance(x),
                stds=_cloud_stds(x),
                positions=x.copy() if full else None,
            )
        )
    converged = False
    iterations = 0
    for t in range(1, config.max_iterations + 1):
        if config.mode == "blurring":
            new_x = blurring_step(PointSet(x, w), config.kernel).positions
        else:
            new_x = nonblurring_step(x, fixed, config.kernel)
        disp = float(np.sqrt(np.max(np.einsum("ij,ij->i", new_x - x, new_x - x))))
        x = new_x
        iterations = t
        if tracing:
            records.append(
                TraceRecord(
                    iteration=t,
                    max_displacement=disp,
                    radius=_max_pairwise_distance(x),
                    stds=_cloud_stds(x),
                    positions=x.copy() if full else None,
                )
            )
        if disp < config.stop_displacement:
            converged = True
            break
    trace = IterationTrace(
        records=records,
        trace_level=config.trace_level,
        converged=converged,
        iterations=iterations,
    )
    return PointSet(x, w), trace


def _component_labels(x: np.ndarray, tol: float) -> np.ndarray:
    """Connected components of the 'within tol of each other' graph
    (single linkage), labeled in order of each component's first point."""
    n = x.shape[0]
    tol_sq = tol * tol
    labels = np.full(n, -1, dtype=int)
    if n <= _DENSE_LIMIT:
        adj = _sq_dists(x, x) <= tol_sq
        k = 0
        for seed in range(n):
            if labels[seed] >= 0:
                continue
            member = np.zeros(n, dtype=bool)
            frontier = np.zeros(n, dtype=bool)
            frontier[seed] = True
            while frontier.any():
                member |= frontier
                frontier = adj[frontier].any(axis=0) & ~member
            labels[member] = k
            k += 1
        return labels
    k = 0
    for seed in range(n):
        if labels[seed] >= 0:
            continue
        member = np.zeros(n, dtype=bool)
        frontier = np.zeros(n, dtype=bool)
        frontier[seed] = True
        while frontier.any():
            member |= frontier
            reach = _sq_dists(x[frontier], x).min(axis=0) <= tol_sq
            frontier = reach & ~member
        labels[member] = k
        k += 1
    return labels


def extract_clusters(
    final: PointSet,
    merge_tolerance: float = DEFAULT_MERGE_TOLERANCE,
    converged: bool = True,
    iterations_used: int = 0,
) -> ClusterResult:
    """Group the final positions by single linkage at ``merge_tolerance``.

    Two points share a cluster when a chain of pairwise-close points links
    them. Cluster labels follow the first member's index, so label 0 always
    contains point 0. Centers are weight-averaged member positions.
    """
    if not merge_tolerance >= 0:
        raise ValueError("merge_tolerance must be nonnegative")
    x, w = final.positions, final.weights
    labels = _component_labels(x, merge_tolerance)
    k = int(labels.max()) + 1
    centers = np.empty((k, x.shape[1]))
    sizes = np.empty(k, dtype=int)
    for c in range(k):
        m = labels == c
        wc = w[m]
        centers[c] = (wc[:, None] * x[m]).sum(axis=0) / wc.sum()
        sizes[c] = int(m.sum())
    return ClusterResult(
        labels=labels,
        centers=centers,
        sizes=sizes,
        converged=converged,
        iterations_used=iterations_used,
    )


def majority_mode(result: ClusterResult) -> np.ndarray:
    """Center of the most populated cluster; ties go to the lowest label."""
    return result.centers[int(np.argmax(result.sizes))].copy()
