"""Dynamic time warping, reference selection, and warping to reference timing."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Hashable, Iterable, Optional, Sequence

import numpy as np
from numba import njit

from .errors import ConfigError, InvalidInputError, StructureError
from .motion import Frame, Trajectory, frame_distance

# Step set {(1,1), (1,0), (0,1)}; optimality is on total path cost, the
# reported distance is the mean cost along the optimal path.


@njit(cache=True, fastmath=True)
def _quat_cost(a, b):
    """Frame-pair cost matrix: sum over joints of 1 - |<q_a, q_b>|."""
    n, k, _ = a.shape
    m = b.shape[0]
    out = np.empty((n, m))
    for i in range(n):
        for j in range(m):
            s = 0.0
            for d in range(k):
                dot = (
                    a[i, d, 0] * b[j, d, 0]
                    + a[i, d, 1] * b[j, d, 1]
                    + a[i, d, 2] * b[j, d, 2]
                    + a[i, d, 3] * b[j, d, 3]
                )
                s += 1.0 - abs(dot)
            out[i, j] = s
    return out


@njit(cache=True)
def _accumulate(cost, window):
    """DP table of minimal total path cost; window < 0 disables the band."""
    n, m = cost.shape
    inf = np.inf
    acc = np.full((n, m), inf)
    slope = (m - 1.0) / (n - 1.0) if n > 1 else 0.0
    for i in range(n):
        if window < 0:
            jlo, jhi = 0, m - 1
        else:
            center = i * slope
            jlo = max(0, int(np.ceil(center - window)))
            jhi = min(m - 1, int(np.floor(center + window)))
        for j in range(jlo, jhi + 1):
            c = cost[i, j]
            if i == 0 and j == 0:
                acc[0, 0] = c
                continue
            best = inf
            if i > 0 and j > 0 and acc[i - 1, j - 1] < best:
                best = acc[i - 1, j - 1]
            if i > 0 and acc[i - 1, j] < best:
                best = acc[i - 1, j]
            if j > 0 and acc[i, j - 1] < best:
                best = acc[i, j - 1]
            if best < inf:
                acc[i, j] = c + best
    return acc


@njit(cache=True)
def _backtrack(acc):
    """Optimal path, preferring diagonal, then (i-1, j), then (i, j-1)."""
    n, m = acc.shape
    path = np.empty((n + m - 1, 2), dtype=np.int64)
    i = n - 1
    j = m - 1
    pos = n + m - 2
    path[pos, 0] = i
    path[pos, 1] = j
    while i > 0 or j > 0:
        if i == 0:
            j -= 1
        elif j == 0:
            i -= 1
        else:
            diag = acc[i - 1, j - 1]
            up = acc[i - 1, j]
            left = acc[i, j - 1]
            if diag <= up and diag <= left:
                i -= 1
                j -= 1
            elif up <= left:
                i -= 1
            else:
                j -= 1
        pos -= 1
        path[pos, 0] = i
        path[pos, 1] = j
    return path[pos:]


@dataclass(frozen=True)
class WarpPath:
    """Monotone frame correspondence from (0, 0) to (n-1, m-1)."""

    pairs: np.ndarray  # (steps, 2) int

    def __post_init__(self):
        p = np.asarray(self.pairs, dtype=np.int64)
        if p.ndim != 2 or p.shape[1] != 2 or p.shape[0] == 0:
            raise StructureError(f"path must be (steps, 2), got {p.shape}")
        steps = np.diff(p, axis=0)
        if p[0, 0] != 0 or p[0, 1] != 0:
            raise StructureError("path must start at (0, 0)")
        if steps.size and not (
            np.all(steps >= 0) and np.all(steps <= 1) and np.all(steps.sum(axis=1) >= 1)
        ):
            raise StructureError("path steps must increment i, j, or both by exactly 1")
        p.setflags(write=False)
        object.__setattr__(self, "pairs", p)

    def __len__(self) -> int:
        return self.pairs.shape[0]

    def transposed(self) -> "WarpPath":
        return WarpPath(self.pairs[:, ::-1].copy())


@dataclass(frozen=True)
class WarpResult:
    distance: float  # mean cost along the optimal path
    total_cost: float  # summed cost along the optimal path
    path: WarpPath
    warped: Optional[Trajectory] = None

    def __post_init__(self):
        if self.distance < 0:
            raise InvalidInputError("distance must be non-negative")


def _cost_matrix(a, b, dist):
    if dist is None or dist is frame_distance:
        if isinstance(a, Trajectory) and isinstance(b, Trajectory):
            if a.n_joints != b.n_joints:
                raise StructureError("trajectories have different joint counts")
            return _quat_cost(a.rotations, b.rotations)
        if dist is None:
            raise InvalidInputError("a frame distance function is required for non-trajectory input")
    sa = a.frames() if isinstance(a, Trajectory) else list(a)
    sb = b.frames() if isinstance(b, Trajectory) else list(b)
    cost = np.empty((len(sa), len(sb)))
    for i, fa in enumerate(sa):
        for j, fb in enumerate(sb):
            cost[i, j] = dist(fa, fb)
    return cost


def _length(x) -> int:
    return x.n_frames if isinstance(x, Trajectory) else len(x)


def dtw(a, b, dist: Optional[Callable] = None, window: Optional[int] = None) -> WarpResult:
    """Align two trajectories (or generic sequences with a custom distance).

    Returns the optimal monotone path under the step set {(1,0),(0,1),(1,1)},
    the total cost along it, and the mean cost as the DTW distance. ``window``
    optionally restricts the search to a band around the diagonal (off by
    default).
    """
    if _length(a) == 0 or _length(b) == 0:
        raise InvalidInputError("cannot align an empty trajectory")
    if window is not None and window < 0:
        raise ConfigError("window must be None or >= 0")
    cost = _cost_matrix(a, b, dist)
    if not np.all(np.isfinite(cost)):
        raise InvalidInputError("frame distances must be finite")
    acc = _accumulate(cost, -1 if window is None else int(window))
    total = float(acc[-1, -1])
    if not np.isfinite(total):
        raise ConfigError(f"warping window {window} leaves no feasible path")
    path = WarpPath(_backtrack(acc))
    return WarpResult(distance=total / len(path), total_cost=total, path=path)


def select_reference(
    corpus: Sequence[Trajectory], segments: Sequence[Iterable[Hashable]]
) -> Trajectory:
    """Longest trajectory containing every movement segment seen in the corpus.

    Ties are broken by the lexicographically smallest (subject_id, sample_id).
    """
    if not corpus:
        raise InvalidInputError("corpus is empty")
    if len(segments) != len(corpus):
        raise StructureError("one segment label set per trajectory is required")
    label_sets = [frozenset(s) for s in segments]
    required = frozenset().union(*label_sets)
    candidates = [
        (t, labels) for t, labels in zip(corpus, label_sets) if labels >= required
    ]
    if not candidates:
        raise ConfigError("no trajectory contains all movement segments")
    return min(candidates, key=lambda tl: (-tl[0].n_frames, tl[0].subject_id, tl[0].sample_id))[0]


def warp_to_reference(t: Trajectory, reference: Trajectory) -> Trajectory:
    """Resample ``t`` onto the reference timeline via the DTW correspondence.

    Output frame r is the frame of ``t`` paired with reference frame r; when
    several frames of ``t`` map to one reference frame, the one with minimal
    local cost wins (ties: smallest index).
    """
    if t.n_frames == 0 or reference.n_frames == 0:
        raise InvalidInputError("cannot warp an empty trajectory")
    cost = _cost_matrix(reference, t, None)
    acc = _accumulate(cost, -1)
    pairs = _backtrack(acc)
    n_ref = reference.n_frames
    sel = np.empty(n_ref, dtype=np.int64)
    best = np.full(n_ref, np.inf)
    for i, j in pairs:
        c = cost[i, j]
        if c < best[i]:
            best[i] = c
            sel[i] = j
    return Trajectory(
        t.rotations[sel],
        t.positions[sel],
        reference.sample_rate,
        t.subject_id,
        t.sample_id,
        t.skeleton,
    )


def framewise_distance(a: Trajectory, b: Trajectory) -> float:
    """Mean over frames of the per-frame rotation distance (already warped inputs)."""
    if a.n_frames != b.n_frames:
        raise InvalidInputError(f"length mismatch: {a.n_frames} vs {b.n_frames}")
    if a.n_joints != b.n_joints:
        raise StructureError("trajectories have different joint counts")
    dots = np.abs(np.einsum("tkc,tkc->tk", a.rotations, b.rotations))
    return float(np.mean(np.sum(1.0 - dots, axis=1)))
