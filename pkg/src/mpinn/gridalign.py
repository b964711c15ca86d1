"""Scattered-data transfer of a field from one node set onto another.

Two methods: nearest neighbor (piecewise constant) and inverse-distance
weighting over the k nearest sources.  Lookups run through a 2-d k-d
tree whose results are, by construction, identical to a brute-force
scan: distances are compared as (squared_distance, source_index) pairs,
so equidistant ties always resolve to the lowest source index.
"""

from bisect import insort
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .fieldio import FieldDataset, FidelityPair, find_duplicate_nodes

# Targets at most this far from a source node take its value exactly.
EXACT_HIT_DISTANCE = 1e-12


@dataclass(frozen=True)
class Nearest:
    """Each target takes the value of its nearest source node."""

    def describe(self):
        return {"method": "nearest"}


@dataclass(frozen=True)
class Idw:
    """Inverse-distance weighting, w_i = d_i**(-power), over k neighbors."""

    power: float = 2.0
    k: int = 8

    def __post_init__(self):
        if not self.power > 0:
            raise ValidationError(f"idw power must be > 0, got {self.power}")
        if self.k < 1:
            raise ValidationError(f"idw k must be >= 1, got {self.k}")

    def describe(self):
        return {"method": "idw", "power": self.power, "k": self.k}


InterpMethod = Nearest | Idw


def _check_targets(targets):
    targets = np.asarray(targets, dtype=np.float64)
    if targets.size == 0:
        return targets.reshape(0, 2)
    if targets.ndim != 2 or targets.shape[1] != 2:
        raise ValidationError(f"targets must have shape (m, 2), got {targets.shape}")
    if not np.isfinite(targets).all():
        raise ValidationError("targets contain non-finite coordinates")
    return targets


class SpatialIndex:
    """k-d tree over 2-d nodes with deterministic lowest-index tie-breaking."""

    def __init__(self, nodes):
        nodes = np.asarray(nodes, dtype=np.float64)
        if nodes.ndim != 2 or nodes.shape[1] != 2 or len(nodes) == 0:
            raise ValidationError(
                f"index needs a non-empty (n, 2) node array, got shape {nodes.shape}"
            )
        if not np.isfinite(nodes).all():
            raise ValidationError("index nodes contain non-finite coordinates")
        dup = find_duplicate_nodes(nodes)
        if dup is not None:
            raise ValidationError(f"duplicate nodes {dup[0]} and {dup[1]} in index")
        self._pts = nodes
        # flat tree arrays: point index, split axis, child slots
        self._point = []
        self._axis = []
        self._left = []
        self._right = []
        self._root = self._build(np.arange(len(nodes)), 0)

    def __len__(self):
        return len(self._pts)

    def _build(self, idxs, depth):
        if len(idxs) == 0:
            return -1
        axis = depth % 2
        order = np.lexsort((idxs, self._pts[idxs, axis]))
        idxs = idxs[order]
        mid = len(idxs) // 2
        node = len(self._point)
        self._point.append(int(idxs[mid]))
        self._axis.append(axis)
        self._left.append(-1)
        self._right.append(-1)
        self._left[node] = self._build(idxs[:mid], depth + 1)
        self._right[node] = self._build(idxs[mid + 1 :], depth + 1)
        return node

    def query_knn(self, q, k):
        """k nearest as [(squared_distance, index), ...] sorted ascending."""
        if k < 1 or k > len(self._pts):
            raise ValidationError(
                f"k={k} out of range for an index of {len(self._pts)} nodes"
            )
        qx, qy = float(q[0]), float(q[1])
        if not (np.isfinite(qx) and np.isfinite(qy)):
            raise ValidationError(f"query point is non-finite: {q!r}")
        best = []  # ascending (d2, idx); worst candidate is best[-1]
        pts = self._pts
        stack = [(self._root, 0.0)]  # (node, lower bound on d2 within its region)
        while stack:
            node, bound = stack.pop()
            if node == -1:
                continue
            # strict comparison: a subtree at exactly the worst distance may
            # still hold an equidistant point that wins the tie on index
            if len(best) == k and bound > best[-1][0]:
                continue
            i = self._point[node]
            dx = qx - pts[i, 0]
            dy = qy - pts[i, 1]
            cand = (dx * dx + dy * dy, i)
            if len(best) < k:
                insort(best, cand)
            elif cand < best[-1]:
                insort(best, cand)
                best.pop()
            delta = dx if self._axis[node] == 0 else dy
            near, far = (
                (self._left[node], self._right[node])
                if delta < 0
                else (self._right[node], self._left[node])
            )
            stack.append((far, delta * delta))
            stack.append((near, bound))  # LIFO: near side first tightens the bound
        return best

    def query(self, q):
        """(squared_distance, index) of the nearest node."""
        return self.query_knn(q, 1)[0]


def build_index(nodes):
    return SpatialIndex(nodes)


def interpolate(source, targets, method=Idw()):
    """Resample ``source`` onto ``targets``; one value per target row.

    A target within 1e-12 of a source node returns that node's value
    exactly, under either method.
    """
    targets = _check_targets(targets)
    if len(targets) == 0:
        return FieldDataset(targets, np.empty(0), name=source.name)
    if len(source) == 0:
        raise ValidationError("cannot interpolate from an empty source")
    index = SpatialIndex(source.nodes)
    values = np.empty(len(targets))
    if isinstance(method, Nearest):
        for t, q in enumerate(targets):
            values[t] = source.values[index.query(q)[1]]
    elif isinstance(method, Idw):
        if method.k > len(source):
            raise ValidationError(
                f"idw k={method.k} exceeds source size {len(source)}"
            )
        exact2 = EXACT_HIT_DISTANCE * EXACT_HIT_DISTANCE
        for t, q in enumerate(targets):
            neighbors = index.query_knn(q, method.k)
            if neighbors[0][0] <= exact2:
                values[t] = source.values[neighbors[0][1]]
                continue
            d2 = np.array([d for d, _ in neighbors])
            idx = [i for _, i in neighbors]
            weights = np.sqrt(d2) ** (-method.power)
            values[t] = np.sum(weights * source.values[idx]) / np.sum(weights)
    else:
        raise ValidationError(f"unknown interpolation method: {method!r}")
    return FieldDataset(targets, values, name=source.name)


def align_pair(lf, hf, method=Idw()):
    """Resample the high-fidelity field onto the low-fidelity nodes."""
    resampled = interpolate(hf, lf.nodes, method)
    hf_on_lf = FieldDataset(
        lf.nodes, resampled.values, name=f"{hf.name}_on_{lf.name}"
    )
    return FidelityPair(lf=lf, hf_on_lf_nodes=hf_on_lf, hf_raw=hf)
