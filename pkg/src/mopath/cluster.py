"""Greedy k-means++ clustering of path databases in component-cost space."""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np

MAX_ITER = 300


@dataclass
class ClusterReport:
    k: int
    labels: np.ndarray
    record_indices: List[int]
    centroids: np.ndarray
    variances: List[float]
    representatives: List[int]
    member_counts: List[int]
    initial_centers: List[int]
    sse_history: List[float]
    seed: int = 0
    candidates: int = 2
    raw_centroids: Optional[np.ndarray] = None
    map_id: str = ""

    @property
    def assignments(self) -> Dict[int, int]:
        return {rec: int(lab) for rec, lab in zip(self.record_indices, self.labels)}

    def to_json(self) -> str:
        doc = {
            "map_id": self.map_id,
            "k": self.k,
            "seed": self.seed,
            "candidates": self.candidates,
            "assignments": {str(r): c for r, c in self.assignments.items()},
            "centroids": self.centroids.tolist(),
            "centroids_raw": None if self.raw_centroids is None else self.raw_centroids.tolist(),
            "variances": self.variances,
            "representatives": self.representatives,
            "member_counts": self.member_counts,
            "initial_centers": self.initial_centers,
            "sse_history": self.sse_history,
        }
        return json.dumps(doc, indent=2) + "\n"


def default_candidates(k: int) -> int:
    return int(math.floor(2.0 + math.log(k)))


def _sq_dists(points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    diff = points[:, None, :] - centers[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def _assign(points: np.ndarray, centers: np.ndarray, workers: int = 1):
    """Nearest-centre labels (lowest centre index on ties) and squared distances."""
    if workers <= 1 or len(points) < 2 * workers:
        d = _sq_dists(points, centers)
    else:
        chunks = np.array_split(points, workers)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            d = np.vstack(list(pool.map(lambda p: _sq_dists(p, centers), chunks)))
    labels = np.argmin(d, axis=1)
    return labels, d[np.arange(len(points)), labels]


def _repair_empty(points, centers, labels, dist, k):
    """Move each empty centre onto the worst-fitting point of a multi-member cluster."""
    while True:
        counts = np.bincount(labels, minlength=k)
        empty = np.flatnonzero(counts == 0)
        if empty.size == 0:
            return labels, dist
        j = int(empty[0])
        movable = counts[labels] > 1
        cand = np.where(movable, dist, -1.0)
        i = int(np.argmax(cand))
        centers[j] = points[i]
        labels[i] = j
        dist[i] = 0.0


def _seed(points: np.ndarray, k: int, rng: np.random.Generator, candidates: int) -> List[int]:
    n = len(points)
    chosen = [int(rng.integers(n))]
    closest = _sq_dists(points, points[chosen[0]][None, :])[:, 0]
    for _ in range(1, k):
        cum = np.cumsum(closest)
        potential = cum[-1]
        draws = rng.random(candidates) * potential
        cand = np.minimum(np.searchsorted(cum, draws, side="right"), n - 1)
        best, best_pot, best_closest = -1, math.inf, None
        for c in cand:
            trial = np.minimum(closest, _sq_dists(points, points[c][None, :])[:, 0])
            pot = trial.sum()
            if pot < best_pot:
                best, best_pot, best_closest = int(c), pot, trial
        chosen.append(best)
        closest = best_closest
    return chosen


def kmeans_pp(points, k: int, seed: int = 0, candidates: Optional[int] = None,
              max_iter: int = MAX_ITER, workers: int = 1,
              record_indices: Optional[Sequence[int]] = None) -> ClusterReport:
    """Greedy k-means++ seeding followed by Lloyd iterations.

    Each new centre is the best (lowest resulting potential) of ``candidates``
    D^2-weighted draws.  Lloyd stops at an assignment fixpoint or after
    ``max_iter`` rounds.  ``sse_history`` holds the within-cluster sum of
    squares after every assignment step.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or len(pts) == 0:
        raise ValueError("points must be a non-empty 2-D array")
    if k < 1:
        raise ValueError("k must be at least 1")
    if k > len(pts):
        raise ValueError(f"k={k} exceeds the number of points ({len(pts)})")
    n_distinct = len(np.unique(pts, axis=0))
    if k > n_distinct:
        raise ValueError(f"k={k} exceeds the number of distinct points ({n_distinct})")
    candidates = candidates or default_candidates(k)
    rec_idx = list(range(len(pts))) if record_indices is None else [int(i) for i in record_indices]

    rng = np.random.default_rng(seed)
    initial = _seed(pts, k, rng, candidates)
    centers = pts[initial].copy()
    labels, dist = _assign(pts, centers, workers)
    labels, dist = _repair_empty(pts, centers, labels, dist, k)
    history = [float(dist.sum())]
    for _ in range(max_iter):
        centers = np.array([pts[labels == j].mean(axis=0) for j in range(k)])
        new_labels, dist = _assign(pts, centers, workers)
        new_labels, dist = _repair_empty(pts, centers, new_labels, dist, k)
        history.append(float(dist.sum()))
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
    labels = new_labels if max_iter > 0 else labels
    centers = np.array([pts[labels == j].mean(axis=0) for j in range(k)])

    variances, reps, counts = [], [], []
    rec_arr = np.array(rec_idx)
    for j in range(k):
        members = np.flatnonzero(labels == j)
        d = np.sum((pts[members] - centers[j]) ** 2, axis=1)
        variances.append(float(d.mean()))
        counts.append(int(members.size))
        order = np.lexsort((rec_arr[members], d))
        reps.append(int(rec_arr[members[order[0]]]))

    return ClusterReport(k, labels, rec_idx, centers, variances, reps, counts,
                         [rec_idx[i] for i in initial], history, seed, candidates)


def normalize_cost_space(records) -> np.ndarray:
    """Per-axis min-max scaling of (sum E, sum R, sum I) to [0, 1]; constant axes map to 0."""
    recs = [r for r in _records(records) if r.ok]
    if not recs:
        raise ValueError("no successful records to cluster")
    raw = np.array([r.costs for r in recs], dtype=np.float64)
    lo, hi = raw.min(axis=0), raw.max(axis=0)
    span = hi - lo
    out = np.zeros_like(raw)
    nz = span > 0
    out[:, nz] = (raw[:, nz] - lo[nz]) / span[nz]
    return np.clip(out, 0.0, 1.0)


def _records(db_or_records):
    return db_or_records.records if hasattr(db_or_records, "records") else list(db_or_records)


def cluster_database(db, k: int, seed: int = 0, candidates: Optional[int] = None,
                     workers: int = 1) -> ClusterReport:
    recs = [r for r in _records(db) if r.ok]
    points = normalize_cost_space(recs)
    report = kmeans_pp(points, k, seed, candidates, workers=workers,
                       record_indices=[r.idx for r in recs])
    raw = np.array([r.costs for r in recs], dtype=np.float64)
    report.raw_centroids = np.array([raw[report.labels == j].mean(axis=0) for j in range(k)])
    report.map_id = getattr(db, "map_id", "")
    return report


def cluster_summary(report: ClusterReport, db) -> List[dict]:
    """One row per cluster: representative's energy (% of database max), risk %, science %,
    member count and cluster variance."""
    by_idx = {r.idx: r for r in _records(db) if r.ok}
    e_max = max(r.metrics.energy_rel for r in by_idx.values())
    rows = []
    for j in range(report.k):
        rep = by_idx[report.representatives[j]]
        m = rep.metrics
        rows.append({
            "cluster": j,
            "representative": rep.idx,
            "weights": rep.weights.as_tuple(),
            "energy_pct": m.energy_rel / e_max * 100.0 if e_max > 0 else 0.0,
            "risk_pct": m.risk_total * 100.0,
            "science_pct": m.science_total * 100.0,
            "n_paths": report.member_counts[j],
            "variance": report.variances[j],
        })
    return rows


def format_summary(rows: List[dict]) -> str:
    lines = [f"{'Cluster':>7} {'Rep':>5} {'Energy [%]':>10} {'Risk [%]':>9} {'Science [%]':>11} "
             f"{'No. paths':>9} {'Variance':>9}"]
    for row in rows:
        lines.append(f"{row['cluster'] + 1:>7} {row['representative']:>5} {row['energy_pct']:>10.1f} "
                     f"{row['risk_pct']:>9.2f} {row['science_pct']:>11.1f} {row['n_paths']:>9d} "
                     f"{row['variance']:>9.4f}")
    return "\n".join(lines)


def variance_vs_k(points, ks=range(2, 9), seed: int = 0) -> List[dict]:
    """Mean cluster variance and total SSE per k, to help choose k."""
    pts = np.asarray(points, dtype=np.float64)
    n_distinct = len(np.unique(pts, axis=0))
    out = []
    for k in ks:
        if k > n_distinct:
            break
        rep = kmeans_pp(pts, k, seed)
        out.append({"k": k, "mean_variance": float(np.mean(rep.variances)),
                    "sse": rep.sse_history[-1]})
    return out
