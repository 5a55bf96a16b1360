"""Ward's hierarchical clustering of block energies.

Agglomerative minimum-variance clustering: at every step the pair of
clusters whose merge least increases the total within-cluster sum of
squares is joined. For clusters U, V with sizes su, sv and centroids
cu, cv that increase is

    d(U, V) = su * sv / (su + sv) * (cu - cv)^2

which is what gets recorded as the linkage distance. The merge history is
returned as an (n-1) x 3 matrix: leaves carry ids 1..n, the cluster born
in row i (1-based) carries id n+i, and each row holds the two merged ids
plus their distance. Distances are non-decreasing down the rows; undoing
the final merge yields the two-cluster partition used for defect
labeling, where the smaller cluster is assumed defective.

Determinism: when several pairs tie on distance, the pair whose
(left id, right id) tuple is lexicographically smallest is merged. The
left/right slots reflect cluster creation order (a merged cluster takes
over its left parent's slot), so identical inputs always produce an
identical matrix.
"""

from dataclasses import dataclass, replace

import numpy as np

__all__ = ["TwoClusterCut", "ward_linkage", "cut_two_clusters", "minority_rule"]


@dataclass(frozen=True)
class TwoClusterCut:
    """Two-cluster partition of blocks 1..n plus the defect decision.

    `labels[i]` is "A" or "B" for block i+1; cluster A descends from the
    left child of the final merge. `defective_cluster` is None until
    `minority_rule` runs (or when a tau guard suppressed the detection).
    `ambiguous` marks equal-size partitions resolved by the tie rule.
    """

    labels: tuple[str, ...]
    cluster_a: tuple[int, ...]
    cluster_b: tuple[int, ...]
    last_distance: float
    penultimate_distance: float
    defective_cluster: str | None = None
    defective_blocks: tuple[int, ...] = ()
    ambiguous: bool = False


def ward_linkage(features) -> np.ndarray:
    """Minimum-variance merge history of 1-D features as an (n-1) x 3 matrix.

    Requires n >= 2 finite feature values. Columns are
    (left id, right id, linkage distance) with the 1-based id scheme
    described in the module docstring.
    """
    feats = np.asarray(features, dtype=np.float64).ravel()
    n = feats.size
    if n < 2:
        raise ValueError(f"need at least 2 features to cluster, got {n}")
    if not np.all(np.isfinite(feats)):
        raise ValueError("features contain non-finite values")

    ids = np.arange(1, n + 1, dtype=np.int64)
    sums = feats.copy()
    sizes = np.ones(n, dtype=np.float64)
    link = np.empty((n - 1, 3), dtype=np.float64)

    for step in range(n - 1):
        means = sums / sizes
        diff = means[:, None] - means[None, :]
        weight = sizes[:, None] * sizes[None, :] / (sizes[:, None] + sizes[None, :])
        costs = weight * diff * diff
        ia, ib = np.triu_indices(ids.size, k=1)
        pair_costs = costs[ia, ib]
        dmin = pair_costs.min()
        ties = np.flatnonzero(pair_costs == dmin)
        best = min(ties, key=lambda t: (ids[ia[t]], ids[ib[t]]))
        a, b = int(ia[best]), int(ib[best])

        link[step] = (ids[a], ids[b], dmin)
        sums[a] += sums[b]
        sizes[a] += sizes[b]
        ids[a] = n + step + 1
        keep = np.arange(ids.size) != b
        ids, sums, sizes = ids[keep], sums[keep], sizes[keep]

    return link


def _leaves(cluster_id: int, children: dict[int, tuple[int, int]]) -> list[int]:
    out, stack = [], [cluster_id]
    while stack:
        cid = stack.pop()
        if cid in children:
            stack.extend(children[cid])
        else:
            out.append(cid)
    return out


def cut_two_clusters(link: np.ndarray) -> TwoClusterCut:
    """Undo the final merge: the last row's two subtrees become A and B."""
    link = np.asarray(link, dtype=np.float64)
    if link.ndim != 2 or link.shape[1] != 3 or link.shape[0] < 1:
        raise ValueError(f"linkage matrix must be (n-1) x 3, got {link.shape}")
    n = link.shape[0] + 1
    children = {n + 1 + i: (int(link[i, 0]), int(link[i, 1])) for i in range(n - 1)}
    left, right = children[2 * n - 1]
    cluster_a = tuple(sorted(_leaves(left, children)))
    cluster_b = tuple(sorted(_leaves(right, children)))
    labels = [""] * n
    for k in cluster_a:
        labels[k - 1] = "A"
    for k in cluster_b:
        labels[k - 1] = "B"
    return TwoClusterCut(
        labels=tuple(labels),
        cluster_a=cluster_a,
        cluster_b=cluster_b,
        last_distance=float(link[-1, 2]),
        penultimate_distance=float(link[-2, 2]) if n > 2 else 0.0,
    )


def minority_rule(cut: TwoClusterCut, features, tau: float = 0.0) -> TwoClusterCut:
    """Label the smaller cluster defective.

    Equal sizes set `ambiguous` and fall back to a documented tie rule:
    the cluster whose centroid deviates more from the median energy wins;
    if the deviations match too, the higher-energy cluster is taken.

    With tau > 0 the detection is suppressed entirely (no defective
    cluster) when penultimate_distance / last_distance falls below tau.
    A zero last distance, or a two-block clustering with no penultimate
    merge, counts as ratio 0, so exactly uniform energies always read as
    defect-free under any positive tau.
    """
    feats = np.asarray(features, dtype=np.float64).ravel()
    if feats.size != len(cut.labels):
        raise ValueError(
            f"feature count {feats.size} does not match cut size {len(cut.labels)}"
        )
    if tau > 0:
        if cut.last_distance > 0:
            ratio = cut.penultimate_distance / cut.last_distance
        else:
            ratio = 0.0
        if ratio < tau:
            return replace(cut, defective_cluster=None, defective_blocks=(),
                           ambiguous=False)

    size_a, size_b = len(cut.cluster_a), len(cut.cluster_b)
    ambiguous = size_a == size_b
    if size_a < size_b:
        side = "A"
    elif size_b < size_a:
        side = "B"
    else:
        median = float(np.median(feats))
        mean_a = float(np.mean(feats[[k - 1 for k in cut.cluster_a]]))
        mean_b = float(np.mean(feats[[k - 1 for k in cut.cluster_b]]))
        dev_a, dev_b = abs(mean_a - median), abs(mean_b - median)
        if dev_a != dev_b:
            side = "A" if dev_a > dev_b else "B"
        else:
            side = "A" if mean_a > mean_b else "B"
    blocks = cut.cluster_a if side == "A" else cut.cluster_b
    return replace(cut, defective_cluster=side, defective_blocks=blocks,
                   ambiguous=ambiguous)
