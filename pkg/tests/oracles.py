"""Independent reference implementations used as test oracles.

Everything here recomputes results from first principles with plain
loops, deliberately avoiding the vectorized code paths under test.
"""

import numpy as np

# ---------------------------------------------------------------------------
# gradients


def gradient_reference(img):
    """Per-pixel forward differences and magnitude, scalar loop."""
    img = np.asarray(img, dtype=np.float64)
    h, w = img.shape
    gx = np.zeros((h, w))
    gy = np.zeros((h, w))
    mag = np.zeros((h, w))
    for r in range(h):
        for c in range(w):
            dx = img[r, c + 1] - img[r, c] if c < w - 1 else 0.0
            dy = img[r + 1, c] - img[r, c] if r < h - 1 else 0.0
            gx[r, c] = dx
            gy[r, c] = dy
            mag[r, c] = np.sqrt(dx * dx + dy * dy)
    return gx, gy, mag


# ---------------------------------------------------------------------------
# crop arithmetic


def crop_size_by_subtraction(extent, period):
    """Largest whole-period length via repeated subtraction."""
    remaining = extent
    while remaining >= period:
        remaining -= period
    return extent - remaining


# ---------------------------------------------------------------------------
# block energies


def block_energy_reference(field, grid):
    """Sequential per-pixel accumulation in block index order."""
    field = np.asarray(field, dtype=np.float64)
    out = []
    for k in range(1, grid.n_blocks + 1):
        r0, c0, r1, c1 = grid.block_rect(k)
        acc = 0.0
        for r in range(r0, r1):
            for c in range(c0, c1):
                acc += abs(field[r, c])
        out.append(acc)
    return np.array(out)


# ---------------------------------------------------------------------------
# Ward clustering


def _sse(values):
    mean = sum(values) / len(values)
    return sum((v - mean) ** 2 for v in values)


def ward_reference(features):
    """Greedy minimum-variance merging with costs recomputed from scratch.

    Returns (rows, partitions): rows as (left id, right id, cost) with the
    same id scheme and tie rule as the implementation, and the partition
    of leaf indices (0-based frozensets) after every merge. The cost of a
    candidate merge is evaluated directly as the change in total
    within-cluster sum of squares, not via the centroid formula.
    """
    feats = [float(x) for x in np.asarray(features).ravel()]
    n = len(feats)
    clusters = [(i + 1, [i]) for i in range(n)]
    rows, partitions = [], []
    for step in range(n - 1):
        best = None
        for a in range(len(clusters)):
            for b in range(a + 1, len(clusters)):
                ida, mem_a = clusters[a]
                idb, mem_b = clusters[b]
                vals_a = [feats[i] for i in mem_a]
                vals_b = [feats[i] for i in mem_b]
                cost = _sse(vals_a + vals_b) - _sse(vals_a) - _sse(vals_b)
                key = (cost, ida, idb)
                if best is None or key < best[0]:
                    best = (key, a, b)
        (cost, ida, idb), a, b = best
        rows.append((ida, idb, cost))
        clusters[a] = (n + step + 1, clusters[a][1] + clusters[b][1])
        del clusters[b]
        partitions.append(frozenset(frozenset(mem) for _, mem in clusters))
    return rows, partitions


def partitions_from_linkage(link):
    """Partition sequence implied by a linkage matrix (0-based leaf sets)."""
    link = np.asarray(link)
    n = link.shape[0] + 1
    members = {i + 1: frozenset([i]) for i in range(n)}
    active = set(members)
    partitions = []
    for i in range(n - 1):
        left, right = int(link[i, 0]), int(link[i, 1])
        new_id = n + 1 + i
        members[new_id] = members[left] | members[right]
        active -= {left, right}
        active.add(new_id)
        partitions.append(frozenset(members[cid] for cid in active))
    return partitions


# ---------------------------------------------------------------------------
# morphology


def fill_holes_reference(mask):
    """Relaxation sweeps: background reachability from the border."""
    mask = np.asarray(mask, dtype=bool)
    h, w = mask.shape
    reach = np.zeros((h, w), dtype=bool)
    for r in range(h):
        for c in range(w):
            if (r in (0, h - 1) or c in (0, w - 1)) and not mask[r, c]:
                reach[r, c] = True
    changed = True
    while changed:
        changed = False
        for r in range(h):
            for c in range(w):
                if mask[r, c] or reach[r, c]:
                    continue
                for dr, dc in ((-1, 0), (1, 0), (0, -1), (0, 1)):
                    rr, cc = r + dr, c + dc
                    if 0 <= rr < h and 0 <= cc < w and reach[rr, cc]:
                        reach[r, c] = True
                        changed = True
                        break
    out = mask.copy()
    out[~reach] = True
    return out


def connected_components(mask, connectivity=8):
    """Number of connected foreground components."""
    mask = np.asarray(mask, dtype=bool)
    h, w = mask.shape
    if connectivity == 8:
        steps = [(dr, dc) for dr in (-1, 0, 1) for dc in (-1, 0, 1)
                 if (dr, dc) != (0, 0)]
    else:
        steps = [(-1, 0), (1, 0), (0, -1), (0, 1)]
    seen = np.zeros((h, w), dtype=bool)
    count = 0
    for r in range(h):
        for c in range(w):
            if not mask[r, c] or seen[r, c]:
                continue
            count += 1
            stack = [(r, c)]
            seen[r, c] = True
            while stack:
                cr, cc = stack.pop()
                for dr, dc in steps:
                    rr, cc2 = cr + dr, cc + dc
                    if 0 <= rr < h and 0 <= cc2 < w and mask[rr, cc2] \
                            and not seen[rr, cc2]:
                        seen[rr, cc2] = True
                        stack.append((rr, cc2))
    return count


# ---------------------------------------------------------------------------
# Canny reference (five stages, loop based, same conventions as the module)


def _gauss_kernel(sigma):
    half = int(np.ceil(3.0 * sigma))
    ks = [np.exp(-(t - half) ** 2 / (2.0 * sigma * sigma))
          for t in range(2 * half + 1)]
    total = np.sum(np.array(ks))
    return [k / total for k in ks], half


def canny_reference(img, sigma, high_percentile, low_ratio):
    img = np.asarray(img, dtype=np.float64)
    h, w = img.shape
    kernel, half = _gauss_kernel(sigma)
    size = 2 * half + 1
    assert h >= size and w >= size

    def clamp(v, hi):
        return 0 if v < 0 else (hi - 1 if v >= hi else v)

    rows = np.zeros((h, w))
    for r in range(h):
        for c in range(w):
            acc = np.float64(0.0)
            for t in range(size):
                acc += kernel[t] * img[r, clamp(c - half + t, w)]
            rows[r, c] = acc
    smooth = np.zeros((h, w))
    for r in range(h):
        for c in range(w):
            acc = np.float64(0.0)
            for t in range(size):
                acc += kernel[t] * rows[clamp(r - half + t, h), c]
            smooth[r, c] = acc

    gx = np.zeros((h, w))
    gy = np.zeros((h, w))
    mag = np.zeros((h, w))
    for r in range(h):
        for c in range(w):
            gx[r, c] = (smooth[r, clamp(c + 1, w)] - smooth[r, clamp(c - 1, w)]) / 2.0
            gy[r, c] = (smooth[clamp(r + 1, h), c] - smooth[clamp(r - 1, h), c]) / 2.0
            mag[r, c] = np.sqrt(gx[r, c] * gx[r, c] + gy[r, c] * gy[r, c])

    thinned = nms_reference(mag, gx, gy)

    nonzero = [m for m in mag.ravel() if m > 0]
    if not nonzero:
        return np.zeros((h, w), dtype=bool)
    high = float(np.percentile(np.array(nonzero), high_percentile))
    low = low_ratio * high

    strong = [(r, c) for r in range(h) for c in range(w)
              if thinned[r, c] and mag[r, c] >= high]
    weak = {(r, c) for r in range(h) for c in range(w)
            if thinned[r, c] and low <= mag[r, c] < high}
    edges = np.zeros((h, w), dtype=bool)
    stack = list(strong)
    for r, c in strong:
        edges[r, c] = True
    while stack:
        r, c = stack.pop()
        for dr in (-1, 0, 1):
            for dc in (-1, 0, 1):
                rr, cc = r + dr, c + dc
                if (rr, cc) in weak and not edges[rr, cc]:
                    edges[rr, cc] = True
                    stack.append((rr, cc))
    return edges


def nms_reference(mag, gx, gy):
    """Loop version of the 4-direction non-maximum suppression."""
    mag = np.asarray(mag, dtype=np.float64)
    h, w = mag.shape
    offsets = {0: (0, 1), 1: (1, 1), 2: (1, 0), 3: (1, -1)}
    keep = np.zeros((h, w), dtype=bool)
    for r in range(h):
        for c in range(w):
            if not mag[r, c] > 0:
                continue
            angle = np.rad2deg(np.arctan2(gy[r, c], gx[r, c])) % 180.0
            b = int(np.round(angle / 45.0)) % 4
            dr, dc = offsets[b]

            def at(rr, cc):
                if 0 <= rr < h and 0 <= cc < w:
                    return mag[rr, cc]
                return 0.0

            fwd = at(r + dr, c + dc)
            bwd = at(r - dr, c - dc)
            if mag[r, c] >= fwd and mag[r, c] > bwd:
                keep[r, c] = True
    return keep


# ---------------------------------------------------------------------------
# scoring


def confusion_reference(predicted, truth, n_blocks):
    """Element-by-element membership count."""
    tp = tn = fp = fn = 0
    for k in range(1, n_blocks + 1):
        in_pred = k in predicted
        in_true = k in truth
        if in_pred and in_true:
            tp += 1
        elif in_pred:
            fp += 1
        elif in_true:
            fn += 1
        else:
            tn += 1
    return tp, tn, fp, fn
