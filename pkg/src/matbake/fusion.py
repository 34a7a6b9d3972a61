"""Fuse per-view label UVs by weighted voting, then unify regions.

Voting: every view that labeled a texel adds weight 1 (or alpha for the
five manual inspection views) to that label's bin; the fused label is the
weighted argmax, ties to the lowest class id.

Region unification enforces part coherence: holes are filled from the
nearest labeled texel of the same UV chart, charts dominated by one label
are flattened to it, and small face-connected regions are absorbed into
the neighbor sharing the longest 3D boundary.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .baking import LabelUV, TexelSampleTable, VIEW_FUSED
from .camera import ViewSchedule
from .errors import LengthMismatchError, ShapeMismatchError
from .mesh import TriangleMesh
from .raster import FACE_NONE
from .segmentation import BACKGROUND, NUM_CLASSES


@dataclass(frozen=True)
class FusionConfig:
    alpha: float = 2.0
    unify_min_region: float = 0.005
    unify_dominance: float = 0.8

    def __post_init__(self):
        if self.alpha < 1.0:
            raise ValueError("alpha must be >= 1")
        if not 0.0 < self.unify_min_region < 1.0:
            raise ValueError("unify_min_region must be in (0, 1)")
        if not 0.5 < self.unify_dominance <= 1.0:
            raise ValueError("unify_dominance must be in (0.5, 1]")


@dataclass
class VoteHistogram:
    """Per-texel weighted class tallies."""

    weights: np.ndarray  # (R, R, NUM_CLASSES) float64

    @property
    def total(self) -> np.ndarray:
        return self.weights.sum(axis=-1)


def accumulate(stack: list[LabelUV], schedule: ViewSchedule,
               cfg: FusionConfig) -> VoteHistogram:
    """Tally weighted votes from every view; 255 entries contribute nothing."""
    if len(stack) != len(schedule):
        raise LengthMismatchError(
            f"{len(stack)} label UVs for {len(schedule)} scheduled views"
        )
    if not stack:
        raise LengthMismatchError("empty view stack")
    res = stack[0].labels.shape
    weights = np.zeros(res + (NUM_CLASSES,))
    view_weights = schedule.weights(cfg.alpha)
    rows, cols = np.indices(res)
    for layer, w in zip(stack, view_weights):
        if layer.labels.shape != res:
            raise ShapeMismatchError("label UV stack entries disagree in shape")
        labeled = layer.labels != BACKGROUND
        # One contribution per texel per view, so fancy-index += is exact.
        weights[rows[labeled], cols[labeled], layer.labels[labeled]] += w
    return VoteHistogram(weights)


def vote(hist: VoteHistogram, cfg: FusionConfig) -> LabelUV:
    """Weighted argmax per texel; ties go to the lowest class id; texels
    with no votes stay 255 for the hole-fill step."""
    fused = np.argmax(hist.weights, axis=-1).astype(np.uint8)
    fused[hist.total == 0] = BACKGROUND
    return LabelUV(fused, view_index=VIEW_FUSED)


def _uv_charts(mesh: TriangleMesh) -> np.ndarray:
    """Chart id per face: connected components over shared UV edges."""
    f = mesh.faces_uv
    if len(f) == 0:
        return np.zeros(0, dtype=np.int64)
    edges = np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]])
    edges = np.sort(edges, axis=1)
    keys = edges[:, 0].astype(np.int64) * len(mesh.uvs) + edges[:, 1]
    owner = np.tile(np.arange(len(f)), 3)
    order = np.argsort(keys, kind="stable")
    keys_s, owner_s = keys[order], owner[order]
    same = keys_s[1:] == keys_s[:-1]
    a = owner_s[:-1][same]
    b = owner_s[1:][same]
    adj = coo_matrix(
        (np.ones(len(a)), (a, b)), shape=(len(f), len(f))
    )
    _, labels = connected_components(adj, directed=False)
    return labels


def _face_adjacency_3d(mesh: TriangleMesh):
    """(face_a, face_b, shared_edge_length) over shared 3D position edges."""
    f = mesh.faces_pos
    edges = np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]])
    edges = np.sort(edges, axis=1)
    keys = edges[:, 0].astype(np.int64) * len(mesh.positions) + edges[:, 1]
    owner = np.tile(np.arange(len(f)), 3)
    order = np.argsort(keys, kind="stable")
    keys_s, owner_s, edges_s = keys[order], owner[order], edges[order]
    same = keys_s[1:] == keys_s[:-1]
    a = owner_s[:-1][same]
    b = owner_s[1:][same]
    ev = edges_s[:-1][same]
    lengths = np.linalg.norm(
        mesh.positions[ev[:, 0]] - mesh.positions[ev[:, 1]], axis=1
    )
    return a, b, lengths


def _fill_holes(labels: np.ndarray, table: TexelSampleTable,
                chart_of_face: np.ndarray) -> np.ndarray:
    """Assign each still-255 assigned texel the label of the nearest labeled
    texel (UV Euclidean) within the same UV chart."""
    out = labels.copy()
    assigned = table.assigned
    chart = np.full(table.face_id.shape, -1, dtype=np.int64)
    chart[assigned] = chart_of_face[table.face_id[assigned]]
    for c in np.unique(chart_of_face):
        in_chart = chart == c
        labeled = in_chart & (out != BACKGROUND)
        holes = in_chart & (out == BACKGROUND)
        if not holes.any() or not labeled.any():
            continue
        _, (ri, ci) = ndimage.distance_transform_edt(
            ~labeled, return_indices=True
        )
        out[holes] = out[ri[holes], ci[holes]]
    return out


def _dominant_per_face(labels: np.ndarray, table: TexelSampleTable,
                       num_faces: int):
    """Mode label over each face's texels (255 ignored); faces with no
    labeled texels report 255. Also returns per-face labeled texel counts."""
    assigned = table.assigned
    fids = table.face_id[assigned]
    labs = labels[assigned].astype(np.int64)
    labs[labs == BACKGROUND] = NUM_CLASSES
    counts = np.bincount(
        fids * (NUM_CLASSES + 1) + labs,
        minlength=num_faces * (NUM_CLASSES + 1),
    ).reshape(num_faces, NUM_CLASSES + 1)
    class_counts = counts[:, :NUM_CLASSES]
    dominant = np.argmax(class_counts, axis=1).astype(np.int64)
    dominant[class_counts.sum(axis=1) == 0] = BACKGROUND
    return dominant, class_counts.sum(axis=1)


def _absorb_small_regions(dominant: np.ndarray, face_texels: np.ndarray,
                          mesh: TriangleMesh, min_texels: float) -> np.ndarray:
    """Merge face-connected same-label regions below min_texels into the
    adjacent region sharing the longest 3D boundary. Returns the final
    per-face label."""
    fa, fb, elen = _face_adjacency_3d(mesh)
    valid_faces = dominant != BACKGROUND
    same = valid_faces[fa] & valid_faces[fb] & (dominant[fa] == dominant[fb])
    adj = coo_matrix(
        (np.ones(same.sum()), (fa[same], fb[same])),
        shape=(mesh.num_faces, mesh.num_faces),
    )
    n_regions, region_of = connected_components(adj, directed=False)

    region_label = np.full(n_regions, BACKGROUND, dtype=np.int64)
    region_label[region_of[valid_faces]] = dominant[valid_faces]
    region_size = np.zeros(n_regions)
    np.add.at(region_size, region_of[valid_faces], face_texels[valid_faces])

    # Boundary length between adjacent distinct regions.
    cross = valid_faces[fa] & valid_faces[fb] & (region_of[fa] != region_of[fb])
    boundary: dict[tuple[int, int], float] = {}
    for ra, rb, ln in zip(region_of[fa[cross]], region_of[fb[cross]], elen[cross]):
        key = (min(ra, rb), max(ra, rb))
        boundary[key] = boundary.get(key, 0.0) + float(ln)

    # merged[r] -> representative region after unions
    parent = np.arange(n_regions)

    def find(r):
        while parent[r] != r:
            parent[r] = parent[parent[r]]
            r = parent[r]
        return r

    live = [r for r in range(n_regions) if region_label[r] != BACKGROUND]
    while True:
        # current neighbor boundary map keyed on representatives
        nbr: dict[int, dict[int, float]] = {}
        for (ra, rb), ln in boundary.items():
            a, b = find(ra), find(rb)
            if a == b:
                continue
            nbr.setdefault(a, {})[b] = nbr.setdefault(a, {}).get(b, 0.0) + ln
            nbr.setdefault(b, {})[a] = nbr.setdefault(b, {}).get(a, 0.0) + ln
        reps = sorted({find(r) for r in live})
        small = [
            r for r in reps
            if region_size[r] < min_texels and nbr.get(r)
        ]
        if not small:
            break
        # Absorb the smallest region first; deterministic tie-breaks.
        r = min(small, key=lambda x: (region_size[x], x))
        target = min(
            nbr[r].items(),
            key=lambda kv: (-kv[1], region_label[kv[0]], kv[0]),
        )[0]
        parent[r] = target
        region_size[target] += region_size[r]

    final = dominant.copy()
    for fi in np.nonzero(valid_faces)[0]:
        final[fi] = region_label[find(region_of[fi])]
    return final


def region_unify(fused: LabelUV, table: TexelSampleTable, mesh: TriangleMesh,
                 cfg: FusionConfig) -> LabelUV:
    """Hole-fill, chart-dominance flattening, and small-region absorption.

    Iterates the three steps to a fixed point so the operation is
    idempotent; it never introduces a class absent from its input.
    """
    if fused.labels.shape != table.face_id.shape:
        raise ShapeMismatchError("fused label UV does not match sample table")
    chart_of_face = _uv_charts(mesh)
    labels = fused.labels.copy()
    assigned = table.assigned
    total_assigned = int(assigned.sum())
    min_texels = cfg.unify_min_region * total_assigned

    chart = np.full(table.face_id.shape, -1, dtype=np.int64)
    chart[assigned] = chart_of_face[table.face_id[assigned]]

    for _ in range(8):
        before = labels.copy()

        labels = _fill_holes(labels, table, chart_of_face)

        # Chart-dominance override: a chart overwhelmingly one label becomes
        # that label outright.
        for c in np.unique(chart_of_face):
            in_chart = (chart == c) & (labels != BACKGROUND)
            n = int(in_chart.sum())
            if n == 0:
                continue
            counts = np.bincount(labels[in_chart], minlength=NUM_CLASSES)[:NUM_CLASSES]
            top = int(np.argmax(counts))
            if counts[top] >= cfg.unify_dominance * n:
                labels[in_chart] = top

        dominant, face_texels = _dominant_per_face(labels, table, mesh.num_faces)
        final = _absorb_small_regions(dominant, face_texels, mesh, min_texels)
        changed_faces = np.nonzero(final != dominant)[0]
        if len(changed_faces):
            relabel = np.isin(table.face_id, changed_faces) & assigned
            labels[relabel] = final[table.face_id[relabel]].astype(np.uint8)

        if np.array_equal(labels, before):
            break

    return LabelUV(labels, view_index=VIEW_FUSED)
