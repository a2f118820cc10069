"""Seeded synthetic datasets with planted ground truth.

Every generator draws from ``numpy.random.default_rng(seed)`` only, so the
same arguments always give bit-identical output.
"""
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

__all__ = [
    "SyntheticDataset",
    "FIVE_CLUSTER_MEANS",
    "FIVE_CLUSTER_STD",
    "FIVE_CLUSTER_RADIUS",
    "FIVE_CLUSTER_HALF_WIDTH",
    "gen_five_clusters",
    "gen_union_of_subspaces",
    "gen_dynamic_background",
]


@dataclass
class SyntheticDataset:
    """Generated data plus whatever ground truth the generator knows.

    ``Y`` holds one sample per column. ``params`` records the generator
    arguments for the JSON sidecar.
    """

    Y: np.ndarray
    seed: int
    truth_labels: Optional[np.ndarray] = None
    truth_L: Optional[np.ndarray] = None
    truth_S_support: Optional[np.ndarray] = None
    params: dict = field(default_factory=dict)


# Five groups on the vertices of a regular pentagon of radius 3: four unit
# Gaussians and one uniform square of half-width sqrt(3) (also unit variance
# per axis). Neighbouring vertices are ~3.5 standard deviations apart, so
# the groups touch and each has a sparse fringe of stray points.
FIVE_CLUSTER_RADIUS = 3.0
_ANGLES = np.pi / 2 + 2 * np.pi * np.arange(5) / 5
FIVE_CLUSTER_MEANS = FIVE_CLUSTER_RADIUS * np.column_stack([np.cos(_ANGLES), np.sin(_ANGLES)])
FIVE_CLUSTER_STD = 1.0
FIVE_CLUSTER_HALF_WIDTH = np.sqrt(3.0)
POINTS_PER_GROUP = 100


def gen_five_clusters(seed=0, points_per_group=POINTS_PER_GROUP):
    """Five overlapping 2-D groups: four Gaussians and one uniform square.

    Returns ``Y`` of shape ``(2, 5 * points_per_group)``; group ``j`` occupies
    columns ``j * points_per_group`` onward and has label ``j`` (the
    uniform square is label 4).
    """
    rng = np.random.default_rng(seed)
    groups = [mu + FIVE_CLUSTER_STD * rng.standard_normal((points_per_group, 2))
              for mu in FIVE_CLUSTER_MEANS[:4]]
    h = FIVE_CLUSTER_HALF_WIDTH
    groups.append(FIVE_CLUSTER_MEANS[4] + rng.uniform(-h, h, (points_per_group, 2)))
    labels = np.repeat(np.arange(5), points_per_group)
    return SyntheticDataset(
        Y=np.vstack(groups).T.copy(),
        seed=seed,
        truth_labels=labels,
        params={"generator": "five-clusters", "seed": seed,
                "points_per_group": points_per_group},
    )


def gen_union_of_subspaces(num_subspaces=3, subspace_dim=3, ambient_dim=20,
                           points_per=40, noise_sigma=0.01, outlier_fraction=0.02,
                           outlier_magnitude=5.0, seed=0):
    """Points on a union of random linear subspaces, with noise and outliers.

    Each subspace gets a random orthonormal basis; its points are the basis
    times Gaussian coefficients of variance ``ambient_dim / subspace_dim``,
    so the clean entries have unit variance and ``outlier_magnitude`` is in
    units of the signal's standard deviation. Dense Gaussian noise of scale
    ``noise_sigma`` is added, then each entry is independently replaced by
    ``+-outlier_magnitude`` with probability ``outlier_fraction``.
    """
    if not 0 < subspace_dim < ambient_dim:
        raise ValueError("need 0 < subspace_dim < ambient_dim")
    if num_subspaces < 1 or points_per < 1:
        raise ValueError("num_subspaces and points_per must be positive")
    if not 0 <= outlier_fraction <= 1 or noise_sigma < 0:
        raise ValueError("invalid noise or outlier parameters")
    rng = np.random.default_rng(seed)
    coef_scale = np.sqrt(ambient_dim / subspace_dim)
    clean = []
    for _ in range(num_subspaces):
        basis, _ = np.linalg.qr(rng.standard_normal((ambient_dim, subspace_dim)))
        clean.append(basis @ (coef_scale * rng.standard_normal((subspace_dim, points_per))))
    L = np.hstack(clean)
    Y = L + noise_sigma * rng.standard_normal(L.shape)
    support = rng.random(L.shape) < outlier_fraction
    signs = rng.choice([-1.0, 1.0], size=L.shape)
    Y = np.where(support, outlier_magnitude * signs, Y)
    return SyntheticDataset(
        Y=Y,
        seed=seed,
        truth_labels=np.repeat(np.arange(num_subspaces), points_per),
        truth_L=L,
        truth_S_support=support,
        params={"generator": "union-subspaces", "num_subspaces": num_subspaces,
                "subspace_dim": subspace_dim, "ambient_dim": ambient_dim,
                "points_per": points_per, "noise_sigma": noise_sigma,
                "outlier_fraction": outlier_fraction,
                "outlier_magnitude": outlier_magnitude, "seed": seed},
    )


def gen_dynamic_background(frames=40, height=32, width=32, object_size=5,
                           dynamic_amplitude=0.08, seed=0):
    """A static scene with flickering foliage and one moving bright square.

    The background is a rank-1 image. The top third of the frame is a
    foliage band where every pixel oscillates with its own random frequency
    and phase, so the perturbation has high rank without being sparse. The
    square moves left to right along the lower part of the image.

    Frames are vectorised column-major into the columns of ``Y`` (shape
    ``(height * width, frames)``). ``truth_L`` is the static background and
    ``truth_S_support[:, t]`` marks the square's pixels in frame ``t``.
    ``object_size=0`` means no object.
    """
    if frames < 1 or height < 1 or width < 1:
        raise ValueError("frames, height and width must be positive")
    if not 0 <= object_size < min(height, width):
        raise ValueError("object_size must be smaller than the frame")
    rng = np.random.default_rng(seed)
    rows = 0.35 + 0.15 * np.sin(np.linspace(0.0, np.pi, height))
    cols = 0.8 + 0.2 * np.cos(np.linspace(0.0, 1.5 * np.pi, width))
    background = np.outer(rows, cols)

    band = np.zeros((height, width), dtype=bool)
    band[: max(1, height // 3), :] = True
    freq = rng.uniform(0.5, 2.5, size=(height, width))
    phase = rng.uniform(0.0, 2.0 * np.pi, size=(height, width))

    n = height * width
    Y = np.empty((n, frames))
    support = np.zeros((n, frames), dtype=bool)
    top = height - object_size - max(1, height // 8)
    for t in range(frames):
        frame = background.copy()
        wiggle = dynamic_amplitude * np.sin(freq * t + phase)
        frame[band] += wiggle[band]
        if object_size > 0:
            span = width - object_size
            left = int(round(span * t / max(frames - 1, 1)))
            mask = np.zeros((height, width), dtype=bool)
            mask[top: top + object_size, left: left + object_size] = True
            frame[mask] = 0.95
            support[:, t] = mask.reshape(-1, order="F")
        Y[:, t] = frame.reshape(-1, order="F")
    L = np.repeat(background.reshape(-1, 1, order="F"), frames, axis=1)
    return SyntheticDataset(
        Y=np.clip(Y, 0.0, 1.0),
        seed=seed,
        truth_L=L,
        truth_S_support=support,
        params={"generator": "dynamic-bg", "frames": frames, "height": height,
                "width": width, "object_size": object_size,
                "dynamic_amplitude": dynamic_amplitude, "seed": seed},
    )
