"""Per-vertex discrete Gaussian curvature and its Jacobian.

The curvature at a vertex is 2*pi minus the sum of the incident inner
angles.  Summing the extended angles makes the curvature a continuous
function of arbitrary positive radii, and the total-curvature identity

    sum_i K_i = 2 pi chi(M) + lambda * Area(M)

holds exactly by construction because the area is assembled from the same
per-face angle defects.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .angles import angle_jacobians_batch, extended_angles_batch
from .complexes import SurfaceComplex
from .errors import BoundaryError, NotAdmissibleError
from .packing import (
    Background,
    PackingMetric,
    _edge_lengths_arrays,
    face_lengths,
    triangle_inequality_violations,
    u_to_radii_array,
)


@dataclass(frozen=True)
class CurvatureVector:
    """Per-vertex curvature, degeneracy flag and total area."""

    values: np.ndarray
    extended: bool       # True iff some face was degenerate
    total_area: float    # hyperbolic area; 0 in euclidean background

    @property
    def total(self) -> float:
        return float(self.values.sum())


def _vertex_angle_sums(complex: SurfaceComplex, angles: np.ndarray) -> np.ndarray:
    return np.bincount(
        complex.faces.ravel(), weights=angles.ravel(), minlength=complex.vertex_count
    )


def _assemble(
    complex: SurfaceComplex, metric: PackingMetric, angles: np.ndarray, degenerate: np.ndarray
) -> CurvatureVector:
    values = 2.0 * np.pi - _vertex_angle_sums(complex, angles)
    if metric.background is Background.HYPERBOLIC:
        defects = np.maximum(0.0, np.pi - angles.sum(axis=1))
        area = float(defects.sum())
    else:
        area = 0.0
    return CurvatureVector(values=values, extended=bool(degenerate.any()), total_area=area)


def make_curvature_evaluator(
    complex: SurfaceComplex, background: Background, inversive: np.ndarray
):
    """Extended curvature as a plain function of raw u-values.

    Precomputes the gather indices and skips per-call metric construction;
    the returned callable produces bit-identical values to
    ``extended_curvature`` and is what the flow and potential inner loops
    use.
    """
    inv = np.asarray(inversive, dtype=float)
    tail, head = complex.edges[:, 0], complex.edges[:, 1]
    opposite = complex.face_opposite_edges

    def evaluate(u_values: np.ndarray) -> np.ndarray:
        radii = u_to_radii_array(u_values, background)
        lengths = _edge_lengths_arrays(background, radii[tail], radii[head], inv)
        angles, _ = extended_angles_batch(background, lengths[opposite])
        return 2.0 * np.pi - _vertex_angle_sums(complex, angles)

    return evaluate


def extended_curvature(complex: SurfaceComplex, metric: PackingMetric) -> CurvatureVector:
    """Curvature from the extended angles, defined for all positive radii."""
    lengths = face_lengths(complex, metric)
    angles, degenerate = extended_angles_batch(metric.background, lengths)
    return _assemble(complex, metric, angles, degenerate)


def curvature(complex: SurfaceComplex, metric: PackingMetric) -> CurvatureVector:
    """Classical curvature; requires the metric to be admissible."""
    lengths = face_lengths(complex, metric)
    bad = triangle_inequality_violations(lengths)
    if bad.any():
        violators = [int(f) for f in np.nonzero(bad)[0]]
        raise NotAdmissibleError(
            f"metric violates triangle inequalities in faces {violators}", violators
        )
    angles, degenerate = extended_angles_batch(metric.background, lengths)
    return _assemble(complex, metric, angles, degenerate)


def gauss_bonnet_defect(complex: SurfaceComplex, metric: PackingMetric) -> float:
    """sum(K) - 2 pi chi - lambda * Area; a numerical health check, ~0 always."""
    curv = extended_curvature(complex, metric)
    lam = metric.background.area_weight
    return curv.total - 2.0 * np.pi * complex.euler_characteristic - lam * curv.total_area


def curvature_jacobian(complex: SurfaceComplex, metric: PackingMetric) -> np.ndarray:
    """The N x N matrix d(K)/d(u), assembled from per-face angle Jacobians.

    Requires every face to be strictly admissible (BoundaryError otherwise).
    Symmetric; positive definite in hyperbolic background for inversive
    distances >= 0; in euclidean background it has the all-ones vector in
    its kernel (scaling invariance).
    """
    faces = complex.faces
    radii_tri = metric.radii[faces]
    inv_tri = metric.inversive[complex.face_opposite_edges]
    try:
        face_jac = angle_jacobians_batch(metric.background, radii_tri, inv_tri)
    except BoundaryError:
        lengths = face_lengths(complex, metric)
        bad = [int(f) for f in np.nonzero(triangle_inequality_violations(lengths))[0]]
        raise BoundaryError(
            f"curvature Jacobian undefined: degenerate or boundary faces {bad}"
        ) from None

    n = complex.vertex_count
    jac = np.zeros((n, n))
    for p in range(3):
        for q in range(3):
            np.subtract.at(jac, (faces[:, p], faces[:, q]), face_jac[:, p, q])
    return jac
