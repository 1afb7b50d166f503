"""Packing metrics: inversive distances, radii, u-coordinates, edge lengths.

A packing metric assigns a radius to every vertex; together with a per-edge
inversive distance it induces edge lengths

    euclidean:   l^2 = r_i^2 + r_j^2 + 2 r_i r_j I_ij
    hyperbolic:  cosh l = cosh r_i cosh r_j + I_ij sinh r_i sinh r_j

The hyperbolic kernels below avoid the catastrophic cancellation of the
naive formulas at small radii by working with cosh(x) - 1 = 2 sinh^2(x/2).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .complexes import SurfaceComplex
from .errors import DomainError, RangeError

#: cosh/sinh arguments above this overflow double precision downstream.
HYPERBOLIC_SIZE_LIMIT = 350.0

#: below this u-coordinate the squared hyperbolic radius underflows double
#: precision inside the length kernel (radius ~ 1e-131 at u = -300).
U_COORDINATE_FLOOR = -300.0


class Background(Enum):
    """Model geometry realizing the face lengths."""

    EUCLIDEAN = "euclidean"
    HYPERBOLIC = "hyperbolic"

    @property
    def area_weight(self) -> int:
        """Weight of the area term in the total-curvature identity (0 or 1)."""
        return 1 if self is Background.HYPERBOLIC else 0


def _as_readonly(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class PackingMetric:
    """Background geometry, per-edge inversive distance and per-vertex radii.

    By default inversive distances must be >= 0, the standing hypothesis of
    every convergence and rigidity statement implemented here.  Values in
    (-1, 0) are accepted only with ``permissive=True`` and carry no such
    guarantees.
    """

    background: Background
    inversive: np.ndarray
    radii: np.ndarray
    permissive: bool = False

    def __post_init__(self):
        object.__setattr__(self, "inversive", _as_readonly(self.inversive))
        object.__setattr__(self, "radii", _as_readonly(self.radii))
        if self.inversive.ndim != 1 or self.radii.ndim != 1:
            raise DomainError("inversive and radii must be one-dimensional")
        if not np.all(np.isfinite(self.inversive)) or not np.all(np.isfinite(self.radii)):
            raise DomainError("inversive distances and radii must be finite")
        if np.any(self.radii <= 0):
            raise DomainError("all radii must be positive")
        if np.any(self.inversive <= -1):
            raise DomainError("inversive distances must be > -1")
        if not self.permissive and np.any(self.inversive < 0):
            raise DomainError(
                "negative inversive distances require permissive=True"
            )

    def with_radii(self, radii) -> "PackingMetric":
        return PackingMetric(self.background, self.inversive, radii, self.permissive)


@dataclass(frozen=True)
class UCoords:
    """Flow coordinates: u = ln tanh(r/2) (hyperbolic, u < 0) or u = ln r."""

    values: np.ndarray
    background: Background

    def __post_init__(self):
        object.__setattr__(self, "values", _as_readonly(self.values))
        if not np.all(np.isfinite(self.values)):
            raise DomainError("u-coordinates must be finite")
        if self.background is Background.HYPERBOLIC and np.any(self.values >= 0):
            raise DomainError("hyperbolic u-coordinates must be negative")


def _check_hyperbolic_sizes(values: np.ndarray, what: str) -> None:
    if np.any(values > HYPERBOLIC_SIZE_LIMIT):
        raise RangeError(
            f"{what} above {HYPERBOLIC_SIZE_LIMIT:g} would overflow cosh/sinh"
        )


def _edge_lengths_arrays(
    background: Background, ri: np.ndarray, rj: np.ndarray, inv: np.ndarray
) -> np.ndarray:
    """Vectorized edge lengths; stable for radii from 1e-300 up to the cap."""
    if background is Background.EUCLIDEAN:
        sq = (ri - rj) ** 2 + 2.0 * (1.0 + inv) * ri * rj
        if np.any(sq <= 0):
            raise DomainError("euclidean edge length is not defined (l^2 <= 0)")
        return np.sqrt(sq)
    _check_hyperbolic_sizes(np.maximum(ri, rj), "radii")
    # cosh(l) - 1 written without cancellation for inv >= 0:
    #   sinh^2((ri+rj)/2) + sinh^2((ri-rj)/2) + inv sinh(ri) sinh(rj)
    excess = (
        np.sinh(0.5 * (ri + rj)) ** 2
        + np.sinh(0.5 * (ri - rj)) ** 2
        + inv * np.sinh(ri) * np.sinh(rj)
    )
    if np.any(excess <= 0):
        raise DomainError("hyperbolic edge length is not defined (cosh l < 1)")
    return np.log1p(excess + np.sqrt(excess * (excess + 2.0)))


def edge_length(background: Background, r_i: float, r_j: float, inversive: float) -> float:
    """Length of one edge from its endpoint radii and inversive distance."""
    if r_i <= 0 or r_j <= 0:
        raise DomainError("radii must be positive")
    if inversive <= -1:
        raise DomainError("inversive distance must be > -1")
    out = _edge_lengths_arrays(
        background, np.asarray([r_i]), np.asarray([r_j]), np.asarray([inversive])
    )
    return float(out[0])


def all_edge_lengths(complex: SurfaceComplex, metric: PackingMetric) -> np.ndarray:
    """Per-edge lengths in the canonical edge order."""
    ri = metric.radii[complex.edges[:, 0]]
    rj = metric.radii[complex.edges[:, 1]]
    try:
        return _edge_lengths_arrays(metric.background, ri, rj, metric.inversive)
    except DomainError:
        # Re-run edge by edge to name the offender.
        for k, (i, j) in enumerate(complex.edges):
            try:
                edge_length(
                    metric.background,
                    float(metric.radii[i]),
                    float(metric.radii[j]),
                    float(metric.inversive[k]),
                )
            except DomainError as exc:
                raise DomainError(f"edge ({i}, {j}): {exc}") from None
        raise


def inversive_from_length(
    background: Background, r_i: float, r_j: float, length: float
) -> float:
    """Invert the edge-length formula: recover I from (l, r_i, r_j)."""
    if r_i <= 0 or r_j <= 0 or length <= 0:
        raise DomainError("radii and length must be positive")
    if background is Background.EUCLIDEAN:
        return (length**2 - r_i**2 - r_j**2) / (2.0 * r_i * r_j)
    _check_hyperbolic_sizes(np.asarray([r_i, r_j, length]), "radii or length")
    return (np.cosh(length) - np.cosh(r_i) * np.cosh(r_j)) / (
        np.sinh(r_i) * np.sinh(r_j)
    )


def face_lengths(complex: SurfaceComplex, metric: PackingMetric) -> np.ndarray:
    """(F, 3) lengths, column m holding the edge opposite face vertex m."""
    lengths = all_edge_lengths(complex, metric)
    return lengths[complex.face_opposite_edges]


def triangle_inequality_violations(lengths: np.ndarray) -> np.ndarray:
    """Boolean mask of rows of an (F, 3) length array violating strictness."""
    x0, x1, x2 = lengths[:, 0], lengths[:, 1], lengths[:, 2]
    return (x0 + x1 <= x2) | (x0 + x2 <= x1) | (x1 + x2 <= x0)


def is_admissible(
    complex: SurfaceComplex, metric: PackingMetric
) -> tuple[bool, list[int]]:
    """Whether every face satisfies strict triangle inequalities.

    Returns the verdict and the complete list of violating faces.  The
    comparison is exact: the admissible space is open and the extended
    angle kernel handles the boundary continuously, so no epsilon fuzzing
    is wanted here.
    """
    bad = triangle_inequality_violations(face_lengths(complex, metric))
    violators = [int(f) for f in np.nonzero(bad)[0]]
    return (len(violators) == 0, violators)


# ---------------------------------------------------------------------------
# u-coordinates
# ---------------------------------------------------------------------------

def radii_to_u_array(radii: np.ndarray, background: Background) -> np.ndarray:
    """u = ln tanh(r/2) (hyperbolic) or u = ln r (euclidean), elementwise.

    tanh collapses to 1.0 beyond r ~ 38 and exp(-r) collapses to 1.0 below
    r ~ 1e-16, so ln tanh(r/2) = ln(1 - e^-r) - ln(1 + e^-r) is evaluated
    with expm1/log1p in the regime where each piece stays exact.
    """
    radii = np.asarray(radii, dtype=float)
    if np.any(radii <= 0):
        raise DomainError("all radii must be positive")
    if background is Background.EUCLIDEAN:
        return np.log(radii)
    e = np.exp(-radii)
    small = radii < 1.0
    out = np.empty_like(radii)
    out[small] = np.log(-np.expm1(-radii[small])) - np.log1p(e[small])
    out[~small] = np.log1p(-e[~small]) - np.log1p(e[~small])
    if not np.all(out < 0):
        raise DomainError("radius too large for the u-coordinate change")
    return out


def u_to_radii_array(u: np.ndarray, background: Background) -> np.ndarray:
    """Inverse coordinate change; hyperbolic r = 2 artanh(e^u).

    Written as log1p(2 e^u / (1 - e^u)) with the denominator from expm1,
    exact from u near 0 (huge radii) down to the underflow floor.
    """
    u = np.asarray(u, dtype=float)
    if background is Background.EUCLIDEAN:
        return np.exp(u)
    if np.any(u >= 0):
        raise DomainError("hyperbolic u-coordinates must be negative")
    radii = np.log1p(2.0 * np.exp(u) / (-np.expm1(u)))
    if np.any(radii <= 0):
        raise DomainError("radius underflow: u-coordinate too negative")
    return radii


def to_u(metric: PackingMetric) -> UCoords:
    """u-coordinates of a packing metric."""
    return UCoords(radii_to_u_array(metric.radii, metric.background), metric.background)


def from_u(u: UCoords, inversive: np.ndarray, permissive: bool = False) -> PackingMetric:
    """Packing metric with the given inversive distances at u-coordinates u."""
    radii = u_to_radii_array(u.values, u.background)
    return PackingMetric(u.background, inversive, radii, permissive)
