"""
Model Spaces

Finite-dimensional smooth Banach spaces used throughout the toolkit:
- Euclidean (Hilbert) spaces
- l_p spaces with p >= 2 (the 2-uniformly smooth range)

Every function here accepts either a single vector of shape (dim,) or a
batch of shape (..., dim) and works along the last axis, so estimators and
validators can evaluate 10^5 samples without Python loops.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from utils.settings import SAMPLE_RADIUS, TOLERANCE

logger = logging.getLogger(__name__)

# Vectors and dual vectors are plain float arrays; a DualVector holds the
# coordinates of a functional in the dual basis.
Vector = np.ndarray
DualVector = np.ndarray

HILBERT = "hilbert"
LP = "lp"


class DimensionMismatchError(ValueError):
    """Raised when a vector does not live in the space it is used with."""


# ========================================
# SPACE DESCRIPTOR
# ========================================

def hilbert_eta(eps):
    """Modulus of uniform convexity of a Hilbert space, eps^2 / 8."""
    return eps * eps / 8


def clarkson_eta(p: float) -> Callable:
    """
    Clarkson's modulus of convexity of l_p for p >= 2.

    Returns:
        callable: eps -> 1 - (1 - (eps/2)^p)^(1/p)
    """
    def eta(eps):
        ratio = min(float(eps) / 2.0, 1.0)
        return 1.0 - (1.0 - ratio ** p) ** (1.0 / p)

    return eta


@dataclass(frozen=True)
class Space:
    """
    Finite-dimensional space descriptor.

    Attributes:
        kind: 'hilbert' or 'lp'
        dim: dimension
        p: exponent (2 for hilbert)
        c: declared smoothness constant, rho(tau) <= c * tau^2
        d: declared constant of the linear beta* bound
        eta: valid modulus of uniform convexity
        eta_label: human-readable description of eta
    """
    kind: str
    dim: int
    p: float
    c: float
    d: float
    eta: Callable = field(compare=False, repr=False)
    eta_label: str = ""

    @property
    def q(self) -> float:
        """Conjugate exponent of the dual space."""
        return self.p / (self.p - 1.0)

    @property
    def label(self) -> str:
        if self.kind == HILBERT:
            return f"hilbert^{self.dim}"
        return f"l_{self.p:g}^{self.dim}"

    def describe(self) -> dict:
        return {
            "kind": self.kind,
            "dim": self.dim,
            "p": self.p,
            "c": self.c,
            "d": self.d,
            "eta": self.eta_label,
        }


def hilbert_space(dim: int) -> Space:
    """Euclidean space R^dim with c = 1/2, d = 1, eta(eps) = eps^2/8."""
    if dim < 1:
        raise ValueError(f"dim must be a positive integer, got {dim}")
    return Space(kind=HILBERT, dim=int(dim), p=2.0, c=0.5, d=1.0,
                 eta=hilbert_eta, eta_label="eps^2/8")


def lp_space(
    dim: int,
    p: float,
    d: Optional[float] = None,
    c: Optional[float] = None,
    eta: Optional[Callable] = None,
) -> Space:
    """
    l_p^dim with p >= 2.

    The declared d defaults to p - 1 and c to (p - 1)/2. Both are claims:
    moduli.check_lemma1_ii and moduli.check_smoothness_constant test them.

    Args:
        dim: dimension
        p: exponent, at least 2
        d: declared constant for the linear beta* bound
        c: declared smoothness constant
        eta: valid modulus of uniform convexity (Clarkson's by default)

    Returns:
        Space
    """
    if dim < 1:
        raise ValueError(f"dim must be a positive integer, got {dim}")
    p = float(p)
    if not math.isfinite(p) or p < 2.0:
        raise ValueError(f"l_p spaces need 2 <= p < inf, got p={p}")
    d = float(p - 1.0 if d is None else d)
    c = float((p - 1.0) / 2.0 if c is None else c)
    if d < 1.0:
        raise ValueError(f"declared d must be >= 1, got {d}")
    if c <= 0.0:
        raise ValueError(f"declared c must be positive, got {c}")
    label = "user-declared" if eta is not None else f"clarkson(p={p:g})"
    return Space(kind=LP, dim=int(dim), p=p, c=c, d=d,
                 eta=eta or clarkson_eta(p), eta_label=label)


# ========================================
# VECTORS
# ========================================

def as_vector(space: Space, coords) -> Vector:
    """
    Convert coordinates to a read-only float vector of the space.

    Raises:
        DimensionMismatchError: wrong length
        ValueError: NaN or infinite entries
    """
    x = np.array(coords, dtype=float).reshape(-1)
    _check_dim(space, x)
    if not np.all(np.isfinite(x)):
        raise ValueError("vectors must have finite entries")
    x.setflags(write=False)
    return x


def _check_dim(space: Space, x: np.ndarray) -> None:
    if x.shape[-1:] != (space.dim,):
        raise DimensionMismatchError(
            f"expected vectors of dimension {space.dim} for {space.label}, "
            f"got shape {x.shape}"
        )


def lp_norm(x: np.ndarray, p: float) -> np.ndarray:
    """l_p norm along the last axis for any 1 < p < inf."""
    if p == 2.0:
        return np.sqrt(np.sum(x * x, axis=-1))
    a = np.abs(x)
    # scale by the max entry so |x_i|^p neither overflows nor underflows
    scale = np.max(a, axis=-1, keepdims=True)
    safe = np.where(scale > 0, scale, 1.0)
    return np.squeeze(safe, axis=-1) * np.sum((a / safe) ** p, axis=-1) ** (1.0 / p)


def lp_duality(x: np.ndarray, p: float) -> np.ndarray:
    """Normalized duality map of l_p: ||x||^(2-p) |x_i|^(p-1) sign(x_i), j(0)=0."""
    if p == 2.0:
        return np.array(x, dtype=float, copy=True)
    n = lp_norm(x, p)[..., None]
    safe = np.where(n > 0, n, 1.0)
    # ||x||^(2-p) |x_i|^(p-1) = ||x|| (|x_i|/||x||)^(p-1)
    out = safe * (np.abs(x) / safe) ** (p - 1.0) * np.sign(x)
    return np.where(n > 0, out, 0.0)


# ========================================
# CORE OPERATIONS
# ========================================

def norm(space: Space, x) -> np.ndarray:
    """
    Norm of x in the space (l_2 for hilbert, l_p for lp).

    Returns a float for a single vector and an array for a batch.
    """
    x = np.asarray(x, dtype=float)
    _check_dim(space, x)
    return lp_norm(x, space.p)


def dual_norm(space: Space, f) -> np.ndarray:
    """Norm of a functional in E* = l_q, 1/p + 1/q = 1."""
    f = np.asarray(f, dtype=float)
    _check_dim(space, f)
    return lp_norm(f, space.q)


def duality_map(space: Space, x) -> DualVector:
    """
    The (single-valued) normalized duality map j(x).

    Contract: pairing(j(x), x) = ||x||^2 and dual_norm(j(x)) = ||x||.
    """
    x = np.asarray(x, dtype=float)
    _check_dim(space, x)
    return lp_duality(x, space.p)


def pairing(f, y) -> np.ndarray:
    """Evaluate the functional f at y (coordinate dot product)."""
    f = np.asarray(f, dtype=float)
    y = np.asarray(y, dtype=float)
    if f.shape[-1:] != y.shape[-1:]:
        raise DimensionMismatchError(
            f"cannot pair functional of length {f.shape[-1:]} with vector of length {y.shape[-1:]}"
        )
    return np.sum(f * y, axis=-1)


def within_tolerance(value: float, target: float, tol: float = TOLERANCE) -> bool:
    """Relative comparison above magnitude 1, absolute below."""
    return abs(value - target) <= tol * max(1.0, abs(target))


# ========================================
# SAMPLING
# ========================================

def coordinate_probes(space: Space) -> np.ndarray:
    """The 2*dim signed coordinate unit vectors +e_1, -e_1, +e_2, -e_2, ..."""
    eye = np.eye(space.dim)
    probes = np.empty((2 * space.dim, space.dim))
    probes[0::2] = eye
    probes[1::2] = -eye
    return probes


def sample_unit_sphere(space: Space, seed: int, count: int) -> np.ndarray:
    """
    Deterministic sample of the unit sphere S(E).

    The signed coordinate vectors come first, then seeded Gaussian directions
    normalized in the space's own norm. A larger count extends a smaller one
    with the same seed (prefix-stable), so max/min estimates are monotone in
    the probe budget.

    Args:
        space: the space
        seed: RNG seed
        count: number of unit vectors (>= 1)

    Returns:
        np.ndarray: shape (count, dim)
    """
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    prefix = coordinate_probes(space)[:count]
    remaining = count - prefix.shape[0]
    if remaining == 0:
        return prefix
    rng = np.random.default_rng(seed)
    directions = rng.standard_normal((remaining, space.dim))
    lengths = lp_norm(directions, space.p)[:, None]
    return np.vstack([prefix, directions / lengths])


def sample_points(space: Space, seed: int, count: int, radius: float = SAMPLE_RADIUS) -> np.ndarray:
    """Seeded points with coordinates uniform in [-radius, radius]."""
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    rng = np.random.default_rng(seed)
    return rng.uniform(-radius, radius, size=(count, space.dim))


def sample_pairs(space: Space, seed: int, count: int, radius: float = SAMPLE_RADIUS):
    """Seeded pairs (x, y) of points, each of shape (count, dim)."""
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    rng = np.random.default_rng(seed)
    both = rng.uniform(-radius, radius, size=(2, count, space.dim))
    return both[0], both[1]
