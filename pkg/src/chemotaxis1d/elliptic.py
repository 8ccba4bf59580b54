"""Screened-Poisson solve for the chemoattractant on the line.

The concentration S solves -S'' + S = rho with decay at infinity, i.e.
S = K * rho with kernel K(x) = exp(-|x|) / 2.  Two independent routes are
provided on a uniform cell-centred grid:

* :func:`solve_convolution` evaluates the kernel sum exactly for the
  midpoint discretisation of rho in O(n) using left/right exponential
  prefix recursions.
* :func:`solve_fem` assembles lumped P1 finite elements for the same
  equation on the truncated domain with outgoing-exponential Robin ends
  (S' = S on the left, S' = -S on the right).

The slope dS/dx uses the differentiated kernel -sgn(x-y) K(x-y) with the
principal-value convention that a cell exerts no pull on itself.  The two
solvers agree to O(dx^2) and serve as mutual checks; do not collapse one
into the other.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

# ======================================================================
# grid and field containers
# ======================================================================


@dataclass(frozen=True)
class Grid:
    """Uniform cell-centred grid on [x_min, x_max] with n cells."""

    x_min: float
    x_max: float
    n: int

    def __post_init__(self) -> None:
        if not (np.isfinite(self.x_min) and np.isfinite(self.x_max)):
            raise ValueError("grid bounds must be finite")
        if self.x_max <= self.x_min:
            raise ValueError("x_max must exceed x_min")
        if self.n < 2:
            raise ValueError("need at least 2 cells")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.n

    def centers(self) -> np.ndarray:
        """Cell centres x_i = x_min + (i + 1/2) dx.

        On a symmetric domain (x_min == -x_max) the centres are formed as
        (i - (n-1)/2) * dx so that mirror pairs are exact negations; this
        keeps symmetric initial data bitwise symmetric.
        """
        i = np.arange(self.n, dtype=float)
        if self.x_min == -self.x_max:
            return (i - 0.5 * (self.n - 1)) * self.dx
        return self.x_min + (i + 0.5) * self.dx


@dataclass
class Field:
    """Cell values of a density or potential on a :class:`Grid`."""

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.n,):
            raise ValueError(f"expected {self.grid.n} values, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        self.values = v

    def mass(self) -> float:
        return float(self.values.sum() * self.grid.dx)

    def linf(self) -> float:
        return float(np.max(np.abs(self.values)))

    @classmethod
    def from_function(cls, grid: Grid, fn) -> "Field":
        return cls(grid, fn(grid.centers()))


# ======================================================================
# O(n) kernel sums via exponential prefix recursions
# ======================================================================

# exp(+-k dx) tables reused across solves on the same grid
_EXP_CACHE: dict[tuple[int, float], tuple[np.ndarray, np.ndarray]] = {}


def _exp_tables(n: int, dx: float) -> tuple[np.ndarray, np.ndarray]:
    key = (n, dx)
    tab = _EXP_CACHE.get(key)
    if tab is None:
        k = np.arange(n, dtype=float)
        tab = (np.exp(k * dx), np.exp(-k * dx))
        if not np.all(np.isfinite(tab[0])):
            raise OverflowError("domain too wide for the exponential prefix sums")
        if len(_EXP_CACHE) > 32:
            _EXP_CACHE.clear()
        _EXP_CACHE[key] = tab
    return tab


def _prefix_sums(values: np.ndarray, dx: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Left/right exponential sums of the cell weights w = rho dx / 2.

    L_i = sum_{j<i} w_j e^{-(i-j) dx},  R_i = sum_{j>i} w_j e^{-(j-i) dx}.
    The right sum runs through the same code on the reversed array so that
    mirror-symmetric inputs produce bitwise mirror-symmetric outputs.
    """
    w = 0.5 * values * dx
    n = w.shape[0]
    grow, decay = _exp_tables(n, dx)

    def left(u: np.ndarray) -> np.ndarray:
        acc = np.cumsum(u * grow)
        out = np.empty(n)
        out[0] = 0.0
        out[1:] = acc[:-1] * decay[1:]
        return out

    return left(w), left(w[::-1])[::-1], w


def solve_convolution(rho: Field) -> Field:
    """Potential S = K * rho by exact kernel sums, O(n).

    Matches the direct O(n^2) sum S_i = sum_j K(x_i - x_j) rho_j dx to
    rounding; the self cell contributes its full weight K(0) rho_i dx.
    """
    left, right, w = _prefix_sums(rho.values, rho.grid.dx)
    return Field(rho.grid, (left + right) + w)


def grad_potential(rho: Field) -> Field:
    """Slope dS/dx by the differentiated kernel, principal value at the cell."""
    left, right, _ = _prefix_sums(rho.values, rho.grid.dx)
    return Field(rho.grid, right - left)


def potential_and_gradient(rho_values: np.ndarray, dx: float) -> tuple[np.ndarray, np.ndarray]:
    """Raw-array variant returning (S, dS/dx) from one prefix pass.

    Used in time-stepping loops where building Field wrappers per step
    would dominate the cost.
    """
    left, right, w = _prefix_sums(rho_values, dx)
    return (left + right) + w, right - left


# ======================================================================
# P1 finite elements with Robin ends
# ======================================================================


def boundary_mass_fraction(rho: Field, cells: int = 5) -> float:
    """Fraction of |rho| mass sitting within `cells` cells of either end."""
    v = np.abs(rho.values)
    total = v.sum()
    if total == 0.0:
        return 0.0
    return float((v[:cells].sum() + v[-cells:].sum()) / total)


def solve_fem(rho: Field) -> Field:
    """Potential from lumped P1 finite elements for -S'' + S = rho.

    Nodes sit at the cell centres.  The ends carry the outgoing-exponential
    Robin conditions S'(a) = S(a), S'(b) = -S(b), exact whenever rho is
    supported well inside the domain; a warning is raised otherwise.
    """
    if boundary_mass_fraction(rho) > 1e-12:
        warnings.warn("rho carries mass within 5 cells of the boundary; "
                      "the Robin ends assume interior support", stacklevel=2)
    n = rho.grid.n
    h = rho.grid.dx
    ab = np.zeros((3, n))
    ab[0, 1:] = -1.0 / h                       # superdiagonal
    ab[2, :-1] = -1.0 / h                      # subdiagonal
    ab[1, :] = 2.0 / h + h                     # stiffness + lumped mass
    ab[1, 0] = 1.0 / h + 1.0 + 0.5 * h         # Robin end, half mass
    ab[1, -1] = 1.0 / h + 1.0 + 0.5 * h
    rhs = h * rho.values.copy()
    rhs[0] *= 0.5
    rhs[-1] *= 0.5
    return Field(rho.grid, solve_banded((1, 1), ab, rhs))


# ======================================================================
# kernel sums at scattered points (particle support)
# ======================================================================


def kernel_sums_at(positions: np.ndarray, weights: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Potential and slope of sum_j w_j K(. - x_j) evaluated at the atoms.

    positions must be sorted ascending.  Coincident atoms are grouped so
    that they exert no pull on one another (principal value), while still
    contributing fully to the potential.  Returns (S, dS) at each atom.
    """
    x = np.asarray(positions, dtype=float)
    w = np.asarray(weights, dtype=float)
    if x.ndim != 1 or x.shape != w.shape:
        raise ValueError("positions and weights must be matching 1d arrays")
    if x.size == 0:
        return np.zeros(0), np.zeros(0)
    if np.any(np.diff(x) < 0.0):
        raise ValueError("positions must be sorted ascending")

    ux, inverse = np.unique(x, return_inverse=True)
    uw = np.bincount(inverse, weights=w)
    m = ux.size
    ref = 0.5 * (ux[0] + ux[-1])
    up = 0.5 * uw * np.exp(ux - ref)
    down = 0.5 * uw * np.exp(ref - ux)

    left = np.zeros(m)
    right = np.zeros(m)
    if m > 1:
        left[1:] = np.cumsum(up)[:-1] * np.exp(ref - ux[1:])
        right[:-1] = np.cumsum(down[::-1])[-2::-1] * np.exp(ux[:-1] - ref)

    s_u = left + right + 0.5 * uw
    g_u = right - left
    return s_u[inverse], g_u[inverse]
