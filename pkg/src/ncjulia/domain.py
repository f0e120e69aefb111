"""Polynomial matrix domains: membership, boundary geometry, inward cones.

A domain is cut out by a square matrix of free polynomials: the point x
belongs to it when ||delta(x)|| < 1.  Non-square polynomial grids are padded
with zero polynomials to a square J x J shape for the transfer-function
machinery; geometric tests (isometry of the boundary value, inward cones)
use the original unpadded grid, since zero padding inserts zero rows or
columns into the Gram matrix and would falsify them.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DimensionError, ParseError, PreconditionError
from .freepoly import (
    FreePolynomial,
    MatrixTuple,
    directional_derivative_poly,
    eval_poly,
    poly_from_json,
    poly_to_json,
)
from .numerics import (
    RANK_RTOL,
    hermitian_part_max_eig,
    numerical_rank,
    operator_norm,
    is_self_adjoint,
)

DISTINGUISHED_TOL = 1e-8


class GDeltaExitWarning(UserWarning):
    """Some generated approach points fell outside the domain and were dropped."""


@dataclass(frozen=True)
class DeltaMatrix:
    """Square J x J grid of free polynomials defining the domain.

    ``entries`` is the padded square grid; ``original_shape`` remembers the
    grid the domain was built from before zero padding.
    """

    d: int
    entries: tuple
    original_shape: tuple

    def __post_init__(self):
        rows = len(self.entries)
        for row in self.entries:
            if len(row) != rows:
                raise DimensionError("padded entry grid must be square")
            for p in row:
                if not isinstance(p, FreePolynomial):
                    raise DimensionError("entries must be FreePolynomial instances")
                if p.d != self.d:
                    raise DimensionError(
                        f"entry has d={p.d}, delta matrix has d={self.d}"
                    )
        r0, c0 = self.original_shape
        if not (0 < r0 <= rows and 0 < c0 <= rows and max(r0, c0) == rows):
            raise DimensionError("original shape inconsistent with padded size")

    @classmethod
    def from_grid(cls, d: int, grid) -> "DeltaMatrix":
        """Build from a (possibly non-square) grid, padding with zeros."""
        rows = [list(row) for row in grid]
        if not rows or not rows[0]:
            raise DimensionError("entry grid must be non-empty")
        r0 = len(rows)
        c0 = len(rows[0])
        for row in rows:
            if len(row) != c0:
                raise DimensionError("entry grid rows must have equal length")
        j = max(r0, c0)
        zero = FreePolynomial.zero(d)
        padded = [
            tuple(rows[a][b] if a < r0 and b < c0 else zero for b in range(j))
            for a in range(j)
        ]
        return cls(d=d, entries=tuple(padded), original_shape=(r0, c0))

    @property
    def J(self) -> int:
        return len(self.entries)

    def is_homogeneous_degree_one(self) -> bool:
        return all(p.is_homogeneous_degree_one() for row in self.entries for p in row)


def _eval_grid(entries, x: MatrixTuple) -> np.ndarray:
    n = x.n
    rows = len(entries)
    cols = len(entries[0])
    out = np.zeros((rows * n, cols * n), dtype=np.complex128)
    for a in range(rows):
        for b in range(cols):
            out[a * n : (a + 1) * n, b * n : (b + 1) * n] = eval_poly(entries[a][b], x)
    return out


def _original_grid(delta: DeltaMatrix):
    r0, c0 = delta.original_shape
    return tuple(row[:c0] for row in delta.entries[:r0])


def eval_delta(delta: DeltaMatrix, x: MatrixTuple) -> np.ndarray:
    """Padded (Jn) x (Jn) block matrix; block (a, b) is entry (a, b) at x.

    Block layout: the row-block index is slowest, the intra-block index
    fastest, matching the Kronecker conventions of the realization module.
    """
    if delta.d != x.d:
        raise DimensionError(f"delta has d={delta.d} but point has d={x.d}")
    return _eval_grid(delta.entries, x)


def eval_delta_original(delta: DeltaMatrix, x: MatrixTuple) -> np.ndarray:
    """Unpadded evaluation on the original grid shape."""
    if delta.d != x.d:
        raise DimensionError(f"delta has d={delta.d} but point has d={x.d}")
    return _eval_grid(_original_grid(delta), x)


def delta_derivative(delta: DeltaMatrix, t: MatrixTuple, h: MatrixTuple) -> np.ndarray:
    """Entrywise directional derivative of the padded grid at t in direction h."""
    if delta.d != t.d or delta.d != h.d:
        raise DimensionError("delta and tuples must share d")
    n = t.n
    j = delta.J
    out = np.zeros((j * n, j * n), dtype=np.complex128)
    for a in range(j):
        for b in range(j):
            out[a * n : (a + 1) * n, b * n : (b + 1) * n] = directional_derivative_poly(
                delta.entries[a][b], t, h
            )
    return out


def _gram_derivative(delta: DeltaMatrix, t: MatrixTuple, h: MatrixTuple) -> np.ndarray:
    """delta(t)* times the derivative of delta at t along h, on the unpadded grid.

    This is the matrix whose sign and self-adjointness define the inward
    cones; it is complex-linear in h.
    """
    grid = _original_grid(delta)
    n = t.n
    rows = len(grid)
    cols = len(grid[0])
    v = _eval_grid(grid, t)
    dv = np.zeros((rows * n, cols * n), dtype=np.complex128)
    for a in range(rows):
        for b in range(cols):
            dv[a * n : (a + 1) * n, b * n : (b + 1) * n] = directional_derivative_poly(
                grid[a][b], t, h
            )
    return v.conj().T @ dv


@dataclass(frozen=True)
class Membership:
    inside: bool
    margin: float
    norm: float

    def __bool__(self):
        return self.inside


def in_G_delta(delta: DeltaMatrix, x: MatrixTuple) -> Membership:
    """Strict membership ||delta(x)|| < 1, with margin 1 - ||delta(x)||."""
    nrm = operator_norm(eval_delta(delta, x))
    return Membership(inside=nrm < 1.0, margin=1.0 - nrm, norm=nrm)


def on_distinguished_boundary(
    delta: DeltaMatrix, t: MatrixTuple, tol: float = DISTINGUISHED_TOL
) -> bool:
    """True iff the unpadded boundary value is an isometry: ||d(T)*d(T) - I|| <= tol."""
    v = eval_delta_original(delta, t)
    eye = np.eye(v.shape[1], dtype=np.complex128)
    return operator_norm(v.conj().T @ v - eye) <= tol


def nontangential_constant(delta: DeltaMatrix, z: MatrixTuple, t: MatrixTuple) -> float:
    """Aperture ||delta(Z) - delta(T)|| / (1 - ||delta(Z)||^2); inf when Z is not interior.

    A sequence approaches T non-tangentially iff this stays bounded along it.
    """
    dz = eval_delta(delta, z)
    dt = eval_delta(delta, t)
    denominator = 1.0 - operator_norm(dz) ** 2
    if denominator <= 0.0:
        return float("inf")
    return operator_norm(dz - dt) / denominator


def _check_direction_norm(h: MatrixTuple):
    if h.max_component_norm() > 1.0 + 1e-12:
        raise PreconditionError(
            f"direction exceeds the unit ball: max component norm {h.max_component_norm():.6g}"
        )


def in_Gamma(delta: DeltaMatrix, t: MatrixTuple, h: MatrixTuple, beta: float = 1e-8) -> bool:
    """Inward cone test: the Hermitian part of d(T)* grad d(T)[h] is <= -beta."""
    _check_direction_norm(h)
    return hermitian_part_max_eig(_gram_derivative(delta, t, h)) <= -beta


def in_Sigma(delta: DeltaMatrix, t: MatrixTuple, h: MatrixTuple, tol: float = 1e-8) -> bool:
    """Self-adjointness cone: d(T)* grad d(T)[h] is self-adjoint within tol."""
    _check_direction_norm(h)
    m = _gram_derivative(delta, t, h)
    if m.shape[0] != m.shape[1]:
        return False
    return is_self_adjoint(m, tol)


def in_Delta(
    delta: DeltaMatrix,
    t: MatrixTuple,
    h: MatrixTuple,
    beta: float = 1e-8,
    tol: float = 1e-8,
) -> bool:
    """Transverse inward cone: self-adjoint within tol and eigenvalues <= -beta."""
    _check_direction_norm(h)
    m = _gram_derivative(delta, t, h)
    if m.shape[0] != m.shape[1] or not is_self_adjoint(m, tol):
        return False
    return hermitian_part_max_eig(m) <= -beta


# --- assumption checks ------------------------------------------------------


def _vec_to_tuple(vec: np.ndarray, d: int, n: int) -> MatrixTuple:
    return MatrixTuple(tuple(vec.reshape(d, n, n)[r] for r in range(d)))


def _gram_derivative_matrix(delta: DeltaMatrix, t: MatrixTuple) -> np.ndarray:
    """Matrix of the complex-linear map h -> d(T)* grad d(T)[h] on vectorized tuples."""
    d, n = t.d, t.n
    dim = d * n * n
    cols = []
    for k in range(dim):
        vec = np.zeros(dim, dtype=np.complex128)
        vec[k] = 1.0
        m = _gram_derivative(delta, t, _vec_to_tuple(vec, d, n))
        cols.append(m.reshape(-1))
    return np.column_stack(cols)


def _project_to_unit_ball(vec: np.ndarray, d: int, n: int) -> np.ndarray:
    comps = vec.reshape(d, n, n).copy()
    for r in range(d):
        u, s, vh = np.linalg.svd(comps[r])
        comps[r] = u @ np.diag(np.minimum(s, 1.0)) @ vh
    return comps.reshape(-1)


@dataclass(frozen=True)
class InwardWitnessResult:
    found: bool
    witness: MatrixTuple | None
    beta: float  # transversality margin achieved by the witness (>= 0 when found)


def _sigma_nullspace(delta: DeltaMatrix, t: MatrixTuple, lmat: np.ndarray) -> np.ndarray:
    """Orthonormal real basis (columns) of {h : gram derivative self-adjoint}.

    The tuple h is coordinatized as (Re vec, Im vec) in R^{2 d n^2}; the
    self-adjointness defect is real-linear in these coordinates.
    """
    d, n = t.d, t.n
    dim = d * n * n
    gram_dim = delta.original_shape[1] * n

    def defect_map(real_vec: np.ndarray) -> np.ndarray:
        vec = real_vec[:dim] + 1j * real_vec[dim:]
        m = (lmat @ vec).reshape(gram_dim, gram_dim)
        flat = (m - m.conj().T).reshape(-1)
        return np.concatenate([flat.real, flat.imag])

    constraint = np.column_stack([defect_map(col) for col in np.eye(2 * dim)])
    _, s, vh = np.linalg.svd(constraint)
    if s.size == 0 or s[0] == 0.0:
        return np.eye(2 * dim)
    null_mask = np.concatenate([s <= RANK_RTOL * s[0], np.ones(2 * dim - s.size, bool)])
    return vh.T[:, null_mask]


def find_transverse_direction(
    delta: DeltaMatrix,
    t: MatrixTuple,
    beta_min: float = 1e-8,
    sym_tol: float = 1e-8,
    n_starts: int = 50,
    n_iterations: int = 150,
    seed: int = 0,
) -> InwardWitnessResult:
    """Search the unit ball for K with d(T)* grad d(T)[K] <= -beta, self-adjoint.

    Tries K = -T first (exact for grids homogeneous of degree one, where the
    Gram derivative at -T is minus the identity).  Otherwise runs projected
    subgradient descent on the largest eigenvalue of the Hermitian part from
    random starts; candidates whose Gram derivative is not self-adjoint are
    repaired by projecting onto the self-adjointness subspace and re-scored.
    Failure means "no witness found", not certified infeasibility.
    """
    d, n = t.d, t.n
    dim = d * n * n

    def assess(k: MatrixTuple):
        m = _gram_derivative(delta, t, k)
        return hermitian_part_max_eig(m), operator_norm(m - m.conj().T)

    best_val, best_k = np.inf, None

    def consider(k: MatrixTuple):
        nonlocal best_val, best_k
        top_eig, sym_defect = assess(k)
        if sym_defect <= sym_tol and top_eig < best_val:
            best_val, best_k = top_eig, k
        return top_eig, sym_defect

    neg_t = -1.0 * t
    nrm = neg_t.max_component_norm()
    if nrm > 0:
        consider(neg_t * min(1.0, 1.0 / nrm))
    if best_val <= -beta_min:
        return InwardWitnessResult(found=True, witness=best_k, beta=-best_val)

    lmat = _gram_derivative_matrix(delta, t)
    gram_dim = delta.original_shape[1] * n
    sigma_basis = _sigma_nullspace(delta, t, lmat)

    def sigma_project(vec: np.ndarray) -> np.ndarray:
        real_vec = np.concatenate([vec.real, vec.imag])
        proj = sigma_basis @ (sigma_basis.T @ real_vec)
        return proj[:dim] + 1j * proj[dim:]

    rng = np.random.default_rng(seed)
    for _ in range(n_starts):
        vec = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
        vec = _project_to_unit_ball(vec, d, n)
        for it in range(n_iterations):
            m = (lmat @ vec).reshape(gram_dim, gram_dim)
            herm = (m + m.conj().T) / 2.0
            _, evecs = np.linalg.eigh(herm)
            top = evecs[:, -1]
            grad = lmat.conj().T @ np.outer(top, top.conj()).reshape(-1)
            vec = _project_to_unit_ball(vec - (0.5 / np.sqrt(it + 1.0)) * grad, d, n)
        k = _vec_to_tuple(vec, d, n)
        top_eig, sym_defect = consider(k)
        if sym_defect > sym_tol and top_eig < 0:
            # inward but not transverse: project onto the self-adjoint subspace
            repaired = sigma_project(vec)
            if np.linalg.norm(repaired) > 0:
                consider(_vec_to_tuple(_project_to_unit_ball(repaired, d, n), d, n))
        if best_val <= -beta_min:
            break
    found = best_val <= -beta_min
    return InwardWitnessResult(found=found, witness=best_k, beta=-best_val)


def sigma_span_dimension(delta: DeltaMatrix, t: MatrixTuple) -> int:
    """Complex dimension of the span of the self-adjointness cone at t.

    The constraint M(h) = M(h)* is real-linear; its real solution space is
    computed by SVD and the span dimension is the complex rank of a basis.
    """
    d, n = t.d, t.n
    dim = d * n * n
    lmat = _gram_derivative_matrix(delta, t)
    null_basis = _sigma_nullspace(delta, t, lmat)
    if null_basis.shape[1] == 0:
        return 0
    complex_basis = [col[:dim] + 1j * col[dim:] for col in null_basis.T]
    return numerical_rank(complex_basis)


@dataclass(frozen=True)
class AssumptionReport:
    """Outcome of the inward-direction assumptions at a boundary point."""

    a1: bool
    a1_witness: MatrixTuple | None
    a1_beta: float
    a1_inconclusive: bool
    a2: bool
    sigma_span_dim: int
    full_dim: int

    @property
    def a(self) -> bool:
        return self.a1 and self.a2


def check_assumption_A(
    delta: DeltaMatrix,
    t: MatrixTuple,
    beta_min: float = 1e-8,
    n_starts: int = 50,
    seed: int = 0,
    boundary_tol: float = DISTINGUISHED_TOL,
) -> AssumptionReport:
    """Check that transverse inward directions exist and span everything.

    The first part searches for a witness direction; a failed search is
    reported as inconclusive, never as certified infeasibility.  The second
    part computes the complex span dimension of the self-adjointness cone and
    compares it with d * n^2.
    """
    if not on_distinguished_boundary(delta, t, boundary_tol):
        raise PreconditionError("assumption checks require T on the distinguished boundary")
    witness = find_transverse_direction(
        delta, t, beta_min=beta_min, n_starts=n_starts, seed=seed
    )
    span = sigma_span_dimension(delta, t)
    full = t.d * t.n * t.n
    return AssumptionReport(
        a1=witness.found,
        a1_witness=witness.witness,
        a1_beta=witness.beta,
        a1_inconclusive=not witness.found,
        a2=span == full,
        sigma_span_dim=span,
        full_dim=full,
    )


# --- approach sequences -----------------------------------------------------


@dataclass(frozen=True)
class ApproachSequence:
    """Recipe for a sequence approaching the base point.

    kind "radial" generates (1 - t) * T for each step t; kind "ray" generates
    T + t * K.  Steps must decrease geometrically by 2 so the limit
    extrapolation contract holds downstream.
    """

    base: MatrixTuple
    kind: str
    direction: MatrixTuple | None
    steps: tuple

    def __post_init__(self):
        if self.kind not in ("radial", "ray"):
            raise PreconditionError(f"unknown sequence kind {self.kind!r}")
        if self.kind == "ray":
            if self.direction is None:
                raise PreconditionError("ray sequences need a direction tuple")
            if self.direction.d != self.base.d or self.direction.n != self.base.n:
                raise DimensionError("direction must match the base point in d and n")
        if len(self.steps) < 2:
            raise PreconditionError("need at least 2 steps")
        for t in self.steps:
            if not t > 0:
                raise PreconditionError("steps must be positive")


def radial_sequence(t: MatrixTuple, num_steps: int = 10, first_step: float = 0.5) -> ApproachSequence:
    steps = tuple(first_step * 2.0 ** (-k) for k in range(num_steps))
    return ApproachSequence(base=t, kind="radial", direction=None, steps=steps)


def ray_sequence(
    t: MatrixTuple, direction: MatrixTuple, num_steps: int = 10, first_step: float = 0.5
) -> ApproachSequence:
    steps = tuple(first_step * 2.0 ** (-k) for k in range(num_steps))
    return ApproachSequence(base=t, kind="ray", direction=direction, steps=steps)


class SequencePoints(NamedTuple):
    points: list
    steps: list
    dropped: int


def generate_sequence(seq: ApproachSequence, delta: DeltaMatrix) -> SequencePoints:
    """Materialize the sequence, keeping only points inside the domain.

    The radial rule is only meaningful when every monomial of every entry has
    total degree one, so that scaling the point scales the defining matrix;
    this is checked syntactically.  Dropped points are counted and warned
    about; an empty result is an error.
    """
    if seq.kind == "radial" and not delta.is_homogeneous_degree_one():
        raise PreconditionError(
            "radial sequences require a grid homogeneous of degree one"
        )
    points, steps = [], []
    dropped = 0
    for t in seq.steps:
        if seq.kind == "radial":
            z = (1.0 - t) * seq.base
        else:
            z = seq.base + t * seq.direction
        if in_G_delta(delta, z):
            points.append(z)
            steps.append(float(t))
        else:
            dropped += 1
    if dropped:
        warnings.warn(
            f"{dropped} of {len(seq.steps)} sequence points fell outside the domain",
            GDeltaExitWarning,
            stacklevel=2,
        )
    if not points:
        raise PreconditionError("no sequence point lies inside the domain")
    return SequencePoints(points=points, steps=steps, dropped=dropped)


def random_interior_point(
    delta: DeltaMatrix,
    n: int,
    rng: np.random.Generator,
    margin: float = 0.05,
    max_halvings: int = 60,
) -> MatrixTuple:
    """Random point with ||delta(x)|| <= 1 - margin, by scaling a Gaussian tuple."""
    comps = []
    for _ in range(delta.d):
        g = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2.0)
        comps.append(g / max(1.0, float(np.linalg.norm(g, 2))))
    x = MatrixTuple(tuple(comps))
    for _ in range(max_halvings):
        if operator_norm(eval_delta(delta, x)) <= 1.0 - margin:
            return x
        x = 0.5 * x
    raise PreconditionError("could not scale a random point into the domain")


# --- JSON wire format -------------------------------------------------------


def delta_to_json(delta: DeltaMatrix) -> dict:
    return {
        "d": delta.d,
        "J": delta.J,
        "entries": [[poly_to_json(p) for p in row] for row in delta.entries],
    }


def delta_from_json(obj) -> DeltaMatrix:
    """Decode a delta matrix; entries may be polynomial objects or grammar text."""
    if not isinstance(obj, dict):
        raise ParseError(f"expected a delta object, got {type(obj).__name__}")
    try:
        d = int(obj["d"])
        grid = obj["entries"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"delta object missing or malformed field: {exc}") from None
    if not isinstance(grid, list) or not grid:
        raise ParseError("delta entries must be a non-empty grid")
    rows = []
    for row in grid:
        if not isinstance(row, list) or not row:
            raise ParseError("delta entries must be a grid of rows")
        rows.append([poly_from_json(p, d) for p in row])
    try:
        out = DeltaMatrix.from_grid(d, rows)
    except DimensionError as exc:
        raise ParseError(str(exc)) from None
    if "J" in obj and int(obj["J"]) != out.J:
        raise ParseError(f"delta lists J={obj['J']} but padded size is {out.J}")
    return out
