"""Transfer-function evaluation of contractive functions from a colligation.

A function of d non-commuting matrix variables, bounded by one on the domain
of a delta matrix, is encoded by an isometric block colligation

    [[A, B],       acting on  C + (E tensor C^J),   dim E = m,
     [C, D]]

with A scalar, B of shape 1 x (mJ), C of shape (mJ) x 1 and D of shape
(mJ) x (mJ).  At a point x of matrix size n the model vector solves

    [I - (D kron I_n) (I_m kron Delta(x))] u(x) = C kron I_n

and the function value is phi(x) = A I_n + (B kron I_n)(I_m kron Delta(x)) u(x),
where Delta(x) is the (Jn) x (Jn) block evaluation of the delta matrix.

Tensor layout (pinned by a unit test): E is the slowest index, then C^J,
then C^n fastest, so (e, j, i) flattens to e*J*n + j*n + i.  All Kronecker
products below follow this single convention.
"""

from __future__ import annotations

import warnings
from dataclasses import InitVar, dataclass, field

import numpy as np

from .domain import DeltaMatrix, eval_delta, in_G_delta
from .errors import DimensionError, ParseError, PreconditionError
from .freepoly import MatrixTuple
from .numerics import (
    COND_WARN_THRESHOLD,
    as_complex_matrix,
    matrix_from_json,
    matrix_to_json,
    operator_norm,
)

ISOMETRY_TOL = 1e-8


class NearSingularResolventWarning(UserWarning):
    """The model system matrix is ill conditioned at the evaluation point."""


@dataclass(frozen=True, eq=False)
class Realization:
    """Isometric colligation (A, B, C, D) on C + (E tensor C^J).

    Construction fails when the stacked block matrix is farther than
    ``ISOMETRY_TOL`` from an isometry, unless ``validate=False`` (used only to
    build deliberately broken specimens for negative controls).
    """

    dim_E: int
    J: int
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    isometry_defect: float = field(init=False)
    validate: InitVar[bool] = True

    def __post_init__(self, validate):
        if self.dim_E < 1 or self.J < 1:
            raise DimensionError("dim_E and J must be at least 1")
        mj = self.dim_E * self.J
        blocks = {
            "A": (as_complex_matrix(self.A, "A"), (1, 1)),
            "B": (as_complex_matrix(self.B, "B"), (1, mj)),
            "C": (as_complex_matrix(self.C, "C"), (mj, 1)),
            "D": (as_complex_matrix(self.D, "D"), (mj, mj)),
        }
        for name, (block, shape) in blocks.items():
            if block.shape != shape:
                raise DimensionError(
                    f"block {name} has shape {block.shape}, expected {shape}"
                )
            block = block.copy()
            block.flags.writeable = False
            object.__setattr__(self, name, block)
        m = self.colligation
        defect = operator_norm(m.conj().T @ m - np.eye(1 + mj))
        object.__setattr__(self, "isometry_defect", float(defect))
        if validate and defect > ISOMETRY_TOL:
            raise PreconditionError(
                f"colligation is not an isometry: defect {defect:.3e} > {ISOMETRY_TOL:.0e}"
            )

    @property
    def colligation(self) -> np.ndarray:
        top = np.hstack([self.A, self.B])
        bottom = np.hstack([self.C, self.D])
        return np.vstack([top, bottom])


@dataclass(frozen=True, eq=False)
class NcFunctionHandle:
    """A contractive function given by a colligation over a matching domain."""

    realization: Realization
    delta: DeltaMatrix

    def __post_init__(self):
        if self.realization.J != self.delta.J:
            raise DimensionError(
                f"realization has J={self.realization.J} but delta has J={self.delta.J}"
            )


def _model_operators(h: NcFunctionHandle, big_delta: np.ndarray, n: int):
    """Resolvent matrix I - (D kron I_n)(I_m kron Delta) and the rhs C kron I_n."""
    m = h.realization.dim_E
    eye_n = np.eye(n, dtype=np.complex128)
    d_op = np.kron(h.realization.D, eye_n)
    delta_op = np.kron(np.eye(m, dtype=np.complex128), big_delta)
    size = m * h.realization.J * n
    resolvent = np.eye(size, dtype=np.complex128) - d_op @ delta_op
    rhs = np.kron(h.realization.C, eye_n)
    return resolvent, rhs, delta_op


def _require_interior(h: NcFunctionHandle, x: MatrixTuple) -> np.ndarray:
    member = in_G_delta(h.delta, x)
    if not member:
        raise PreconditionError(
            f"point is not inside the domain: ||delta(x)|| = {member.norm:.6g}"
        )
    return eval_delta(h.delta, x)


def eval_u(h: NcFunctionHandle, x: MatrixTuple, return_cond: bool = False):
    """Model vector u(x) of shape (mJn) x n by direct solve.

    Warns when the resolvent condition number exceeds ``COND_WARN_THRESHOLD``;
    with ``return_cond=True`` returns ``(u, cond)``.
    """
    big_delta = _require_interior(h, x)
    resolvent, rhs, _ = _model_operators(h, big_delta, x.n)
    sv = np.linalg.svd(resolvent, compute_uv=False)
    cond = float("inf") if sv[-1] == 0.0 else float(sv[0] / sv[-1])
    if cond > COND_WARN_THRESHOLD:
        warnings.warn(
            f"model system is near singular: condition number {cond:.3e}",
            NearSingularResolventWarning,
            stacklevel=2,
        )
    u = np.linalg.solve(resolvent, rhs)
    return (u, cond) if return_cond else u


def eval_phi(h: NcFunctionHandle, x: MatrixTuple) -> np.ndarray:
    """Function value phi(x) = A I_n + (B kron I_n)(I_m kron Delta(x)) u(x)."""
    big_delta = _require_interior(h, x)
    n = x.n
    resolvent, rhs, delta_op = _model_operators(h, big_delta, n)
    u = np.linalg.solve(resolvent, rhs)
    b_op = np.kron(h.realization.B, np.eye(n, dtype=np.complex128))
    return h.realization.A[0, 0] * np.eye(n, dtype=np.complex128) + b_op @ delta_op @ u


@dataclass(frozen=True)
class NeumannEvaluation:
    """Truncated geometric-series evaluation, with its a-priori error bound."""

    value: np.ndarray
    truncation_bound: float
    contraction_factor: float
    terms: int


def eval_phi_neumann(h: NcFunctionHandle, x: MatrixTuple, terms: int) -> NeumannEvaluation:
    """Evaluate phi by summing the geometric series of (D kron I)(I kron Delta).

    Independent of the direct solve in :func:`eval_phi`; usable only when the
    contraction factor q is < 1, with truncation bound q^(terms+1) / (1 - q).
    """
    if terms < 0:
        raise PreconditionError("terms must be non-negative")
    big_delta = _require_interior(h, x)
    n = x.n
    _, rhs, delta_op = _model_operators(h, big_delta, n)
    d_op = np.kron(h.realization.D, np.eye(n, dtype=np.complex128))
    step = d_op @ delta_op
    q = operator_norm(step)
    if q >= 1.0:
        raise PreconditionError(
            f"series does not converge: contraction factor {q:.6g} >= 1"
        )
    acc = rhs.copy()
    power = rhs
    for _ in range(terms):
        power = step @ power
        acc += power
    b_op = np.kron(h.realization.B, np.eye(n, dtype=np.complex128))
    value = h.realization.A[0, 0] * np.eye(n, dtype=np.complex128) + b_op @ delta_op @ acc
    bound = q ** (terms + 1) / (1.0 - q)
    return NeumannEvaluation(
        value=value, truncation_bound=float(bound), contraction_factor=float(q), terms=terms
    )


def model_residual(h: NcFunctionHandle, x: MatrixTuple, y: MatrixTuple) -> float:
    """Defect of the model identity at the pair (x, y).

    Measures || I - phi(y)* phi(x) - u(y)* (I_m kron (I - Delta(y)* Delta(x))) u(x) ||;
    of order the isometry defect for valid colligations.
    """
    if x.n != y.n or x.d != y.d:
        raise DimensionError("x and y must share matrix size and variable count")
    dx = _require_interior(h, x)
    dy = _require_interior(h, y)
    n = x.n
    resolvent_x, rhs, delta_op_x = _model_operators(h, dx, n)
    u_x = np.linalg.solve(resolvent_x, rhs)
    resolvent_y, _, delta_op_y = _model_operators(h, dy, n)
    u_y = np.linalg.solve(resolvent_y, rhs)
    b_op = np.kron(h.realization.B, np.eye(n, dtype=np.complex128))
    a = h.realization.A[0, 0]
    phi_x = a * np.eye(n) + b_op @ delta_op_x @ u_x
    phi_y = a * np.eye(n) + b_op @ delta_op_y @ u_y
    jn = h.realization.J * n
    middle = np.kron(
        np.eye(h.realization.dim_E, dtype=np.complex128),
        np.eye(jn, dtype=np.complex128) - dy.conj().T @ dx,
    )
    lhs = np.eye(n, dtype=np.complex128) - phi_y.conj().T @ phi_x
    return operator_norm(lhs - u_y.conj().T @ middle @ u_x)


def random_realization(dim_E: int, J: int, seed: int) -> Realization:
    """Haar-style random unitary colligation: QR of a complex Gaussian."""
    if dim_E < 1 or J < 1:
        raise DimensionError("dim_E and J must be at least 1")
    rng = np.random.default_rng(seed)
    size = 1 + dim_E * J
    g = (rng.standard_normal((size, size)) + 1j * rng.standard_normal((size, size))) / np.sqrt(2.0)
    q, r = np.linalg.qr(g)
    diag = np.diag(r)
    q = q * (diag / np.abs(diag))
    return Realization(
        dim_E=dim_E,
        J=J,
        A=q[:1, :1],
        B=q[:1, 1:],
        C=q[1:, :1],
        D=q[1:, 1:],
    )


def perturb_realization(r: Realization, eps: float, seed: int = 0) -> Realization:
    """Break the isometry by adding a Gaussian perturbation to D (negative control)."""
    rng = np.random.default_rng(seed)
    mj = r.dim_E * r.J
    g = (rng.standard_normal((mj, mj)) + 1j * rng.standard_normal((mj, mj))) / np.sqrt(2.0)
    g *= eps / max(1.0, float(np.linalg.norm(g, 2)))
    return Realization(
        dim_E=r.dim_E, J=r.J, A=r.A, B=r.B, C=r.C, D=r.D + g, validate=False
    )


# --- JSON wire format -------------------------------------------------------


def realization_to_json(r: Realization) -> dict:
    return {
        "dim_E": r.dim_E,
        "J": r.J,
        "A": matrix_to_json(r.A),
        "B": matrix_to_json(r.B),
        "C": matrix_to_json(r.C),
        "D": matrix_to_json(r.D),
    }


def realization_from_json(obj, isometry_tol: float = ISOMETRY_TOL) -> Realization:
    """Decode and validate; non-isometric colligations are rejected, not repaired.

    Shape problems are parse errors; a well-formed but non-isometric
    colligation is a precondition violation.
    """
    if not isinstance(obj, dict):
        raise ParseError(f"expected a realization object, got {type(obj).__name__}")
    try:
        dim_e = int(obj["dim_E"])
        j = int(obj["J"])
        blocks = {name: matrix_from_json(obj[name]) for name in ("A", "B", "C", "D")}
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"realization object missing or malformed field: {exc}") from None
    try:
        out = Realization(dim_E=dim_e, J=j, validate=False, **blocks)
    except DimensionError as exc:
        raise ParseError(str(exc)) from None
    if out.isometry_defect > isometry_tol:
        raise PreconditionError(
            f"colligation is not an isometry: defect {out.isometry_defect:.3e} "
            f"> {isometry_tol:.0e}"
        )
    return out
