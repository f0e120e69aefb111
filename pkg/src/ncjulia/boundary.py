"""Boundary-point analysis: Julia quotients, boundary values, model limits.

A boundary point T is a B-point for the function phi when the quotient

    || I - phi(Z)* phi(Z) || / (1 - ||Delta(Z)||^2)

stays bounded along some sequence of interior points approaching T.  At such
points phi has a unitary boundary value W, the model vector has a limit u_T
solving a consistent singular system, and a boundary Schwarz-Pick inequality
holds on the whole domain.  This module estimates all of these numerically
and verifies the identities they satisfy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domain import (
    ApproachSequence,
    eval_delta,
    find_transverse_direction,
    generate_sequence,
    in_G_delta,
    InwardWitnessResult,
    on_distinguished_boundary,
    radial_sequence,
    ray_sequence,
    random_interior_point,
    DISTINGUISHED_TOL,
)
from .errors import ConvergenceError, DimensionError, PreconditionError, SingularMatrixError
from .freepoly import MatrixTuple
from .numerics import (
    PINV_RTOL,
    extrapolate_limit,
    min_norm_solve,
    nearest_unitary,
    operator_norm,
)
from .realization import NcFunctionHandle, _model_operators, eval_phi, eval_u

CONVERGENCE_RTOL = 1e-3


@dataclass(frozen=True)
class JuliaQuotient:
    """The boundedness quotient at one interior point, with its two parts."""

    value: float
    numerator: float
    denominator: float

    def __float__(self):
        return self.value


def julia_quotient(h: NcFunctionHandle, z: MatrixTuple) -> JuliaQuotient:
    """Quotient || I - phi(Z)* phi(Z) || / (1 - ||Delta(Z)||^2) at interior Z."""
    member = in_G_delta(h.delta, z)
    if not member:
        raise PreconditionError(
            f"point is not inside the domain: ||delta(Z)|| = {member.norm:.6g}"
        )
    phi = eval_phi(h, z)
    numerator = operator_norm(np.eye(z.n) - phi.conj().T @ phi)
    denominator = 1.0 - member.norm**2
    return JuliaQuotient(
        value=numerator / denominator, numerator=numerator, denominator=denominator
    )


@dataclass(frozen=True)
class AlphaEstimate:
    """Extrapolated limit of the quotient along an approach sequence.

    ``is_liminf`` is set for radial sequences over grids homogeneous of
    degree one, where the radial limit equals the unrestricted liminf; for
    any other sequence the value is only a sequence-wise estimate.
    """

    alpha: float
    quotients: tuple
    steps: tuple
    increments: tuple
    converged: bool
    diverging: bool
    is_liminf: bool


def estimate_alpha(
    h: NcFunctionHandle, seq: ApproachSequence, conv_rtol: float = CONVERGENCE_RTOL
) -> AlphaEstimate:
    """Estimate the quotient limit along the sequence by Richardson extrapolation."""
    pts = generate_sequence(seq, h.delta)
    if len(pts.points) < 2:
        raise PreconditionError("need at least two interior sequence points")
    quotients = [julia_quotient(h, z).value for z in pts.points]
    is_liminf = seq.kind == "radial" and h.delta.is_homogeneous_degree_one()

    # bounded quotients may approach their limit from below, so growth alone
    # is not divergence; divergence means significant increments that fail to
    # decay (geometric steps make converging increments shrink by about half)
    diverging = False
    if len(quotients) >= 3:
        d_prev = quotients[-2] - quotients[-3]
        d_last = quotients[-1] - quotients[-2]
        significant = d_last > 1e-6 * max(1.0, abs(quotients[-1]))
        diverging = significant and d_prev > 0 and d_last >= 0.9 * d_prev
    if diverging:
        return AlphaEstimate(
            alpha=float("inf"),
            quotients=tuple(quotients),
            steps=tuple(pts.steps),
            increments=(),
            converged=False,
            diverging=True,
            is_liminf=False,
        )
    res = extrapolate_limit(list(zip(pts.steps, quotients)))
    alpha = float(np.real(res.value.reshape(())))
    last_increment = res.increments[-1] if res.increments else 0.0
    converged = last_increment <= conv_rtol * max(1.0, abs(alpha))
    return AlphaEstimate(
        alpha=alpha,
        quotients=tuple(quotients),
        steps=tuple(pts.steps),
        increments=res.increments,
        converged=converged,
        diverging=False,
        is_liminf=is_liminf,
    )


@dataclass(frozen=True)
class BoundaryValue:
    """Unitary boundary value extracted from an approach sequence."""

    W: np.ndarray
    unitary_distance: float  # spectral distance from the raw limit to W


def extract_W(
    h: NcFunctionHandle, seq: ApproachSequence, max_unitary_distance: float = 1e-4
) -> BoundaryValue:
    """Extrapolate phi along the sequence and project onto the unitary group.

    A raw limit farther than ``max_unitary_distance`` from unitary is treated
    as evidence that the base point is not a B-point.
    """
    pts = generate_sequence(seq, h.delta)
    if len(pts.points) < 2:
        raise PreconditionError("need at least two interior sequence points")
    values = [eval_phi(h, z) for z in pts.points]
    raw = extrapolate_limit(list(zip(pts.steps, values))).value
    try:
        w = nearest_unitary(raw)
    except SingularMatrixError as exc:
        raise ConvergenceError(
            f"limit of phi along the sequence is singular, no unitary boundary value: {exc}"
        ) from None
    distance = operator_norm(raw - w)
    if distance > max_unitary_distance:
        raise ConvergenceError(
            f"limit of phi is {distance:.3e} away from unitary "
            f"(threshold {max_unitary_distance:.0e}); base point looks like a non-B-point"
        )
    return BoundaryValue(W=w, unitary_distance=distance)


def _kernel_basis(matrix: np.ndarray, adjoint: bool = False) -> np.ndarray:
    u, s, vh = np.linalg.svd(matrix)
    if s.size == 0 or s[0] == 0.0:
        return np.eye(matrix.shape[0])
    mask = s <= PINV_RTOL * s[0] * max(matrix.shape) ** 0.5
    if adjoint:
        return u[:, mask]
    return vh.conj().T[:, mask]


@dataclass(frozen=True)
class ModelVectorAtBoundary:
    """Minimum-norm solution of the boundary model system.

    ``range_residual`` is the norm of the unsolved part (zero exactly when the
    right-hand side lies in the range, which is the B-point criterion);
    ``kernel_orthogonality`` measures the component of the solution inside the
    system kernel; ``kernel_defect`` measures how far kernel and co-kernel are
    from coinciding, which flags colligations that are not isometric.
    """

    u_T: np.ndarray
    range_residual: float
    kernel_orthogonality: float
    kernel_defect: float


def solve_uT(
    h: NcFunctionHandle, t: MatrixTuple, boundary_tol: float = DISTINGUISHED_TOL
) -> ModelVectorAtBoundary:
    """Solve the singular boundary system for the model vector at T."""
    if not on_distinguished_boundary(h.delta, t, boundary_tol):
        raise PreconditionError(
            "model vector at the boundary requires T on the distinguished boundary"
        )
    big_delta = eval_delta(h.delta, t)
    resolvent, rhs, _ = _model_operators(h, big_delta, t.n)
    outcome = min_norm_solve(resolvent, rhs)
    kernel = _kernel_basis(resolvent)
    cokernel = _kernel_basis(resolvent, adjoint=True)
    orthogonality = (
        operator_norm(kernel.conj().T @ outcome.solution) if kernel.shape[1] else 0.0
    )
    if kernel.shape[1] or cokernel.shape[1]:
        p_ker = kernel @ kernel.conj().T
        p_coker = cokernel @ cokernel.conj().T
        defect = operator_norm(p_ker - p_coker)
    else:
        defect = 0.0
    return ModelVectorAtBoundary(
        u_T=outcome.solution,
        range_residual=outcome.residual_norm,
        kernel_orthogonality=orthogonality,
        kernel_defect=defect,
    )


@dataclass(frozen=True)
class RangeTestResult:
    """Verdict of the range-membership B-point test.

    ``conditional`` marks a verdict issued without a transverse inward
    witness: the criterion's hypothesis could not be confirmed, only searched
    for unsuccessfully.
    """

    is_bpoint: bool
    conditional: bool
    range_residual: float
    solution: ModelVectorAtBoundary
    inward_witness: InwardWitnessResult

    def __bool__(self):
        return self.is_bpoint


def is_bpoint_range_test(
    h: NcFunctionHandle,
    t: MatrixTuple,
    tol: float = 1e-8,
    boundary_tol: float = DISTINGUISHED_TOL,
    witness_starts: int = 8,
    seed: int = 0,
) -> RangeTestResult:
    """B-point iff the boundary system is consistent: residual <= tol."""
    solution = solve_uT(h, t, boundary_tol)
    witness = find_transverse_direction(h.delta, t, n_starts=witness_starts, seed=seed)
    return RangeTestResult(
        is_bpoint=solution.range_residual <= tol,
        conditional=not witness.found,
        range_residual=solution.range_residual,
        solution=solution,
        inward_witness=witness,
    )


@dataclass(frozen=True)
class JuliaCheck:
    """One evaluation of the boundary Schwarz-Pick inequality.

    ``holds`` is None when the left-hand denominator degenerates (phi nearly
    unitary at an interior point) and the point is skipped.
    """

    lhs: float | None
    rhs: float
    holds: bool | None
    skipped: bool


def julia_inequality_check(
    h: NcFunctionHandle,
    t: MatrixTuple,
    w: np.ndarray,
    alpha: float,
    z: MatrixTuple,
    rel_tol: float = 1e-8,
    degenerate_tol: float = 1e-12,
) -> JuliaCheck:
    """Check ||phi(Z)-W||^2 / ||I-phi*phi|| <= alpha ||I-Delta(T)*Delta(Z)||^2 / (1-||Delta(Z)||^2)."""
    member = in_G_delta(h.delta, z)
    if not member:
        raise PreconditionError(
            f"point is not inside the domain: ||delta(Z)|| = {member.norm:.6g}"
        )
    w = np.asarray(w, dtype=np.complex128)
    if w.shape != (z.n, z.n):
        raise DimensionError(f"W has shape {w.shape}, expected ({z.n}, {z.n})")
    phi = eval_phi(h, z)
    lhs_den = operator_norm(np.eye(z.n) - phi.conj().T @ phi)
    dt = eval_delta(h.delta, t)
    dz = eval_delta(h.delta, z)
    jn = dt.shape[0]
    rhs = (
        alpha
        * operator_norm(np.eye(jn) - dt.conj().T @ dz) ** 2
        / (1.0 - member.norm**2)
    )
    if lhs_den <= degenerate_tol:
        return JuliaCheck(lhs=None, rhs=rhs, holds=None, skipped=True)
    lhs = operator_norm(phi - w) ** 2 / lhs_den
    return JuliaCheck(
        lhs=lhs, rhs=rhs, holds=bool(lhs <= rhs * (1.0 + rel_tol) + 1e-15), skipped=False
    )


def boundary_identity_residual(
    h: NcFunctionHandle,
    t: MatrixTuple,
    w: np.ndarray,
    u_t: np.ndarray,
    z: MatrixTuple,
) -> float:
    """Residual of I - W* phi(Z) = u_T* (I_m kron (I - Delta(T)* Delta(Z))) u(Z)."""
    if z.n != t.n:
        raise DimensionError("Z must have the same matrix size as T")
    w = np.asarray(w, dtype=np.complex128)
    if w.shape != (t.n, t.n):
        raise DimensionError(f"W has shape {w.shape}, expected ({t.n}, {t.n})")
    m = h.realization.dim_E
    jn = h.realization.J * t.n
    u_t = np.asarray(u_t, dtype=np.complex128)
    if u_t.shape != (m * jn, t.n):
        raise DimensionError(f"u_T has shape {u_t.shape}, expected ({m * jn}, {t.n})")
    dt = eval_delta(h.delta, t)
    dz = eval_delta(h.delta, z)
    middle = np.kron(np.eye(m, dtype=np.complex128), np.eye(jn) - dt.conj().T @ dz)
    u_z = eval_u(h, z)
    phi = eval_phi(h, z)
    lhs = np.eye(t.n, dtype=np.complex128) - w.conj().T @ phi
    return operator_norm(lhs - u_t.conj().T @ middle @ u_z)


@dataclass(frozen=True)
class TfaeReport:
    """Suprema of the four equivalent boundedness quantities along a sequence.

    The four quantities are the quotient against the Gram defect
    ||I - Delta*Delta||, the quotient against the scalar defect 1 - ||Delta||^2,
    and the squared model-vector norm twice (once for "some model vector",
    once for "every model vector"; the realization materializes exactly one
    canonical model vector, so the two coincide here).

    The comparability entries verify the chain that makes the quantities
    equivalent on a non-tangential sequence of aperture c:
    gram <= model <= scalar <= 2 c gram.
    """

    sup_gram_quotient: float
    sup_scalar_quotient: float
    sup_model_norm_sq: float
    sup_model_norm_sq_all: float
    aperture: float
    n_points: int
    comparability: dict


def tfae_report(
    h: NcFunctionHandle,
    seq: ApproachSequence,
    aperture_cap: float = 1e6,
    rel_tol: float = 1e-8,
) -> TfaeReport:
    """Evaluate the four boundedness quantities along a non-tangential sequence."""
    pts = generate_sequence(seq, h.delta)
    dt = eval_delta(h.delta, seq.base)
    jn = dt.shape[0]
    sup_gram = sup_scalar = sup_model = 0.0
    aperture = 0.0
    for z in pts.points:
        dz = eval_delta(h.delta, z)
        dz_norm = operator_norm(dz)
        scalar_defect = 1.0 - dz_norm**2
        gram_defect = operator_norm(np.eye(jn) - dz.conj().T @ dz)
        aperture = max(aperture, operator_norm(dz - dt) / scalar_defect)
        phi = eval_phi(h, z)
        u = eval_u(h, z)
        numerator = operator_norm(np.eye(z.n) - phi.conj().T @ phi)
        sup_gram = max(sup_gram, numerator / gram_defect)
        sup_scalar = max(sup_scalar, numerator / scalar_defect)
        sup_model = max(sup_model, operator_norm(u) ** 2)
    if not np.isfinite(aperture) or aperture > aperture_cap:
        raise PreconditionError(
            f"sequence is tangential: aperture {aperture:.3e} exceeds cap {aperture_cap:.0e}"
        )
    slack = lambda v: v * (1.0 + rel_tol) + 1e-15  # noqa: E731
    comparability = {
        "gram_le_scalar": bool(sup_gram <= slack(sup_scalar)),
        "scalar_le_2c_gram": bool(sup_scalar <= slack(2.0 * aperture * sup_gram)),
        "gram_le_model": bool(sup_gram <= slack(sup_model)),
        "model_le_scalar": bool(sup_model <= slack(sup_scalar)),
        "scalar_over_gram": sup_scalar / sup_gram if sup_gram else float("inf"),
        "model_over_gram": sup_model / sup_gram if sup_gram else float("inf"),
    }
    return TfaeReport(
        sup_gram_quotient=sup_gram,
        sup_scalar_quotient=sup_scalar,
        sup_model_norm_sq=sup_model,
        sup_model_norm_sq_all=sup_model,
        aperture=aperture,
        n_points=len(pts.points),
        comparability=comparability,
    )


@dataclass(frozen=True)
class BPointReport:
    """Full per-point diagnostic bundle assembled by :func:`analyze_bpoint`."""

    T: MatrixTuple
    delta_norm_at_T: float
    on_distinguished_boundary: bool
    sequence_kind: str
    sequence_steps: tuple
    sequence_dropped: int
    alpha: AlphaEstimate
    W: np.ndarray | None
    W_unitary_distance: float | None
    W_error: str | None
    u_T: np.ndarray | None
    range_residual: float | None
    kernel_orthogonality: float | None
    kernel_defect: float | None
    inward_witness: InwardWitnessResult | None
    conditional: bool
    is_bpoint: bool
    julia_checked: int
    julia_violations: int
    julia_skipped: int
    julia_max_ratio: float | None
    boundary_identity_max_residual: float | None
    tfae: TfaeReport | None


def analyze_bpoint(
    h: NcFunctionHandle,
    t: MatrixTuple,
    rule: str = "radial",
    direction: MatrixTuple | None = None,
    num_steps: int = 12,
    first_step: float = 0.5,
    julia_samples: int = 100,
    margin: float = 0.05,
    seed: int = 0,
    boundary_tol: float = DISTINGUISHED_TOL,
    range_tol: float = 1e-8,
    rel_tol: float = 1e-8,
    witness_starts: int = 8,
) -> BPointReport:
    """Run the full boundary diagnostic suite at T.

    T must lie on the boundary; for T on the distinguished boundary the model
    machinery (boundary model vector, range test, boundedness report) runs as
    well, otherwise only the quotient, boundary value and inequality checks.
    """
    delta_norm = operator_norm(eval_delta(h.delta, t))
    if delta_norm < 1.0 - boundary_tol:
        raise PreconditionError(
            f"T is interior (||delta(T)|| = {delta_norm:.6g}); boundary analysis undefined"
        )
    if delta_norm > 1.0 + boundary_tol:
        raise PreconditionError(
            f"T is outside the closed domain (||delta(T)|| = {delta_norm:.6g})"
        )
    distinguished = on_distinguished_boundary(h.delta, t, boundary_tol)
    if rule == "radial":
        seq = radial_sequence(t, num_steps=num_steps, first_step=first_step)
    elif rule == "ray":
        if direction is None:
            raise PreconditionError("ray rule needs a direction tuple")
        seq = ray_sequence(t, direction, num_steps=num_steps, first_step=first_step)
    else:
        raise PreconditionError(f"unknown sequence rule {rule!r}")

    points = generate_sequence(seq, h.delta)
    alpha = estimate_alpha(h, seq)

    w = w_distance = w_error = None
    try:
        extraction = extract_W(h, seq)
        w, w_distance = extraction.W, extraction.unitary_distance
    except (ConvergenceError, PreconditionError) as exc:
        w_error = str(exc)

    u_t = range_residual = kernel_orthogonality = kernel_defect = None
    witness = None
    conditional = False
    if distinguished:
        verdict = is_bpoint_range_test(
            h, t, tol=range_tol, boundary_tol=boundary_tol,
            witness_starts=witness_starts, seed=seed,
        )
        u_t = verdict.solution.u_T
        range_residual = verdict.range_residual
        kernel_orthogonality = verdict.solution.kernel_orthogonality
        kernel_defect = verdict.solution.kernel_defect
        witness = verdict.inward_witness
        conditional = verdict.conditional
        # the range criterion is decisive only when the boundary value of the
        # defining matrix is square unitary; zero-padded grids can pass the
        # range test while the quotient genuinely diverges, so an observed
        # divergence overrides
        is_bpoint = verdict.is_bpoint and not alpha.diverging
    else:
        is_bpoint = alpha.converged and not alpha.diverging

    julia_checked = julia_violations = julia_skipped = 0
    julia_max_ratio = None
    identity_max = None
    if w is not None and np.isfinite(alpha.alpha):
        rng = np.random.default_rng(seed)
        for _ in range(julia_samples):
            z = random_interior_point(h.delta, t.n, rng, margin=margin)
            check = julia_inequality_check(h, t, w, alpha.alpha, z, rel_tol=rel_tol)
            if check.skipped:
                julia_skipped += 1
                continue
            julia_checked += 1
            if not check.holds:
                julia_violations += 1
            if check.rhs > 0:
                ratio = check.lhs / check.rhs
                julia_max_ratio = ratio if julia_max_ratio is None else max(julia_max_ratio, ratio)
            if u_t is not None:
                res = boundary_identity_residual(h, t, w, u_t, z)
                identity_max = res if identity_max is None else max(identity_max, res)

    tfae = tfae_report(h, seq) if distinguished else None

    return BPointReport(
        T=t,
        delta_norm_at_T=delta_norm,
        on_distinguished_boundary=distinguished,
        sequence_kind=seq.kind,
        sequence_steps=tuple(points.steps),
        sequence_dropped=points.dropped,
        alpha=alpha,
        W=w,
        W_unitary_distance=w_distance,
        W_error=w_error,
        u_T=u_t,
        range_residual=range_residual,
        kernel_orthogonality=kernel_orthogonality,
        kernel_defect=kernel_defect,
        inward_witness=witness,
        conditional=conditional,
        is_bpoint=is_bpoint,
        julia_checked=julia_checked,
        julia_violations=julia_violations,
        julia_skipped=julia_skipped,
        julia_max_ratio=julia_max_ratio,
        boundary_identity_max_residual=identity_max,
        tfae=tfae,
    )
