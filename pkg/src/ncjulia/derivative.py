"""One-sided directional derivatives of bounded functions at boundary points.

At a B-point T with unitary boundary value W, the derivative in an inward
direction H is the one-sided limit of (phi(T + tH) - W) / t as t decreases to
zero.  The limit is computed on a geometric step ladder with first-order
Richardson extrapolation; holomorphy in H is not asserted, only the testable
consequences (homogeneity in H and ladder independence) are exposed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domain import in_Delta, in_G_delta, _gram_derivative
from .errors import ConvergenceError, DimensionError, PreconditionError
from .freepoly import MatrixTuple
from .numerics import extrapolate_limit, hermitian_part_max_eig, operator_norm
from .realization import NcFunctionHandle, eval_phi

STEP_FLOOR = 1e-8  # below this, difference quotients drown in cancellation


@dataclass(frozen=True)
class DirectionalDerivativeResult:
    """Extrapolated derivative with its convergence diagnostics.

    ``beta`` is the transversality margin of the direction (the negative of
    the largest eigenvalue of the Hermitian part of the inward-cone matrix);
    ``partial`` marks ladders that hit the step floor before using the
    requested number of steps.
    """

    H: MatrixTuple
    eta: np.ndarray
    convergence_increments: tuple
    in_gamma: bool
    beta: float
    first_step: float
    steps_used: int
    partial: bool
    converged: bool


def _inward_margin(h: NcFunctionHandle, t: MatrixTuple, direction: MatrixTuple) -> float:
    if direction.max_component_norm() > 1.0 + 1e-12:
        raise PreconditionError(
            f"direction exceeds the unit ball: max component norm "
            f"{direction.max_component_norm():.6g}"
        )
    return -hermitian_part_max_eig(_gram_derivative(h.delta, t, direction))


def _admissible_ladder(
    h: NcFunctionHandle, t: MatrixTuple, direction: MatrixTuple, first_step: float, steps: int
):
    """Shrink the first step until every ladder point is interior."""
    t0 = first_step
    for _ in range(80):
        ladder = [t0 * 2.0**-k for k in range(steps)]
        ladder = [s for s in ladder if s >= STEP_FLOOR]
        if len(ladder) >= 2 and all(
            in_G_delta(h.delta, t + s * direction) for s in ladder
        ):
            return t0, ladder
        t0 /= 2.0
        if t0 < STEP_FLOOR * 4:
            break
    raise PreconditionError(
        "no admissible first step: points along the direction never enter the domain"
    )


def eta_numeric(
    h: NcFunctionHandle,
    t: MatrixTuple,
    w: np.ndarray,
    direction: MatrixTuple,
    steps: int = 10,
    first_step: float = 1e-2,
    beta_min: float = 1e-10,
) -> DirectionalDerivativeResult:
    """One-sided derivative of phi at the boundary point t along an inward direction.

    Requires the direction to be strictly inward (Hermitian part of the
    inward-cone matrix negative definite); the first step is auto-shrunk
    until the whole ladder lies inside the domain.
    """
    if steps < 2:
        raise PreconditionError("need at least 2 ladder steps")
    w = np.asarray(w, dtype=np.complex128)
    if w.shape != (t.n, t.n):
        raise DimensionError(f"W has shape {w.shape}, expected ({t.n}, {t.n})")
    beta = _inward_margin(h, t, direction)
    if beta < beta_min:
        raise PreconditionError(
            f"direction is not inward: transversality margin {beta:.3e} < {beta_min:.0e}"
        )
    t0, ladder = _admissible_ladder(h, t, direction, first_step, steps)
    quotients = [(eval_phi(h, t + s * direction) - w) / s for s in ladder]
    res = extrapolate_limit(list(zip(ladder, quotients)))
    eta = res.value
    scale = max(1.0, operator_norm(eta))
    inc = res.increments
    # difference quotients carry roundoff of order eps/t, so increments that
    # small count as converged even if they no longer shrink
    noise_floor = 1e-8 * scale
    if len(inc) >= 2:
        converged = inc[-1] <= max(0.75 * inc[-2] + 1e-12 * scale, noise_floor)
    else:
        converged = inc[-1] <= noise_floor
    return DirectionalDerivativeResult(
        H=direction,
        eta=eta,
        convergence_increments=inc,
        in_gamma=True,
        beta=beta,
        first_step=t0,
        steps_used=len(ladder),
        partial=len(ladder) < steps,
        converged=converged,
    )


def homogeneity_check(
    h: NcFunctionHandle,
    t: MatrixTuple,
    w: np.ndarray,
    result: DirectionalDerivativeResult,
    s: float,
    steps: int = 10,
    first_step: float = 1e-2,
) -> float:
    """Defect || eta(s H) - s eta(H) || for a scale factor s in (0, 1]."""
    if not 0.0 < s <= 1.0:
        raise PreconditionError("scale factor must lie in (0, 1]")
    scaled = eta_numeric(h, t, w, s * result.H, steps=steps, first_step=first_step)
    return operator_norm(scaled.eta - s * result.eta)


def scalar_angular_derivative(
    h: NcFunctionHandle,
    t: MatrixTuple,
    k: MatrixTuple,
    v: np.ndarray | None = None,
    w: np.ndarray | None = None,
    steps: int = 12,
    first_step: float = 1e-2,
) -> complex:
    """One-variable angular derivative of the scalar slice along a transverse ray.

    Forms f(s) = <phi(T + sK) v, W v> for a unit vector v (default e_1) and
    returns the one-sided derivative of f at 0, where f(0) = 1 because W is
    unitary.  The direction must lie in the transverse inward cone.
    """
    if not in_Delta(h.delta, t, k):
        raise PreconditionError("direction must lie in the transverse inward cone")
    if v is None:
        v = np.zeros(t.n, dtype=np.complex128)
        v[0] = 1.0
    v = np.asarray(v, dtype=np.complex128).reshape(-1)
    if v.shape != (t.n,):
        raise DimensionError(f"v has length {v.shape[0]}, expected {t.n}")
    nrm = np.linalg.norm(v)
    if nrm == 0:
        raise PreconditionError("v must be a non-zero vector")
    v = v / nrm
    t0, ladder = _admissible_ladder(h, t, k, first_step, steps)
    if w is None:
        from .boundary import extract_W
        from .domain import ApproachSequence

        seq = ApproachSequence(base=t, kind="ray", direction=k, steps=tuple(ladder))
        w = extract_W(h, seq).W
    wv = np.asarray(w, dtype=np.complex128) @ v
    quotients = []
    for s in ladder:
        f = complex(wv.conj() @ (eval_phi(h, t + s * k) @ v))
        quotients.append((f - 1.0) / s)
    res = extrapolate_limit(list(zip(ladder, [np.array(q) for q in quotients])))
    inc = res.increments
    if len(inc) >= 2 and inc[-1] > max(inc[-2] * 1.5, 1e-6):
        raise ConvergenceError(
            f"difference quotients are not Cauchy: increments {inc[-2]:.3e} -> {inc[-1]:.3e}"
        )
    return complex(res.value.reshape(()))
