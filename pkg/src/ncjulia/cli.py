"""Command-line interface: evaluation, boundary reports, fuzzing, fixtures.

Exit codes: 0 success (and verdict true for ``bpoint``), 1 verdict false or
violations found, 2 parse/config error, 3 precondition violation.  All numeric
output is printed with 17 significant digits so regressions are bit-stable.
The environment variable NCJULIA_SEED overrides any configured seed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import boundary, derivative, domain, fixtures, freepoly, numerics, realization
from .errors import ParseError, PreconditionError

# --- deterministic JSON/text rendering --------------------------------------


def _render_float(x: float) -> str:
    if x != x:
        return '"nan"'
    if x == float("inf"):
        return '"inf"'
    if x == float("-inf"):
        return '"-inf"'
    return f"{x:.17g}"


def render_json(obj, indent: int = 0) -> str:
    pad = "  " * indent
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _render_float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        inner = ",\n".join(
            f"{pad}  {json.dumps(str(k))}: {render_json(v, indent + 1)}"
            for k, v in obj.items()
        )
        return "{\n" + inner + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        inner = ",\n".join(f"{pad}  {render_json(v, indent + 1)}" for v in obj)
        return "[\n" + inner + "\n" + pad + "]"
    raise TypeError(f"cannot render {type(obj).__name__}")


def render_text(obj, prefix: str = "") -> list:
    lines = []
    if isinstance(obj, dict):
        for k, v in obj.items():
            key = f"{prefix}.{k}" if prefix else str(k)
            lines.extend(render_text(v, key))
    elif isinstance(obj, (list, tuple)):
        for i, v in enumerate(obj):
            lines.extend(render_text(v, f"{prefix}[{i}]"))
    elif isinstance(obj, (float, np.floating)):
        rendered = _render_float(float(obj)).strip('"')
        lines.append(f"{prefix} = {rendered}")
    else:
        lines.append(f"{prefix} = {obj}")
    return lines


def emit(obj, output: str):
    if output == "text":
        print("\n".join(render_text(obj)))
    else:
        print(render_json(obj))


def _jsonable_matrix(m) -> dict:
    return numerics.matrix_to_json(m)


def _jsonable_tuple(x) -> dict:
    return freepoly.tuple_to_json(x)


# --- configuration -----------------------------------------------------------


@dataclass(frozen=True)
class RunConfig:
    """Tolerances, seed and sweep sizes shared by the commands."""

    seed: int = 2024
    samples: int = 100
    steps: int = 12
    first_step: float = 0.5
    ladder_first_step: float = 1e-2
    margin: float = 0.05
    residual_tol: float = 1e-8
    model_residual_tol: float = 1e-9
    rel_tol: float = 1e-8
    isometry_tol: float = 1e-8
    output: str = "json"

    def __post_init__(self):
        for name in (
            "first_step",
            "ladder_first_step",
            "margin",
            "residual_tol",
            "model_residual_tol",
            "rel_tol",
            "isometry_tol",
        ):
            if getattr(self, name) <= 0:
                raise ParseError(f"config value {name} must be positive")
        if self.samples < 1 or self.steps < 2:
            raise ParseError("need samples >= 1 and steps >= 2")
        if self.output not in ("json", "text"):
            raise ParseError(f"unknown output format {self.output!r}")


def _config_from_args(args) -> RunConfig:
    seed = args.seed
    env_seed = os.environ.get("NCJULIA_SEED")
    if env_seed is not None:
        try:
            seed = int(env_seed)
        except ValueError:
            raise ParseError(f"NCJULIA_SEED must be an integer, got {env_seed!r}") from None
    return RunConfig(
        seed=seed,
        samples=args.samples,
        steps=args.steps,
        first_step=args.first_step,
        ladder_first_step=args.ladder_first_step,
        margin=args.margin,
        residual_tol=args.residual_tol,
        model_residual_tol=args.model_residual_tol,
        rel_tol=args.rel_tol,
        isometry_tol=args.isometry_tol,
        output=args.output,
    )


# --- input resolution ---------------------------------------------------------


def _load_json_file(path: str):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ParseError(
            f"malformed JSON in {path}: {exc.msg} at line {exc.lineno} column {exc.colno}"
        ) from None


def _resolve_delta(name_or_path: str) -> domain.DeltaMatrix:
    if os.path.exists(name_or_path):
        return domain.delta_from_json(_load_json_file(name_or_path))
    return fixtures.get_delta(name_or_path)


def _resolve_realization(name_or_path: str, isometry_tol: float) -> realization.Realization:
    if os.path.exists(name_or_path):
        return realization.realization_from_json(
            _load_json_file(name_or_path), isometry_tol=isometry_tol
        )
    fixture = fixtures.get_fixture(name_or_path)
    if fixture.realization is None:
        raise ParseError(f"fixture {name_or_path!r} carries no realization")
    return fixture.realization


def _resolve_handle(args, config: RunConfig) -> realization.NcFunctionHandle:
    if args.fixture is not None:
        fixture = fixtures.get_fixture(args.fixture)
        if fixture.realization is None:
            raise ParseError(f"fixture {args.fixture!r} carries no realization")
        delta = fixture.delta if args.delta is None else _resolve_delta(args.delta)
        return realization.NcFunctionHandle(realization=fixture.realization, delta=delta)
    if args.delta is None or args.realization is None:
        raise ParseError("need either --fixture or both --delta and --realization")
    return realization.NcFunctionHandle(
        realization=_resolve_realization(args.realization, config.isometry_tol),
        delta=_resolve_delta(args.delta),
    )


def _load_point(path: str) -> freepoly.MatrixTuple:
    return freepoly.tuple_from_json(_load_json_file(path))


# --- commands -----------------------------------------------------------------


def cmd_eval(args, config: RunConfig) -> int:
    handle = _resolve_handle(args, config)
    point = _load_point(args.point)
    member = domain.in_G_delta(handle.delta, point)
    if not member:
        raise PreconditionError(
            f"point not in G_delta: ||delta(x)|| = {member.norm:.17g}"
        )
    u, cond = realization.eval_u(handle, point, return_cond=True)
    phi = realization.eval_phi(handle, point)
    residual = realization.model_residual(handle, point, point)
    emit(
        {
            "phi": _jsonable_matrix(phi),
            "phi_norm": numerics.operator_norm(phi),
            "u": _jsonable_matrix(u),
            "u_norm": numerics.operator_norm(u),
            "delta_norm": member.norm,
            "margin": member.margin,
            "model_residual": residual,
            "resolvent_condition": cond,
        },
        config.output,
    )
    return 0


def _jsonable_alpha(a: boundary.AlphaEstimate) -> dict:
    return {
        "alpha": a.alpha,
        "quotients": list(a.quotients),
        "steps": list(a.steps),
        "increments": list(a.increments),
        "converged": a.converged,
        "diverging": a.diverging,
        "is_liminf": a.is_liminf,
    }


def _jsonable_report(r: boundary.BPointReport) -> dict:
    out = {
        "T": _jsonable_tuple(r.T),
        "delta_norm_at_T": r.delta_norm_at_T,
        "on_distinguished_boundary": r.on_distinguished_boundary,
        "sequence": {
            "kind": r.sequence_kind,
            "steps": list(r.sequence_steps),
            "dropped": r.sequence_dropped,
        },
        "alpha": _jsonable_alpha(r.alpha),
        "is_bpoint": r.is_bpoint,
        "conditional": r.conditional,
        "julia": {
            "checked": r.julia_checked,
            "violations": r.julia_violations,
            "skipped": r.julia_skipped,
            "max_ratio": r.julia_max_ratio,
        },
    }
    out["W"] = None if r.W is None else _jsonable_matrix(r.W)
    out["W_unitary_distance"] = r.W_unitary_distance
    out["W_error"] = r.W_error
    out["u_T"] = None if r.u_T is None else _jsonable_matrix(r.u_T)
    if r.u_T is not None:
        out["u_T_norm_sq"] = numerics.operator_norm(r.u_T) ** 2
    out["range_residual"] = r.range_residual
    out["kernel_orthogonality"] = r.kernel_orthogonality
    out["kernel_defect"] = r.kernel_defect
    out["boundary_identity_max_residual"] = r.boundary_identity_max_residual
    if r.inward_witness is not None:
        out["inward_witness"] = {
            "found": r.inward_witness.found,
            "beta": r.inward_witness.beta,
        }
    if r.tfae is not None:
        out["tfae"] = {
            "sup_gram_quotient": r.tfae.sup_gram_quotient,
            "sup_scalar_quotient": r.tfae.sup_scalar_quotient,
            "sup_model_norm_sq": r.tfae.sup_model_norm_sq,
            "sup_model_norm_sq_all": r.tfae.sup_model_norm_sq_all,
            "aperture": r.tfae.aperture,
            "n_points": r.tfae.n_points,
            "comparability": r.tfae.comparability,
        }
    return out


def cmd_bpoint(args, config: RunConfig) -> int:
    handle = _resolve_handle(args, config)
    t = _load_point(args.point)
    rule = "ray" if args.ray is not None else "radial"
    direction = _load_point(args.ray) if args.ray is not None else None
    report = boundary.analyze_bpoint(
        handle,
        t,
        rule=rule,
        direction=direction,
        num_steps=config.steps,
        first_step=config.first_step,
        julia_samples=config.samples,
        margin=config.margin,
        seed=config.seed,
        range_tol=config.residual_tol,
        rel_tol=config.rel_tol,
    )
    emit(_jsonable_report(report), config.output)
    return 0 if report.is_bpoint else 1


def cmd_fuzz(args, config: RunConfig) -> int:
    delta = _resolve_delta(args.delta)
    if args.J is not None and args.J != delta.J:
        raise ParseError(f"--J {args.J} does not match delta J={delta.J}")
    rng = np.random.default_rng(config.seed)
    model_checked = model_violations = 0
    max_model_residual = 0.0
    julia_checked = julia_violations = julia_skipped = 0
    run_julia = delta.is_homogeneous_degree_one() and args.delta.startswith("polydisk")

    for k in range(config.samples):
        colligation = realization.random_realization(args.dim_E, delta.J, config.seed + k)
        if args.no_isometry:
            colligation = realization.perturb_realization(
                colligation, eps=0.05, seed=config.seed + k
            )
        handle = realization.NcFunctionHandle(realization=colligation, delta=delta)
        n = int(rng.integers(1, 3))
        x = domain.random_interior_point(delta, n, rng, margin=config.margin)
        res = realization.model_residual(handle, x, x)
        model_checked += 1
        max_model_residual = max(max_model_residual, res)
        if res > config.model_residual_tol:
            model_violations += 1
        if run_julia and k % 10 == 0:
            t = freepoly.MatrixTuple(
                tuple(numerics.haar_unitary(n, rng) for _ in range(delta.d))
            )
            seq = domain.radial_sequence(t, num_steps=18)
            try:
                alpha = boundary.estimate_alpha(handle, seq)
                extraction = boundary.extract_W(handle, seq)
            except (PreconditionError, ValueError):
                continue
            if not alpha.converged:
                continue
            for _ in range(5):
                z = domain.random_interior_point(delta, n, rng, margin=config.margin)
                check = boundary.julia_inequality_check(
                    handle, t, extraction.W, alpha.alpha, z, rel_tol=config.rel_tol
                )
                if check.skipped:
                    julia_skipped += 1
                elif check.holds:
                    julia_checked += 1
                else:
                    julia_checked += 1
                    julia_violations += 1

    emit(
        {
            "samples": config.samples,
            "seed": config.seed,
            "dim_E": args.dim_E,
            "J": delta.J,
            "model_identity": {
                "checked": model_checked,
                "violations": model_violations,
                "max_residual": max_model_residual,
                "tolerance": config.model_residual_tol,
            },
            "julia_inequality": {
                "checked": julia_checked,
                "violations": julia_violations,
                "skipped": julia_skipped,
            },
        },
        config.output,
    )
    return 1 if (model_violations or julia_violations) else 0


def cmd_derivative(args, config: RunConfig) -> int:
    handle = _resolve_handle(args, config)
    t = _load_point(args.point)
    h = _load_point(args.direction)
    if handle.delta.is_homogeneous_degree_one():
        seq = domain.radial_sequence(t, num_steps=max(config.steps, 14))
    else:
        seq = domain.ray_sequence(t, h, num_steps=max(config.steps, 14))
    w = boundary.extract_W(handle, seq).W
    result = derivative.eta_numeric(
        handle, t, w, h, steps=config.steps, first_step=config.ladder_first_step
    )
    out = {
        "eta": _jsonable_matrix(result.eta),
        "increments": list(result.convergence_increments),
        "beta": result.beta,
        "first_step": result.first_step,
        "steps_used": result.steps_used,
        "partial": result.partial,
        "converged": result.converged,
        "W": _jsonable_matrix(w),
    }
    if args.closed_form is not None:
        oracle = fixtures.get_closed_form(args.closed_form)(h)
        err = numerics.operator_norm(result.eta - oracle)
        out["closed_form"] = args.closed_form
        out["closed_form_relative_error"] = err / max(1.0, numerics.operator_norm(oracle))
    emit(out, config.output)
    return 0


def cmd_fixtures(args, config: RunConfig) -> int:
    emit({"fixtures": fixtures.list_fixtures()}, config.output)
    return 0


_SCHEMAS = {
    "matrix": {
        "description": "complex matrix, entries row-major",
        "example": {"rows": 2, "cols": 2, "data": [[1.0, 0.0], [0.0, 0.0], [0.0, 0.0], [1.0, 0.0]]},
    },
    "polynomial": {
        "description": "free polynomial; may also be given as grammar text "
        "(variables x0..x{d-1}, complex literals like 2, 0.5i, 1+2i, "
        "operators + - * and ^k on variables or groups)",
        "example": {"d": 2, "terms": [{"coeff": [1.0, 0.0], "word": [0, 1]}]},
    },
    "delta": {
        "description": "grid of polynomials defining the domain; non-square "
        "grids are padded with zero polynomials; entries may be text",
        "example": {"d": 2, "entries": [["x0", "0"], ["0", "x1"]]},
    },
    "point": {
        "description": "matrix tuple; 'scalars' is shorthand for 1x1 components",
        "example": {"scalars": [[0.5, 0.0], [0.3, 0.0]]},
    },
    "realization": {
        "description": "isometric colligation blocks A (1x1), B (1xmJ), C (mJx1), D (mJxmJ)",
        "example": {"dim_E": 1, "J": 2, "A": "matrix", "B": "matrix", "C": "matrix", "D": "matrix"},
    },
}


def cmd_schema(args, config: RunConfig) -> int:
    emit(_SCHEMAS, config.output)
    return 0


# --- argument parsing ----------------------------------------------------------


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--seed", type=int, default=2024, help="random seed (NCJULIA_SEED overrides)")
    p.add_argument("--samples", type=int, default=100, help="sweep sample count")
    p.add_argument("--steps", type=int, default=12, help="approach-sequence steps")
    p.add_argument("--first-step", type=float, default=0.5, dest="first_step")
    p.add_argument(
        "--ladder-first-step", type=float, default=1e-2, dest="ladder_first_step",
        help="first step of derivative ladders",
    )
    p.add_argument("--margin", type=float, default=0.05, help="interior sampling margin")
    p.add_argument("--residual-tol", type=float, default=1e-8, dest="residual_tol")
    p.add_argument(
        "--model-residual-tol", type=float, default=1e-9, dest="model_residual_tol"
    )
    p.add_argument("--rel-tol", type=float, default=1e-8, dest="rel_tol")
    p.add_argument("--isometry-tol", type=float, default=1e-8, dest="isometry_tol")
    p.add_argument("--output", choices=("json", "text"), default="json")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ncjulia",
        description="evaluate functions of non-commuting matrix variables and "
        "verify their boundary behavior",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_eval = sub.add_parser("eval", help="evaluate phi, u and the model identity at a point")
    p_eval.add_argument("--fixture", help="named fixture providing delta and realization")
    p_eval.add_argument("--delta", help="delta file or name (polydisk:2, ball:3, cartan:2)")
    p_eval.add_argument("--realization", help="realization file or fixture name")
    p_eval.add_argument("--point", required=True, help="point file (JSON)")
    _add_common(p_eval)
    p_eval.set_defaults(func=cmd_eval)

    p_bp = sub.add_parser("bpoint", help="boundary-point diagnostic report")
    p_bp.add_argument("--fixture")
    p_bp.add_argument("--delta")
    p_bp.add_argument("--realization")
    p_bp.add_argument("--point", required=True, help="boundary point file (JSON)")
    group = p_bp.add_mutually_exclusive_group()
    group.add_argument("--radial", action="store_true", help="radial approach (default)")
    group.add_argument("--ray", help="direction file for a ray approach")
    _add_common(p_bp)
    p_bp.set_defaults(func=cmd_bpoint)

    p_fuzz = sub.add_parser("fuzz", help="random colligation sweeps of the identities")
    p_fuzz.add_argument("--dim-E", type=int, default=1, dest="dim_E")
    p_fuzz.add_argument("--J", type=int, default=None)
    p_fuzz.add_argument("--delta", default="polydisk:2")
    p_fuzz.add_argument(
        "--no-isometry", action="store_true", dest="no_isometry",
        help="perturb colligations (negative control; violations expected)",
    )
    _add_common(p_fuzz)
    p_fuzz.set_defaults(func=cmd_fuzz)

    p_der = sub.add_parser("derivative", help="one-sided directional derivative at a boundary point")
    p_der.add_argument("--fixture")
    p_der.add_argument("--delta")
    p_der.add_argument("--realization")
    p_der.add_argument("--point", required=True)
    p_der.add_argument("--direction", required=True, help="direction tuple file (JSON)")
    p_der.add_argument(
        "--closed-form", dest="closed_form",
        help="compare against a named closed form (e.g. example-h3-eta)",
    )
    _add_common(p_der)
    p_der.set_defaults(func=cmd_derivative)

    p_fix = sub.add_parser("fixtures", help="list addressable fixture names")
    _add_common(p_fix)
    p_fix.set_defaults(func=cmd_fixtures)

    p_schema = sub.add_parser("schema", help="print the JSON file formats")
    _add_common(p_schema)
    p_schema.set_defaults(func=cmd_schema)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        config = _config_from_args(args)
        return args.func(args, config)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except PreconditionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


def entrypoint():
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
