"""Command-line surface.

Subcommands: ``generate``, ``family``, ``sd``, ``rsd``, ``ps``,
``decompose``, ``solve-mdsd``, ``unpopularity``, ``bounds``,
``experiment``.  All randomness flows through explicit ``--seed`` flags,
so every command is reproducible; the experiment report file is
byte-identical across reruns of the same configuration (wall-clock timings
are shown on the console only).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import time
from pathlib import Path

from . import io as mio
from .bvn import NotRobustError, decompose_md, decompose_robust, md_upper_bound
from .colgen import Budget, MdsdResult, binary_search_z
from .core import (
    InstanceValidationError,
    MatchlotError,
    mu,
    serial_dictatorship,
    worst_case_cardinality,
)
from .datagen import GenParams, family_lb, family_ub, generate
from .lp import SOLVER_TOLERANCE
from .mechanisms import (
    DEFAULT_SAMPLE_SIZE,
    RSD_ENUMERATION_LIMIT,
    probabilistic_serial,
    rsd_exact,
    rsd_sampled,
)
from .pe_program import extreme_pe_cardinality
from .popularity import binary_search_margin, unpopularity_margin

_SEED_STRIDE = 7919  # distinct per-instance seeds inside one experiment


@dataclasses.dataclass
class ReportRow:
    instance_id: str
    n_agents: int
    n_objects: int
    p_minus: int | None
    floor_mu: int | None
    z: int | None
    status: str
    iterations: int
    columns: int
    seconds: float

    def key(self) -> str:
        return self.instance_id


@dataclasses.dataclass
class RunReport:
    """Per-instance outcomes of one experiment run plus aggregates."""

    rows: list[ReportRow]

    def aggregate(self) -> dict:
        solved = [r for r in self.rows if r.status == "optimal"]
        at_ceiling = [r for r in solved if r.z == r.floor_mu]
        gained = [
            r for r in solved if r.p_minus is not None and r.z is not None and r.z > r.p_minus
        ]
        return {
            "instances": len(self.rows),
            "optimal": len(solved),
            "z_at_floor_mu": len(at_ceiling),
            "z_above_p_minus": len(gained),
        }

    def to_tsv(self) -> str:
        header = [
            "instance",
            "n_agents",
            "n_objects",
            "p_minus",
            "floor_mu",
            "z",
            "status",
            "iterations",
            "columns",
        ]
        lines = ["\t".join(header)]
        for row in sorted(self.rows, key=ReportRow.key):
            lines.append(
                "\t".join(
                    str(v) if v is not None else "-"
                    for v in (
                        row.instance_id,
                        row.n_agents,
                        row.n_objects,
                        row.p_minus,
                        row.floor_mu,
                        row.z,
                        row.status,
                        row.iterations,
                        row.columns,
                    )
                )
            )
        return "\n".join(lines) + "\n"

    def render(self) -> str:
        agg = self.aggregate()
        lines = [self.to_tsv().rstrip("\n"), ""]
        lines.append(
            f"{agg['optimal']}/{agg['instances']} optimal; "
            f"{agg['z_at_floor_mu']} reached floor(mu); "
            f"{agg['z_above_p_minus']} improved on the worst-case baseline"
        )
        total = sum(r.seconds for r in self.rows)
        lines.append(f"total wall time: {total:.1f} s")
        return "\n".join(lines)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--samples", type=int, default=DEFAULT_SAMPLE_SIZE)
    parser.add_argument("--tolerance", type=float, default=SOLVER_TOLERANCE)
    parser.add_argument("--time-limit", type=float, default=3600.0)
    parser.add_argument("--out", type=Path, default=None)


def _emit(payload: dict, out: Path | None) -> None:
    text = json.dumps(payload, indent=2) + "\n"
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text, encoding="utf-8")


def _cmd_generate(args) -> int:
    overrides = {}
    if args.params:
        overrides = json.loads(Path(args.params).read_text(encoding="utf-8"))
    out_dir = args.out or Path(".")
    out_dir.mkdir(parents=True, exist_ok=True)
    for index in range(args.count):
        params = GenParams(
            n_agents=args.agents,
            ratio=args.ratio,
            seed=args.seed + index,
            **overrides,
        )
        instance = generate(params)
        mio.save_instance(instance, out_dir / f"instance_{index:04d}.json")
    print(f"wrote {args.count} instance(s) to {out_dir}")
    return 0


def _cmd_family(args) -> int:
    instance = family_lb(args.size) if args.kind == "lb" else family_ub(args.size)
    if args.out is None:
        sys.stdout.write(json.dumps(mio.instance_to_mapping(instance), indent=2) + "\n")
    else:
        mio.save_instance(instance, args.out)
    return 0


def _cmd_sd(args) -> int:
    instance = mio.load_instance(args.instance)
    if args.order:
        order = [instance.agent_index[a] for a in args.order.split(",")]
    else:
        order = list(range(instance.n_agents))
    matching = serial_dictatorship(instance, order)
    _emit(mio.matching_to_mapping(instance, matching), args.out)
    return 0


def _cmd_rsd(args) -> int:
    instance = mio.load_instance(args.instance)
    if args.exact:
        estimate = rsd_exact(instance, limit=RSD_ENUMERATION_LIMIT)
    else:
        estimate = rsd_sampled(instance, args.samples, args.seed)
    payload = mio.assignment_to_mapping(instance, estimate.assignment)
    payload["exact"] = estimate.exact
    payload["sample_count"] = estimate.sample_count
    _emit(payload, args.out)
    return 0


def _cmd_ps(args) -> int:
    instance = mio.load_instance(args.instance)
    assignment = probabilistic_serial(instance)
    _emit(mio.assignment_to_mapping(instance, assignment), args.out)
    return 0


def _cmd_decompose(args) -> int:
    instance = mio.load_instance(args.instance)
    assignment = mio.load_assignment(instance, args.assignment)
    try:
        if args.mode == "robust":
            decomposition = decompose_robust(instance, assignment)
        else:
            decomposition = decompose_md(instance, assignment)
    except NotRobustError as err:
        payload = {
            "error": "not-robust-ex-post-efficient",
            "witness_weight": mio.format_fraction(err.weight),
            "witness": err.matching.as_pairs(instance),
        }
        _emit(payload, args.out)
        return 3
    payload = mio.decomposition_to_mapping(instance, decomposition)
    payload["worst_case_cardinality"] = worst_case_cardinality(decomposition)
    _emit(payload, args.out)
    return 0


def _result_payload(instance, result: MdsdResult) -> dict:
    payload = {
        "status": result.status,
        "z": result.z,
        "floor_mu": result.floor_mu,
        "lower_bound": result.lower_bound,
        "framework": result.framework,
        "trace": [dataclasses.asdict(t) for t in result.trace],
    }
    if result.best_deviation is not None:
        payload["best_deviation"] = result.best_deviation
    if result.decomposition is not None:
        payload["decomposition"] = mio.decomposition_to_mapping(
            instance, result.decomposition
        )["terms"]
        payload["worst_case_cardinality"] = worst_case_cardinality(
            result.decomposition
        )
    return payload


def _cmd_solve_mdsd(args) -> int:
    instance = mio.load_instance(args.instance)
    if args.assignment:
        assignment = mio.load_assignment(instance, args.assignment)
        witnessed = False
    else:
        assignment = rsd_sampled(instance, args.samples, args.seed).assignment
        witnessed = True
    budget = Budget(time_limit=args.time_limit)
    if args.measure == "margin":
        omega, decomposition = binary_search_margin(
            instance,
            assignment,
            samples=args.samples,
            seed=args.seed,
            budget=budget,
            tolerance=args.tolerance,
        )
        payload = {
            "measure": "margin",
            "omega": omega,
            "decomposition": mio.decomposition_to_mapping(instance, decomposition)[
                "terms"
            ],
        }
        _emit(payload, args.out)
        return 0
    result = binary_search_z(
        instance,
        assignment,
        args.framework,
        samples=args.samples,
        seed=args.seed,
        budget=budget,
        tolerance=args.tolerance,
        known_decomposable=witnessed,
    )
    _emit(_result_payload(instance, result), args.out)
    return 0


def _cmd_unpopularity(args) -> int:
    instance = mio.load_instance(args.instance)
    matching = mio.load_matching(instance, args.matching)
    margin = unpopularity_margin(instance, matching)
    _emit({"unpopularity_margin": margin}, args.out)
    return 0


def _cmd_bounds(args) -> int:
    instance = mio.load_instance(args.instance)
    p_minus = extreme_pe_cardinality(instance, "min")
    p_plus = extreme_pe_cardinality(instance, "max")
    if instance.n_agents <= RSD_ENUMERATION_LIMIT:
        estimate = rsd_exact(instance)
    else:
        estimate = rsd_sampled(instance, args.samples, args.seed)
    expected = mu(estimate.assignment)
    floor_mu = md_upper_bound(estimate.assignment)
    payload = {
        "p_minus": p_minus,
        "p_plus": p_plus,
        "mu": mio.format_fraction(expected),
        "mu_exact": estimate.exact,
        "floor_mu": floor_mu,
        "interval": {
            "half_floor_mu": floor_mu / 2.0,
            "twice_p_minus": 2 * p_minus,
        },
    }
    _emit(payload, args.out)
    print(
        f"p-={p_minus} p+={p_plus} floor(mu)={floor_mu}; "
        f"maximin value lies strictly between {floor_mu / 2.0} and {2 * p_minus}",
        file=sys.stderr,
    )
    return 0


def run_experiment(config: dict, out_dir: Path | None = None) -> RunReport:
    """Generate-estimate-solve over a parameter grid; deterministic per seeds."""
    rows: list[ReportRow] = []
    grid = config.get("grid", [])
    count = int(config.get("count", 1))
    base_seed = int(config.get("seed", 0))
    samples = int(config.get("samples", DEFAULT_SAMPLE_SIZE))
    framework = config.get("framework", "rmp")
    time_limit = config.get("time_limit", 3600.0)
    tolerance = float(config.get("tolerance", SOLVER_TOLERANCE))
    overrides = config.get("params", {})
    for cell_index, cell in enumerate(grid):
        for index in range(count):
            seed = base_seed + _SEED_STRIDE * (cell_index * count + index)
            instance_id = f"g{cell_index:02d}_i{index:03d}"
            start = time.monotonic()
            params = GenParams(
                n_agents=int(cell["agents"]),
                ratio=float(cell.get("ratio", 10.0)),
                seed=seed,
                **overrides,
            )
            instance = generate(params)
            estimate = rsd_sampled(instance, samples, seed)
            result = binary_search_z(
                instance,
                estimate.assignment,
                framework,
                samples=samples,
                seed=seed,
                budget=Budget(time_limit=time_limit),
                tolerance=tolerance,
                known_decomposable=True,
            )
            elapsed = time.monotonic() - start
            rows.append(
                ReportRow(
                    instance_id=instance_id,
                    n_agents=instance.n_agents,
                    n_objects=instance.n_objects,
                    p_minus=result.lower_bound,
                    floor_mu=result.floor_mu,
                    z=result.z,
                    status=result.status,
                    iterations=sum(t.iterations for t in result.trace),
                    columns=sum(t.columns_added for t in result.trace),
                    seconds=elapsed,
                )
            )
            if out_dir is not None and result.decomposition is not None:
                mio.save_decomposition(
                    instance,
                    result.decomposition,
                    out_dir / f"{instance_id}_decomposition.json",
                )
    return RunReport(rows=rows)


def _cmd_experiment(args) -> int:
    config = json.loads(Path(args.config).read_text(encoding="utf-8"))
    out_dir = args.out
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
    report = run_experiment(config, out_dir)
    if out_dir is not None:
        (out_dir / "report.tsv").write_text(report.to_tsv(), encoding="utf-8")
    print(report.render())
    incomplete = [
        r for r in report.rows if r.status not in ("optimal", "budget-exhausted")
    ]
    return 0 if not incomplete else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="matchlot",
        description=(
            "Lottery decompositions for one-sided matching: mechanisms, "
            "maximin decomposition, and column generation over "
            "Pareto-efficient matchings."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="sample instances from the market model")
    p.add_argument("--agents", type=int, required=True)
    p.add_argument("--ratio", type=float, default=10.0)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--params", type=Path, default=None, help="JSON overrides")
    _add_common(p)
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("family", help="emit one of the adversarial families")
    p.add_argument("--kind", choices=("lb", "ub"), required=True)
    p.add_argument("--size", type=int, required=True)
    p.add_argument("--out", type=Path, default=None)
    p.set_defaults(func=_cmd_family)

    p = sub.add_parser("sd", help="serial dictatorship under a fixed order")
    p.add_argument("--instance", type=Path, required=True)
    p.add_argument("--order", type=str, default=None, help="comma-separated agent ids")
    _add_common(p)
    p.set_defaults(func=_cmd_sd)

    p = sub.add_parser("rsd", help="random serial dictatorship matrix")
    p.add_argument("--instance", type=Path, required=True)
    p.add_argument("--exact", action="store_true")
    _add_common(p)
    p.set_defaults(func=_cmd_rsd)

    p = sub.add_parser("ps", help="simultaneous-eating assignment")
    p.add_argument("--instance", type=Path, required=True)
    _add_common(p)
    p.set_defaults(func=_cmd_ps)

    p = sub.add_parser("decompose", help="maximin decomposition of a matrix")
    p.add_argument("--instance", type=Path, required=True)
    p.add_argument("--assignment", type=Path, required=True)
    p.add_argument("--mode", choices=("md", "robust"), default="md")
    _add_common(p)
    p.set_defaults(func=_cmd_decompose)

    p = sub.add_parser(
        "solve-mdsd", help="maximin decomposition over efficient matchings"
    )
    p.add_argument("--instance", type=Path, required=True)
    p.add_argument("--assignment", type=Path, default=None)
    p.add_argument("--framework", choices=("rmp", "alpha"), default="rmp")
    p.add_argument("--measure", choices=("cardinality", "margin"), default="cardinality")
    _add_common(p)
    p.set_defaults(func=_cmd_solve_mdsd)

    p = sub.add_parser("unpopularity", help="unpopularity margin of a matching")
    p.add_argument("--instance", type=Path, required=True)
    p.add_argument("--matching", type=Path, required=True)
    _add_common(p)
    p.set_defaults(func=_cmd_unpopularity)

    p = sub.add_parser("bounds", help="cardinality bounds and the maximin interval")
    p.add_argument("--instance", type=Path, required=True)
    _add_common(p)
    p.set_defaults(func=_cmd_bounds)

    p = sub.add_parser("experiment", help="batch benchmark over a parameter grid")
    p.add_argument("--config", type=Path, required=True)
    p.add_argument("--out", type=Path, default=None)
    p.set_defaults(func=_cmd_experiment)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InstanceValidationError as err:
        for violation in err.violations:
            print(f"invalid instance: {violation}", file=sys.stderr)
        return 2
    except MatchlotError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except FileNotFoundError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
