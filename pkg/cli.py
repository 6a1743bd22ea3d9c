"""Command-line entry point: `python cli.py <command> [options]`.

Exit status: 0 on success, 1 when a Monte Carlo experiment is flagged invalid or a self-test
suite fails, 2 on any other error.
"""
import argparse
import logging
import sys
from typing import Any, Dict, Iterator, List, Optional

import numpy as np

from constants import VERSION, Command, EnsembleModel, OutputFormat, TailCutPolicy
from services.experiment_service import ExperimentService
from utils.common import canonical_json, emit, provenance, to_csv, to_json, write_pgm
from utils.errors import DomainError, HarmonicZerosError
from utils.schemas import EnsembleSpec, RunConfig
from utils.settings import configure_logging, resolve_run_config

logger = logging.getLogger("cli")

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_ERROR = 2


def _int_list(text: str) -> List[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _float_list(text: str) -> List[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _grid(text: str) -> List[float]:
    """Either a comma list or `start:stop:count` (inclusive linspace)."""
    if ":" in text:
        try:
            start, stop, count = text.split(":")
            return np.linspace(float(start), float(stop), int(count)).tolist()
        except ValueError as exc:
            raise argparse.ArgumentTypeError(f"expected start:stop:count, got {text!r}") from exc
    return _float_list(text)


def _complex(text: str) -> List[float]:
    value = complex(text.replace(" ", ""))
    return [value.real, value.imag]


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, help="master seed (default from HZ_SEED)")
    parser.add_argument("--out", help="output path; stdout when omitted")
    parser.add_argument("--format", choices=[f.value for f in OutputFormat], help="table format")
    parser.add_argument("--config", help="TOML or JSON config file")
    parser.add_argument("--log-level", dest="log_level", help="DEBUG, INFO, WARNING, ...")
    parser.add_argument("--quiet", action="store_true", default=None, help="no progress bars")
    parser.add_argument("--workers", type=int, help="worker processes for Monte Carlo trials")


def _ensemble(parser: argparse.ArgumentParser, n_help: str) -> None:
    parser.add_argument("--n", type=_int_list, help=n_help)
    parser.add_argument("--m", type=int, help="degree of q (fixed-m mode)")
    parser.add_argument("--alpha", type=_float_list, help="m/n ratio(s); m = round(alpha n)")
    parser.add_argument("--model", choices=[m.value for m in EnsembleModel])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="harmonic-zeros", description="Zeros of random harmonic polynomials")
    parser.add_argument("--version", action="version", version=VERSION)
    sub = parser.add_subparsers(dest="command", required=True)

    expected = sub.add_parser(Command.EXPECTED.value, help="Kac-Rice expected zero counts")
    _common(expected)
    _ensemble(expected, "degrees, e.g. 50,100,200")
    expected.add_argument("--tail-cut", dest="tail_cut", choices=[p.value for p in TailCutPolicy])
    expected.add_argument("--r-max", dest="r_max", type=float, help="cut radius for the explicit tail policy")

    montecarlo = sub.add_parser(Command.MONTECARLO.value, help="sample, count zeros, compare with Kac-Rice")
    _common(montecarlo)
    _ensemble(montecarlo, "degree(s), each at most the solver cap")
    montecarlo.add_argument("--trials", type=int)
    montecarlo.add_argument("--max-degree", dest="max_degree", type=int)
    montecarlo.add_argument("--zeros-out", dest="zeros_out", help="per-zero CSV")

    density = sub.add_parser(Command.DENSITY.value, help="radial Kac-Rice density profile")
    _common(density)
    _ensemble(density, "degree")
    density.add_argument("--r-grid", dest="r_grid", type=_grid, help="radii: list or start:stop:count")

    asymptote = sub.add_parser(Command.ASYMPTOTE.value, help="c_alpha and critical radius, or convergence table with --n")
    _common(asymptote)
    asymptote.add_argument("--alpha", type=_float_list, help="ratios in (0, 1)")
    asymptote.add_argument("--n", type=_int_list, help="degrees for the convergence table")

    lemniscate = sub.add_parser(Command.LEMNISCATE.value, help="components of the orientation-reversing set")
    _common(lemniscate)
    _ensemble(lemniscate, "degree")
    lemniscate.add_argument("--trials", type=int, help="number of samples (1 gives mask and contours)")
    lemniscate.add_argument("--stream", type=int, help="sample index for a single-sample run")
    lemniscate.add_argument("--resolution", type=int)
    lemniscate.add_argument("--half-width", dest="half_width", type=float)
    lemniscate.add_argument("--center", type=_complex, help="window center, e.g. 0.5+0.2j")
    lemniscate.add_argument("--full-disk", dest="full_disk", action="store_true", default=None)
    lemniscate.add_argument("--check-doubling", dest="check_doubling", action="store_true", default=None)
    lemniscate.add_argument("--pgm-out", dest="pgm_out")
    lemniscate.add_argument("--contour-out", dest="contour_out")

    selftest = sub.add_parser(Command.SELFTEST.value, help="oracle suites")
    _common(selftest)
    selftest.add_argument("--quick", action="store_true", default=None)
    return parser


def collect_flags(args: argparse.Namespace) -> Dict[str, Any]:
    """Explicit flags as a nested config fragment; unset options are left out."""
    values = vars(args)
    flags: Dict[str, Any] = {}
    for key in ("seed", "out", "format", "log_level", "quiet", "workers", "n", "m", "alpha", "model", "trials",
                "r_grid", "zeros_out", "stream", "full_disk", "check_doubling", "pgm_out", "contour_out", "quick"):
        if values.get(key) is not None:
            flags[key] = values[key]
    nested = {
        "quadrature": {"tail_cut_policy": values.get("tail_cut"), "r_max": values.get("r_max")},
        "solver": {"max_degree": values.get("max_degree")},
        "window": {"resolution": values.get("resolution"), "half_width": values.get("half_width"), "center": values.get("center")},
    }
    for section, fields in nested.items():
        fields = {k: v for k, v in fields.items() if v is not None}
        if fields:
            flags[section] = fields
    return flags


def _specs(config: RunConfig) -> Iterator[EnsembleSpec]:
    if not config.n:
        raise DomainError("--n is required")
    if config.m is not None and config.alpha:
        raise DomainError("give either --m or --alpha, not both")
    for n in sorted(set(config.n)):
        if config.alpha:
            for alpha in sorted(set(config.alpha)):
                yield ExperimentService.make_spec(n, alpha=alpha, model=config.model, seed=config.seed)
        else:
            if config.m is None:
                raise DomainError("--m or --alpha is required")
            yield ExperimentService.make_spec(n, m=config.m, model=config.model, seed=config.seed)


def _table(config: RunConfig, header: List[str], rows: List[list], extra: Optional[Dict[str, Any]] = None) -> str:
    meta = provenance(config.model_dump(mode="json"))
    if extra:
        meta.update(extra)
    if config.format == OutputFormat.JSON:
        return to_json({"meta": meta, "header": header, "rows": rows})
    return to_csv(header, rows, meta)


def _document(config: RunConfig, body: Dict[str, Any]) -> str:
    return to_json({"meta": provenance(config.model_dump(mode="json")), **body})


def run_expected(service: ExperimentService, config: RunConfig) -> int:
    if config.m is not None and config.alpha:
        raise DomainError("give either --m or --alpha, not both")
    rows = []
    if config.alpha:
        for alpha in sorted(set(config.alpha)):
            rows.extend(service.expected_rows(config.n, alpha=alpha, model=config.model, quadrature=config.quadrature))
    else:
        if config.m is None:
            raise DomainError("--m or --alpha is required")
        rows = service.expected_rows(config.n, m=config.m, model=config.model, quadrature=config.quadrature)
    emit(_table(config, service.HEADERS["expected"], rows), config.out)
    return EXIT_OK


def run_montecarlo(service: ExperimentService, config: RunConfig) -> int:
    specs = list(_specs(config))
    if config.zeros_out and len(specs) > 1:
        raise DomainError("--zeros-out needs a single (n, m) pair")
    documents = []
    for spec in specs:
        document, outcomes = service.montecarlo(spec, config.trials, config.solver, config.quadrature)
        documents.append(document)
        if config.zeros_out:
            header, rows = service.zero_table(outcomes)
            emit(to_csv(header, rows, provenance(config.model_dump(mode="json"))), config.zeros_out)
    body = documents[0] if len(documents) == 1 else {"experiments": documents}
    emit(_document(config, body), config.out)
    invalid = [d for d in documents if not d["valid"]]
    for document in invalid:
        logger.error("experiment n=%d m=%d invalid: %s", document["spec"]["n"], document["spec"]["m"], "; ".join(document["notes"][1:]))
    return EXIT_INVALID if invalid else EXIT_OK


def run_density(service: ExperimentService, config: RunConfig) -> int:
    if len(config.n) != 1 or (config.m is None and len(config.alpha) != 1):
        raise DomainError("density takes one --n and one --m or --alpha")
    spec = next(_specs(config))
    radii = config.r_grid or np.linspace(0.0, 3.0, 61).tolist()
    emit(_table(config, service.HEADERS["density"], service.density_rows(spec.n, spec.m, radii)), config.out)
    return EXIT_OK


def run_asymptote(service: ExperimentService, config: RunConfig) -> int:
    if not config.alpha:
        raise DomainError("--alpha is required")
    if config.n:
        rows, fits = service.asymptote_rows(config.alpha, config.n, config.quadrature)
        emit(_table(config, service.HEADERS["asymptote"], rows, {"fits": fits}), config.out)
    else:
        emit(_table(config, service.HEADERS["constants"], service.constant_rows(config.alpha)), config.out)
    return EXIT_OK


def run_lemniscate(service: ExperimentService, config: RunConfig) -> int:
    specs = list(_specs(config))
    if len(specs) != 1:
        raise DomainError("lemniscate takes one (n, m) pair")
    spec = specs[0]
    if config.trials > 1:
        body = service.lemniscate_survey(spec, config.trials, config.window, config.full_disk, config.check_doubling)
        emit(_document(config, body), config.out)
        return EXIT_OK
    body, mask, segments = service.lemniscate(spec, config.stream, config.window, config.full_disk)
    if config.pgm_out:
        write_pgm(mask, config.pgm_out)
    if config.contour_out:
        header, rows = service.contour_table(segments)
        emit(to_csv(header, rows, provenance(config.model_dump(mode="json"))), config.contour_out)
    emit(_document(config, body), config.out)
    return EXIT_OK


def run_selftest(service: ExperimentService, config: RunConfig) -> int:
    body = service.selftest(config.seed, quick=config.quick)
    emit(_document(config, body), config.out)
    return EXIT_OK if body["passed"] else EXIT_INVALID


RUNNERS = {
    Command.EXPECTED.value: run_expected,
    Command.MONTECARLO.value: run_montecarlo,
    Command.DENSITY.value: run_density,
    Command.ASYMPTOTE.value: run_asymptote,
    Command.LEMNISCATE.value: run_lemniscate,
    Command.SELFTEST.value: run_selftest,
}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = resolve_run_config(args.command, collect_flags(args), args.config)
        configure_logging(config.log_level)
        progress = not config.quiet and sys.stderr.isatty()
        service = ExperimentService(workers=config.workers, progress=progress)
        logger.info("%s: %s", args.command, canonical_json(config.model_dump(mode="json")))
        return RUNNERS[args.command](service, config)
    except HarmonicZerosError as exc:
        print(f"error: {exc}", file=sys.stderr, flush=True)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
