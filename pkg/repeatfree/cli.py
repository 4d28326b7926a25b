"""Command-line entry point: `repeatfree construct | verify | search | bounds | certify`.

Exit codes: 0 success, absent or accepted; 1 error or rejected; 2 repeat found; 3 unknown.
"""

import argparse
import logging
import sys
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Dict, List, Optional

from repeatfree.bounds import bound_report, render_html, render_markdown, render_records, render_table
from repeatfree.colouring import EdgeColouring
from repeatfree.constructors import Family
from repeatfree.errors import BudgetExhausted, RepeatFreeError
from repeatfree.pattern import parse_pattern
from repeatfree.search import TABLE_HEADER, exact_f
from repeatfree.verifier import (
    DEFAULT_BUDGET,
    RepeatCertificate,
    RepeatStatus,
    check_proper,
    find_repeats,
    verify_certificate,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_FOUND = 2
EXIT_UNKNOWN = 3

RENDERERS = {"table": render_table, "records": render_records, "markdown": render_markdown, "html": render_html}
PATH_FIELDS = ("input", "output", "certificate")


@dataclass
class RunConfig:
    """Everything a run depends on. Paths aside, it is echoed into written colourings."""

    command: str
    pattern: Optional[str] = None
    n: Optional[int] = None
    k: Optional[int] = None
    family: Optional[str] = None
    d: Optional[int] = None
    m: Optional[int] = None
    gamma: Optional[float] = None
    seed: int = 0
    max_resamples: Optional[int] = None
    max_backoffs: Optional[int] = None
    max_retries: Optional[int] = None
    max_degree: Optional[int] = None
    mode: str = "exact"
    budget: Optional[int] = None
    format: str = "table"
    input: Optional[str] = None
    output: Optional[str] = None
    certificate: Optional[str] = None
    threads: int = 1

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> "RunConfig":
        known = cls.__dataclass_fields__
        return cls(**{key: value for key, value in vars(args).items() if key in known})

    def to_meta(self) -> Dict[str, object]:
        """Flat `run.<field>` mapping of the set, path-free fields."""
        return {
            f"run.{key}": value
            for key, value in asdict(self).items()
            if value is not None and key not in PATH_FIELDS
        }


def _add_common(parser: argparse.ArgumentParser):
    parser.add_argument("--threads", type=int, default=1, help="worker threads (results do not depend on it)")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="repeatfree", description="Edge-colourings of K_n without repeated patterns")
    commands = parser.add_subparsers(dest="command", required=True)

    construct = commands.add_parser("construct", help="build a colouring and write it in rfc v1 format")
    construct.add_argument("--family", required=True, choices=Family.names())
    construct.add_argument("--n", type=int, required=True)
    construct.add_argument("--d", type=int, help="polynomial degree (alg-cycle, alg-tree)")
    construct.add_argument("--m", type=int, help="tree edge count (clique-matching, alg-tree)")
    construct.add_argument("--pattern", help="pattern spec (lll)")
    construct.add_argument("--k", type=int, help="repeat multiplicity (lll)")
    construct.add_argument("--gamma", type=float)
    construct.add_argument("--seed", type=int, default=0)
    construct.add_argument("--max-resamples", dest="max_resamples", type=int)
    construct.add_argument("--max-backoffs", dest="max_backoffs", type=int)
    construct.add_argument("--max-retries", dest="max_retries", type=int)
    construct.add_argument("--max-degree", dest="max_degree", type=int)
    construct.add_argument("-o", "--output", help="output file, stdout if omitted")
    _add_common(construct)

    verify = commands.add_parser("verify", help="check properness and search for a k-repeat")
    verify.add_argument("input", help="rfc v1 colouring file")
    verify.add_argument("--pattern", required=True)
    verify.add_argument("--k", type=int, required=True)
    verify.add_argument("--mode", choices=("exact", "budgeted"), default="exact")
    verify.add_argument("--budget", type=int)
    verify.add_argument("--certificate", help="write the certificate here when a repeat is found")
    _add_common(verify)

    search = commands.add_parser("search", help="compute f_k(n, H) exactly")
    search.add_argument("--pattern", required=True)
    search.add_argument("--k", type=int, required=True)
    search.add_argument("--n", type=int, required=True)
    search.add_argument("--budget", type=int)
    search.add_argument("-o", "--output", help="write the witness colouring here")
    _add_common(search)

    bounds = commands.add_parser("bounds", help="evaluate the known bounds on f_k(n, H)")
    bounds.add_argument("--pattern", required=True)
    bounds.add_argument("--k", type=int, required=True)
    bounds.add_argument("--n", type=int, required=True)
    bounds.add_argument("--format", choices=sorted(RENDERERS), default="table")
    _add_common(bounds)

    certify = commands.add_parser("certify", help="re-check a repeat certificate against a colouring")
    certify.add_argument("certificate", help="certificate file")
    certify.add_argument("input", help="rfc v1 colouring file")
    _add_common(certify)
    return parser


def cmd_construct(config: RunConfig) -> int:
    params = {
        "n": config.n,
        "d": config.d,
        "m": config.m,
        "k": config.k,
        "pattern": parse_pattern(config.pattern) if config.pattern else None,
        "seed": config.seed,
        "gamma": config.gamma,
        "max_resamples": config.max_resamples,
        "max_backoffs": config.max_backoffs,
        "max_retries": config.max_retries,
        "max_degree": config.max_degree,
    }
    col = Family.build(config.family, **params).with_meta(**config.to_meta())
    report = check_proper(col)
    summary = f"colours={col.C} proper={str(report.proper).lower()} max_class_degree={report.max_class_degree}"
    if config.output:
        col.write(config.output)
        print(summary)
    else:
        sys.stdout.write(col.to_text())
        print(summary, file=sys.stderr)
    return EXIT_OK


def cmd_verify(config: RunConfig) -> int:
    col = EdgeColouring.read(config.input)
    pattern = parse_pattern(config.pattern)
    report = check_proper(col)
    print(f"proper={str(report.proper).lower()} max_class_degree={report.max_class_degree} colours={col.C}")
    if report.violation is not None:
        v = report.violation
        print(f"violation: vertex {v.vertex} has edges {v.edges[0]} and {v.edges[1]} of colour {v.colour}")

    budget = DEFAULT_BUDGET if config.budget is None else config.budget
    verdict = find_repeats(col, pattern, config.k, mode=config.mode, budget=budget, threads=config.threads)
    if verdict.status is RepeatStatus.FOUND:
        print(f"verdict=found k={config.k} pattern={config.pattern}")
        print(verdict.certificate.to_text(), end="")
        if config.certificate:
            Path(config.certificate).write_text(verdict.certificate.to_text())
        return EXIT_FOUND
    if verdict.status is RepeatStatus.ABSENT:
        print(f"verdict=absent-proven copies={verdict.copies_examined}")
        return EXIT_OK
    print(f"verdict=unknown reason={verdict.reason}")
    return EXIT_UNKNOWN


def cmd_search(config: RunConfig) -> int:
    pattern = parse_pattern(config.pattern)
    kwargs = {"threads": config.threads}
    if config.budget is not None:
        kwargs["budget"] = config.budget
    result = exact_f(config.n, pattern, config.k, **kwargs)
    print(TABLE_HEADER)
    print(result.to_table_row())
    value = "-" if result.value is None else result.value
    print(f"value={value} exhaustive={str(result.exhaustive).lower()}")
    if config.output and result.witness is not None:
        result.witness.with_meta(**config.to_meta()).write(config.output)
    return EXIT_OK if result.exhaustive else EXIT_UNKNOWN


def cmd_bounds(config: RunConfig) -> int:
    report = bound_report(config.n, parse_pattern(config.pattern), config.k)
    print(RENDERERS[config.format](report), end="")
    return EXIT_OK


def cmd_certify(config: RunConfig) -> int:
    cert = RepeatCertificate.from_text(Path(config.certificate).read_text())
    col = EdgeColouring.read(config.input)
    check = verify_certificate(cert, col)
    print("accept" if check else f"reject: {check.reason}")
    return EXIT_OK if check else EXIT_ERROR


COMMANDS = {
    "construct": cmd_construct,
    "verify": cmd_verify,
    "search": cmd_search,
    "bounds": cmd_bounds,
    "certify": cmd_certify,
}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    config = RunConfig.from_args(args)
    try:
        return COMMANDS[config.command](config)
    except BudgetExhausted as exc:
        print(f"error: {exc} (last event: {exc.last_event})", file=sys.stderr)
        return EXIT_ERROR
    except (RepeatFreeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
