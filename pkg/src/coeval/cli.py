"""Command-line interface.

Subcommands operate on a project config file (see :mod:`coeval.project`)
and run the library in-process.  Exit codes:

    0  success
    1  usage, configuration, or input errors
    2  semantic failure: inconsistent equations, unit violation,
       non-isomorphic outputs, invalid homomorphism
    3  export failure (a triple not representable in N-Triples)
    4  mapping failure (ill-typed or uncompilable schema mapping)
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from coeval.engine import CoevalError, InconsistencyError
from coeval.mapping import MappingError
from coeval.model import IngestError, SchemaError
from coeval.ntriples import ExportError, NTParseError, parse_ntriples
from coeval.project import (
    ProjectError,
    check_project_homs,
    load_project,
    render_json,
    run_coeval,
    run_roundtrip,
)
from coeval.qlang import ParseError, print_query
from coeval.roundtrip import UnitViolation, facts_isomorphic

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_SEMANTIC = 2
EXIT_EXPORT = 3
EXIT_MAPPING = 4


def _write(path: str | Path | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _cmd_ingest(args) -> int:
    project = load_project(args.config)
    for decl in project.schema.tables:
        print(f"{decl.name}: {len(project.instance.row_ids(decl.name))} rows")
    return EXIT_OK


def _cmd_compile(args) -> int:
    project = load_project(args.config)
    if project.mapping_file is None:
        print("config has no mapping to compile", file=sys.stderr)
        return EXIT_USAGE
    texts = [print_query(q) for q in project.compiled_queries]
    if args.out_dir:
        out_dir = Path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        for q, text in zip(project.compiled_queries, texts):
            (out_dir / f"{q.target_table}.cq").write_text(text)
            print(f"wrote {out_dir / (q.target_table + '.cq')}")
    else:
        sys.stdout.write("\n".join(texts))
    return EXIT_OK


def _resolve_out(args, project) -> Path | None:
    if args.out:
        return Path(args.out)
    return project.out_path


def _cmd_coeval(args) -> int:
    project = load_project(args.config)
    out = run_coeval(project)
    _write(_resolve_out(args, project), out.ntriples)
    if args.provenance:
        _write(args.provenance, render_json(out.provenance))
    t = out.result.triples
    print(
        f"{len(t.facts().get('Rdf', []))} triples, "
        f"{len(t.blank_labels())} blank nodes "
        f"({len(out.result.out_rows)} generators)",
        file=sys.stderr,
    )
    return EXIT_OK


def _cmd_roundtrip(args) -> int:
    project = load_project(args.config)
    out = run_roundtrip(project)
    _write(_resolve_out(args, project), out.ntriples)
    if args.provenance:
        _write(args.provenance, render_json(out.provenance))
    if args.report:
        _write(args.report, render_json(out.roundtrip))
    assert out.unit_report is not None
    for table in sorted(out.unit_report.per_table):
        u = out.unit_report.per_table[table]
        print(f"{table}: {u.classification} ({len(u.roundtrip_rows)} round-trip rows)")
    return EXIT_OK


def _cmd_check_hom(args) -> int:
    project = load_project(args.config)
    diags = check_project_homs(project)
    for d in diags:
        print(d, file=sys.stderr)
    if diags:
        return EXIT_SEMANTIC
    print(f"{len(project.homs)} homomorphisms ok")
    return EXIT_OK


def _cmd_iso(args) -> int:
    facts = []
    for p in (args.first, args.second):
        triples = parse_ntriples(Path(p).read_text())
        facts.append({"Rdf": triples})
    if facts_isomorphic(facts[0], facts[1]):
        print("isomorphic")
        return EXIT_OK
    print("not isomorphic", file=sys.stderr)
    return EXIT_SEMANTIC


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coeval",
        description="Migrate relational data to RDF by co-evaluating queries.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="load the CSVs and report row counts")
    p.add_argument("config")
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("compile", help="compile the schema mapping into queries")
    p.add_argument("config")
    p.add_argument("--out-dir", help="write one .cq file per table here")
    p.set_defaults(func=_cmd_compile)

    p = sub.add_parser("coeval", help="produce the minimal triple set")
    p.add_argument("config")
    p.add_argument("--out", help="N-Triples output (default: 'out' from the config)")
    p.add_argument("--provenance", help="write triple provenance JSON here")
    p.set_defaults(func=_cmd_coeval)

    p = sub.add_parser("roundtrip", help="co-evaluate, re-evaluate, classify")
    p.add_argument("config")
    p.add_argument("--out", help="N-Triples output (default: 'out' from the config)")
    p.add_argument("--provenance", help="write triple provenance JSON here")
    p.add_argument("--report", help="write the round-trip report JSON here")
    p.set_defaults(func=_cmd_roundtrip)

    p = sub.add_parser("check-hom", help="verify the query homomorphisms")
    p.add_argument("config")
    p.set_defaults(func=_cmd_check_hom)

    p = sub.add_parser("iso", help="compare two N-Triples files up to blank renaming")
    p.add_argument("first")
    p.add_argument("second")
    p.set_defaults(func=_cmd_iso)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except (ProjectError, IngestError, SchemaError, ParseError, NTParseError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InconsistencyError, UnitViolation, CoevalError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SEMANTIC
    except ExportError as exc:
        print(f"export error: {exc}", file=sys.stderr)
        return EXIT_EXPORT
    except MappingError as exc:
        print(f"mapping error: {exc}", file=sys.stderr)
        return EXIT_MAPPING


if __name__ == "__main__":
    sys.exit(main())
