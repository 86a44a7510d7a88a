"""Command-line front end.

Examples::

    phonon-tc run --preset fig3 --out results/fig3
    phonon-tc run --rates g=0.54,kappa=0.003645,delta=5 --epsilon-from-threshold 14.27 --out results/custom
    phonon-tc validate --preset fig2
    phonon-tc dump-preset fig5 > fig5.ini
    phonon-tc run --config fig5.ini --out results/fig5

Exit codes: 0 success, 1 validation failure or bad input, 2 integration
invariant breach, 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from phonon_tc.config import dump_scenario, load_scenario
from phonon_tc.fock import DomainError
from phonon_tc.master_eq import IntegratorOptions
from phonon_tc.presets import PRESET_NAMES, DriveSpec, InlineRates, Scenario, preset
from phonon_tc.runner import EXIT_IO, EXIT_OK, EXIT_VALIDATION, run_scenario, validate_scenario

__all__ = ["build_parser", "main"]


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        # usage errors share the "bad input" status; 2 is reserved for invariant breaches
        self.print_usage(sys.stderr)
        self.exit(EXIT_VALIDATION, f"{self.prog}: error: {message}\n")


def _parse_rates(text: str) -> InlineRates:
    fields = {}
    for item in text.split(","):
        if "=" not in item:
            raise DomainError(f"--rates entries must look like key=value, got {item!r}")
        k, v = item.split("=", 1)
        fields[k.strip()] = float(v)
    aliases = {"eps": "epsilon_re", "epsilon": "epsilon_re"}
    fields = {aliases.get(k, k): v for k, v in fields.items()}
    missing = {"g", "kappa", "delta"} - fields.keys()
    if missing:
        raise DomainError(f"--rates is missing {sorted(missing)}")
    try:
        return InlineRates(**fields)
    except TypeError as exc:
        raise DomainError(f"--rates: {exc}") from exc


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.split(",") if x.strip())


def _add_source(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--preset", choices=PRESET_NAMES, help="built-in scenario")
    src.add_argument("--config", help="scenario config file")
    src.add_argument("--rates", help="inline effective rates in kHz: g=..,kappa=..,delta=..[,epsilon=..]")
    p.add_argument("--epsilon-from-threshold", type=float, metavar="X",
                   help="set |epsilon| from the rescaled drive |epsilon| sqrt(kappa) = X")
    p.add_argument("--epsilon-reading", choices=("angular", "nu"), default="angular",
                   help="unit reading of the rescaled drive (default: angular)")
    p.add_argument("--cutoff", type=int, help="Fock cutoff for every member")
    p.add_argument("--t-end", type=float, help="final time in ms")
    p.add_argument("--samples", type=int, help="number of uniform output samples")
    p.add_argument("--tol", type=float, help="relative tolerance (absolute tolerance is 1e-2 of it)")
    p.add_argument("--husimi-at", help="comma list of times (ms) for Husimi grids")
    p.add_argument("--chain-ratio", type=float, help="'much greater than' threshold for validation")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="phonon-tc", description="Phonon time-crystal master-equation simulator")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="integrate a scenario and write data files")
    _add_source(run)
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--parallel", type=int, default=1, help="sweep members run concurrently")
    run.add_argument("--force", action="store_true", help="run despite a hard chain-validation failure")
    run.add_argument("--formats", default="csv,json", help="comma list from csv, json, long")

    val = sub.add_parser("validate", help="check the parameter chain without running dynamics")
    _add_source(val)
    val.add_argument("--json", action="store_true", help="print the report as JSON")

    dump = sub.add_parser("dump-preset", help="print a preset as a config file")
    dump.add_argument("name", choices=PRESET_NAMES)
    return parser


def scenario_from_args(args) -> Scenario:
    if args.preset:
        sc = preset(args.preset)
    elif args.config:
        sc = load_scenario(args.config)
    else:
        sc = Scenario(name="custom", inline_rates=_parse_rates(args.rates), cutoff=128, t_end=5.0,
                      samples=501, outputs=("trajectory", "purity", "classical"))
    changes = {}
    if args.epsilon_from_threshold is not None:
        changes["drive"] = DriveSpec(args.epsilon_from_threshold, args.epsilon_reading)
    if args.cutoff is not None:
        changes.update(cutoff=args.cutoff, sweep_cutoffs=())
    if args.t_end is not None:
        changes["t_end"] = args.t_end
    if args.samples is not None:
        changes["samples"] = args.samples
    if args.tol is not None:
        changes.update(rtol=args.tol, atol=1e-2 * args.tol)
    if args.husimi_at:
        changes["husimi_times"] = _floats(args.husimi_at)
        if "husimi" not in sc.outputs:
            changes["outputs"] = (*sc.outputs, "husimi")
    if args.chain_ratio is not None:
        changes["chain_ratio"] = args.chain_ratio
    return sc.with_overrides(**changes) if changes else sc


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")

    if args.command == "dump-preset":
        sys.stdout.write(dump_scenario(preset(args.name)))
        return EXIT_OK

    try:
        sc = scenario_from_args(args)
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO
    except (DomainError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION

    if args.command == "validate":
        passed, reports, _ = validate_scenario(sc)
        if args.json:
            print(json.dumps({"passed": passed, "members": [{k: v for k, v in r.items() if k != "text"}
                                                            for r in reports]}, indent=2, default=str))
        else:
            for r in reports:
                print(f"== {r['label']}")
                print(r.get("text") or r["reason"])
        applicable = any(r["applicable"] for r in reports)
        return EXIT_OK if passed and applicable else EXIT_VALIDATION

    formats = tuple(f.strip() for f in args.formats.split(",") if f.strip())
    bad = set(formats) - {"csv", "json", "long"}
    if bad:
        print(f"error: unknown formats {sorted(bad)}", file=sys.stderr)
        return EXIT_VALIDATION
    opts = IntegratorOptions(rtol=sc.rtol, atol=sc.atol)
    try:
        result = run_scenario(sc, args.out, formats=formats, parallel=args.parallel, force=args.force, opts=opts)
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    for msg in result.messages:
        print(msg, file=sys.stderr)
    print(f"wrote {len(result.files)} files to {result.out_dir}")
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
