"""Command-line interface: ``cv-entangler {certify,simulate,capacity,sweep,validate}``.

Exit codes: 0 when the command ran, 1 when ``validate`` found a failing
check, 2 on usage or input errors.
"""

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import certification as cert
from . import densecoding as dc
from . import protocols as pr
from . import validation

EXIT_OK, EXIT_FAILED, EXIT_USAGE = 0, 1, 2
SWEEP_COLUMNS = ["nbar", "C", "C_coh", "C_sq", "r", "t1", "t2", "g", "P"]


class UsageError(Exception):
    pass


def _nonnegative(text):
    value = float(text)
    if not value >= 0:
        raise argparse.ArgumentTypeError(f"must be nonnegative, got {text}")
    return value


def build_parser():
    parser = argparse.ArgumentParser(
        prog="cv-entangler",
        description="Gaussian entanglement certification and dense-coding capacity tools.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("certify", help="classify a measured covariance matrix")
    p.add_argument("--input", required=True, type=Path, help="covariance-matrix file")
    p.add_argument("--mc-draws", type=int, default=10_000, help="Monte Carlo draws when SIGMA is given (0 disables)")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--format", choices=("text", "json", "csv"), default="text")

    p = sub.add_parser("simulate", help="theoretical state of a protocol and its report")
    p.add_argument("--protocol", type=int, choices=(1, 2, 3), required=True)
    p.add_argument("--r", type=float, required=True, help="squeezing parameter, > 0")
    p.add_argument("--stage", choices=("pre", "post"), default="post", help="before or after the A-C beam splitter")
    p.add_argument("--format", choices=("text", "json", "csv"), default="text")

    p = sub.add_parser("capacity", help="optimised dense-coding capacity at one photon number")
    p.add_argument("--protocol", type=int, choices=(1, 2, 3), required=True)
    p.add_argument("--nbar", type=_nonnegative, required=True)

    p = sub.add_parser("sweep", help="optimised capacity over a photon-number grid, as CSV")
    p.add_argument("--protocol", type=int, choices=(1, 2, 3), required=True)
    p.add_argument("--nbar-min", type=_nonnegative, required=True)
    p.add_argument("--nbar-max", type=_nonnegative, required=True)
    p.add_argument("--points", type=int, default=50)
    p.add_argument("--out", type=Path, help="output CSV file (default: stdout)")

    p = sub.add_parser("validate", help="run the regression checks against the published results")
    p.add_argument("--fixtures", type=Path, help="directory holding gamma1.cm and gamma2.cm")
    p.add_argument("--oracle-samples", type=int, default=validation.ORACLE_SAMPLES,
                   help="Monte Carlo samples per oracle comparison")
    p.add_argument("--timing", action="store_true", help="show the runtime of each check")
    p.add_argument("--quiet", action="store_true", help="one line per check")
    return parser


def cmd_certify(args, out):
    try:
        measured = cert.read_cm(args.input)
    except OSError as exc:
        raise UsageError(f"{args.input}: {exc.strerror or exc}") from None
    except ValueError as exc:
        raise UsageError(f"{args.input}: {exc}") from None
    draws = args.mc_draws
    if draws < 0 or 0 < draws < 100:
        raise UsageError(f"--mc-draws must be 0 or at least 100, got {draws}")
    use_mc = draws > 0 and measured.sigma is not None and measured.n_modes >= 2
    report = cert.certify(measured, draws=draws if use_mc else None, seed=args.seed)
    out.write(cert.render_report(report, args.format))
    return EXIT_OK


def cmd_simulate(args, out):
    if not args.r > 0:
        raise UsageError(f"--r must be positive, got {args.r}")
    protocol = pr.Protocol(args.protocol)
    if args.stage == "pre":
        gamma = pr.protocol1_pre_bs(args.r) if protocol == pr.Protocol.P1 else pr.pre_bs_state(protocol, args.r)
    else:
        gamma = pr.protocol_state(protocol, args.r)
    label = f"protocol {args.protocol} {args.stage}-BS r={args.r!r}"
    report = cert.CertificationReport(separability=pr.separability_report(gamma), label=label)
    if args.format == "json":
        data = {"label": label, "protocol": args.protocol, "r": args.r, "stage": args.stage,
                "cm": gamma.tolist(), "report": cert.report_to_dict(report)}
        out.write(json.dumps(data, indent=2) + "\n")
    elif args.format == "csv":
        out.write(cert.render_report(report, "csv"))
    else:
        out.write(cert.format_cm(gamma, label=label))
        out.write("\n")
        out.write(cert.render_report(report, "text"))
    return EXIT_OK


def _result_dict(result, nbar):
    coh, sq = dc.baseline_capacities(nbar)
    c = result.config
    return {
        "protocol": result.protocol,
        "nbar": nbar,
        "capacity": result.capacity,
        "C_coh": coh,
        "C_sq": sq,
        "snr_x": result.snr[0],
        "snr_p": result.snr[1],
        "r": result.squeezing,
        "t1": c.t1,
        "t2": c.t2,
        "g": c.g,
        "P": c.P,
    }


def cmd_capacity(args, out):
    result = dc.optimize_capacity(args.protocol, args.nbar)
    out.write(json.dumps(_result_dict(result, args.nbar), indent=2) + "\n")
    return EXIT_OK


def cmd_sweep(args, out):
    if args.points < 2:
        raise UsageError(f"--points must be at least 2, got {args.points}")
    if not args.nbar_max > args.nbar_min:
        raise UsageError(f"--nbar-max ({args.nbar_max}) must exceed --nbar-min ({args.nbar_min})")
    rows = dc.capacity_sweep(args.protocol, np.linspace(args.nbar_min, args.nbar_max, args.points))
    target = open(args.out, "w", newline="", encoding="utf-8") if args.out else out
    try:
        writer = csv.writer(target, lineterminator="\n")
        writer.writerow(SWEEP_COLUMNS)
        for row in rows:
            res, c = row.result, row.result.config
            values = [row.nbar, res.capacity, row.coherent, row.squeezed, res.squeezing, c.t1, c.t2, c.g, c.P]
            writer.writerow([repr(float(v)) for v in values])
    finally:
        if args.out:
            target.close()
    return EXIT_OK


def cmd_validate(args, out):
    if args.fixtures is not None:
        for name in ("gamma1", "gamma2"):
            path = args.fixtures / f"{name}.cm"
            if not path.is_file():
                raise UsageError(f"fixture {path} not found")
    if args.oracle_samples < 1:
        raise UsageError("--oracle-samples must be positive")

    def show(result):
        out.write(validation.format_result(result, verbose=not args.quiet, timing=args.timing) + "\n")
        out.flush()

    try:
        results = validation.run_all(args.fixtures, oracle_samples=args.oracle_samples, callback=show)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    failed = [r.number for r in results if not r.passed]
    summary = "all checks passed" if not failed else "failed: " + ", ".join(map(str, failed))
    out.write(f"{len(results) - len(failed)}/{len(results)} checks passed; {summary}\n")
    return EXIT_FAILED if failed else EXIT_OK


COMMANDS = {
    "certify": cmd_certify,
    "simulate": cmd_simulate,
    "capacity": cmd_capacity,
    "sweep": cmd_sweep,
    "validate": cmd_validate,
}


def main(argv=None, out=None):
    out = sys.stdout if out is None else out
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args, out)
    except UsageError as exc:
        print(f"cv-entangler {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
