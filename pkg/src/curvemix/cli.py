"""Command-line entry point: ``curvemix generate|fit|evaluate``.

Exit codes: 0 success, 2 usage error, 3 parse error, 4 fit did not
converge (outputs are still written), 5 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import datagen
from .basis import BasisSpec, InvalidInputError
from .em_robust import LAMBDA_FORMS, RobustFitConfig, fit_robust_em
from .em_standard import StandardFitConfig, fit_standard_em
from .io import CurveParseError, atomic_write, emit_curves, emit_results, ingest_curves, read_labels
from .metrics import evaluate

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_NOT_CONVERGED = 4
EXIT_IO = 5

log = logging.getLogger("curvemix")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="curvemix", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a simulated curve dataset")
    g.add_argument("--scenario", choices=datagen.SCENARIOS, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.add_argument("--layout", choices=("long", "wide"), default="long",
                   help="wide files cannot carry labels")

    f = sub.add_parser("fit", help="cluster curves with standard or robust EM")
    f.add_argument("--input", required=True)
    f.add_argument("--engine", choices=("standard", "robust"), default="robust")
    f.add_argument("--K", type=int, default=None, help="number of clusters (standard engine only)")
    f.add_argument("--basis", choices=("poly", "bspline"), default="poly")
    f.add_argument("--degree", type=int, default=1)
    f.add_argument("--knots", type=int, default=None,
                   help="number of uniformly spaced interior knots (bspline only)")
    f.add_argument("--epsilon", type=float, default=1e-6)
    f.add_argument("--max-iter", type=int, default=1000)
    f.add_argument("--lambda-form", choices=LAMBDA_FORMS, default="leading",
                   help="robust engine: scaling of the adaptive penalty bound")
    f.add_argument("--restarts", type=int, default=1, help="random restarts (standard engine)")
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--out", required=True)
    f.add_argument("--figures", action="store_true",
                   help="also render clusters.png and trace.png into the output directory")

    e = sub.add_parser("evaluate", help="compare predicted labels with true labels")
    e.add_argument("--pred", required=True)
    e.add_argument("--truth", required=True)
    e.add_argument("--out", default=None, help="write the metrics JSON here as well as stdout")
    return parser


def _basis(args, parser, data) -> BasisSpec:
    if args.degree < 0:
        parser.error("--degree must be non-negative")
    if args.basis == "poly":
        if args.knots is not None:
            parser.error("--knots only applies to --basis bspline")
        return BasisSpec.polynomial(args.degree)
    n_knots = 0 if args.knots is None else args.knots
    if n_knots < 0:
        parser.error("--knots must be non-negative")
    return BasisSpec.bspline_uniform(args.degree, n_knots, data.x)


def cmd_generate(args, parser) -> int:
    data = datagen.generate(args.scenario, args.seed)
    emit_curves(data, args.out, layout=args.layout)
    atomic_write(str(args.out) + ".meta.json", json.dumps(data.meta, indent=2) + "\n")
    log.info("wrote %d curves to %s", data.n, args.out)
    return EXIT_OK


def cmd_fit(args, parser) -> int:
    if args.engine == "robust" and args.K is not None:
        parser.error("--K is not accepted with --engine robust; the robust engine estimates K")
    if args.engine == "standard" and args.K is None:
        parser.error("--engine standard requires --K")
    data = ingest_curves(args.input)
    basis = _basis(args, parser, data)
    if args.engine == "standard":
        config = StandardFitConfig(K=args.K, epsilon=args.epsilon, max_iter=args.max_iter,
                                   n_restarts=args.restarts, seed=args.seed)
        result = fit_standard_em(data, basis, config)
    else:
        config = RobustFitConfig(epsilon=args.epsilon, max_iter=args.max_iter,
                                 lambda_form=args.lambda_form)
        result = fit_robust_em(data, basis, config)

    bundle = emit_results(result, data, args.out)
    if args.figures:
        from .plotting import plot_clusters, plot_trace

        bundle.figures.append(plot_clusters(data, result, Path(args.out) / "clusters.png"))
        bundle.figures.append(plot_trace(result, Path(args.out) / "trace.png"))
    print(f"engine={result.engine} K={result.K} iterations={result.n_iter} "
          f"converged={result.converged} loglik={result.trace.records[-1].loglik:.6f}")
    if data.true_labels is not None:
        ev = evaluate(result.labels, data.true_labels)
        print(f"ari={ev.ari:.6f} misclassification_rate={ev.misclassification_rate:.6f}")
    return EXIT_OK if result.converged else EXIT_NOT_CONVERGED


def cmd_evaluate(args, parser) -> int:
    pred = read_labels(args.pred)
    truth = read_labels(args.truth)
    if set(pred) != set(truth):
        raise InvalidInputError("prediction and truth files cover different curve ids")
    ids = list(truth)
    ev = evaluate(np.array([pred[c] for c in ids]), np.array([truth[c] for c in ids]))
    text = json.dumps(ev.to_dict(), indent=2)
    print(text)
    if args.out:
        atomic_write(args.out, text + "\n")
    return EXIT_OK


COMMANDS = {"generate": cmd_generate, "fit": cmd_fit, "evaluate": cmd_evaluate}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args, parser)
    except (CurveParseError, InvalidInputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
