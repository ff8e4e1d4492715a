"""Command-line surface.

Four subcommands bind the library into reproducible batch runs:

* ``thin``      - dataset file -> pseudo-example file
* ``train``     - pseudo-example file + originals -> serialized model + CV report
* ``simulate``  - built-in benchmark spec -> sweep CSV (+ optional SVG chart)
* ``limit``     - originals -> strong-thinning (alpha -> 0) model

Every command writes a ``<output>.manifest.json`` next to its artifact
recording the command line, seed, config hash and library version; apart
from the manifest timestamp, rerunning a command with the same inputs and
seed reproduces its outputs byte for byte.

Exit codes: 0 success, 2 input format error, 3 family/domain violation,
4 optimization failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from datetime import datetime, timezone

from . import __version__
from .dataio import (
    read_dataset,
    read_matrix,
    read_pseudo_dataset,
    write_pseudo_dataset,
)
from .errors import (
    DataFormatError,
    DecompositionError,
    DegenerateDataError,
    OptimizationError,
    ParameterError,
    ShapeError,
    SupportError,
)
from .families import Example, FamilyKind
from .logistic import TrainConfig, calibrate, fit_logistic_detailed, save_model
from .rng import RngState
from .simulation import (
    GaussianSimSpec,
    PoissonSimSpec,
    render_sweep_svg,
    run_alpha_sweep,
    write_sweep_csv,
)
from .strong_thinning import fit_strong_thinning
from .thinning import ThinningConfig, generate_pseudo_examples

_FAMILY_ALIASES = {
    "poisson": FamilyKind.POISSON,
    "gauss": FamilyKind.GAUSSIAN,
    "gaussian": FamilyKind.GAUSSIAN,
    "gamma": FamilyKind.GAMMA,
    "wishart": FamilyKind.WISHART,
}

EXIT_OK = 0
EXIT_FORMAT = 2
EXIT_DOMAIN = 3
EXIT_OPTIM = 4


def _default_seed() -> int:
    env = os.environ.get("LEVYAUG_SEED")
    return int(env) if env else 0


def _write_manifest(out_path: str, seed, config: dict) -> None:
    payload = json.dumps(config, sort_keys=True, default=str).encode()
    manifest = {
        "format": "levyaug-run-manifest v1",
        "command": " ".join(sys.argv),
        "seed": seed,
        "config_hash": hashlib.sha256(payload).hexdigest(),
        "version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "config": config,
    }
    with open(out_path + ".manifest.json", "w", encoding="utf-8") as out:
        json.dump(manifest, out, indent=2, sort_keys=True, default=str)
        out.write("\n")


def _parse_lambda(text: str):
    if text == "auto":
        return None
    values = [float(v) for v in text.split(",")]
    return values[0] if len(values) == 1 else tuple(values)


def _parse_int_list(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.split(","))


def _parse_float_list(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(","))


# --------------------------------------------------------------------------
# Subcommands
# --------------------------------------------------------------------------

def _cmd_thin(args) -> int:
    sigma = read_matrix(args.sigma) if args.sigma else None
    family, examples = read_dataset(args.input, sigma=sigma)
    if args.family is not None and _FAMILY_ALIASES[args.family] is not family.kind:
        raise DataFormatError(
            f"input file declares family {family.kind.value!r}, not {args.family!r}"
        )
    if args.t_const is not None:
        examples = [Example(x=ex.x, y=ex.y, t=args.t_const) for ex in examples]
    cfg = ThinningConfig(
        alpha=args.alpha, n_pseudo=args.n_pseudo, seed=RngState(args.seed)
    )
    pseudo = generate_pseudo_examples(examples, cfg, family)
    write_pseudo_dataset(args.output, family, pseudo)
    _write_manifest(
        args.output,
        args.seed,
        {
            "command": "thin",
            "input": args.input,
            "alpha": args.alpha,
            "n_pseudo": args.n_pseudo,
            "t_const": args.t_const,
            "family": family.kind.value,
        },
    )
    return EXIT_OK


def _cmd_train(args) -> int:
    family, pseudo = read_pseudo_dataset(args.pseudo)
    originals_family, originals = read_dataset(args.originals)
    if originals_family.kind is not family.kind:
        raise DataFormatError("pseudo-example and originals files declare different families")
    cfg = TrainConfig(
        ridge_lambda=_parse_lambda(args.ridge_lambda),
        n_folds=args.folds,
        cv_rule=args.cv_rule,
    )
    model, report = fit_logistic_detailed(pseudo, cfg)
    model = calibrate(model, originals)
    save_model(model, args.out, family)
    with open(args.out + ".cv.csv", "w", encoding="utf-8") as out:
        out.write("lambda,mean_heldout_loss,mean_heldout_error\n")
        for lam, loss, err in report.cv_table:
            out.write(f"{lam!r},{loss!r},{err!r}\n")
        if not report.cv_table:
            out.write(f"{report.chosen_lambda!r},nan,nan\n")
    _write_manifest(
        args.out,
        args.seed,
        {
            "command": "train",
            "pseudo": args.pseudo,
            "originals": args.originals,
            "ridge_lambda": args.ridge_lambda,
            "folds": args.folds,
            "cv_rule": args.cv_rule,
            "chosen_lambda": report.chosen_lambda,
        },
    )
    return EXIT_OK


def _cmd_simulate(args) -> int:
    if args.spec == "gauss":
        spec = GaussianSimSpec(seed=args.seed)
    else:
        spec = PoissonSimSpec(seed=args.seed)
    train_cfg = TrainConfig(
        ridge_lambda=_parse_lambda(args.lambdas), n_folds=args.folds
    )
    result = run_alpha_sweep(
        spec,
        alphas=_parse_float_list(args.alphas),
        n_grid=_parse_int_list(args.n_grid) if args.n_grid else None,
        n_pseudo=args.n_pseudo,
        replicates=args.replicates,
        seed=args.seed,
        train_cfg=train_cfg,
        standardize=args.standardize,
        jobs=args.jobs,
    )
    write_sweep_csv(result, args.out, timing="measured" if args.timing else "zero")
    if args.plot:
        render_sweep_svg(result, args.plot)
    _write_manifest(
        args.out,
        args.seed,
        {
            "command": "simulate",
            "sweep": result.manifest(),
            "timing": args.timing,
            "standardize": args.standardize,
        },
    )
    if result.failures:
        for msg in result.failures:
            print(f"levyaug: cell failed: {msg}", file=sys.stderr)
    return EXIT_OK


def _cmd_limit(args) -> int:
    kind = _FAMILY_ALIASES[args.family]
    if kind not in (FamilyKind.GAUSSIAN, FamilyKind.POISSON):
        raise ParameterError("the strong-thinning limit is available for gauss and poisson")
    sigma = read_matrix(args.sigma) if args.sigma else None
    family, originals = read_dataset(args.originals, sigma=sigma)
    if family.kind is not kind:
        raise DataFormatError(
            f"originals file declares family {family.kind.value!r}, not {args.family!r}"
        )
    model = fit_strong_thinning(originals, family, ridge_lambda=args.ridge_lambda)
    if not args.no_calibrate:
        model = calibrate(model, originals)
    save_model(model, args.out, family)
    _write_manifest(
        args.out,
        args.seed,
        {
            "command": "limit",
            "originals": args.originals,
            "family": args.family,
            "ridge_lambda": args.ridge_lambda,
            "calibrated": not args.no_calibrate,
        },
    )
    return EXIT_OK


# --------------------------------------------------------------------------
# Parser
# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="levyaug",
        description="Data augmentation by thinning exponential-family processes.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    thin = sub.add_parser("thin", help="generate pseudo-examples from a dataset file")
    thin.add_argument("--input", required=True, help="dataset file")
    thin.add_argument("--output", required=True, help="pseudo-example file to write")
    thin.add_argument("--alpha", type=float, required=True, help="thinning fraction in (0, 1]")
    thin.add_argument(
        "-B", "--n-pseudo", type=int, default=1, help="thinned copies per example"
    )
    thin.add_argument(
        "--family",
        choices=sorted(_FAMILY_ALIASES),
        default=None,
        help="assert the input file's family",
    )
    thin.add_argument(
        "--t-const", type=float, default=None, help="override the t column with a constant"
    )
    thin.add_argument("--sigma", default=None, help="covariance CSV for Gaussian data")
    thin.add_argument("--seed", type=int, default=_default_seed())
    thin.set_defaults(func=_cmd_thin)

    train = sub.add_parser("train", help="fit + calibrate a model on pseudo-examples")
    train.add_argument("--pseudo", required=True, help="pseudo-example file")
    train.add_argument("--originals", required=True, help="originals for calibration")
    train.add_argument("--out", required=True, help="model file to write")
    train.add_argument(
        "--ridge-lambda",
        default="auto",
        help="'auto' (CV over the default grid), one value, or a comma grid",
    )
    train.add_argument("--folds", type=int, default=5)
    train.add_argument("--cv-rule", choices=("loss", "accuracy"), default="loss")
    train.add_argument("--seed", type=int, default=_default_seed())
    train.set_defaults(func=_cmd_train)

    sim = sub.add_parser("simulate", help="run a benchmark sweep over (n, alpha)")
    sim.add_argument("--spec", choices=("gauss", "poisson"), required=True)
    sim.add_argument("--out", required=True, help="sweep CSV to write")
    sim.add_argument("--alphas", default="0,0.1,0.25,0.5,0.75,1")
    sim.add_argument("--n-grid", default=None, help="comma list; default: the design's grid")
    sim.add_argument("-B", "--n-pseudo", type=int, default=32)
    sim.add_argument("--replicates", type=int, default=None)
    sim.add_argument("--lambdas", default="auto")
    sim.add_argument("--folds", type=int, default=5)
    sim.add_argument(
        "--standardize",
        action="store_true",
        help="scale pseudo-feature columns to unit variance before the ridge fit",
    )
    sim.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    sim.add_argument("--plot", default=None, help="also render an SVG chart here")
    sim.add_argument(
        "--timing",
        action="store_true",
        help="write measured wall times (breaks byte-reproducibility of the CSV)",
    )
    sim.add_argument("--seed", type=int, default=_default_seed())
    sim.set_defaults(func=_cmd_simulate)

    limit = sub.add_parser("limit", help="fit the strong-thinning (alpha -> 0) model")
    limit.add_argument("--originals", required=True)
    limit.add_argument("--family", choices=("gauss", "poisson"), required=True)
    limit.add_argument("--out", required=True)
    limit.add_argument("--ridge-lambda", type=float, default=1e-6)
    limit.add_argument("--sigma", default=None, help="covariance CSV for Gaussian data")
    limit.add_argument("--no-calibrate", action="store_true")
    limit.add_argument("--seed", type=int, default=_default_seed())
    limit.set_defaults(func=_cmd_limit)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except DataFormatError as exc:
        print(f"levyaug: input format error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except (
        SupportError,
        ParameterError,
        DecompositionError,
        ShapeError,
        DegenerateDataError,
    ) as exc:
        print(f"levyaug: domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except OptimizationError as exc:
        print(f"levyaug: optimization failed: {exc}", file=sys.stderr)
        return EXIT_OPTIM


if __name__ == "__main__":
    raise SystemExit(main())
