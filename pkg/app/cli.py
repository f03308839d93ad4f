"""
Командная строка сертификатора.

    python -m app.cli certify --graph g.json --model m.json --local 1 --global 1
    python -m app.cli sweep --graph g.json --model m.json --local 1 --global-range 1:5

Коды выхода: 0 успех, 1 ошибка аргументов, 2 ошибка данных, 3 перебор оракула невозможен.
"""
from __future__ import annotations

import argparse
import logging
import sys
from typing import List, Optional, Sequence, Tuple

from app.config import METHODS, MODES, get_config
from app.errors import CertifierError, UsageError
from app.io import (
    COLLECTIVE_FIELDS, CERTIFY_FIELDS, ORACLE_FIELDS, SWEEP_FIELDS, load_labels, open_output, save_model, write_csv,
)

from certifier import Certifier

log = logging.getLogger("gcn_certifier")

COMMANDS = ("certify", "counterexample", "sweep", "collective", "train", "oracle")


class _Parser(argparse.ArgumentParser):
    """Ошибки разбора аргументов: UsageError вместо sys.exit(2)"""

    def error(self, message):
        raise UsageError(f"{self.prog}: {message}\n\n{self.format_help()}")


def _range(text: str) -> Tuple[int, int]:
    try:
        lo, hi = (int(v) for v in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LO:HI, got {text!r}")
    if lo < 0 or hi < lo:
        raise argparse.ArgumentTypeError(f"range {text!r} must satisfy 0 <= LO <= HI")
    return lo, hi


def build_parser() -> argparse.ArgumentParser:
    cfg = get_config()
    parser = _Parser(prog="gcn-certify", description="Robustness certification of GCN node classifiers")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    common = _Parser(add_help=False)
    common.add_argument("--graph", required=True, help="graph JSON file")
    common.add_argument("--model", required=True, help="model JSON file")
    common.add_argument("--local", type=int, default=1, help="per-node flip limit p_l")
    common.add_argument("--method", choices=METHODS, default=cfg.certifier.method)
    common.add_argument("--mode", choices=MODES, default=cfg.certifier.mode)
    common.add_argument("--output", default=None, help="result file (default: stdout)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=cfg.certifier.threads)
    common.add_argument("--cap", type=int, default=None,
                        help="search cap for collective, enumeration cap for oracle")
    common.add_argument("-v", "--verbose", action="store_true")

    for name in ("certify", "counterexample", "oracle"):
        p = sub.add_parser(name, parents=[common])
        p.add_argument("--global", dest="global_limit", type=int, required=True, help="global flip limit p_g")

    p = sub.add_parser("sweep", parents=[common])
    p.add_argument("--global-range", type=_range, required=True, help="LO:HI inclusive")
    p.add_argument("--local-range", type=_range, default=None, help="LO:HI inclusive, overrides --local")

    sub.add_parser("collective", parents=[common])

    p = sub.add_parser("train", parents=[common])
    p.add_argument("--global", dest="global_limit", type=int, required=True)
    p.add_argument("--labels", default=None, help="JSON list of labels, -1 for unlabeled")
    p.add_argument("--steps", type=int, default=cfg.training.steps)
    p.add_argument("--learning-rate", type=float, default=cfg.training.learning_rate)
    p.add_argument("--loss", choices=("hinge", "bce"), default=cfg.training.loss)
    p.add_argument("--relu-slope", type=float, default=cfg.training.relu_lower_slope,
                   help="lower ReLU slope in the training loss, 0..1")
    return parser


def _setup_logging(verbose: bool):
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def _emit(args, fields: Sequence[str], rows: List[dict]):
    handle = open_output(args.output)
    if handle is None:
        write_csv(sys.stdout, fields, rows)
        return
    with handle:
        write_csv(handle, fields, rows)
    log.info("💾 %d rows written to %s", len(rows), args.output)


def _certifier(args):
    cfg = get_config()
    if args.threads < 1:
        raise UsageError("--threads must be at least 1")
    cfg.certifier.threads = args.threads
    cfg.certifier.mode = args.mode
    cfg.certifier.method = args.method
    return Certifier.from_files(args.graph, args.model, cfg)


def _cmd_certify(args) -> int:
    certifier = _certifier(args)
    budget = certifier.budget(args.local, args.global_limit)
    result = certifier.certify(budget, counterexamples=(args.command == "counterexample"))
    _emit(args, CERTIFY_FIELDS, result.rows())
    return 0


def _cmd_sweep(args) -> int:
    certifier = _certifier(args)
    lo, hi = args.global_range
    locals_ = range(args.local_range[0], args.local_range[1] + 1) if args.local_range else [args.local]
    rows = []
    for sweep in certifier.sweep(locals_, range(lo, hi + 1)):
        rows.extend(sweep.rows())
    _emit(args, SWEEP_FIELDS, rows)
    return 0


def _cmd_collective(args) -> int:
    certifier = _certifier(args)
    limits = certifier.collective(args.local, args.cap)
    rows = [{"node": i, "max_robust_limit": int(limits.limits[i]), "never_certified": bool(limits.never_certified[i])}
            for i in range(len(limits))]
    _emit(args, COLLECTIVE_FIELDS, rows)
    return 0


def _cmd_oracle(args) -> int:
    certifier = _certifier(args)
    robust, margins = certifier.oracle(certifier.budget(args.local, args.global_limit), args.cap)
    rows = [{"node": i, "robust": bool(robust[i]), "min_margin": float(margins[i])} for i in range(len(robust))]
    _emit(args, ORACLE_FIELDS, rows)
    return 0


def _cmd_train(args) -> int:
    if not args.output:
        raise UsageError("train needs --output for the trained model file")
    certifier = _certifier(args)
    get_config().training.loss = args.loss
    get_config().training.relu_lower_slope = args.relu_slope
    labels = load_labels(args.labels, certifier.graph.num_nodes) if args.labels else None
    model, report = certifier.train(certifier.budget(args.local, args.global_limit), labels,
                                    seed=args.seed, steps=args.steps, learning_rate=args.learning_rate)
    save_model(model, args.output)
    log.info("✅ trained %d steps: loss %.4f -> %.4f, certified %.2f -> %.2f; model saved to %s",
             report.steps, report.losses[0], report.losses[-1],
             report.certified_ratio[0], report.certified_ratio[-1], args.output)
    return 0


_HANDLERS = {
    "certify": _cmd_certify,
    "counterexample": _cmd_certify,
    "sweep": _cmd_sweep,
    "collective": _cmd_collective,
    "oracle": _cmd_oracle,
    "train": _cmd_train,
}


def run_command(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.command is None:
            raise UsageError(f"a subcommand is required: {', '.join(COMMANDS)}\n\n{build_parser().format_help()}")
        _setup_logging(args.verbose)
        return _HANDLERS[args.command](args)
    except CertifierError as e:
        print(f"❌ {e}", file=sys.stderr)
        return e.exit_code


def main():
    sys.exit(run_command())


if __name__ == "__main__":
    main()
