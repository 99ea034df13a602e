"""``savsddp`` command line."""
from __future__ import annotations

import argparse
import logging
import math
import sys

from . import experiments as ex
from .instances import toy2
from .msslp import ScenarioCapError
from .specfile import SpecError, load_model, parse_model, model_to_dict


def _epsilon(text):
    v = float(text)
    if math.isnan(v) or v <= 0:
        raise argparse.ArgumentTypeError("epsilon must be > 0 (inf allowed)")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="savsddp",
        description="Train SDDP policies for shared-autonomous-vehicle design problems and "
                    "write experiment CSVs.")
    p.add_argument("command", choices=sorted(ex.SUBCOMMANDS))
    p.add_argument("--config", help="JSON model file (oracle defaults to the two-node toy)")
    p.add_argument("--seed", type=int)
    p.add_argument("--iterations", type=int)
    p.add_argument("--paths", type=int, help="forward paths per iteration")
    p.add_argument("--epsilon", type=_epsilon, help="relative-gap stopping threshold")
    p.add_argument("--samples", type=int, help="SAA realizations per random stage")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        ex.max_threads()
        if args.config:
            model = load_model(args.config)
        elif args.command == "oracle":
            net, spec, w, o, _ = toy2()
            model = parse_model(model_to_dict(net, spec, w, o))
        else:
            raise SpecError("--config", f"required for {args.command}")
        cfg = ex.config_from_model(model, iterations=args.iterations, paths=args.paths,
                                   epsilon=args.epsilon, samples=args.samples, seed=args.seed,
                                   out=args.out)
        result = ex.SUBCOMMANDS[args.command](cfg)
    except (SpecError, ScenarioCapError, OSError) as exc:
        print(f"savsddp: error: {exc}", file=sys.stderr)
        return 2
    if args.command == "oracle":
        print(f"extensive form {result.ef_optimum!r}  sddp lower {result.sddp_lower!r}  "
              f"rel gap {result.rel_gap:.3g}  ({result.iterations} iterations)")
        if not result.passed:
            print(f"savsddp: oracle gap {result.rel_gap:.3g} exceeds {ex.ORACLE_TOL}",
                  file=sys.stderr)
            return 1
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
