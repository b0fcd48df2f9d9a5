"""Run one directional experiment over several seeds and print a summary.

    python3 scripts/compare.py chaining --seeds 0-4
    python3 scripts/compare.py distillation --seeds 0,1 --set noise=1.0 --set lam=0.3
"""
from __future__ import annotations

import argparse
import ast

from mlvc import experiments as E

SETUPS = {
    "chaining": (E.ChainingSetup, E.run_chaining),
    "attention": (E.AttentionSetup, E.run_attention),
    "stacking": (E.StackingSetup, E.run_stacking),
    "distillation": (E.DistillationSetup, E.run_distillation),
}


def parse_seeds(text: str) -> list[int]:
    seeds = []
    for part in text.split(","):
        lo, _, hi = part.partition("-")
        seeds.extend(range(int(lo), int(hi or lo) + 1))
    return seeds


def parse_override(text: str) -> tuple[str, object]:
    key, sep, value = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    try:
        return key.strip(), ast.literal_eval(value.strip())
    except (ValueError, SyntaxError):
        return key.strip(), value.strip()


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("experiment", choices=sorted(SETUPS))
    ap.add_argument("--seeds", default="0-4", type=parse_seeds)
    ap.add_argument("--set", dest="overrides", action="append", default=[], type=parse_override,
                    help="override a setup field, e.g. --set num_train=2000")
    args = ap.parse_args(argv)

    setup_cls, run = SETUPS[args.experiment]
    setup = setup_cls(**dict(args.overrides))
    results = []
    for seed in args.seeds:
        r = run(seed, setup)
        results.append(r)
        scores = " ".join(f"{k}={v:.4f}" for k, v in r.scores.items())
        print(f"seed {seed}: {scores} delta={r.delta:+.4f} ({r.seconds:.0f}s)", flush=True)
    print(E.summarize(results).line(args.experiment))
    if args.experiment == "stacking":
        held = sum(E.stacking_order_holds(r) for r in results)
        print(f"stacking order attention >= classwise >= simple held in {held}/{len(results)} seeds")


if __name__ == "__main__":
    main()
