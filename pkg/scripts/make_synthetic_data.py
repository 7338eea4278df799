"""Write synthetic stand-ins for the crowd-enVent and Thinking Trap files.

The thought corpus expands to the reference per-class counts (1036 rows); the
event corpus has word-driven ratings so a model can beat the median baseline.
"""
import argparse
from pathlib import Path

from cogappraisal.synthetic import write_synthetic_inputs


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default=Path(__file__).resolve().parents[1] / "data" / "synthetic", type=Path)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--n-train", type=int, default=600)
    parser.add_argument("--n-validation", type=int, default=150)
    parser.add_argument("--n-test", type=int, default=200)
    args = parser.parse_args()
    paths = write_synthetic_inputs(args.out, args.seed, n_train=args.n_train,
                                   n_validation=args.n_validation, n_test=args.n_test)
    for name, path in paths.items():
        print(f"{name}: {path}")


if __name__ == "__main__":
    main()
