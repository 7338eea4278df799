"""Run every stage for one config: prepare, train, annotate, report.

    python scripts/run_pipeline.py configs/desk.yaml
"""
import argparse
import sys

from cogappraisal.cli import main as cli_main
from cogappraisal.config import load_config


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("config")
    parser.add_argument("--skip-train", action="store_true", help="reuse the existing checkpoint")
    args = parser.parse_args()
    cfg = load_config(args.config)
    out = cfg.output_dir()
    stages = [["prepare", "-c", args.config]]
    if not args.skip_train:
        stages.append(["train", "-c", args.config])
    stages += [["annotate", "-c", args.config],
               ["report", str(cfg.annotated_path()), "--out", str(out / "report"), "-c", args.config]]
    for argv in stages:
        print(">>", "cogappraisal", *argv, flush=True)
        code = cli_main(argv)
        if code:
            sys.exit(code)


if __name__ == "__main__":
    main()
