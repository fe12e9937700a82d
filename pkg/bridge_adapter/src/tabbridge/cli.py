"""Command-line entry: ``tabbridge <model>`` serves exactly one request."""

import argparse
import sys

from .adapter import MODELS, serve_once


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="tabbridge",
        description="Serve one line-delimited JSON prediction request on "
                    "stdin and write one response line to stdout.")
    parser.add_argument("model", choices=sorted(MODELS),
                        help="which predictor answers the request")
    args = parser.parse_args(argv)
    return serve_once(args.model)


if __name__ == "__main__":
    sys.exit(main())
