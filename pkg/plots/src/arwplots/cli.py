"""render --in <csv|jsonl> --kind <kind> --out <path.png|svg>"""

from __future__ import annotations

import argparse
import sys

from .figures import FIGURE_KINDS, FigureSpec, RenderError, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="render",
        description="Render one figure from an arwlab results file.",
    )
    parser.add_argument("--in", dest="input_path", required=True,
                        help="results file (csv or jsonl)")
    parser.add_argument("--kind", choices=FIGURE_KINDS, required=True)
    parser.add_argument("--out", dest="output_path", required=True,
                        help="image path (.png or .svg)")
    args = parser.parse_args(argv)
    try:
        render(FigureSpec(input_path=args.input_path, kind=args.kind,
                          output_path=args.output_path))
    except (RenderError, OSError) as exc:
        print(f"render: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
