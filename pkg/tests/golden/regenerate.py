"""Rewrite the golden rendering files.  Review the diff by eye before committing."""

import sys
from pathlib import Path

HERE = Path(__file__).resolve().parent
sys.path.insert(0, str(HERE.parent))

from codym.viz import render_dot, render_svg  # noqa: E402
from viz_fixtures import order1_model, order3_delta, order3_model, order3_report  # noqa: E402


def main():
    m1 = order1_model()
    (HERE / "order1.dot").write_text(render_dot(m1))
    (HERE / "order1.svg").write_text(render_svg(m1))
    _, rep = order3_report()
    m3 = order3_model()
    (HERE / "order3_report.dot").write_text(render_dot(m3, rep))
    (HERE / "order3_report.svg").write_text(render_svg(m3, rep))
    d, rep = order3_delta()
    (HERE / "order3_delta.dot").write_text(render_dot(d, rep))
    (HERE / "order3_delta.svg").write_text(render_svg(d, rep))


if __name__ == "__main__":
    main()
