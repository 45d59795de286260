"""Deterministic SVG scatter plots of FD against F1."""

from __future__ import annotations

import re
from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

_SAFE = re.compile(r"[^A-Za-z0-9_.-]+")


def scatter_svg(points: Sequence[tuple[float, float, str]], path: str | Path, title: str,
                header: str = "") -> Path:
    """One scatter of (fd, f1) points, labelled by spec name.

    ``header`` is written as an XML comment right after the declaration.
    """
    path = Path(path)
    with plt.rc_context({"svg.hashsalt": "featdensity", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(6, 4))
        xs = [p[0] for p in points]
        ys = [p[1] for p in points]
        ax.scatter(xs, ys, s=14)
        for x, y, name in points:
            ax.annotate(name, (x, y), fontsize=5, xytext=(2, 2), textcoords="offset points")
        ax.set_xlabel("feature density")
        ax.set_ylabel("macro F1")
        ax.set_title(title)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None, "Creator": None})
        plt.close(fig)
    if header:
        text = path.read_text(encoding="utf-8")
        decl_end = text.index("?>") + 2 if text.startswith("<?xml") else 0
        comment = "\n<!-- " + header.replace("--", "- -") + " -->"
        path.write_text(text[:decl_end] + comment + text[decl_end:], encoding="utf-8")
    return path


def scatter_by_classifier(fd: Mapping[str, float], scores: Sequence, out_dir: str | Path,
                          header: str = "") -> list[Path]:
    """Write ``scatter_<classifier>.svg`` for each classifier in ``scores``."""
    out_dir = Path(out_dir)
    groups: dict[str, list[tuple[float, float, str]]] = {}
    for s in scores:
        if s.spec_name in fd:
            groups.setdefault(s.classifier, []).append((fd[s.spec_name], s.mean_f1, s.spec_name))
    paths = []
    for clf in sorted(groups):
        pts = sorted(groups[clf], key=lambda p: p[2])
        paths.append(scatter_svg(pts, out_dir / f"scatter_{_SAFE.sub('_', clf)}.svg", clf, header))
    return paths
