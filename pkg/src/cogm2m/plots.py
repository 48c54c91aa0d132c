"""Figure rendering next to the CSV output.

The CSV is the contract; these PNGs are the same curves drawn for quick
inspection. Rendering is headless and metadata-free so repeated runs write
identical files.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .harness import CurvePoint

_SAVE_KW = dict(dpi=120, metadata={"Software": None})


def _grouped(points: list[CurvePoint]) -> dict[str, tuple[list, list, list]]:
    series: dict[str, tuple[list, list, list]] = {}
    for p in sorted(points, key=lambda p: (p.series, p.x)):
        xs, ys, cis = series.setdefault(p.series, ([], [], []))
        xs.append(p.x)
        ys.append(p.value)
        cis.append(p.ci_halfwidth)
    return series


def render_curves(points: list[CurvePoint], path: str, xlabel: str, ylabel: str,
                  title: str, logy: bool = False) -> None:
    fig, ax = plt.subplots(figsize=(7.0, 5.0))
    for name, (xs, ys, cis) in _grouped(points).items():
        ax.errorbar(xs, ys, yerr=cis, marker="o", markersize=3.5,
                    capsize=2, linewidth=1.2, label=name)
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def render_fig6(points: list[CurvePoint], path: str) -> None:
    render_curves(points, path, xlabel="SNR (dB)",
                  ylabel="probability of miss-detection",
                  title="Narrowband sensing: miss-detection vs SNR (Pfa = 1%)",
                  logy=True)


def render_fig5(points: list[CurvePoint], path: str) -> None:
    curves = [p for p in points if not p.series.endswith("_fa")]
    render_curves(curves, path, xlabel="compression ratio (non-uniform / Nyquist)",
                  ylabel="probability of detection",
                  title="Compressive wideband sensing vs compression ratio")


def render_power(duties, lifetimes_days, path: str) -> None:
    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    ax.loglog(duties, lifetimes_days, marker="o", linewidth=1.2)
    ax.set_xlabel("radio duty cycle")
    ax.set_ylabel("battery lifetime (days)")
    ax.set_title("DRX duty cycle vs battery lifetime")
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
