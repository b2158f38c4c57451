"""Self-contained SVG figures (matplotlib, Agg backend)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# fixed ids and no timestamp, so repeated runs give identical files
plt.rcParams["svg.hashsalt"] = "fractel"
plt.rcParams["svg.fonttype"] = "path"
_META = {"Date": None, "Creator": "fractel"}


def _positive(t, v):
    t, v = np.asarray(t), np.asarray(v)
    keep = (t > 0) & (v > 0) & np.isfinite(v)
    return t[keep], v[keep]


def decay_plot(path: Path, curves: dict[str, dict[str, np.ndarray]], t_min: float) -> None:
    """Log-log plot of the decay quantity and both bounds for each run.

    ``curves`` maps a label to a column dict with ``t``, ``lhs_decay``,
    ``bound_theorem`` and ``bound_proof_variant``.
    """
    fig, ax = plt.subplots(figsize=(6.4, 4.4))
    for label, cols in curves.items():
        t = cols["t"]
        ax.loglog(*_positive(t, cols["lhs_decay"]), label=f"{label}: modular distance")
        ax.loglog(*_positive(t, cols["bound_theorem"]), "--", label=f"{label}: bound")
        ax.loglog(
            *_positive(t, cols["bound_proof_variant"]), ":", label=f"{label}: bound (proof constant)"
        )
    ax.axvline(t_min, color="0.6", lw=0.8)
    ax.set_xlabel("t")
    ax.set_ylabel(r"$\int |D u - D u^*|^{p(x)}$")
    ax.legend(fontsize="small")
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata=_META)
    plt.close(fig)


def energy_plot(path: Path, curves: dict[str, dict[str, np.ndarray]]) -> None:
    fig, ax = plt.subplots(figsize=(6.4, 4.4))
    for label, cols in curves.items():
        ax.plot(cols["t"], cols["E"], label=f"{label}: E")
        ax.plot(cols["t"], cols["I_of_u"], "--", label=f"{label}: static part")
    ax.set_xlabel("t")
    ax.set_ylabel("energy")
    ax.legend(fontsize="small")
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata=_META)
    plt.close(fig)
