"""Figure rendering for scenario reports.

Each scenario gets one PNG built purely from its report data, written next
to the JSON/CSV output. Rendering is optional (CLI --figures).
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .entanglement import epsilon_entropy_approx, two_branch_entropy_exact

_SAVE_OPTS = {"dpi": 130, "bbox_inches": "tight"}


def _fig_mach_zehnder(results: dict, path: str) -> None:
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.6))
    eps = np.logspace(-6, np.log10(0.5), 160)
    exact = [two_branch_entropy_exact(e) for e in eps]
    approx = [epsilon_entropy_approx(e) for e in eps]
    ax1.loglog(eps, exact, label="exact")
    ax1.loglog(eps, approx, "--", label="(eps/2)(1 - ln(eps/2))")
    run_eps = results["epsilon"]
    if run_eps > 0:
        ax1.axvline(run_eps, color="gray", lw=0.8)
    ax1.set_xlabel("overlap deficit eps")
    ax1.set_ylabel("entanglement entropy [nats]")
    ax1.legend(fontsize=8)
    labels = [b["label"] for b in results["branches"]]
    devs = [abs(b.get("deviation_from_preinteraction", 0.0)) for b in results["branches"]]
    ax2.bar(labels, devs, color="tab:blue")
    ax2.set_yscale("log" if max(devs) > 0 else "linear")
    ax2.set_ylabel("|branch total p - pre-interaction|")
    ax2.set_title(f"visibility={results['visibility']:.6f}")
    fig.savefig(path, **_SAVE_OPTS)
    plt.close(fig)


def _fig_free_packet(results: dict, path: str) -> None:
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.6))
    series = results["spread_series"]
    t = [row["t"] for row in series]
    ax1.plot(t, [row["x_sq"] for row in series], "o", label="simulated")
    ax1.plot(t, [row["x_sq_analytic"] for row in series], "-", label="analytic")
    ax1.set_xlabel("t")
    ax1.set_ylabel("<x^2>")
    ax1.legend(fontsize=8)
    seg = results["segment"]
    bars = {
        "segment <p>": seg["momentum"] or 0.0,
        "m x*/t": results["predicted_segment_momentum"],
        "global <p>": results["global_momentum_final"],
    }
    ax2.bar(list(bars), list(bars.values()), color=["tab:orange", "tab:green", "tab:gray"])
    ax2.set_ylabel("momentum")
    ax2.set_title(f"window p={seg['probability']:.4f}")
    fig.savefig(path, **_SAVE_OPTS)
    plt.close(fig)


def _fig_stern_gerlach(results: dict, path: str) -> None:
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.6))
    rows = [b for b in results["branches"] if "factor_deltas" in b]
    labels = [b["label"] for b in rows]
    width = 0.35
    xpos = np.arange(len(rows))
    part = [b["factor_deltas"].get("particle", 0.0) for b in rows]
    app = [b["factor_deltas"].get("apparatus", 0.0) for b in rows]
    ax1.bar(xpos - width / 2, part, width, label="particle")
    ax1.bar(xpos + width / 2, app, width, label="apparatus")
    ax1.axhline(0.0, color="k", lw=0.6)
    ax1.set_xticks(xpos, labels)
    ax1.set_ylabel("branch delta <p_z>")
    ax1.legend(fontsize=8)
    pre = results["pre_interaction"]["sigma_x"]
    post = results["post_interaction"]["sigma_x"]
    ax2.bar(["pre", "post"], [pre, post], color="tab:purple")
    ax2.set_ylabel("<sigma_x>")
    ax2.set_title(f"pointer overlap={results['pointer_overlap_real']:.3g}")
    fig.savefig(path, **_SAVE_OPTS)
    plt.close(fig)


def _fig_apr_box(results: dict, path: str) -> None:
    fig, ax = plt.subplots(figsize=(6.2, 3.8))
    spectrum = np.asarray(results["inside_spectrum"], dtype=float)
    modes = np.arange(1, spectrum.size + 1)
    ax.semilogy(modes, np.maximum(spectrum, 1e-300), lw=1.0)
    ax.axvline(results["spec"]["n_modes"], color="tab:red", lw=0.8, label="band limit N")
    ax.set_xlabel("box mode n")
    ax.set_ylabel("inside-branch mode weight")
    e_in = results["inside_energy"]
    ax.set_title(
        f"inside <E>={e_in:.1f} vs E_N={results['band_limit_energy']:.1f} "
        f"(p_in={results['window_probability']:.2e})"
    )
    ax.legend(fontsize=8)
    fig.savefig(path, **_SAVE_OPTS)
    plt.close(fig)


_RENDERERS = {
    "mach_zehnder": _fig_mach_zehnder,
    "free_packet": _fig_free_packet,
    "stern_gerlach": _fig_stern_gerlach,
    "apr_box": _fig_apr_box,
}


def render_figures(scenario: str, results: dict, output_dir: str) -> list[str]:
    """Render the scenario's figure(s); returns the written paths."""
    renderer = _RENDERERS[scenario]
    path = os.path.join(output_dir, f"fig_{scenario}.png")
    renderer(results, path)
    return [path]
