"""Log-log SVG figures of realized error against the bound."""
from __future__ import annotations

from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

_COLORS = ["tab:purple", "tab:blue", "tab:cyan", "tab:green", "tab:olive"]


def plot_summary(summary, out_dir) -> list:
    """One figure per (input kind, SNR, eps rule); returns written paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    curves = defaultdict(lambda: defaultdict(list))
    for row in summary:
        curves[(row["input_kind"], row["snr_db"], row["eps_rule"])][row["n_eta"]].append(row)
    plt.rcParams["svg.hashsalt"] = "sparseva"
    plt.rcParams["svg.fonttype"] = "path"
    written = []
    for (kind, snr, rule), by_eta in sorted(curves.items()):
        fig, ax = plt.subplots(figsize=(5.5, 3.8))
        first = next(iter(by_eta.values()))
        first = sorted(first, key=lambda r: r["N"])
        Ns = [r["N"] for r in first]
        ax.fill_between(Ns, [r["error_l2_min"] for r in first], [r["error_l2_max"] for r in first],
                        color="tab:red", alpha=0.2, lw=0)
        ax.plot(Ns, [r["error_l2_median"] for r in first], color="tab:red", marker="o", label="error (median)")
        for color, (k, rows) in zip(_COLORS, sorted(by_eta.items())):
            rows = sorted(rows, key=lambda r: r["N"])
            ax.plot([r["N"] for r in rows], [r["bound_l2_median"] for r in rows], color=color, marker="s",
                    label=f"bound, n_eta={k}")
        ax.set_xscale("log")
        ax.set_yscale("log")
        ax.set_xlabel("N")
        ax.set_ylabel("||theta_hat - theta*||_2")
        ax.set_title(f"{kind} input, SNR={snr:g} dB, eps={rule}")
        ax.legend(fontsize=7)
        fig.tight_layout()
        path = out / f"{kind}_snr{snr:g}_{rule.replace(':', '-')}.svg"
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
        written.append(path)
    return written
