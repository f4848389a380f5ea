"""Matplotlib figure rendering for the report path.

Figures are a convenience view rendered next to the CSV outputs; the CSVs
remain the authoritative results format.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def render_reward_curves(curves: dict, out_path, title: str | None = None) -> None:
    """Plot cumulative-reward curves, one line per agent, to a PNG."""
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    for agent, curve in curves.items():
        ax.plot(range(1, len(curve) + 1), curve, label=agent, linewidth=1.2)
    ax.set_xlabel("frame")
    ax.set_ylabel("cumulative reward")
    if title:
        ax.set_title(title)
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(out_path, dpi=120)
    plt.close(fig)


def render_der_bars(der_by_agent: dict, out_path, title: str | None = None) -> None:
    """Bar chart of DER percent per agent for one grid cell."""
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    agents = list(der_by_agent)
    ax.bar(agents, [der_by_agent[a] for a in agents], color="tab:blue")
    ax.set_ylabel("DER (%)")
    ax.set_ylim(0, 100)
    if title:
        ax.set_title(title)
    ax.tick_params(axis="x", rotation=20)
    fig.tight_layout()
    fig.savefig(out_path, dpi=120)
    plt.close(fig)
