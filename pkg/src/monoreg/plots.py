"""Figure output for simulate --plot.

Two artifacts per run: a self-contained gnuplot script that re-renders the
output/control/state panels straight from the CSV (diffable, no Python
needed), and matplotlib PNG renderings of the same panels next to it.
"""

import numpy as np

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)


def _csv_columns(n, m, p):
    """1-based gnuplot column indices for each block of the trajectory CSV."""
    cols = {"t": 1}
    base = 1
    cols["x"] = list(range(base + 1, base + 1 + n))
    base += n
    cols["y"] = list(range(base + 1, base + 1 + m))
    base += m
    cols["u"] = list(range(base + 1, base + 1 + m))
    base += m
    cols["v"] = list(range(base + 1, base + 1 + p))
    base += p
    cols["H2"] = base + 1
    cols["supply"] = base + 2
    cols["distS"] = base + 3
    cols["inOmega"] = base + 4
    return cols


def write_gnuplot_script(script_path, csv_name, n, m, p, title=""):
    """Emit a gnuplot script plotting outputs, controls and states from the CSV."""
    cols = _csv_columns(n, m, p)

    def series(idxs, label):
        return ", \\\n    ".join(
            f"csv using 1:{c} with lines title '{label}{i}'" for i, c in enumerate(idxs))

    text = f"""# trajectory panels for {title or csv_name}
# render with:  gnuplot <this file>
csv = '{csv_name}'
set datafile separator ','
set key outside right
set grid
set xlabel 't [s]'
set terminal pngcairo size 1200,900
set output '{csv_name}.png'
set multiplot layout 3,1 title '{title or csv_name}'
set ylabel 'output'
plot {series(cols['y'], 'y')}
set ylabel 'control'
plot {series(cols['u'], 'u')}
set ylabel 'state'
plot {series(cols['x'], 'x')}
unset multiplot
"""
    with open(script_path, "w", encoding="utf-8") as fh:
        fh.write(text)
    return script_path


def render_figures(traj, stem, title=""):
    """Write <stem>_outputs.png, <stem>_controls.png, <stem>_states.png."""
    t = traj.t
    written = []

    fig, ax = plt.subplots(figsize=(8, 4.5))
    for i in range(traj.y.shape[1]):
        ax.plot(t, traj.y[:, i], label=f"y{i}")
    if traj.y_ref is not None:
        for i in range(traj.y_ref.shape[1]):
            ax.plot(t, traj.y_ref[:, i], "--", lw=1, label=f"y_d{i}")
    ax.set_xlabel("t [s]")
    ax.set_ylabel("output")
    ax.legend(loc="best", fontsize=8)
    ax.grid(True, alpha=0.4)
    if title:
        ax.set_title(title)
    path = f"{stem}_outputs.png"
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    written.append(path)

    fig, ax = plt.subplots(figsize=(8, 4.5))
    for i in range(traj.u.shape[1]):
        ax.plot(t, traj.u[:, i], label=f"u{i}")
    ax.set_xlabel("t [s]")
    ax.set_ylabel("control")
    ax.legend(loc="best", fontsize=8)
    ax.grid(True, alpha=0.4)
    path = f"{stem}_controls.png"
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    written.append(path)

    fig, axes = plt.subplots(2, 1, figsize=(8, 6), sharex=True)
    for i in range(traj.x.shape[1]):
        axes[0].plot(t, traj.x[:, i], label=f"x{i}")
    axes[0].set_ylabel("state")
    axes[0].legend(loc="best", fontsize=8)
    axes[0].grid(True, alpha=0.4)
    if np.any(np.isfinite(traj.H2)):
        axes[1].plot(t, traj.H2, label="H2")
    axes[1].plot(t, traj.dist_s, label="dist(y, S)")
    axes[1].set_xlabel("t [s]")
    axes[1].set_ylabel("storage / distance")
    axes[1].legend(loc="best", fontsize=8)
    axes[1].grid(True, alpha=0.4)
    path = f"{stem}_states.png"
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    written.append(path)
    return written
