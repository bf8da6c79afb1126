"""Matplotlib figures for simulation and analysis reports."""

from __future__ import annotations

from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

MARKERS = {"SC": "x", "SCO": "*", "SCF": "s", "TSCF": "o",
           "FAST_SC": "+", "FAST_SCF": "D", "FAST_TSCF": "^"}


def _by_decoder(results):
    curves = defaultdict(list)
    for r in results:
        curves[r.decoder].append(r)
    for rs in curves.values():
        rs.sort(key=lambda r: r.ebn0_db)
    return curves


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, bbox_inches="tight", dpi=120)
    plt.close(fig)
    return path


def fer_figure(results, path, title=None):
    """FER against Eb/N0, one curve per decoder."""
    fig, ax = plt.subplots(figsize=(5.5, 4.2))
    for name, rs in _by_decoder(results).items():
        pts = [(r.ebn0_db, r.fer) for r in rs if r.frame_errors > 0]
        if pts:
            x, y = zip(*pts)
            ax.semilogy(x, y, marker=MARKERS.get(name, "."), label=name)
    ax.set_xlabel("$E_b/N_0$ [dB]")
    ax.set_ylabel("FER")
    ax.grid(True, which="both", ls=":", lw=0.5)
    ax.legend(fontsize=8)
    if title:
        ax.set_title(title)
    return _save(fig, path)


def steps_figure(results, path, title=None):
    """Average decoding steps against Eb/N0."""
    fig, ax = plt.subplots(figsize=(5.5, 4.2))
    for name, rs in _by_decoder(results).items():
        ax.semilogy([r.ebn0_db for r in rs], [r.avg_steps for r in rs],
                    marker=MARKERS.get(name, "."), label=name)
    ax.set_xlabel("$E_b/N_0$ [dB]")
    ax.set_ylabel("average decoding steps")
    ax.grid(True, which="both", ls=":", lw=0.5)
    ax.legend(fontsize=8)
    if title:
        ax.set_title(title)
    return _save(fig, path)


def omega_sweep_figure(sweeps, path):
    """FER against the flip threshold; the optimum and 10%-loss band marked."""
    fig, ax = plt.subplots(figsize=(5.5, 4.2))
    for sw in sweeps:
        line, = ax.semilogy(sw.omegas, sw.fer, marker="o", ms=3,
                            label=f"{sw.ebn0_db:g} dB")
        ax.plot([sw.best_omega], [sw.best_fer], marker="v", color=line.get_color(), ms=8)
        band = sw.band
        ax.hlines((1.0 + sw.loss) * sw.best_fer, band.min(), band.max(),
                  color=line.get_color(), lw=3, alpha=0.5)
    ax.set_xlabel(r"$\Omega$")
    ax.set_ylabel("FER")
    ax.grid(True, which="both", ls=":", lw=0.5)
    ax.legend(fontsize=8)
    return _save(fig, path)


def theory_figure(rows, path):
    """Hypothetical (critical-set) FER against theoretical SC FER."""
    fig, ax = plt.subplots(figsize=(4.8, 4.5))
    for ebn0 in sorted({r["ebn0_db"] for r in rows}):
        sel = [r for r in rows if r["ebn0_db"] == ebn0]
        ax.loglog([r["fer_sc"] for r in sel], [r["fer_cs"] for r in sel], marker="o",
                  ls="", label=f"{ebn0:g} dB")
    lo = min(min(r["fer_sc"], r["fer_cs"]) for r in rows if r["fer_cs"] > 0)
    ax.loglog([lo, 1], [lo, 1], "k--", lw=0.8)
    ax.set_xlabel(r"FER$_{SC}$")
    ax.set_ylabel(r"FER$^*_{SC}$ (Rate-1 critical set)")
    ax.grid(True, which="both", ls=":", lw=0.5)
    ax.legend(fontsize=8)
    return _save(fig, path)
