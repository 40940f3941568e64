"""Standalone SVG figures (no display); byte-stable for identical data."""
from __future__ import annotations

import io
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_RC = {
    "svg.hashsalt": "patchkit",
    "svg.fonttype": "none",
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.4,
}


def _save(fig, path: Path) -> Path:
    buf = io.StringIO()
    with plt.rc_context(_RC):
        fig.savefig(buf, format="svg", metadata={"Date": None, "Creator": "patchkit"})
    plt.close(fig)
    path = Path(path)
    path.write_text(buf.getvalue(), encoding="utf-8", newline="\n")
    return path


def _figure(**kw):
    with plt.rc_context(_RC):
        return plt.figure(**kw)


def s11_svg(freqs, s11_db, path, threshold_db: float = -10.0, title: str = "S11",
            surrogate_db=None) -> Path:
    fig = _figure(figsize=(6.0, 3.6))
    with plt.rc_context(_RC):
        ax = fig.add_subplot(111)
        f = np.asarray(freqs) / 1e9
        ax.plot(f, s11_db, color="#1f4e9c", lw=1.4, label="FDTD")
        if surrogate_db is not None:
            ax.plot(f, surrogate_db, color="#999999", lw=1.0, ls="--", label="coupled-resonator preview")
        ax.axhline(threshold_db, color="#c0392b", lw=0.9, ls=":", label=f"{threshold_db:g} dB")
        ax.set_xlabel("frequency (GHz)")
        ax.set_ylabel("|S11| (dB)")
        ax.set_xlim(f[0], f[-1])
        ax.set_ylim(min(-30.0, float(np.min(s11_db)) - 2.0), 1.0)
        ax.set_title(title)
        ax.legend(loc="lower right", fontsize=8)
        fig.tight_layout()
    return _save(fig, path)


def pattern_svg(cuts: dict, path, title: str = "pattern") -> Path:
    """Polar plot of principal-plane cuts ``{label: (theta_deg, dbi)}``."""
    fig = _figure(figsize=(4.8, 4.8))
    with plt.rc_context(_RC):
        ax = fig.add_subplot(111, projection="polar")
        floor = -30.0
        top = max(float(np.max(v)) for _, v in cuts.values())
        for (label, (ang, dbi)), color in zip(sorted(cuts.items()), ("#1f4e9c", "#c0392b", "#2e8b57")):
            r = np.maximum(np.asarray(dbi) - top, floor) - floor
            ax.plot(np.radians(ang), r, color=color, lw=1.2, label=label)
        ax.set_theta_zero_location("N")
        ax.set_theta_direction(-1)
        ticks = np.arange(0, -floor + 1, 10.0)
        ax.set_yticks(ticks)
        ax.set_yticklabels([f"{t + floor + top:.0f}" for t in ticks], fontsize=7)
        ax.set_title(f"{title}\n(dBi, peak {top:.2f})")
        ax.legend(loc="lower left", fontsize=8, bbox_to_anchor=(-0.1, -0.12))
        fig.tight_layout()
    return _save(fig, path)


def sweep_svg(d_mm, f_low_ghz, f_high_ghz, path, targets_ghz=(), chosen_mm=None,
              clamped=None, title: str = "split frequencies") -> Path:
    fig = _figure(figsize=(6.0, 3.6))
    with plt.rc_context(_RC):
        ax = fig.add_subplot(111)
        ax.plot(d_mm, f_low_ghz, color="#1f4e9c", lw=1.4, label="lower split")
        ax.plot(d_mm, f_high_ghz, color="#c0392b", lw=1.4, label="upper split")
        for t in targets_ghz:
            ax.axhline(t, color="#555555", lw=0.8, ls=":")
        if clamped is not None and np.any(clamped):
            d = np.asarray(d_mm)[np.asarray(clamped)]
            ax.plot(d, np.asarray(f_high_ghz)[np.asarray(clamped)], "x", color="#000000",
                    label="K clamped")
        if chosen_mm is not None:
            ax.axvline(chosen_mm, color="#2e8b57", lw=1.0, ls="--", label=f"chosen d = {chosen_mm:g} mm")
        ax.set_xlabel("displacement d (mm)")
        ax.set_ylabel("frequency (GHz)")
        ax.set_title(title)
        ax.legend(loc="best", fontsize=8)
        fig.tight_layout()
    return _save(fig, path)
