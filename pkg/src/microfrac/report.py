"""Deterministic artifact writers: delimited tables, manifests, figures.

Every writer is bit-stable: numbers are formatted to 12 significant
digits with LF line endings, manifests hash file contents in sorted
order, and the SVG backend runs headless with a pinned hash salt and no
embedded timestamps, so rerunning a configuration reproduces every
artifact byte for byte.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os

import numpy as np

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "microfrac"

import matplotlib.pyplot as plt
from matplotlib.collections import LineCollection
from matplotlib.patches import Polygon

from . import geometry
from .lattice import dual_segments

SQRT2 = math.sqrt(2.0)


# ----------------------------------------------------------------------
# tables and manifests
# ----------------------------------------------------------------------


def format_value(x):
    """Canonical text form: floats at 12 significant digits."""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return "%.12g" % float(x)
    return str(x)


def write_csv(path, header, rows):
    """Write one delimited table with LF endings and canonical numbers."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_value(x) for x in row])


def file_sha256(path):
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_manifest(outdir, names):
    """Hash the named files into ``manifest.json`` inside ``outdir``.

    Entries are sorted by name so identical artifact sets serialize
    identically; the manifest never lists itself.
    """
    entries = []
    for name in sorted(set(names)):
        path = os.path.join(outdir, name)
        entries.append({
            "name": name,
            "sha256": file_sha256(path),
            "bytes": os.path.getsize(path),
        })
    manifest = os.path.join(outdir, "manifest.json")
    with open(manifest, "w", newline="") as fh:
        json.dump({"files": entries}, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


# ----------------------------------------------------------------------
# figures
# ----------------------------------------------------------------------


def _save(fig, path):
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def _add_polygons(ax, polys, **kwargs):
    for poly in polys:
        ax.add_patch(Polygon(np.asarray(poly), closed=True, **kwargs))


def render_geometry(path, rho=0.05):
    """One unit cell: soft squares, butterflies, bands, zig-zag path."""
    cell = geometry.unit_cell_polygons(rho)
    fig, ax = plt.subplots(figsize=(5.0, 5.0))
    _add_polygons(ax, cell["column"], facecolor="#d9ecff",
                  edgecolor="none", zorder=0)
    _add_polygons(ax, cell["inclusion"], facecolor="#c0c0c0",
                  edgecolor="#606060", linewidth=0.6, zorder=1)
    _add_polygons(ax, cell["butterfly"], facecolor="#ffd9b3",
                  edgecolor="#cc7a00", linewidth=0.5, alpha=0.8, zorder=2)
    zig = geometry.zigzag_polyline(periods=1)
    ax.plot(zig[:, 0], zig[:, 1], color="k", linewidth=1.4, zorder=3)
    ax.set_xlim(-0.5, 0.5)
    ax.set_ylim(-0.5, 0.5)
    ax.set_aspect("equal")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_title(f"unit cell, rho = {rho:g}")
    fig.tight_layout()
    _save(fig, path)


def _inclusion_patches(ax, lattice):
    """Shade every soft square intersecting the sample."""
    eps = lattice.eps
    half = 0.125 * eps
    centers = []
    for base in (0.0, 0.5):
        lo = int(math.floor((-0.5 - base * eps) / eps)) - 1
        hi = int(math.ceil((0.5 - base * eps) / eps)) + 1
        for i in range(lo, hi + 1):
            for j in range(lo, hi + 1):
                centers.append(((i + base) * eps, (j + base) * eps))
    for cx, cy in centers:
        x0, x1 = max(cx - half, -0.5), min(cx + half, 0.5)
        y0, y1 = max(cy - half, -0.5), min(cy + half, 0.5)
        if x0 >= x1 or y0 >= y1:
            continue
        ax.add_patch(Polygon([[x0, y0], [x1, y0], [x1, y1], [x0, y1]],
                             closed=True, facecolor="#c0c0c0",
                             edgecolor="none", zorder=1))


def render_crack(lattice, crack, path, *, u=None, title=None):
    """Broken dual segments over the microstructure, field underneath.

    With ``u`` supplied the displacement is drawn as a symmetric
    two-color map under the crack; without it only the microstructure
    and the crack appear.
    """
    fig, ax = plt.subplots(figsize=(5.4, 5.0))
    if u is not None:
        vals = u.values if hasattr(u, "values") else np.asarray(u)
        vmax = float(np.max(np.abs(vals))) or 1.0
        mesh = ax.pcolormesh(lattice.xs, lattice.ys, vals, cmap="coolwarm",
                             vmin=-vmax, vmax=vmax, zorder=0)
        fig.colorbar(mesh, ax=ax, label="u")
    _inclusion_patches(ax, lattice)
    segments = []
    for kind, mask in (("v", crack.bv), ("h", crack.bh),
                       ("ne", crack.bne), ("se", crack.bse)):
        idx = np.flatnonzero(mask.ravel())
        if idx.size == 0:
            continue
        P0, P1 = dual_segments(lattice, kind)
        segments.extend(np.stack([P0[i], P1[i]]) for i in idx)
    if segments:
        ax.add_collection(LineCollection(segments, colors="k",
                                         linewidths=1.2, zorder=3))
    ax.set_xlim(-0.5, 0.5)
    ax.set_ylim(-0.5, 0.5)
    ax.set_aspect("equal")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    _save(fig, path)


def render_density(estimates, path):
    """Upper density envelope against load, with the exact references."""
    ts = [e.t for e in estimates]
    gs = [e.g_upper for e in estimates]
    fig, ax = plt.subplots(figsize=(5.6, 4.0))
    ax.plot(ts, gs, marker="o", markersize=3.5, color="#1f77b4",
            label="upper bound")
    ax.axhline(1.0 / SQRT2, color="#888888", linestyle="--", linewidth=0.9,
               label="1/sqrt(2)")
    ax.axhline(1.0, color="#444444", linestyle=":", linewidth=0.9,
               label="straight cut")
    t0s = [e.t0_estimate for e in estimates
           if e.t0_estimate is not None and math.isfinite(e.t0_estimate)]
    if t0s:
        ax.axvline(t0s[0], color="#d62728", linewidth=0.9,
                   label=f"t0 = {t0s[0]:g}")
    ax.set_xlabel("load t")
    ax.set_ylabel("energy per unit width")
    ax.legend(loc="lower right", fontsize=8)
    fig.tight_layout()
    _save(fig, path)


def render_trace_energies(trace, gap, path):
    """Constrained step energies against the unconstrained terminal."""
    loads = [s.load for s in trace.steps]
    totals = [s.energy.total for s in trace.steps]
    fig, ax = plt.subplots(figsize=(5.6, 4.0))
    ax.plot(loads, totals, marker="o", color="#1f77b4",
            label="constrained evolution")
    if trace.unconstrained_energy is not None:
        ax.axhline(trace.unconstrained_energy.total, color="#d62728",
                   linestyle="--", linewidth=1.0,
                   label=f"unconstrained ({trace.unconstrained_seed} seed)")
    ax.set_xlabel("load t")
    ax.set_ylabel("total energy")
    ax.set_title(f"toughening gap = {gap:.6g}")
    ax.legend(loc="lower right", fontsize=8)
    fig.tight_layout()
    _save(fig, path)
