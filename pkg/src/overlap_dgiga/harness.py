"""Refinement-sequence driver with CSV and SVG output."""

from __future__ import annotations

import csv
import logging
import math
import os
import time
from dataclasses import dataclass
from typing import Optional
from xml.sax.saxutils import escape

from .analysis import ConvergenceTable, ErrorReport, dg_error
from .assembly import AssemblyConfig, assemble
from .cases import get_example
from .errors import ConfigError, DGIGAError, GeometryError, SolverError
from .geometry import make_overlap
from .solver import solve

log = logging.getLogger(__name__)

CSV_COLUMNS = ("level", "h", "d_o", "dofs", "dg_error", "l2_error", "rate")


@dataclass(frozen=True)
class RunConfig:
    """One convergence study.

    Attributes:
        example: name of a built-in case.
        degree: spline degree.
        lam: overlap exponent, ``d_o = overlap_scale * h**lam``; ``math.inf``
            keeps the interfaces matching.
        levels: number of mesh levels (the first has ``elements`` spans per
            patch and direction, each further level halves them).
        eta: penalty, default ``4 (p+1)^2``.
        quad: Gauss points per direction, default ``p + 1``.
        out: output directory, or ``None``.
        variant: ``"symmetric"`` or ``"one_sided"``.
        non_matching: refine one patch once more than the others.
        elements: spans per patch and direction on the coarsest level.
        overlap_scale: factor in front of ``h**lam``.
        solver: ``"auto"``, ``"cg"`` or ``"direct"``.
    """

    example: str = "smooth"
    degree: int = 2
    lam: float = 2.0
    levels: int = 5
    eta: Optional[float] = None
    quad: Optional[int] = None
    out: Optional[str] = None
    variant: str = "symmetric"
    non_matching: bool = False
    elements: int = 4
    overlap_scale: float = 1.0
    solver: str = "auto"

    def __post_init__(self):
        if not self.lam > 0:
            raise ConfigError("lambda must be positive, got %r" % (self.lam,))
        if self.levels < 2:
            raise ConfigError("need at least two levels")
        if self.degree < 1:
            raise ConfigError("degree must be at least 1")
        if self.elements < 1:
            raise ConfigError("elements must be at least 1")
        if not self.overlap_scale > 0:
            raise ConfigError("overlap scale must be positive")
        # validates penalty, variant and quadrature
        AssemblyConfig(self.eta, self.variant, self.quad)

    @property
    def matching(self):
        return math.isinf(self.lam)


def overlap_width_for(cfg, h):
    """Nominal ``d_o`` at mesh size ``h``."""
    return 0.0 if cfg.matching else cfg.overlap_scale * h ** cfg.lam


def run_convergence(cfg, case=None):
    """Solve on ``cfg.levels`` uniformly refined meshes and collect errors.

    At each level the unperturbed mesh size ``h_i`` fixes ``d_o = h_i^lam``;
    every overlap pair of the case is displaced by ``d_o`` before assembly.

    Raises:
        GeometryError, SolverError: with the failing level in the message.
    """
    case = case or get_example(cfg.example)
    acfg = AssemblyConfig(cfg.eta, cfg.variant, cfg.quad)
    base = case.build(cfg.degree, cfg.elements, cfg.non_matching)
    table = ConvergenceTable(lam=cfg.lam, label=case.name)
    mp = base
    for level in range(cfg.levels):
        if level:
            mp = mp.refine()
        start = time.perf_counter()
        h = mp.mesh_size()
        d_o = overlap_width_for(cfg, h)
        try:
            work = mp
            for k in case.overlap_pairs:
                work = make_overlap(work, k, d_o)
            system = assemble(work, case.spec, acfg)
            sol = solve(system, method=cfg.solver)
        except GeometryError as exc:
            raise type(exc)("level %d (h=%.4g, d_o=%.4g): %s" % (level, h, d_o, exc)) from exc
        except SolverError as exc:
            raise SolverError("level %d (h=%.4g, %d dofs): %s"
                              % (level, h, system.num_dofs, exc), exc.residual) from exc
        report = dg_error(sol, case.spec, h=h)
        table.reports.append(report)
        log.info("%s lam=%s level %d: h=%.4g d_o=%.3g dofs=%d err=%.4e (%.1fs)", case.name,
                 cfg.lam, level, h, report.d_o, report.dofs, report.dg_error,
                 time.perf_counter() - start)
    return table


def _fmt(x):
    return "%.17g" % x


def write_csv(table, path):
    """Write one table; the rate of level 0 is left empty."""
    rates = table.rates
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for i, r in enumerate(table.reports):
            rate = "" if i == 0 else _fmt(rates[i - 1])
            writer.writerow([i, _fmt(r.h), _fmt(r.d_o), r.dofs, _fmt(r.dg_error),
                             _fmt(r.l2_error), rate])


def read_csv(path, lam=math.inf, label=""):
    """Parse a file written by :func:`write_csv` back into a table.

    The error components are not stored; they are restored as
    ``(dg_error, 0, 0)`` so the accounting invariant still holds.
    """
    reports = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
            raise ValueError("unexpected CSV header %r" % (reader.fieldnames,))
        for row in reader:
            e = float(row["dg_error"])
            reports.append(ErrorReport(h=float(row["h"]), dg_error=e, components=(e, 0.0, 0.0),
                                       l2_error=float(row["l2_error"]), d_o=float(row["d_o"]),
                                       dofs=int(row["dofs"])))
    return ConvergenceTable(reports, lam=lam, label=label)


def lam_tag(lam):
    return "inf" if math.isinf(lam) else ("%g" % lam)


_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")


def write_svg(tables, path, title=""):
    """Log-log plot of DG error against ``h``: one polyline per table."""
    pts = [(r.h, r.dg_error) for t in tables for r in t.reports if r.dg_error > 0]
    if not pts:
        raise ValueError("nothing to plot")
    lx = [math.log10(h) for h, _ in pts]
    ly = [math.log10(e) for _, e in pts]
    x0, x1 = math.floor(min(lx)), math.ceil(max(lx))
    y0, y1 = math.floor(min(ly)), math.ceil(max(ly))
    x1 = x1 if x1 > x0 else x0 + 1
    y1 = y1 if y1 > y0 else y0 + 1
    width, height, left, right, top, bottom = 640, 480, 70, 150, 40, 50
    pw, ph = width - left - right, height - top - bottom

    def sx(v):
        return left + (math.log10(v) - x0) / (x1 - x0) * pw

    def sy(v):
        return top + (y1 - math.log10(v)) / (y1 - y0) * ph

    out = ['<svg xmlns="http://www.w3.org/2000/svg" width="%d" height="%d" '
           'viewBox="0 0 %d %d" font-family="sans-serif" font-size="12">'
           % (width, height, width, height),
           '<rect width="100%" height="100%" fill="white"/>',
           '<text x="%d" y="22" font-size="14">%s</text>' % (left, escape(title)),
           '<rect x="%d" y="%d" width="%d" height="%d" fill="none" stroke="black"/>'
           % (left, top, pw, ph)]
    for k in range(x0, x1 + 1):
        x = left + (k - x0) / (x1 - x0) * pw
        out.append('<line x1="%.2f" y1="%d" x2="%.2f" y2="%d" stroke="#ddd"/>'
                   % (x, top, x, top + ph))
        out.append('<text x="%.2f" y="%d" text-anchor="middle">1e%d</text>'
                   % (x, top + ph + 18, k))
    for k in range(y0, y1 + 1):
        y = top + (y1 - k) / (y1 - y0) * ph
        out.append('<line x1="%d" y1="%.2f" x2="%d" y2="%.2f" stroke="#ddd"/>'
                   % (left, y, left + pw, y))
        out.append('<text x="%d" y="%.2f" text-anchor="end">1e%d</text>' % (left - 6, y + 4, k))
    out.append('<text x="%.1f" y="%d" text-anchor="middle">h</text>'
               % (left + pw / 2, height - 10))
    out.append('<text x="16" y="%.1f" transform="rotate(-90 16 %.1f)" text-anchor="middle">'
               'DG error</text>' % (top + ph / 2, top + ph / 2))
    for i, t in enumerate(tables):
        color = _COLORS[i % len(_COLORS)]
        coords = " ".join("%.2f,%.2f" % (sx(r.h), sy(r.dg_error))
                          for r in t.reports if r.dg_error > 0)
        label = "lambda=%s" % lam_tag(t.lam)
        rate = t.mean_last_rates()
        if not math.isnan(rate):
            label += " (r=%.2f)" % rate
        out.append('<polyline fill="none" stroke="%s" stroke-width="2" points="%s">'
                   '<title>%s</title></polyline>' % (color, coords, escape(label)))
        ly_ = top + 16 + 18 * i
        out.append('<line x1="%d" y1="%d" x2="%d" y2="%d" stroke="%s" stroke-width="2"/>'
                   % (left + pw + 10, ly_, left + pw + 30, ly_, color))
        out.append('<text x="%d" y="%d">%s</text>' % (left + pw + 34, ly_ + 4, escape(label)))
    out.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(out) + "\n")


def emit_outputs(tables, out_dir, stem=None):
    """Write one CSV per table and a combined SVG into ``out_dir``.

    Returns the list of written paths.
    """
    if isinstance(tables, ConvergenceTable):
        tables = [tables]
    if not tables or not all(t.reports for t in tables):
        raise ValueError("nothing to write: empty convergence table")
    os.makedirs(out_dir, exist_ok=True)
    stem = stem or tables[0].label or "run"
    paths = []
    for t in tables:
        p = os.path.join(out_dir, "%s_lam%s.csv" % (stem, lam_tag(t.lam)))
        write_csv(t, p)
        paths.append(p)
    svg = os.path.join(out_dir, "%s_rates.svg" % stem)
    write_svg(tables, svg, title="%s: DG error vs h" % stem)
    paths.append(svg)
    return paths


def format_table(table):
    """Plain-text table for terminal output."""
    lines = ["%5s %12s %12s %8s %14s %14s %7s" % CSV_COLUMNS]
    rates = table.rates
    for i, r in enumerate(table.reports):
        rate = "" if i == 0 else "%.3f" % rates[i - 1]
        lines.append("%5d %12.5g %12.4g %8d %14.6e %14.6e %7s"
                     % (i, r.h, r.d_o, r.dofs, r.dg_error, r.l2_error, rate))
    return "\n".join(lines)


__all__ = ["RunConfig", "run_convergence", "emit_outputs", "write_csv", "read_csv",
           "write_svg", "format_table", "overlap_width_for", "DGIGAError"]
