"""Report and artifact writers: CSV curves, band lists, matrix dumps, SVG plots."""

import csv
import io
from pathlib import Path
from typing import List, Optional, Sequence, Union

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from app.models import DispersionCurves, LimitReport, ThreeParticleReport, WindowMatrix  # noqa: E402
from app.utils.formatters import (  # noqa: E402
    format_cell,
    format_complex,
    format_interval,
    format_number,
    format_open_interval,
    format_union,
)
from app.utils.intervals import IntervalUnion  # noqa: E402

# SVG output is byte-identical across runs
SVG_RC = {"svg.hashsalt": "lattice-spectra", "svg.fonttype": "none"}
SVG_METADATA = {"Date": None}


def curves_csv(curves: DispersionCurves) -> str:
    """Rows (φ_1, ..., φ_n, j, Re λ, Im λ), branches counted from 1."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    n = curves.angles.shape[1]
    writer.writerow([f"phi{i + 1}" for i in range(n)] + ["j", "re", "im"])
    for angles, values in zip(curves.angles, curves.values):
        prefix = [format_number(a) for a in angles]
        for j, value in enumerate(values, start=1):
            writer.writerow(prefix + [j, format_number(value.real), format_number(value.imag)])
    return buffer.getvalue()


def bands_lines(bands: IntervalUnion) -> List[str]:
    return [format_interval(interval) for interval in bands]


def matrix_dump_text(window: WindowMatrix) -> str:
    """
    Dense text dump of a window matrix.

    Format:
        # window-matrix v1 rows=<r> kind=<box|ball> radius=<R>
        # index <row> <orbit> [<cell>]      (one line per row)
        <re>,<im> <re>,<im> ...             (one line per matrix row)
    """
    lines = [f"# window-matrix v1 rows={window.rows} kind={window.kind} radius={window.radius}"]
    for row, vertex in enumerate(window.index):
        lines.append(f"# index {row} {vertex.orbit} {format_cell(vertex.cell)}")
    for row in window.matrix:
        lines.append(" ".join(f"{format_number(z.real)},{format_number(z.imag)}" for z in row))
    return "\n".join(lines) + "\n"


def limit_report_lines(report: LimitReport) -> List[str]:
    lines = [f"members {len(report.family)}"]
    for index, (member, spectrum) in enumerate(zip(report.family, report.member_spectra), start=1):
        lines.append(f"member {index}: {'; '.join(member.provenance)}")
        for delta, field in member.operator.terms.items():
            values = ", ".join(format_complex(z) for z in field.matrix.ravel())
            lines.append(f"  shift {format_cell(delta)}: [{values}]")
        if isinstance(spectrum, IntervalUnion):
            lines.append(f"  bands {format_union(spectrum)}")
        else:
            lines.append(f"  curves {spectrum.values.shape[0]} points x {spectrum.values.shape[1]} branches")
    if report.spectrum is not None:
        lines.append(f"ess {format_union(report.spectrum)}")
        for gap in report.gaps:
            lines.append(f"gap {format_open_interval(gap)}")
    return lines


def three_particle_lines(report: ThreeParticleReport) -> List[str]:
    lines = [f"S {format_union(report.free_bands)}"]
    for index, channel in enumerate(report.channels, start=1):
        values = ", ".join(format_number(d.value) for d in channel.discrete)
        lines.append(f"H{index} discrete [{values}]")
        lines.append(f"H{index} spectrum {format_union(channel.spectrum)}")
        lines.append(f"H{index} enclosure {format_union(channel.inner)} <= . <= {format_union(channel.outer)}")
    lines.append(f"H12 inner {format_union(report.interaction_inner)}")
    lines.append(f"H12 outer {format_union(report.interaction_outer)}")
    lines.append(f"ess inner {format_union(report.inner)}")
    lines.append(f"ess outer {format_union(report.outer)}")
    lo, hi = report.sanity_bound
    lines.append(f"bound {format_interval((lo, hi))} {'ok' if report.within_bound else 'VIOLATED'}")
    return lines


def _save_svg(figure, path: Union[str, Path]):
    with matplotlib.rc_context(SVG_RC):
        figure.savefig(str(path), format="svg", metadata=SVG_METADATA)
    plt.close(figure)


def plot_curves_svg(curves: DispersionCurves, path: Union[str, Path], title: str = ""):
    """Branches against the first angle (n = 1) or against the grid index, real parts only."""
    figure, axis = plt.subplots(figsize=(6, 4))
    if curves.angles.shape[1] == 1:
        x = curves.angles[:, 0]
        axis.set_xlabel("phi")
    else:
        x = range(len(curves.angles))
        axis.set_xlabel("grid point")
    for j in range(curves.values.shape[1]):
        axis.plot(x, curves.values[:, j].real, linewidth=1.0, label=f"j={j + 1}")
    axis.set_ylabel("Re lambda")
    if title:
        axis.set_title(title)
    axis.legend(loc="best", fontsize="small")
    _save_svg(figure, path)


def plot_bands_svg(
    bands: IntervalUnion,
    path: Union[str, Path],
    title: str = "",
    gaps: Sequence = (),
    enclosure: Optional[IntervalUnion] = None,
):
    """Bands as thick segments; an outer enclosure, when given, is drawn wider underneath."""
    figure, axis = plt.subplots(figsize=(6, 1.8))
    for a, b in enclosure or ():
        axis.plot([a, b], [0, 0], linewidth=14, solid_capstyle="butt", color="tab:orange", alpha=0.4)
    for a, b in bands:
        axis.plot([a, b], [0, 0], linewidth=6, solid_capstyle="butt", color="tab:blue")
    for a, b in gaps:
        axis.plot([a, b], [0, 0], linewidth=1, linestyle=":", color="tab:red")
    axis.set_yticks([])
    axis.set_xlabel("lambda")
    if title:
        axis.set_title(title)
    _save_svg(figure, path)
