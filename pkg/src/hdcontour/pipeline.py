"""
End-to-end workflow: density fit, contours per return period, design
conditions and exceedance diagnostics, with all artifacts written to disk.
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass, field
from pathlib import Path

from . import cma, io, kde
from .config import RunConfig
from .core import MASS_TOLERANCE, Dataset, HdContourError, InvalidParameter, ReturnPeriodSpec, total_mass
from .design import design_conditions
from .diagnostics import INDEPENDENCE_CAVEAT, exceedance_report
from .hdc import compute_contour
from .synth import generate_synthetic

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_USAGE = 2
EXIT_INPUT = 3
EXIT_FIT = 4
EXIT_COMPUTE = 5

#: what each CLI subcommand produces
STAGES = {
    "fit": {"density"},
    "contour": {"contour"},
    "design-conditions": {"contour", "design"},
    "diagnose": {"contour", "diagnose"},
    "run": {"contour", "design", "diagnose", "plot"},
}


@dataclass
class RunSummary:
    exit_code: int = EXIT_OK
    files: list = field(default_factory=list)
    reports: list = field(default_factory=list)
    errors: list = field(default_factory=list)


def period_tag(years: float) -> str:
    return f"{years:g}y"


def load_dataset(config: RunConfig) -> tuple:
    """Dataset from the configured CSV or the synthetic generator, plus its digest."""
    if config.synthetic:
        ds = generate_synthetic(config.synthetic_n, config.seed, state_duration_hours=config.state_duration_hours)
        h = hashlib.sha256(ds.hs.tobytes() + ds.v.tobytes()).hexdigest()
        return ds, h
    if not config.input:
        raise InvalidParameter("no input: pass a CSV path or use the synthetic generator")
    ds = io.load_csv(config.input, config.columns, config.state_duration_hours, config.skip_invalid)
    return ds, io.file_digest(config.input)


def fit_density(dataset: Dataset, method: str, config: RunConfig):
    """Return ``(fit_report, grid)`` for ``method`` in {"kde", "cma"}."""
    if method == "kde":
        model, grid = kde.fit_grid(
            dataset,
            factor=config.bandwidth_factor,
            exponent=config.bandwidth_exponent,
            step=config.grid_step,
            padding=config.padding_bandwidths,
            strict=config.strict_grid,
        )
    elif method == "cma":
        model = cma.fit_conditional(dataset, config.cma_bin_width, config.cma_min_bin_count, config.cma_refine)
        hs_axis, v_axis = cma.default_axes_cma(model, config.grid_step)
        # make sure every observation lies on the grid
        hs_axis, v_axis = _cover(hs_axis, dataset.hs.max()), _cover(v_axis, dataset.v.max())
        grid = cma.evaluate_cma(model, hs_axis, v_axis)
    else:
        raise InvalidParameter(f"unknown method {method!r}")
    report = model.report()
    mass = total_mass(grid)
    if abs(mass - 1.0) > MASS_TOLERANCE:
        log.warning("%s density grid holds %.4f of the probability mass", method, mass)
    report["grid"] = {
        "hs_axis": [grid.hs_axis.origin, grid.hs_axis.step, grid.hs_axis.count],
        "v_axis": [grid.v_axis.origin, grid.v_axis.step, grid.v_axis.count],
        "total_mass": mass,
    }
    return report, grid


def _cover(axis, upper):
    if axis.last >= upper:
        return axis
    extra = int((upper - axis.last) // axis.step) + 1
    return type(axis)(axis.origin, axis.step, axis.count + extra)


def _exit_code_for(exc) -> int:
    if isinstance(exc, (io.IoError, io.SchemaError, io.RangeError, InvalidParameter)):
        return EXIT_INPUT
    if isinstance(exc, (kde.DegenerateData, cma.FitFailure, kde.GridTooSmall)):
        return EXIT_FIT
    if isinstance(exc, HdContourError):
        return EXIT_COMPUTE
    return EXIT_INTERNAL


def _record(summary: RunSummary, exc, stage, **where):
    code = _exit_code_for(exc)
    entry = {"stage": stage, "error": type(exc).__name__, "message": str(exc), "exit_code": code}
    entry.update(where)
    if getattr(exc, "diagnostics", None):
        entry["diagnostics"] = exc.diagnostics
    summary.errors.append(entry)
    if summary.exit_code == EXIT_OK:
        summary.exit_code = code
    log.error("%s failed: %s: %s", stage, type(exc).__name__, exc)


def run_pipeline(config: RunConfig, command: str = "run") -> RunSummary:
    """
    Execute the stages of ``command`` and write their artifacts.

    Component errors do not propagate: they are collected in the summary (and
    in ``error.json``), and the run continues with whatever does not depend
    on the failed piece. The exit code is that of the first error.
    """
    want = STAGES[command]
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    summary = RunSummary()

    def written(path):
        summary.files.append(Path(path))
        return path

    try:
        dataset, input_digest = load_dataset(config)
    except HdContourError as exc:
        _record(summary, exc, "load")
        _write_errors(out, summary)
        return summary

    digest = config.digest()
    base_meta = io.standard_meta(digest, input_digest)
    periods = [ReturnPeriodSpec(t) for t in config.return_periods]
    plot_contours = {p.years: [] for p in periods}

    for method in config.methods:
        try:
            report, grid = fit_density(dataset, method, config)
        except (HdContourError, ValueError) as exc:
            _record(summary, exc, "fit", method=method)
            continue
        report.update(base_meta)
        io.write_json(report, written(out / f"fit_report_{method}.json"))
        if "density" in want or config.write_density:
            io.write_density_csv(grid, written(out / f"density_{method}.csv"), dict(base_meta, method=method))
        if "contour" not in want:
            continue

        for spec in periods:
            tag = period_tag(spec.years)
            where = {"method": method, "return_period_years": spec.years}
            meta = dict(base_meta, method=method, return_period_years=f"{spec.years:g}")
            try:
                result = compute_contour(grid, spec, dataset.state_duration_hours)
            except HdContourError as exc:
                _record(summary, exc, "contour", **where)
                continue
            io.write_contour_csv(result, written(out / f"contour_{method}_{tag}.csv"), meta)
            plot_contours[spec.years].append((f"{method} {tag}", result.contour))

            if "design" in want:
                try:
                    conds = design_conditions(
                        result.contour, dataset, config.angles, normalization=config.frame_normalization
                    )
                    io.write_design_csv(conds, written(out / f"design_conditions_{method}_{tag}.csv"), meta)
                except HdContourError as exc:
                    _record(summary, exc, "design-conditions", **where)

            if "diagnose" in want:
                rep = exceedance_report(dataset, result, grid).as_dict()
                rep.pop("caveat")
                rep.update(
                    method=method,
                    return_period_years=spec.years,
                    threshold=result.threshold,
                    enclosed_mass=result.enclosed_mass,
                    boundary_touching=any(result.contour.boundary),
                    loops=len(result.contour.loops),
                )
                summary.reports.append(rep)

    if "diagnose" in want:
        doc = dict(base_meta, caveat=INDEPENDENCE_CAVEAT, n=dataset.n,
                   rejected_rows=len(dataset.rejected), contours=summary.reports)
        io.write_json(doc, written(out / "diagnostics.json"))

    if "plot" in want and config.write_plots:
        for years, items in plot_contours.items():
            if items:
                path = written(out / f"plot_{period_tag(years)}.svg")
                io.write_svg(path, dataset, items, title=f"{years:g}-year contours")

    _write_errors(out, summary)
    return summary


def _write_errors(out: Path, summary: RunSummary):
    path = out / "error.json"
    if summary.errors:
        io.write_json({"exit_code": summary.exit_code, "errors": summary.errors}, path)
        summary.files.append(path)
    elif path.exists():
        path.unlink()
