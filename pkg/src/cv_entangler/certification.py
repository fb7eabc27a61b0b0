"""Reading measured covariance matrices, certifying them and reporting the result.

File format (UTF-8 text)::

    # comment lines start with '#'; "# label: <text>" names the matrix
    5.42 0.23 ...          <- 2n rows of 2n whitespace-separated numbers
    ...
    SIGMA                  <- optional: per-element standard errors follow
    0.0125 0.0125 ...
    ...

Blank lines are ignored.  Numbers use a decimal point and no thousands
separators.
"""

import csv
import io
import json
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import gaussian as gs
from .densecoding import worker_count
from .protocols import PPTEntry, SeparabilityReport, bipartitions, mode_labels, separability_report

REPORT_SCHEMA = "cv-entangler.certification-report"
REPORT_VERSION = 1
ASYMMETRY_WARN = 1e-6
MC_CHUNK = 1000
DATA_DIR = Path(__file__).parent / "data"


class CMFormatError(ValueError):
    """Malformed covariance-matrix file; ``line`` and ``column`` are 1-based when known."""

    def __init__(self, message, line=None, column=None):
        where = ""
        if line is not None:
            where = f"line {line}" + (f", column {column}" if column is not None else "") + ": "
        super().__init__(where + message)
        self.line = line
        self.column = column


@dataclass(frozen=True)
class MeasuredCM:
    cm: np.ndarray
    sigma: np.ndarray = None
    label: str = ""

    def __post_init__(self):
        gs.n_modes(self.cm)
        if self.sigma is not None:
            if self.sigma.shape != self.cm.shape:
                raise ValueError(f"sigma shape {self.sigma.shape} differs from matrix shape {self.cm.shape}")
            if np.any(self.sigma < 0):
                raise ValueError("standard errors must be nonnegative")
            if not np.array_equal(self.sigma, self.sigma.T):
                raise ValueError("standard-error matrix must be symmetric")

    @property
    def n_modes(self):
        return gs.n_modes(self.cm)


def _parse_block(rows, what):
    values = []
    for lineno, line in rows:
        row = []
        column = 1
        for token in line.split():
            column = line.index(token, column - 1) + 1
            try:
                row.append(float(token))
            except ValueError:
                raise CMFormatError(f"malformed number {token!r} in {what}", lineno, column) from None
            column += len(token)
        values.append((lineno, row))
    if not values:
        raise CMFormatError(f"empty {what}")
    dim = len(values[0][1])
    for lineno, row in values:
        if len(row) != dim:
            raise CMFormatError(f"{what} row has {len(row)} entries, expected {dim}", lineno)
    if len(values) != dim:
        raise CMFormatError(f"{what} is {len(values)} x {dim}, not square", values[-1][0])
    if dim % 2:
        raise CMFormatError(f"{what} dimension {dim} is odd; need 2 entries per mode", values[0][0])
    return np.array([row for _, row in values])


def _symmetric(matrix, what):
    asym = np.max(np.abs(matrix - matrix.T))
    if asym > ASYMMETRY_WARN:
        warnings.warn(f"{what} is asymmetric by {asym:.3g}; using (M + M^T)/2", RuntimeWarning, stacklevel=3)
    return gs.symmetrize(matrix)


def parse_cm(text, label=None):
    """Parse the text of a covariance-matrix file into a :class:`MeasuredCM`."""
    blocks = [[]]
    found_label = ""
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            comment = line.lstrip("#").strip()
            if comment.lower().startswith("label:") and not found_label:
                found_label = comment.split(":", 1)[1].strip()
            continue
        if line.upper() == "SIGMA":
            if len(blocks) == 2:
                raise CMFormatError("second SIGMA marker", lineno)
            blocks.append([])
            continue
        blocks[-1].append((lineno, line))
    cm = _symmetric(_parse_block(blocks[0], "covariance matrix"), "covariance matrix")
    sigma = None
    if len(blocks) == 2:
        sigma = _parse_block(blocks[1], "SIGMA block")
        if sigma.shape != cm.shape:
            raise CMFormatError(f"SIGMA block is {sigma.shape[0]} x {sigma.shape[1]}, matrix is {cm.shape[0]} x {cm.shape[1]}")
        if np.any(sigma < 0):
            raise CMFormatError("negative standard error in SIGMA block")
        sigma = _symmetric(sigma, "SIGMA block")
    return MeasuredCM(cm=cm, sigma=sigma, label=label if label is not None else found_label)


def read_cm(path):
    path = Path(path)
    return parse_cm(path.read_text(encoding="utf-8"), label=None)


def load_fixture(name):
    """Load a bundled measured matrix: ``"gamma1"`` or ``"gamma2"``."""
    return read_cm(DATA_DIR / f"{name}.cm")


def _format_rows(matrix):
    return ["  ".join(repr(float(v)) for v in row) for row in matrix]


def format_cm(cm, sigma=None, label=""):
    """Render a matrix (and optional errors) in the file format, at full precision."""
    if isinstance(cm, MeasuredCM):
        cm, sigma, label = cm.cm, cm.sigma, label or cm.label
    lines = []
    if label:
        lines.append(f"# label: {label}")
    lines.extend(_format_rows(np.asarray(cm, dtype=float)))
    if sigma is not None:
        lines.append("SIGMA")
        lines.extend(_format_rows(np.asarray(sigma, dtype=float)))
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class CertificationReport:
    separability: SeparabilityReport
    label: str = ""
    mc_mean: np.ndarray = None
    mc_std: np.ndarray = None
    draws: int = None
    seed: int = None


def certify(measured, draws=None, seed=1, workers=None):
    """Classify ``measured``; add Monte Carlo uncertainties when errors and ``draws`` are given."""
    if draws and measured.sigma is not None:
        return monte_carlo_eigs(measured, draws, seed, workers=workers)
    return CertificationReport(separability=separability_report(measured.cm), label=measured.label)


def _perturbed_eigs(cm, sigma, draws, seed, chunk_index, splits):
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(chunk_index,)))
    noise = rng.standard_normal((draws,) + cm.shape) * sigma
    upper = np.triu(noise)
    samples = cm + upper + np.swapaxes(np.triu(noise, 1), -1, -2)
    out = np.empty((draws, len(splits)))
    for k, (_, transposed, kept) in enumerate(splits):
        idx = gs.quadrature_indices(kept)
        reduced = samples[:, idx][:, :, idx]
        out[:, k] = gs.min_eig_ppt(reduced, transposed)
    return out


def monte_carlo_samples(measured, draws, seed=1, workers=None):
    """Minimum PPT eigenvalues of ``draws`` perturbed copies of the matrix.

    Each independent (upper-triangle) element gets a zero-mean Gaussian error
    of its standard deviation, mirrored to the lower triangle.  Draws are
    generated in fixed chunks of ``MC_CHUNK`` seeded by chunk index, so the
    result depends only on ``seed`` and ``draws``, never on ``workers``.
    """
    if measured.sigma is None:
        raise ValueError("Monte Carlo error propagation needs per-element standard errors")
    if draws < 100:
        raise ValueError(f"need at least 100 draws, got {draws}")
    splits = bipartitions(measured.n_modes)
    if not splits:
        raise ValueError("a single mode has no bipartition to test")
    sizes = [min(MC_CHUNK, draws - start) for start in range(0, draws, MC_CHUNK)]
    workers = worker_count() if workers is None else workers

    def run(item):
        index, size = item
        return _perturbed_eigs(measured.cm, measured.sigma, size, seed, index, splits)

    if workers > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(run, enumerate(sizes)))
    else:
        chunks = [run(item) for item in enumerate(sizes)]
    return np.concatenate(chunks)


def monte_carlo_eigs(measured, draws, seed=1, workers=None):
    """Certification report with Monte Carlo mean and standard deviation per entry."""
    samples = monte_carlo_samples(measured, draws, seed, workers)
    shifted = samples - samples[0]
    mean = samples[0] + shifted.mean(axis=0)
    std = shifted.std(axis=0, ddof=1)
    return CertificationReport(
        separability=separability_report(measured.cm),
        label=measured.label,
        mc_mean=mean,
        mc_std=std,
        draws=int(draws),
        seed=int(seed),
    )


def _fmt(value):
    if value is None:
        return "-"
    if abs(value) < 1e-12:
        return "0"
    return f"{value:.4g}"


def _label_modes(modes, n):
    labels = mode_labels(n)
    return "".join(labels[m] for m in modes)


def _render_text(report):
    sep = report.separability
    lines = [f"Certification report{': ' + report.label if report.label else ''}"]
    lines.append(
        f"modes: {sep.n_modes}  physical: {'yes' if sep.physical else 'NO'}"
        f"  min eig(gamma + i Omega) = {_fmt(sep.min_symplectic)}"
        f"  nonclassicality mu = {_fmt(sep.nonclassicality)}"
    )
    mc = report.mc_std is not None
    header = f"{'splitting':<10}{'transposed':<12}{'min PPT eig':>12}"
    header += f"{'MC mean':>12}{'MC std':>12}" if mc else ""
    lines.append(header + "  verdict")
    for k, entry in enumerate(sep.entries):
        row = f"{entry.name:<10}{_transposed_label(entry, sep.n_modes):<12}{_fmt(entry.min_eigenvalue):>12}"
        if mc:
            row += f"{_fmt(report.mc_mean[k]):>12}{_fmt(report.mc_std[k]):>12}"
        lines.append(f"{row}  {entry.verdict} {entry.name}")
    if mc:
        lines.append(f"Monte Carlo: {report.draws} draws, seed {report.seed}")
    return "\n".join(lines) + "\n"


def _transposed_label(entry, n):
    return _label_modes([entry.kept[m] for m in entry.transposed], n)


def report_to_dict(report):
    sep = report.separability
    entries = []
    for k, entry in enumerate(sep.entries):
        entries.append(
            {
                "name": entry.name,
                "transposed": list(entry.transposed),
                "kept": list(entry.kept),
                "min_eigenvalue": entry.min_eigenvalue,
                "verdict": entry.verdict,
                "mc_mean": None if report.mc_mean is None else float(report.mc_mean[k]),
                "mc_std": None if report.mc_std is None else float(report.mc_std[k]),
            }
        )
    return {
        "schema": REPORT_SCHEMA,
        "version": REPORT_VERSION,
        "label": report.label,
        "n_modes": sep.n_modes,
        "tolerance": sep.tolerance,
        "physical": sep.physical,
        "min_symplectic_eigenvalue": sep.min_symplectic,
        "nonclassicality": sep.nonclassicality,
        "entries": entries,
        "monte_carlo": None if report.draws is None else {"draws": report.draws, "seed": report.seed},
    }


def report_from_dict(data):
    if data.get("schema") != REPORT_SCHEMA:
        raise ValueError(f"not a certification report: schema {data.get('schema')!r}")
    if data.get("version") != REPORT_VERSION:
        raise ValueError(f"unsupported report version {data.get('version')!r}")
    tol = data["tolerance"]
    entries = tuple(
        PPTEntry(e["name"], tuple(e["transposed"]), tuple(e["kept"]), e["min_eigenvalue"], e["verdict"] == "separable")
        for e in data["entries"]
    )
    sep = SeparabilityReport(
        entries=entries,
        nonclassicality=data["nonclassicality"],
        min_symplectic=data["min_symplectic_eigenvalue"],
        physical=data["physical"],
        tolerance=tol,
        n_modes=data["n_modes"],
    )
    mc = data.get("monte_carlo")
    mean = std = None
    if mc is not None:
        mean = np.array([e["mc_mean"] for e in data["entries"]])
        std = np.array([e["mc_std"] for e in data["entries"]])
    return CertificationReport(
        separability=sep,
        label=data["label"],
        mc_mean=mean,
        mc_std=std,
        draws=None if mc is None else mc["draws"],
        seed=None if mc is None else mc["seed"],
    )


def report_from_json(text):
    return report_from_dict(json.loads(text))


CSV_COLUMNS = ["splitting", "transposed", "kept", "min_eigenvalue", "verdict", "mc_mean", "mc_std"]


def _render_csv(report):
    sep = report.separability
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for k, entry in enumerate(sep.entries):
        writer.writerow(
            [
                entry.name,
                _transposed_label(entry, sep.n_modes),
                _label_modes(entry.kept, sep.n_modes),
                repr(entry.min_eigenvalue),
                entry.verdict,
                "" if report.mc_mean is None else repr(float(report.mc_mean[k])),
                "" if report.mc_std is None else repr(float(report.mc_std[k])),
            ]
        )
    return buf.getvalue()


def render_report(report, fmt="text"):
    """Serialize a report as ``"text"`` (4 significant figures), ``"json"`` or ``"csv"``."""
    if fmt == "text":
        return _render_text(report)
    if fmt == "json":
        return json.dumps(report_to_dict(report), indent=2) + "\n"
    if fmt == "csv":
        return _render_csv(report)
    raise ValueError(f"unknown report format {fmt!r}")
