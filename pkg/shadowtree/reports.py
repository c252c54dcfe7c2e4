"""
Reports module for shadowtree.
Handles canonical JSON, CSV bundle and Excel workbook export of run reports.
"""

import json
import logging
import math
from fractions import Fraction
from io import BytesIO
from pathlib import Path

import numpy as np
import pandas as pd

from shadowtree.exponents import slope_fit

logger = logging.getLogger(__name__)

SIGNIFICANT_DIGITS = 12
FORMATS = ('json', 'csv', 'both')
CSV_FLOAT_FORMAT = '%.12g'


def canonical_value(value):
    """
    JSON-ready copy with floats rounded to 12 significant digits.

    Non-finite floats become the strings "inf", "-inf" and "nan"; exact
    rationals are written as "p/q" strings.
    """
    if isinstance(value, dict):
        return {str(k): canonical_value(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [canonical_value(v) for v in value]
    if isinstance(value, np.ndarray):
        return [canonical_value(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return 'nan'
        if math.isinf(value):
            return 'inf' if value > 0 else '-inf'
        rounded = float(f"{value:.{SIGNIFICANT_DIGITS}g}")
        return 0.0 if rounded == 0 else rounded
    if isinstance(value, complex):
        return [canonical_value(value.real), canonical_value(value.imag)]
    if value is None or isinstance(value, str):
        return value
    return str(value)


def to_canonical_json(report):
    """Sorted keys, 12 significant digits, UTF-8 text ending in a newline."""
    data = report.to_dict() if hasattr(report, 'to_dict') else report
    return json.dumps(canonical_value(data), sort_keys=True, ensure_ascii=False, indent=2) + '\n'


def _write_text(path, text):
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, 'w', encoding='utf-8', newline='\n') as f:
            f.write(text)
    except OSError as exc:
        raise OSError(f"Cannot write {path}: {exc.strerror or exc}") from exc
    return path


def _artifacts(report):
    """Artifact frames of a run, or of every run of a sequence with a run prefix."""
    if hasattr(report, 'runs'):
        frames = {'sequence': report.to_frame()}
        for i, run in enumerate(report.runs, start=1):
            for name, frame in run.artifacts.items():
                frames[f"run{i}_{name}"] = frame
        return frames
    return dict(report.artifacts)


def emit(report, directory, fmt='json', name='report'):
    """
    Write a report as canonical JSON, a CSV bundle, or both.

    Args:
        report: RunReport or SequenceReport, complete or partial
        directory: output directory, created when missing
        fmt: 'json', 'csv' or 'both'
        name: base name of the files

    Returns:
        list of written paths

    Raises:
        ValueError: unknown format
        OSError: a file could not be written; the message names the path
    """
    if fmt not in FORMATS:
        raise ValueError(f"Unknown emit format {fmt!r}")
    directory = Path(directory)
    written = []
    if fmt in ('json', 'both'):
        written.append(_write_text(directory / f"{name}.json", to_canonical_json(report)))
    if fmt in ('csv', 'both'):
        bundle = directory / f"{name}_csv"
        for key, frame in sorted(_artifacts(report).items()):
            if frame is None or frame.empty:
                continue
            text = frame.to_csv(index=False, float_format=CSV_FLOAT_FORMAT, lineterminator='\n')
            written.append(_write_text(bundle / f"{key}.csv", text))
    logger.info("Wrote %d report files to %s", len(written), directory)
    return written


def write_telemetry(report, path):
    """Wall-clock and element-count telemetry, kept out of the canonical report."""
    if hasattr(report, 'runs'):
        data = {'runs': [run.telemetry for run in report.runs]}
    else:
        data = report.telemetry
    return _write_text(Path(path), json.dumps(canonical_value(data), sort_keys=True, indent=2) + '\n')


def load_report(path):
    """
    Read an emitted JSON report.

    Returns:
        dict
    """
    path = Path(path)
    try:
        with open(path, 'r', encoding='utf-8') as f:
            return json.load(f)
    except OSError as exc:
        raise OSError(f"Cannot read {path}: {exc.strerror or exc}") from exc


def refit_profile_csv(path):
    """
    Re-estimate delta_hat from a profile CSV of the bundle.

    Returns:
        float slope over the same trimmed window, or None if too short
    """
    frame = pd.read_csv(path)
    grid = [int(r) for r in frame['R']]
    counts = [float(n) for n in frame['n_R']]
    return slope_fit(grid, counts)['slope']


def summary_frame(report):
    """
    One row per headline result for the workbook's summary sheet.

    Returns:
        pandas.DataFrame: section, item, value
    """
    if hasattr(report, 'runs'):
        return report.to_frame().astype(str)
    data = report.to_dict()
    rows = [
        {'section': 'run', 'item': 'status', 'value': data.get('status')},
        {'section': 'run', 'item': 'stage', 'value': data.get('stage')},
        {'section': 'run', 'item': 'metric', 'value': data.get('metric')},
        {'section': 'run', 'item': 'exit_code', 'value': data.get('exit_code')},
    ]
    if data.get('error'):
        rows.append({'section': 'run', 'item': 'error', 'value': data['error']['message']})
    for key in ('group_profile', 'semigroup_profile'):
        if key in data:
            rows.append({'section': key, 'item': 'delta_hat', 'value': data[key]['delta_hat']})
            rows.append({'section': key, 'item': 'band', 'value': data[key]['band']})
    if 'delta' in data:
        rows.append({'section': 'target', 'item': 'delta', 'value': data['delta']['value']})
    certificate = data.get('certificate')
    if certificate:
        rows.append({'section': 'certificate', 'item': 'status', 'value': certificate['status']})
        for name, check in sorted(certificate['checks'].items()):
            rows.append({'section': 'certificate', 'item': name, 'value': 'PASS' if check['passed'] else 'FAIL'})
    gap = data.get('gap_report')
    if gap:
        for assertion in gap['assertions']:
            rows.append({'section': 'gap_report', 'item': assertion['name'], 'value': assertion['holds']})
    if 'anosov_fit' in data:
        rows.append({'section': 'anosov', 'item': 'C', 'value': data['anosov_fit']['C']})
        rows.append({'section': 'anosov', 'item': 'c', 'value': data['anosov_fit']['c']})
    if 'cone' in data:
        rows.append({'section': 'cone', 'item': 'best_B', 'value': data['cone']['best_B']})
        rows.append({'section': 'cone', 'item': 'b', 'value': data['cone'].get('b')})
    if 'dphi' in data:
        rows.append({'section': 'dphi', 'item': 'max_defect', 'value': data['dphi']['max_defect']})
    frame = pd.DataFrame(rows, columns=['section', 'item', 'value'])
    frame['value'] = frame['value'].astype(str)
    return frame


def export_to_excel(report):
    """
    Export the summary and every artifact table to an Excel workbook.

    Args:
        report: RunReport

    Returns:
        BytesIO: Excel file buffer
    """
    output = BytesIO()
    sheets = {'summary': summary_frame(report)}
    sheets.update((name[:31], frame) for name, frame in sorted(_artifacts(report).items())
                  if frame is not None and not frame.empty)

    with pd.ExcelWriter(output, engine='xlsxwriter') as writer:
        workbook = writer.book
        header_format = workbook.add_format({
            'bold': True,
            'bg_color': '#6d3a46',
            'font_color': 'white',
            'align': 'center',
            'valign': 'vcenter',
            'border': 1
        })

        for sheet_name, dataframe in sheets.items():
            dataframe.to_excel(writer, index=False, sheet_name=sheet_name)
            worksheet = writer.sheets[sheet_name]

            for col_num, value in enumerate(dataframe.columns.values):
                worksheet.write(0, col_num, value, header_format)

            for i, col in enumerate(dataframe.columns):
                max_len = max(
                    dataframe[col].astype(str).apply(len).max(),
                    len(str(col))
                ) + 2
                worksheet.set_column(i, i, min(max_len, 60))
            worksheet.freeze_panes(1, 0)

    output.seek(0)
    return output


def save_excel(report, path):
    """Write the workbook of export_to_excel to a file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'wb') as f:
        f.write(export_to_excel(report).getvalue())
    return path


def diff_reports(recorded, replayed, tol=1e-9, path=''):
    """
    Paths where two report dicts disagree.

    Numbers agree within ``tol`` relative to their size; everything else
    must match exactly.
    """
    if isinstance(recorded, dict) and isinstance(replayed, dict):
        out = []
        for key in sorted(set(recorded) | set(replayed)):
            where = f"{path}.{key}" if path else str(key)
            if key not in recorded or key not in replayed:
                out.append(where)
            else:
                out.extend(diff_reports(recorded[key], replayed[key], tol, where))
        return out
    if isinstance(recorded, list) and isinstance(replayed, list):
        if len(recorded) != len(replayed):
            return [path]
        out = []
        for i, (a, b) in enumerate(zip(recorded, replayed)):
            out.extend(diff_reports(a, b, tol, f"{path}[{i}]"))
        return out
    numeric = (int, float)
    if (isinstance(recorded, numeric) and isinstance(replayed, numeric)
            and not isinstance(recorded, bool) and not isinstance(replayed, bool)):
        return [] if math.isclose(recorded, replayed, rel_tol=tol, abs_tol=tol) else [path]
    return [] if recorded == replayed else [path]
