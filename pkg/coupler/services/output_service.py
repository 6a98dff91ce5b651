import csv
import json
import logging
from pathlib import Path

import numpy as np

from .. import __version__
from ..conf import get_setting
from ..exceptions import ConfigError
from ..records import ScenarioConfig, SweepSurface, TimeSeries

logger = logging.getLogger(__name__)


def json_default(value):
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, (complex, np.complexfloating)):
        return [float(value.real), float(value.imag)]
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Path):
        return str(value)
    if hasattr(value, 'value'):
        return value.value
    raise TypeError(f"{type(value).__name__} is not JSON serializable")


def _dumps(value):
    return json.dumps(value, default=json_default, sort_keys=True)


def _tolerances():
    return {name: get_setting(name) for name in (
        'EP_TOLERANCE', 'J_LIMIT_THRESHOLD', 'LEAK_THRESHOLD', 'EB1_EPSREL', 'EB1_PANEL_CAP', 'D3_EPSILON',
    )}


def _flat_columns(series):
    """Splits complex columns into re_/im_ pairs; the time column always comes first."""
    names, columns = ['t'], [series.t]
    for name, values in series.columns.items():
        if np.iscomplexobj(values):
            names += [f're_{name}', f'im_{name}']
            columns += [values.real, values.imag]
        else:
            names.append(name)
            columns.append(np.asarray(values, dtype=float))
    return names, columns


def _cell(value):
    return repr(float(value))


class OutputService:
    @staticmethod
    def default_path(config):
        stem = config.name or f"{config.variant.lower()}_{config.quantity}"
        suffix = '.json' if config.fmt == 'JSON' else '.csv'
        return Path(get_setting('OUTPUT_DIR')) / f"{stem}{suffix}"

    @staticmethod
    def header(config, meta):
        return {
            'config': config.to_dict(),
            'version': __version__,
            'tolerances': _tolerances(),
            'meta': meta,
        }

    @staticmethod
    def write(result, config, path=None):
        """
        Writes a TimeSeries or SweepSurface. CSV output gets '#' header lines plus a
        JSON sidecar; JSON output is a single file holding header and data.
        Returns the written paths.
        """
        path = Path(path or config.output or OutputService.default_path(config))
        header = OutputService.header(config, result.meta)
        if isinstance(result, SweepSurface):
            header['quantity'] = result.quantity
            names = ['j_over_kappa', 't', 'value', 'reason']
            jj, tt = np.meshgrid(result.j_axis, result.t_axis, indexing='ij')
            rows = [
                [_cell(j), _cell(t), _cell(v), reason]
                for j, t, v, reason in zip(jj.ravel(), tt.ravel(), result.values.ravel(), result.reasons.ravel())
            ]
        else:
            names, columns = _flat_columns(result)
            rows = [[_cell(v) for v in row] for row in zip(*columns)]
        header['columns'] = names

        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            if config.fmt == 'JSON':
                payload = dict(header, rows=[[_json_cell(v) for v in row] for row in rows])
                path.write_text(json.dumps(payload, default=json_default, sort_keys=True, indent=1))
                written = [path]
            else:
                with path.open('w', newline='', encoding='utf-8') as f:
                    f.write(f"# config={_dumps(header['config'])}\n")
                    f.write(f"# version={header['version']}\n")
                    f.write(f"# tolerances={_dumps(header['tolerances'])}\n")
                    f.write(f"# meta={_dumps(header['meta'])}\n")
                    w = csv.writer(f)
                    w.writerow(names)
                    w.writerows(rows)
                sidecar = path.with_suffix('.json')
                sidecar.write_text(json.dumps(header, default=json_default, sort_keys=True, indent=1))
                written = [path, sidecar]
        except OSError as exc:
            raise ConfigError(f"cannot write output to {path}: {exc}") from exc
        logger.info("wrote %s", ', '.join(str(p) for p in written))
        return written

    @staticmethod
    def read_header(path):
        path = Path(path)
        try:
            text = path.read_text(encoding='utf-8')
        except OSError as exc:
            raise ConfigError(f"cannot read {path}: {exc}") from exc
        if path.suffix == '.json':
            return json.loads(text)
        header = {}
        for line in text.splitlines():
            if not line.startswith('#'):
                break
            key, _, value = line[1:].strip().partition('=')
            header[key] = value if key == 'version' else json.loads(value)
        return header

    @staticmethod
    def read_config(path):
        """Re-parses the header of a written file into the exact ScenarioConfig."""
        header = OutputService.read_header(path)
        if 'config' not in header:
            raise ConfigError(f"{path} carries no scenario header")
        return ScenarioConfig.from_dict(header['config'])

    @staticmethod
    def read_series(path):
        """Loads a written TimeSeries back, joining re_/im_ column pairs."""
        path = Path(path)
        header = OutputService.read_header(path)
        if path.suffix == '.json':
            names = header['columns']
            rows = header['rows']
        else:
            with path.open(newline='', encoding='utf-8') as f:
                lines = [line for line in f if not line.startswith('#')]
            reader = csv.reader(lines)
            names = next(reader)
            rows = list(reader)
        if not names or names[0] != 't':
            raise ConfigError(f"{path} is not a time series")
        data = np.array(rows, dtype=float).reshape(len(rows), len(names))
        series = TimeSeries(t=data[:, 0], meta=header.get('meta', {}))
        index = {name: k for k, name in enumerate(names)}
        for name in names[1:]:
            if name.startswith('im_') and 're_' + name[3:] in index:
                continue
            if name.startswith('re_') and 'im_' + name[3:] in index:
                base = name[3:]
                series.add(base, data[:, index[name]] + 1j * data[:, index['im_' + base]])
            else:
                series.add(name, data[:, index[name]])
        return series


def _json_cell(value):
    try:
        return float(value)
    except ValueError:
        return value
