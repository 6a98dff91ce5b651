from pathlib import Path

from django.conf import settings

DEFAULTS = {
    'EP_TOLERANCE': 1e-12,
    'J_LIMIT_THRESHOLD': 1e-10,
    'LEAK_THRESHOLD': 1e-6,
    'MAX_FOCK_DIM': 4096,
    'ORACLE_DT': 1e-3,
    'MEANFIELD_STEP': 1e-3,
    'EB1_EPSREL': 1e-8,
    'EB1_PANEL_CAP': 200,
    'D3_EPSILON': 1e-30,
    'SWEEP_WORKERS': 1,
    'SWEEP_EP_MARGIN': 1e-3,
    'PRESET_GRID': 200,
    'OUTPUT_DIR': Path('output'),
}


def get_setting(name):
    """
    Returns a simulation tunable from settings.COUPLER, falling back to DEFAULTS.
    Works without a configured project so services can run inside worker processes.
    """
    if name not in DEFAULTS:
        raise KeyError(f"Unknown coupler setting: {name}")
    if settings.configured:
        return getattr(settings, 'COUPLER', {}).get(name, DEFAULTS[name])
    return DEFAULTS[name]
