"""
Acesso aos padrões numéricos definidos em ``settings.ORBITAIS``.

Os módulos numéricos também funcionam fora de um projeto Django configurado;
nesse caso valem os padrões abaixo.
"""

from django.conf import settings

DEFAULTS = {
    "OUTPUT_DIR": "resultados",
    "PLANE_WAVES": 33,
    "K_POINTS": 64,
    "POINTS_PER_SITE": 512,
    "WANNIER_SITES": 3,
    "TABLE_POINTS": 33,
    "RTOL": 1e-9,
    "ATOL": 1e-12,
    "SCAN_WINDOW_MS": 20.0,
    "SCAN_POINTS": 160,
    "SCAN_SAMPLES": 2001,
    "PEAK_THRESHOLD": 0.5,
    "PEAK_THRESHOLD_SPD": 0.2,
    "RAMP_DURATION_MS": 20.0,
    "KRYLOV_MAX_DIM": 30,
    "KRYLOV_TOL": 1e-10,
    "KRYLOV_STEPS_PER_PERIOD": 40,
    "ED_MAX_DIMENSION": 200_000,
    "ED_CHAIN_AXIS": "x",
}


def get(key: str):
    """
    Retorna o valor configurado para ``key``.

    Parâmetros:
        key (str): Nome da chave em ``settings.ORBITAIS``.

    Retorna:
        object: Valor configurado ou o padrão embutido.

    Lança:
        KeyError: Se a chave não existir nem nos padrões.
    """
    configurado = {}
    if settings.configured:
        configurado = getattr(settings, "ORBITAIS", {})
    if key in configurado:
        return configurado[key]
    return DEFAULTS[key]
