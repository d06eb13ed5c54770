class OrbitalError(Exception):
    """Erro base de todos os cálculos do app orbitais."""


class InvalidParameterError(OrbitalError, ValueError):
    """Parâmetro fora do domínio aceito por uma operação."""


class DegenerateBandError(InvalidParameterError):
    """Banda degenerada ao longo da malha de k; o gauge de Wannier não pode ser fixado."""


class TableRangeError(InvalidParameterError):
    """
    Valor pedido fora do intervalo tabelado.

    Atributos:
        value (float): Valor pedido.
        bounds (tuple[float, float]): Intervalo coberto pela tabela.
    """

    def __init__(self, value, bounds):
        self.value = value
        self.bounds = bounds
        super().__init__(
            f"Valor {value:.6g} fora do intervalo tabelado [{bounds[0]:.6g}, {bounds[1]:.6g}]"
        )


class DimensionGuardError(InvalidParameterError):
    """Base de Fock maior que o limite de escala de bancada."""


class IntegrationError(OrbitalError, RuntimeError):
    """
    Falha do integrador temporal.

    Atributos:
        time (float): Instante (hbar/E_R) em que a integração parou.
        omega (float | None): Frequência da varredura associada, quando houver.
    """

    def __init__(self, message, time, omega=None):
        self.time = time
        self.omega = omega
        contexto = f" em t={time:.6g}"
        if omega is not None:
            contexto += f", omega={omega:.8g}"
        super().__init__(message + contexto)


class ConvergenceError(OrbitalError, RuntimeError):
    """Solver iterativo sem convergência dentro do limite de iterações."""


class TrackingLostError(OrbitalError, RuntimeError):
    """
    Rastreamento de autoestado perdido num cruzamento de níveis.

    Atributos:
        time (float): Instante do cruzamento.
    """

    def __init__(self, message, time):
        self.time = time
        super().__init__(f"{message} em t={time:.6g}")
