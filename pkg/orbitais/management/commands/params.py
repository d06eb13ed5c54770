from orbitais.management.base import OrbitalCommand


class Command(OrbitalCommand):
    help = "Tabela E, U e J ao longo de q_x = q_y = q e exporta params.csv."
    command = "params"
