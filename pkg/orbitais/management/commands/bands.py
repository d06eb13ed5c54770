from orbitais.management.base import OrbitalCommand


class Command(OrbitalCommand):
    help = "Calcula as bandas de Bloch de uma rede 1D e exporta bands.csv."
    command = "bands"
