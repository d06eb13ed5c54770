from orbitais.management.base import OrbitalCommand


class Command(OrbitalCommand):
    help = "Evolui o estado preparado sob vibração em uma frequência e exporta trajectory.csv."
    command = "evolve"
