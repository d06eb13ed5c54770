from orbitais.management.base import OrbitalCommand


class Command(OrbitalCommand):
    help = "Varre a frequência da vibração e exporta scan.csv e peaks.json."
    command = "scan"
