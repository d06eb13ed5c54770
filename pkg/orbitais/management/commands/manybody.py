from orbitais.management.base import OrbitalCommand


class Command(OrbitalCommand):
    help = "Evolui a cadeia de muitos corpos sob vibração e exporta manybody.csv."
    command = "manybody"
