from orbitais.management.base import OrbitalCommand


class Command(OrbitalCommand):
    help = "Executa um protocolo de segmentos (ou o cenário A/B) e exporta a trajetória e o registro."
    command = "protocol"
