from django.apps import AppConfig


class OrbitaisConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "orbitais"
    verbose_name = "Orbitais em redes óticas vibrantes"
