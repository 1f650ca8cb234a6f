from django.apps import AppConfig


class LayersConfig(AppConfig):
    name = "apps.layers"
    verbose_name = "Camadas Neurais"
