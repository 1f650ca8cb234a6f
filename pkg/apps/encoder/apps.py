from django.apps import AppConfig


class EncoderAppConfig(AppConfig):
    name = "apps.encoder"
    verbose_name = "Encoder Multi-Convformer"
