from django.apps import AppConfig


class AttentionConfig(AppConfig):
    name = "apps.attention"
    verbose_name = "Autoatenção Multi-cabeça"
