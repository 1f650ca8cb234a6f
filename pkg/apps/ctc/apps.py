from django.apps import AppConfig


class CtcConfig(AppConfig):
    name = "apps.ctc"
    verbose_name = "CTC"
