from django.apps import AppConfig


class AutodiffConfig(AppConfig):
    name = "apps.autodiff"
    verbose_name = "Diferenciação Automática"
