from django.apps import AppConfig


class MulticonvConfig(AppConfig):
    name = "apps.multiconv"
    verbose_name = "Convolução Multi-kernel (M-CSGU)"
