from django.apps import AppConfig


class DispersionConfig(AppConfig):
    name = 'dispersion'
    verbose_name = 'Dispersion function and mode functions'
