from django.apps import AppConfig


class WavefieldConfig(AppConfig):
    name = 'wavefield'
    verbose_name = 'Wave fields and boundary motion'
