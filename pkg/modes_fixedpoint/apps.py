from django.apps import AppConfig


class ModesFixedpointConfig(AppConfig):
    name = 'modes_fixedpoint'
    verbose_name = 'Fixed-point g-modes and p-modes'
