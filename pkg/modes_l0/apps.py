from django.apps import AppConfig


class ModesL0Config(AppConfig):
    name = 'modes_l0'
    verbose_name = 'Vertical oscillations'
