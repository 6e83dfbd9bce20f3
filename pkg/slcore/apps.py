from django.apps import AppConfig


class SlcoreConfig(AppConfig):
    name = 'slcore'
    verbose_name = 'Sturm-Liouville solvers'
