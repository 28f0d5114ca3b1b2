from django.apps import AppConfig


class ExprlangConfig(AppConfig):
    name = 'apps.exprlang'
    verbose_name = 'Expression language'
