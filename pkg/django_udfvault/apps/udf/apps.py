from django.apps import AppConfig


class UdfConfig(AppConfig):
    name = 'apps.udf'
    verbose_name = 'UDF engine'

    def ready(self):
        from .services.backends import build_registry, set_default_registry

        set_default_registry(build_registry().freeze())
